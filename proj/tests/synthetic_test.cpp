#include <gtest/gtest.h>

#include <fstream>
#include <nlohmann/json.hpp>

#include "cavg/synthetic.hpp"

namespace {

TEST(SyntheticCorpus, Shape) {
  cavg::SyntheticParams p;
  const auto c = cavg::generate_synthetic_corpus(p);
  EXPECT_EQ(c.sets.size(), 400u);
  EXPECT_EQ(c.mappings.size(), 50u);
  EXPECT_EQ(c.mappings[3].entity1, "syna-C0003");
  EXPECT_EQ(c.mappings[3].entity2, "synb-C0003");
  for (const auto& s : c.sets) {
    for (const auto& e : s.entries) EXPECT_LT(e.concept_id, p.sae_width);
  }
}

TEST(SyntheticCorpus, Deterministic) {
  cavg::SyntheticParams p;
  const auto a = cavg::generate_synthetic_corpus(p);
  const auto b = cavg::generate_synthetic_corpus(p);
  ASSERT_EQ(a.sets.size(), b.sets.size());
  for (std::size_t i = 0; i < a.sets.size(); ++i) EXPECT_EQ(cavg::to_json_line(a.sets[i]), cavg::to_json_line(b.sets[i]));
}

TEST(SyntheticCorpus, Contracts) {
  cavg::SyntheticParams p;
  p.n_mapped_pairs = 0;
  EXPECT_THROW(cavg::generate_synthetic_corpus(p), cavg::ContractError);
  p = {};
  p.n_mapped_pairs = 101;
  EXPECT_THROW(cavg::generate_synthetic_corpus(p), cavg::ContractError);
  p = {};
  p.noise_scale = -1;
  EXPECT_THROW(cavg::generate_synthetic_corpus(p), cavg::ContractError);
  p = {};
  p.sae_width = 100;
  EXPECT_THROW(cavg::generate_synthetic_corpus(p), cavg::ContractError);
}

TEST(SyntheticEvaluation, NoNoiseMakesAveragingANoOp) {
  cavg::SyntheticParams p;
  p.noise_scale = 0.0;
  const auto c = cavg::generate_synthetic_corpus(p);
  const auto e = cavg::evaluate_synthetic(c, p.seed);
  EXPECT_NEAR(e.average.r_pb, e.english.r_pb, 1e-9);
}

TEST(SyntheticEvaluation, AveragingBeatsEnglishAtSeed7) {
  std::ifstream in(CAVG_TEST_DATA_DIR "/synthetic_seed7.json");
  ASSERT_TRUE(in) << "missing golden";
  const auto golden = nlohmann::json::parse(in);
  cavg::SyntheticParams p;
  const auto e = cavg::evaluate_synthetic(cavg::generate_synthetic_corpus(p), p.seed);
  EXPECT_GT(e.average.r_pb, e.english.r_pb);
  EXPECT_NEAR(e.english.r_pb, golden["en"].get<double>(), 1e-9);
  EXPECT_NEAR(e.average.r_pb, golden["en+fr"].get<double>(), 1e-9);
  EXPECT_EQ(e.english.n1, golden["n1"].get<std::size_t>());
  EXPECT_EQ(e.average.n0, golden["n0"].get<std::size_t>());
}

TEST(SyntheticEvaluation, HoldsAcrossNoiseScales) {
  for (double scale : {1.0, 2.0, 4.0}) {
    for (std::uint64_t seed : {7u, 8u, 9u}) {
      cavg::SyntheticParams p;
      p.noise_scale = scale;
      p.seed = seed;
      const auto e = cavg::evaluate_synthetic(cavg::generate_synthetic_corpus(p), seed);
      EXPECT_GE(e.average.r_pb, e.english.r_pb) << "scale " << scale << " seed " << seed;
    }
  }
}

}  // namespace
