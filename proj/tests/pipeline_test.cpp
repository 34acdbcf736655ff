#include <gtest/gtest.h>
#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <thread>

#include "cavg/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = fs::path(CAVG_TEST_DATA_DIR) / "pipeline";

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() /
            ("cavg-" + std::string(info->test_suite_name()) + "-" + info->name() + "-" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

nlohmann::json base_config(const fs::path& out) {
  auto j = nlohmann::json::parse(cavg::read_file(kFixtures / "experiment.json"));
  j["output_dir"] = out.string();
  return j;
}

cavg::ExperimentConfig config(const nlohmann::json& j) { return cavg::parse_config(j, kFixtures); }

void write(const fs::path& p, const std::string& s) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << s;
}

TEST(Config, ParsesFixtureConfig) {
  const auto c = cavg::load_config(kFixtures / "experiment.json");
  EXPECT_EQ(c.layers.size(), 26u);
  EXPECT_EQ(c.combos(), (std::vector<std::string>{"en", "en+fr", "en+zh"}));
  EXPECT_EQ(c.corpus_dir, kFixtures / "ontologies");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.hash.size(), 64u);
}

TEST(Config, Defaults) {
  nlohmann::json j{{"corpus_dir", "c"}, {"reference_dir", "r"}, {"output_dir", "o"}, {"seed", 1},
                   {"activation_source", {{"fixture_dir", "a"}}}};
  const auto c = cavg::parse_config(j, "/base");
  EXPECT_EQ(c.layers, cavg::default_layers());
  EXPECT_EQ(c.layers.back(), 25);
  EXPECT_EQ(c.sae_width, 16384u);
  EXPECT_EQ(c.languages, std::vector<std::string>{"en"});
  EXPECT_EQ(c.activation_source.fixture_dir, fs::path("/base/a"));
}

TEST(Config, Rejections) {
  const nlohmann::json good{{"corpus_dir", "c"}, {"reference_dir", "r"}, {"output_dir", "o"}, {"seed", 1},
                            {"activation_source", {{"fixture_dir", "a"}}}};
  auto bad = [&](auto mutate) {
    auto j = good;
    mutate(j);
    return j;
  };
  EXPECT_THROW(cavg::parse_config(bad([](auto& j) { j.erase("seed"); }), "."), cavg::ConfigError);
  EXPECT_THROW(cavg::parse_config(bad([](auto& j) { j["seed"] = -3; }), "."), cavg::ConfigError);
  EXPECT_THROW(cavg::parse_config(bad([](auto& j) { j["colour"] = "red"; }), "."), cavg::ConfigError);
  EXPECT_THROW(cavg::parse_config(bad([](auto& j) { j["languages"] = {"fr", "en"}; }), "."), cavg::ConfigError);
  EXPECT_THROW(cavg::parse_config(bad([](auto& j) { j["languages"] = {"en", "fr"}; }), "."), cavg::ConfigError);
  EXPECT_THROW(cavg::parse_config(bad([](auto& j) { j["layers"] = nlohmann::json::array(); }), "."), cavg::ConfigError);
  EXPECT_THROW(cavg::parse_config(bad([](auto& j) { j["layers"] = {1, 1}; }), "."), cavg::ConfigError);
  EXPECT_THROW(cavg::parse_config(bad([](auto& j) { j["styles"] = {"terse"}; }), "."), cavg::ConfigError);
  EXPECT_THROW(cavg::parse_config(bad([](auto& j) {
                 j["activation_source"] = {{"fixture_dir", "a"}, {"extractor_endpoint", "http://x"}};
               }), "."),
               cavg::ConfigError);
  EXPECT_THROW(cavg::parse_config(bad([](auto& j) { j.erase("activation_source"); }), "."), cavg::ConfigError);
}

TEST(Pipeline, FixtureRunShapeAndCounts) {
  TempDir tmp;
  const auto m = cavg::run_pipeline(config(base_config(tmp.path() / "out")));
  const auto out = tmp.path() / "out";
  const auto rows = cavg::parse_correlation_csv(cavg::read_file(out / "correlations.csv"));
  EXPECT_EQ(rows.size(), 156u);
  EXPECT_EQ(m.counts.ontologies, 4u);
  EXPECT_EQ(m.counts.classes, 27u);
  EXPECT_EQ(m.counts.mappings, 15u);  // the property cell is dropped
  EXPECT_EQ(m.counts.analysed_ontologies, 3u);
  EXPECT_EQ(m.counts.analysed_classes, 23u);
  EXPECT_EQ(m.counts.pairs, 8u * 7 + 8 * 8 + 7 * 8);
  EXPECT_EQ(m.counts.cells, 156u);
  EXPECT_EQ(m.counts.skipped_cells, 1u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.n1, 15u);
    EXPECT_EQ(r.n0, 15u);
  }
  for (const char* f : {"verbalizations/summary.jsonl", "verbalizations/verbose.jsonl", "translations/fr.jsonl",
                        "translations/zh.jsonl", "activations/verbose/zh.jsonl", "summary.csv", "plot.csv",
                        "manifest.json", "similarity/verbose/en+fr/layer_12.csv"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  // Alignment "conference" resolves to Conference.owl.
  const auto sim = cavg::parse_similarity_csv(cavg::read_file(out / "similarity/summary/en/layer_00.csv"));
  EXPECT_TRUE(std::any_of(sim.begin(), sim.end(), [](const auto& r) {
    return r.class_a == "Conference-Chair" && r.class_b == "cmt-ConferenceChair" && r.label == 1;
  }));
  EXPECT_EQ(sim.size(), m.counts.pairs);
}

TEST(Pipeline, RerunIsByteIdenticalAndHitsCache) {
  TempDir tmp;
  const auto cfg = config(base_config(tmp.path() / "out"));
  const auto m1 = cavg::run_pipeline(cfg);
  const auto reports1 = cavg::read_file(cfg.output_dir / "correlations.csv");
  const auto manifest1 = cavg::read_file(cfg.output_dir / "manifest.json");
  std::vector<std::string> log;
  const auto m2 = cavg::run_pipeline(cfg, [&](const std::string& s) { log.push_back(s); });
  EXPECT_EQ(cavg::read_file(cfg.output_dir / "correlations.csv"), reports1);
  EXPECT_EQ(cavg::read_file(cfg.output_dir / "manifest.json"), manifest1);
  EXPECT_EQ(cavg::manifest_json(m1), cavg::manifest_json(m2));
  EXPECT_TRUE(std::any_of(log.begin(), log.end(), [](const auto& s) { return s.starts_with("cache hit evaluate"); }));
}

TEST(Pipeline, SeedChangesDrawButNotShape) {
  TempDir tmp;
  auto j = base_config(tmp.path() / "a");
  cavg::run_pipeline(config(j));
  j["output_dir"] = (tmp.path() / "b").string();
  j["seed"] = 43;
  cavg::run_pipeline(config(j));
  const auto a = cavg::read_file(tmp.path() / "a/correlations.csv");
  const auto b = cavg::read_file(tmp.path() / "b/correlations.csv");
  EXPECT_NE(a, b);
  EXPECT_EQ(cavg::parse_correlation_csv(b).size(), 156u);
}

fs::path copy_fixtures(const fs::path& dst) {
  fs::create_directories(dst);
  for (const char* d : {"ontologies", "references", "translations", "activations"})
    fs::copy(kFixtures / d, dst / d, fs::copy_options::recursive);
  return dst;
}

void drop_lines(const fs::path& file, const std::string& needle) {
  std::ifstream in(file);
  std::string line, kept;
  while (std::getline(in, line)) {
    if (line.find(needle) == std::string::npos) kept += line + "\n";
  }
  in.close();
  write(file, kept);
}

TEST(Pipeline, MissingActivationFailsBeforeStatistics) {
  TempDir tmp;
  const auto data = copy_fixtures(tmp.path() / "data");
  drop_lines(data / "activations/summary/fr.jsonl", R"("class_key":"cmt-Paper","style":"summary","language":"fr","layer":7,)");
  auto j = base_config(tmp.path() / "out");
  const auto cfg = cavg::parse_config(j, data);
  try {
    cavg::run_pipeline(cfg);
    FAIL() << "expected MissingCellError";
  } catch (const cavg::MissingCellError& e) {
    ASSERT_EQ(e.cells().size(), 1u);
    EXPECT_EQ(e.cells()[0], "activation class_key=cmt-Paper style=summary language=fr layer=7");
  }
  EXPECT_FALSE(fs::exists(cfg.output_dir / "correlations.csv"));
  EXPECT_FALSE(fs::exists(cfg.output_dir / "similarity"));
}

TEST(Pipeline, MissingTranslationNamesClass) {
  TempDir tmp;
  const auto data = copy_fixtures(tmp.path() / "data");
  drop_lines(data / "translations/zh.jsonl", R"("class_key":"edas-Review","style":"verbose")");
  const auto cfg = cavg::parse_config(base_config(tmp.path() / "out"), data);
  try {
    cavg::run_pipeline(cfg);
    FAIL() << "expected MissingCellError";
  } catch (const cavg::MissingCellError& e) {
    ASSERT_EQ(e.cells().size(), 1u);
    EXPECT_NE(e.cells()[0].find("class_key=edas-Review"), std::string::npos);
  }
}

TEST(Pipeline, UnmappedOntologyNeedsNoData) {
  TempDir tmp;
  const auto data = copy_fixtures(tmp.path() / "data");
  for (const char* f : {"activations/summary/en.jsonl", "activations/verbose/fr.jsonl"}) drop_lines(data / f, "iasted-");
  drop_lines(data / "translations/fr.jsonl", "iasted-");
  EXPECT_NO_THROW(cavg::run_pipeline(cavg::parse_config(base_config(tmp.path() / "out"), data)));
}

TEST(Pipeline, UnknownOntologyInAlignmentIsDataError) {
  TempDir tmp;
  const auto data = copy_fixtures(tmp.path() / "data");
  fs::copy_file(data / "references/cmt-edas.rdf", data / "references/cmt-ekaw.rdf");
  EXPECT_THROW(cavg::run_pipeline(cavg::parse_config(base_config(tmp.path() / "out"), data)), cavg::Error);
}

TEST(Pipeline, DuplicateActivationRecordRejected) {
  TempDir tmp;
  const auto data = copy_fixtures(tmp.path() / "data");
  fs::copy_file(data / "activations/summary/en.jsonl", data / "activations/extra.jsonl");
  EXPECT_THROW(cavg::run_pipeline(cavg::parse_config(base_config(tmp.path() / "out"), data)), cavg::Error);
}

TEST(Pipeline, CommandEndpointMatchesFixtures) {
  TempDir tmp;
  auto j = base_config(tmp.path() / "fixture");
  cavg::run_pipeline(config(j));
  const std::string cmd = "python3 " + (kFixtures / "mock_extractor.py").string() + " " + kFixtures.string();
  j["output_dir"] = (tmp.path() / "endpoint").string();
  j["activation_source"] = {{"extractor_endpoint", cmd}};
  j["translation_source"] = {{"extractor_endpoint", cmd}};
  const auto cfg = config(j);
  cavg::run_pipeline(cfg);
  EXPECT_EQ(cavg::read_file(tmp.path() / "endpoint/correlations.csv"),
            cavg::read_file(tmp.path() / "fixture/correlations.csv"));
  // Second run is answered from the cache even if the command disappears.
  j["activation_source"] = {{"extractor_endpoint", "false"}};
  j["translation_source"] = {{"extractor_endpoint", "false"}};
  EXPECT_THROW(cavg::run_pipeline(config(j)), cavg::Error);
  EXPECT_NO_THROW(cavg::run_pipeline(cfg));
}

TEST(Pipeline, HttpEndpoint) {
  TempDir tmp;
  auto j = base_config(tmp.path() / "fixture");
  j["languages"] = {"en", "fr"};
  j["layers"] = {0, 12};
  cavg::run_pipeline(config(j));

  std::vector<cavg::ActivationSet> all;
  for (const char* f : {"activations/summary/en.jsonl", "activations/summary/fr.jsonl", "activations/verbose/en.jsonl",
                        "activations/verbose/fr.jsonl"}) {
    auto part = cavg::read_activation_file(kFixtures / f);
    all.insert(all.end(), part.begin(), part.end());
  }
  httplib::Server server;
  std::string seen_layers;
  server.Post("/sae/extract", [&](const httplib::Request& req, httplib::Response& res) {
    seen_layers = req.get_param_value("layers");
    std::set<std::tuple<std::string, std::string, std::string>> wanted;
    for (const auto& p : cavg::parse_verbalization_jsonl(req.body))
      wanted.emplace(p.class_key, std::string(cavg::to_string(p.style)), p.language);
    std::string body;
    for (const auto& s : all) {
      if ((s.layer == 0 || s.layer == 12) && wanted.count({s.class_key, std::string(cavg::to_string(s.style)), s.language}))
        body += cavg::to_json_line(s) + "\n";
    }
    res.set_content(body, "application/x-ndjson");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  j["output_dir"] = (tmp.path() / "http").string();
  j["activation_source"] = {{"extractor_endpoint", "http://127.0.0.1:" + std::to_string(port) + "/sae"}};
  EXPECT_NO_THROW(cavg::run_pipeline(config(j)));
  server.stop();
  t.join();
  EXPECT_EQ(seen_layers, "0,12");
  EXPECT_EQ(cavg::read_file(tmp.path() / "http/correlations.csv"), cavg::read_file(tmp.path() / "fixture/correlations.csv"));
}

}  // namespace
