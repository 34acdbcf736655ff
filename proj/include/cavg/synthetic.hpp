#ifndef CAVG_SYNTHETIC_HPP
#define CAVG_SYNTHETIC_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "cavg/activation.hpp"
#include "cavg/alignment.hpp"
#include "cavg/error.hpp"
#include "cavg/rng.hpp"
#include "cavg/similarity.hpp"
#include "cavg/sweep.hpp"

// Synthetic two-language activation corpora with a known ground truth.
//
// Classes are split across two ontologies ("syna", "synb"); class i of syna
// is mapped to class i of synb for i < mapped_pairs. Every class has a
// language-independent semantic core of `semantic_dim` concepts: mapped pairs
// share the core ids (weights jittered per class), unmapped classes draw
// their own. Each language then adds `noise_dim` concepts from its own small
// id pool, shared by all classes of that language, so single-language vectors
// look alike regardless of meaning. Intersecting en and fr removes the noise.
namespace cavg {

struct SyntheticParams {
  std::size_t n_classes = 200;
  std::size_t n_mapped_pairs = 50;
  std::size_t semantic_dim = 8;
  std::size_t noise_dim = 24;
  double noise_scale = 1.0;
  std::uint64_t seed = 7;
  int layer = 0;
  Style style = Style::Verbose;
  std::uint32_t sae_width = kDefaultSaeWidth;
};

struct SyntheticCorpus {
  std::vector<ActivationSet> sets;  // en and fr for every class
  std::vector<ReferenceMapping> mappings;
};

inline constexpr const char* kSyntheticOntologyA = "syna";
inline constexpr const char* kSyntheticOntologyB = "synb";

namespace detail {

inline std::vector<ConceptId> draw_ids(Rng& rng, ConceptId lo, std::size_t pool, std::size_t k) {
  std::vector<ConceptId> ids(pool);
  for (std::size_t i = 0; i < pool; ++i) ids[i] = lo + static_cast<ConceptId>(i);
  for (std::size_t i = 0; i < k; ++i) std::swap(ids[i], ids[i + rng.below(pool - i)]);
  ids.resize(k);
  return ids;
}

inline std::string synthetic_key(const char* onto, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-C%04zu", onto, i);
  return buf;
}

}  // namespace detail

inline SyntheticCorpus generate_synthetic_corpus(const SyntheticParams& p) {
  if (p.n_mapped_pairs == 0) throw ContractError("synthetic corpus needs at least one mapped pair");
  if (p.n_mapped_pairs > p.n_classes / 2) throw ContractError("n_mapped_pairs must be <= n_classes / 2");
  if (p.semantic_dim == 0 || p.noise_dim == 0) throw ContractError("semantic_dim and noise_dim must be > 0");
  if (!std::isfinite(p.noise_scale) || p.noise_scale < 0.0) throw ContractError("noise_scale must be finite and >= 0");
  if (p.layer < 0) throw ContractError("layer must be >= 0");

  const std::size_t semantic_pool = 16 * p.semantic_dim;
  const std::size_t noise_pool = 2 * p.noise_dim;
  if (semantic_pool + 2 * noise_pool > p.sae_width) throw ContractError("concept id ranges exceed sae_width");
  const auto en_lo = static_cast<ConceptId>(semantic_pool);
  const auto fr_lo = static_cast<ConceptId>(semantic_pool + noise_pool);

  // Separate streams so the semantic structure does not depend on noise_scale.
  Rng core_rng(mix_seed(p.seed));
  Rng noise_rng(mix_seed(p.seed + 1));

  std::vector<std::vector<ActivationEntry>> pair_cores(p.n_mapped_pairs);
  for (auto& core : pair_cores) {
    for (ConceptId id : detail::draw_ids(core_rng, 0, semantic_pool, p.semantic_dim))
      core.push_back({id, core_rng.uniform(20.0, 80.0)});
  }

  const std::size_t size_a = (p.n_classes + 1) / 2;
  const std::size_t size_b = p.n_classes / 2;
  SyntheticCorpus out;
  for (std::size_t i = 0; i < p.n_mapped_pairs; ++i) {
    out.mappings.push_back({detail::synthetic_key(kSyntheticOntologyA, i),
                            detail::synthetic_key(kSyntheticOntologyB, i), "=", 1.0});
  }

  auto emit_class = [&](const char* onto, std::size_t i) {
    std::vector<ActivationEntry> core;
    if (i < p.n_mapped_pairs) {
      for (const auto& e : pair_cores[i]) core.push_back({e.concept_id, e.weight * core_rng.uniform(0.8, 1.2)});
    } else {
      for (ConceptId id : detail::draw_ids(core_rng, 0, semantic_pool, p.semantic_dim))
        core.push_back({id, core_rng.uniform(20.0, 80.0)});
    }
    // Some concepts fire on a second token at a lower weight.
    std::vector<ActivationEntry> tokens;
    for (const auto& e : core) {
      tokens.push_back(e);
      if (core_rng.unit() < 0.25) tokens.push_back({e.concept_id, e.weight * core_rng.uniform(0.5, 1.0)});
    }
    for (const auto& [lang, lo] : {std::pair{"en", en_lo}, std::pair{"fr", fr_lo}}) {
      ActivationSet s;
      s.class_key = detail::synthetic_key(onto, i);
      s.style = p.style;
      s.language = lang;
      s.layer = p.layer;
      s.sae_width = p.sae_width;
      s.model = "synthetic";
      s.sae = "synthetic";
      s.entries = tokens;
      for (ConceptId id : detail::draw_ids(noise_rng, lo, noise_pool, p.noise_dim)) {
        const double w = p.noise_scale * noise_rng.uniform(20.0, 80.0);
        if (w > 0.0) s.entries.push_back({id, w});
      }
      out.sets.push_back(std::move(s));
    }
  };
  for (std::size_t i = 0; i < size_a; ++i) emit_class(kSyntheticOntologyA, i);
  for (std::size_t i = 0; i < size_b; ++i) emit_class(kSyntheticOntologyB, i);
  return out;
}

struct SyntheticEvaluation {
  CorrelationResult english;  // "en"
  CorrelationResult average;  // "en+fr"
};

// Runs reduce -> average -> similarity -> rebalance -> point-biserial on a
// synthetic corpus for the English-only and en+fr configurations.
inline SyntheticEvaluation evaluate_synthetic(const SyntheticCorpus& corpus, std::uint64_t seed,
                                              std::size_t repeats = 1) {
  std::map<std::string, ConceptVector> en, fr;
  for (const auto& s : corpus.sets) (s.language == "en" ? en : fr)[s.class_key] = reduce_duplicates(s);
  std::vector<ConceptVector> english, averaged;
  for (const auto& [key, v] : en) {
    english.push_back(v);
    averaged.push_back(conceptual_average(v, fr.at(key)));
  }
  const int layer = english.empty() ? 0 : english.front().layer;
  SyntheticEvaluation out;
  out.english = correlate_records(build_similarity_records(english, corpus.mappings), layer_seed(seed, layer), repeats);
  out.average = correlate_records(build_similarity_records(averaged, corpus.mappings), layer_seed(seed, layer), repeats);
  out.english.combo = "en";
  out.average.combo = "en+fr";
  out.english.layer = out.average.layer = layer;
  return out;
}

}  // namespace cavg

#endif  // CAVG_SYNTHETIC_HPP
