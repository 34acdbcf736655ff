#ifndef CAVG_ACTIVATION_HPP
#define CAVG_ACTIVATION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cavg/error.hpp"
#include "cavg/verbalizer.hpp"

namespace cavg {

using ConceptId = std::uint32_t;

inline constexpr int kDefaultMaxLayer = 25;
inline constexpr std::uint32_t kDefaultSaeWidth = 16384;

// One SAE feature firing at one token position.
struct ActivationEntry {
  ConceptId concept_id = 0;
  double weight = 0.0;

  friend bool operator==(const ActivationEntry&, const ActivationEntry&) = default;
};

// Token-level activations of one prompt at one layer. Duplicate concept ids
// are expected (one per token position the feature fires on).
struct ActivationSet {
  std::string class_key;
  Style style = Style::Verbose;
  std::string language;
  int layer = 0;
  std::uint32_t sae_width = kDefaultSaeWidth;
  std::string model;
  std::string sae;
  std::vector<ActivationEntry> entries;

  friend bool operator==(const ActivationSet&, const ActivationSet&) = default;
};

// Deduplicated sparse representation. `tag` is a language ("en") or a
// combination ("en+fr").
struct ConceptVector {
  std::string class_key;
  std::string tag;
  int layer = 0;
  Style style = Style::Verbose;
  std::map<ConceptId, double> weights;

  bool empty() const { return weights.empty(); }
};

// Per concept id, keep the maximum weight over its entries.
inline ConceptVector reduce_duplicates(const ActivationSet& set) {
  ConceptVector v{set.class_key, set.language, set.layer, set.style, {}};
  for (const auto& e : set.entries) {
    auto [it, inserted] = v.weights.emplace(e.concept_id, e.weight);
    if (!inserted) it->second = std::max(it->second, e.weight);
  }
  return v;
}

namespace detail {

inline void require_same_cell(const ConceptVector& a, const ConceptVector& b, std::string_view op) {
  if (a.layer != b.layer || a.style != b.style)
    throw ContractError(std::string(op) + ": layer/style mismatch between " + a.class_key + " and " + b.class_key);
}

}  // namespace detail

// Intersection of supports with the mean weight of each shared concept.
inline ConceptVector conceptual_average(const ConceptVector& a, const ConceptVector& b) {
  detail::require_same_cell(a, b, "conceptual_average");
  if (a.class_key != b.class_key)
    throw ContractError("conceptual_average: class mismatch " + a.class_key + " vs " + b.class_key);
  if (a.tag == b.tag) throw ContractError("conceptual_average: both vectors are tagged '" + a.tag + "'");

  ConceptVector out{a.class_key, a.tag + "+" + b.tag, a.layer, a.style, {}};
  auto ia = a.weights.begin();
  auto ib = b.weights.begin();
  while (ia != a.weights.end() && ib != b.weights.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      out.weights.emplace_hint(out.weights.end(), ia->first, (ia->second + ib->second) / 2.0);
      ++ia;
      ++ib;
    }
  }
  return out;
}

// n-ary form: support is the common intersection, weight the arithmetic mean.
inline ConceptVector conceptual_average(std::span<const ConceptVector> vectors) {
  if (vectors.size() < 2) throw ContractError("conceptual_average needs at least two vectors");
  ConceptVector out{vectors[0].class_key, vectors[0].tag, vectors[0].layer, vectors[0].style, {}};
  for (std::size_t i = 1; i < vectors.size(); ++i) {
    detail::require_same_cell(vectors[0], vectors[i], "conceptual_average");
    if (vectors[i].class_key != out.class_key)
      throw ContractError("conceptual_average: class mismatch " + out.class_key + " vs " + vectors[i].class_key);
    out.tag += "+" + vectors[i].tag;
  }
  const double n = static_cast<double>(vectors.size());
  for (const auto& [id, w] : vectors[0].weights) {
    double sum = w;
    bool shared = true;
    for (std::size_t i = 1; i < vectors.size() && shared; ++i) {
      auto it = vectors[i].weights.find(id);
      if (it == vectors[i].weights.end()) {
        shared = false;
      } else {
        sum += it->second;
      }
    }
    if (shared) out.weights.emplace_hint(out.weights.end(), id, sum / n);
  }
  return out;
}

struct Similarity {
  double score = 0.0;
  bool degenerate = false;  // at least one side had no concepts
};

inline double l2_norm(const ConceptVector& v) {
  double sq = 0.0;
  for (const auto& [id, w] : v.weights) sq += w * w;
  return std::sqrt(sq);
}

namespace detail {

inline double sparse_dot(const ConceptVector& a, const ConceptVector& b) {
  double dot = 0.0;
  auto ia = a.weights.begin();
  auto ib = b.weights.begin();
  while (ia != a.weights.end() && ib != b.weights.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      dot += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return dot;
}

}  // namespace detail

// Cosine over the union of supports; absent ids count as 0. Norms may be
// passed in when the caller has them cached.
inline Similarity cosine_similarity(const ConceptVector& a, const ConceptVector& b, double norm_a, double norm_b) {
  detail::require_same_cell(a, b, "cosine_similarity");
  if (a.tag != b.tag) throw ContractError("cosine_similarity: tag mismatch '" + a.tag + "' vs '" + b.tag + "'");
  if (a.empty() || b.empty()) return {0.0, true};
  const double cos = detail::sparse_dot(a, b) / (norm_a * norm_b);
  return {std::clamp(cos, 0.0, 1.0), false};
}

inline Similarity cosine_similarity(const ConceptVector& a, const ConceptVector& b) {
  return cosine_similarity(a, b, l2_norm(a), l2_norm(b));
}

// ---------------------------------------------------------------------------
// Activation JSONL

struct ActivationReadOptions {
  int max_layer = kDefaultMaxLayer;
};

inline std::string to_json_line(const ActivationSet& s) {
  nlohmann::ordered_json j;
  j["class_key"] = s.class_key;
  j["style"] = to_string(s.style);
  j["language"] = s.language;
  j["layer"] = s.layer;
  j["sae_width"] = s.sae_width;
  j["model"] = s.model;
  j["sae"] = s.sae;
  auto entries = nlohmann::ordered_json::array();
  for (const auto& e : s.entries) entries.push_back({e.concept_id, e.weight});
  j["entries"] = std::move(entries);
  return j.dump();
}

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j, std::size_t line, const char* field) {
  if (!j.contains(field)) throw SchemaError(line, field, "missing");
  return j[field];
}

inline std::string require_string(const nlohmann::json& j, std::size_t line, const char* field) {
  const auto& v = require_field(j, line, field);
  if (!v.is_string()) throw SchemaError(line, field, "expected a string");
  return v.get<std::string>();
}

inline ActivationSet activation_from_json(const nlohmann::json& j, std::size_t line, const ActivationReadOptions& opt) {
  if (!j.is_object()) throw SchemaError(line, "<record>", "expected a JSON object");
  ActivationSet s;
  s.class_key = require_string(j, line, "class_key");
  if (s.class_key.find('-') == std::string::npos) throw SchemaError(line, "class_key", "expected <short>-<local>");
  try {
    s.style = parse_style(require_string(j, line, "style"));
  } catch (const ContractError& e) {
    throw SchemaError(line, "style", e.what());
  }
  s.language = require_string(j, line, "language");
  if (s.language.empty()) throw SchemaError(line, "language", "empty");

  const auto& layer = require_field(j, line, "layer");
  if (!layer.is_number_integer()) throw SchemaError(line, "layer", "expected an integer");
  s.layer = layer.get<int>();
  if (s.layer < 0 || s.layer > opt.max_layer)
    throw SchemaError(line, "layer", "out of range [0, " + std::to_string(opt.max_layer) + "]");

  const auto& width = require_field(j, line, "sae_width");
  if (!width.is_number_unsigned() || width.get<std::uint64_t>() == 0 ||
      width.get<std::uint64_t>() > UINT32_MAX)
    throw SchemaError(line, "sae_width", "expected a positive integer");
  s.sae_width = width.get<std::uint32_t>();
  s.model = require_string(j, line, "model");
  s.sae = require_string(j, line, "sae");

  const auto& entries = require_field(j, line, "entries");
  if (!entries.is_array()) throw SchemaError(line, "entries", "expected an array");
  s.entries.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const std::string where = "entries[" + std::to_string(i) + "]";
    if (!e.is_array() || e.size() != 2 || !e[1].is_number())
      throw SchemaError(line, where, "expected [concept_id, weight]");
    if (!e[0].is_number_unsigned()) throw SchemaError(line, where, "concept_id must be a non-negative integer");
    const auto id = e[0].get<std::uint64_t>();
    if (id >= s.sae_width) throw SchemaError(line, where, "concept_id " + std::to_string(id) + " >= sae_width");
    const double w = e[1].get<double>();
    if (!std::isfinite(w) || w <= 0.0) throw SchemaError(line, where, "weight must be finite and > 0");
    s.entries.push_back({static_cast<ConceptId>(id), w});
  }
  return s;
}

}  // namespace detail

inline std::vector<ActivationSet> parse_activation_jsonl(std::string_view content,
                                                         const ActivationReadOptions& opt = {}) {
  std::vector<ActivationSet> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no, e.byte);
    }
    out.push_back(detail::activation_from_json(j, line_no, opt));
  }
  return out;
}

inline std::vector<ActivationSet> read_activation_file(const std::filesystem::path& path,
                                                       const ActivationReadOptions& opt = {}) {
  try {
    return parse_activation_jsonl(read_file(path), opt);
  } catch (const SchemaError& e) {
    throw e.in(path.string());
  } catch (const ParseError& e) {
    throw e.in(path.string());
  }
}

inline void write_activation_file(std::span<const ActivationSet> sets, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& s : sets) out << to_json_line(s) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace cavg

#endif  // CAVG_ACTIVATION_HPP
