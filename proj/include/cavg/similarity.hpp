#ifndef CAVG_SIMILARITY_HPP
#define CAVG_SIMILARITY_HPP

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cavg/activation.hpp"
#include "cavg/alignment.hpp"
#include "cavg/error.hpp"

namespace cavg {

struct SimilarityRecord {
  std::string class_a;  // class_a < class_b
  std::string class_b;
  double score = 0.0;
  int label = 0;
  bool degenerate = false;

  friend bool operator==(const SimilarityRecord&, const SimilarityRecord&) = default;
};

// "cmt-Author" -> "cmt"
inline std::string_view ontology_of(std::string_view class_key) {
  return class_key.substr(0, class_key.find('-'));
}

inline std::pair<std::string, std::string> ordered_pair(std::string a, std::string b) {
  if (b < a) std::swap(a, b);
  return {std::move(a), std::move(b)};
}

// Scores every unordered cross-ontology pair of classes whose ontologies
// take part in at least one reference mapping. Records come out sorted by
// (class_a, class_b).
inline std::vector<SimilarityRecord> build_similarity_records(std::span<const ConceptVector> vectors,
                                                              std::span<const ReferenceMapping> mappings) {
  if (vectors.empty()) return {};
  std::set<std::string, std::less<>> ontologies;
  for (const auto& v : vectors) {
    if (v.layer != vectors[0].layer || v.style != vectors[0].style || v.tag != vectors[0].tag)
      throw ContractError("build_similarity_records: vectors span more than one layer/style/combo");
    ontologies.emplace(ontology_of(v.class_key));
  }
  if (ontologies.size() < 2) throw ContractError("build_similarity_records: classes come from fewer than 2 ontologies");

  std::set<std::pair<std::string, std::string>> truth;
  std::set<std::string, std::less<>> mapped_ontologies;
  for (const auto& m : mappings) {
    truth.insert(ordered_pair(m.entity1, m.entity2));
    mapped_ontologies.emplace(ontology_of(m.entity1));
    mapped_ontologies.emplace(ontology_of(m.entity2));
  }

  std::vector<const ConceptVector*> used;
  for (const auto& v : vectors) {
    if (mapped_ontologies.count(ontology_of(v.class_key))) used.push_back(&v);
  }
  std::sort(used.begin(), used.end(), [](const auto* a, const auto* b) { return a->class_key < b->class_key; });
  for (std::size_t i = 1; i < used.size(); ++i) {
    if (used[i]->class_key == used[i - 1]->class_key)
      throw ContractError("build_similarity_records: duplicate class key " + used[i]->class_key);
  }

  std::vector<double> norms(used.size());
  for (std::size_t i = 0; i < used.size(); ++i) norms[i] = l2_norm(*used[i]);

  std::vector<SimilarityRecord> out;
  for (std::size_t i = 0; i < used.size(); ++i) {
    const auto onto_i = ontology_of(used[i]->class_key);
    for (std::size_t j = i + 1; j < used.size(); ++j) {
      if (ontology_of(used[j]->class_key) == onto_i) continue;
      const auto sim = cosine_similarity(*used[i], *used[j], norms[i], norms[j]);
      SimilarityRecord r{used[i]->class_key, used[j]->class_key, sim.score, 0, sim.degenerate};
      r.label = truth.count({r.class_a, r.class_b}) ? 1 : 0;
      out.push_back(std::move(r));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV: class_a,class_b,score,label with the score at 7 decimals, e.g.
// "cmt-Author,edas-Author,0.8362799,1".

inline std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

inline constexpr std::string_view kSimilarityHeader = "class_a,class_b,score,label";

inline std::string similarity_csv_row(const SimilarityRecord& r) {
  return r.class_a + "," + r.class_b + "," + format_fixed(r.score, 7) + "," + std::to_string(r.label);
}

inline std::string write_similarity_csv(std::span<const SimilarityRecord> records, bool header = false) {
  std::string out;
  if (header) {
    out += kSimilarityHeader;
    out += '\n';
  }
  for (const auto& r : records) {
    out += similarity_csv_row(r);
    out += '\n';
  }
  return out;
}

// Accepts the optional header line. Degenerate flags are not part of the
// format and read back as false.
inline std::vector<SimilarityRecord> parse_similarity_csv(std::string_view content) {
  std::vector<SimilarityRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line_no == 1 && line == kSimilarityHeader) continue;

    std::vector<std::string_view> cols;
    std::size_t start = 0;
    for (;;) {
      auto comma = line.find(',', start);
      cols.push_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cols.size() != 4) throw ParseError("expected 4 columns, got " + std::to_string(cols.size()), line_no, 1);

    SimilarityRecord r;
    r.class_a = std::string(cols[0]);
    r.class_b = std::string(cols[1]);
    const std::string score(cols[2]);
    char* stop = nullptr;
    r.score = std::strtod(score.c_str(), &stop);
    if (score.empty() || *stop != '\0') throw ParseError("invalid score '" + score + "'", line_no, 1);
    if (cols[3] == "1") {
      r.label = 1;
    } else if (cols[3] == "0") {
      r.label = 0;
    } else {
      throw ParseError("label must be 0 or 1", line_no, 1);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace cavg

#endif  // CAVG_SIMILARITY_HPP
