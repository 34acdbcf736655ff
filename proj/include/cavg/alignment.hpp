#ifndef CAVG_ALIGNMENT_HPP
#define CAVG_ALIGNMENT_HPP

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cavg/error.hpp"
#include "cavg/ontology.hpp"
#include "cavg/xml.hpp"

namespace cavg {

struct ReferenceMapping {
  std::string entity1;  // class_key
  std::string entity2;  // class_key
  std::string relation = "=";
  double measure = 1.0;

  friend bool operator==(const ReferenceMapping&, const ReferenceMapping&) = default;
};

struct ReferenceAlignment {
  std::vector<ReferenceMapping> mappings;
  std::size_t skipped_cells = 0;
  std::vector<std::string> warnings;
};

// Decides whether "<short>-<local>" names a class. Cells whose entities are
// not classes (object/data property mappings) are skipped.
using ClassPredicate = std::function<bool(std::string_view class_key)>;

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Alignment-format elements are matched by local name only; the format's
// namespace has had several spellings over the years.
inline const xml::Element* child_named(const xml::Element& e, std::string_view name) {
  for (const auto& c : e.children) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

inline void collect_cells(const xml::Element& e, std::vector<const xml::Element*>& out) {
  if (e.name == "Cell") {
    out.push_back(&e);
    return;
  }
  for (const auto& c : e.children) collect_cells(c, out);
}

inline std::string entity_iri(const xml::Element& entity) {
  if (const auto* r = entity.attribute(xml::kRdfNs, "resource")) return *r;
  if (entity.children.size() == 1) {
    if (const auto* about = entity.children.front().attribute(xml::kRdfNs, "about")) return *about;
  }
  return std::string(trim(entity.text));
}

}  // namespace detail

// Reads OAEI alignment-format Cells. entity1 is keyed with short_a,
// entity2 with short_b.
inline ReferenceAlignment parse_reference_alignment(std::string_view document, const std::string& short_a,
                                                    const std::string& short_b, const ClassPredicate& is_class = {}) {
  validate_short_name(short_a);
  validate_short_name(short_b);
  const xml::Element root = xml::parse(document);
  std::vector<const xml::Element*> cells;
  detail::collect_cells(root, cells);

  ReferenceAlignment out;
  if (cells.empty()) {
    out.warnings.push_back("alignment " + short_a + "-" + short_b + " has no Cell elements");
    return out;
  }
  for (const auto* cell : cells) {
    const auto* e1 = detail::child_named(*cell, "entity1");
    const auto* e2 = detail::child_named(*cell, "entity2");
    const auto* rel = detail::child_named(*cell, "relation");
    const auto* measure = detail::child_named(*cell, "measure");
    if (!e1 || !e2) {
      out.warnings.push_back("Cell at line " + std::to_string(cell->line) + " lacks entity1/entity2");
      ++out.skipped_cells;
      continue;
    }
    ReferenceMapping m;
    m.entity1 = short_a + "-" + local_name_of(detail::entity_iri(*e1));
    m.entity2 = short_b + "-" + local_name_of(detail::entity_iri(*e2));
    m.relation = rel ? std::string(detail::trim(rel->text)) : "=";
    if (measure) {
      const std::string text(detail::trim(measure->text));
      char* end = nullptr;
      m.measure = std::strtod(text.c_str(), &end);
      if (text.empty() || *end != '\0' || !(m.measure >= 0.0 && m.measure <= 1.0)) {
        out.warnings.push_back("Cell at line " + std::to_string(cell->line) + " has invalid measure '" + text + "'");
        ++out.skipped_cells;
        continue;
      }
    }
    const bool classes = !is_class || (is_class(m.entity1) && is_class(m.entity2));
    if (m.relation != "=" || !classes || m.entity1 == m.entity2) {
      ++out.skipped_cells;
      continue;
    }
    out.mappings.push_back(std::move(m));
  }
  return out;
}

// "cmt-edas.rdf" -> {"cmt", "edas"}
inline std::pair<std::string, std::string> alignment_short_names(const std::filesystem::path& path) {
  const std::string stem = path.stem().string();
  const auto dash = stem.find('-');
  if (dash == std::string::npos || dash == 0 || dash + 1 == stem.size() || stem.find('-', dash + 1) != std::string::npos)
    throw ContractError("alignment file name must be <short_a>-<short_b>.rdf: " + path.filename().string());
  return {stem.substr(0, dash), stem.substr(dash + 1)};
}

inline ReferenceAlignment load_reference_alignment(const std::filesystem::path& path,
                                                   const ClassPredicate& is_class = {}) {
  auto [a, b] = alignment_short_names(path);
  try {
    return parse_reference_alignment(read_file(path), a, b, is_class);
  } catch (const ParseError& e) {
    throw e.in(path.string());
  }
}

// Every *.rdf file of a directory, in file-name order, merged.
inline ReferenceAlignment load_reference_dir(const std::filesystem::path& dir, const ClassPredicate& is_class = {}) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".rdf") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  ReferenceAlignment all;
  for (const auto& f : files) {
    auto one = load_reference_alignment(f, is_class);
    all.mappings.insert(all.mappings.end(), one.mappings.begin(), one.mappings.end());
    all.skipped_cells += one.skipped_cells;
    all.warnings.insert(all.warnings.end(), one.warnings.begin(), one.warnings.end());
  }
  return all;
}

// Serializes mappings as an alignment-format document. Entity IRIs are
// rebuilt as "<base_a>#<local>" / "<base_b>#<local>".
inline std::string write_reference_alignment(std::span<const ReferenceMapping> mappings, const std::string& base_a,
                                             const std::string& base_b) {
  std::string out =
      "<?xml version='1.0' encoding='utf-8'?>\n"
      "<rdf:RDF xmlns='http://knowledgeweb.semanticweb.org/heterogeneity/alignment'\n"
      "         xmlns:rdf='http://www.w3.org/1999/02/22-rdf-syntax-ns#'\n"
      "         xmlns:xsd='http://www.w3.org/2001/XMLSchema#'>\n"
      "<Alignment>\n  <xml>yes</xml>\n  <level>0</level>\n  <type>11</type>\n";
  auto local = [](const std::string& key) { return key.substr(key.find('-') + 1); };
  for (const auto& m : mappings) {
    char measure[32];
    std::snprintf(measure, sizeof measure, "%.17g", m.measure);
    out += "  <map>\n    <Cell>\n";
    out += "      <entity1 rdf:resource='" + base_a + "#" + local(m.entity1) + "'/>\n";
    out += "      <entity2 rdf:resource='" + base_b + "#" + local(m.entity2) + "'/>\n";
    out += "      <relation>" + m.relation + "</relation>\n";
    out += "      <measure rdf:datatype='http://www.w3.org/2001/XMLSchema#float'>" + std::string(measure) +
           "</measure>\n";
    out += "    </Cell>\n  </map>\n";
  }
  out += "</Alignment>\n</rdf:RDF>\n";
  return out;
}

// Class predicate backed by parsed ontologies.
inline ClassPredicate classes_of(std::span<const OntologyModel> models) {
  auto keys = std::make_shared<std::set<std::string, std::less<>>>();
  for (const auto& m : models) {
    for (const auto& [iri, c] : m.classes) keys->insert(m.class_key(c));
  }
  return [keys](std::string_view key) { return keys->find(key) != keys->end(); };
}

}  // namespace cavg

#endif  // CAVG_ALIGNMENT_HPP
