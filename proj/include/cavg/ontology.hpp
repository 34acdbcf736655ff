#ifndef CAVG_ONTOLOGY_HPP
#define CAVG_ONTOLOGY_HPP

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cavg/error.hpp"
#include "cavg/xml.hpp"

namespace cavg {

enum class ExprKind { NamedClass, SomeValuesFrom, AllValuesFrom };

// A superclass expression: a named class or a single property restriction.
// `filler` is always a class local name.
struct ClassExpr {
  ExprKind kind = ExprKind::NamedClass;
  std::optional<std::string> property;
  std::string filler;

  static ClassExpr named(std::string cls) { return {ExprKind::NamedClass, std::nullopt, std::move(cls)}; }
  static ClassExpr some(std::string prop, std::string cls) {
    return {ExprKind::SomeValuesFrom, std::move(prop), std::move(cls)};
  }
  static ClassExpr only(std::string prop, std::string cls) {
    return {ExprKind::AllValuesFrom, std::move(prop), std::move(cls)};
  }

  friend auto operator<=>(const ClassExpr&, const ClassExpr&) = default;
};

// (property local name, filler local name)
struct PropertyUse {
  std::string property;
  std::string filler;

  friend auto operator<=>(const PropertyUse&, const PropertyUse&) = default;
};

struct ClassInfo {
  std::string iri;
  std::string local_name;
  std::vector<ClassExpr> superclasses;
  std::vector<std::string> subclasses;  // IRIs
  std::vector<PropertyUse> property_uses;
  // Datatype properties whose domain is this class. Parsed, never rendered.
  std::vector<PropertyUse> data_properties;
};

struct OntologyModel {
  std::string short_name;
  std::map<std::string, ClassInfo> classes;  // keyed by IRI
  // Axioms dropped because they use anonymous classes other than a single
  // some/only restriction (unions, intersections, cardinalities, ...).
  std::size_t skipped_axioms = 0;

  std::string class_key(const ClassInfo& c) const { return short_name + "-" + c.local_name; }

  const ClassInfo& at(std::string_view iri) const {
    auto it = classes.find(std::string(iri));
    if (it == classes.end()) throw NotFoundError("class not found in '" + short_name + "': " + std::string(iri));
    return it->second;
  }

  const ClassInfo* find_local(std::string_view local_name) const {
    for (const auto& [iri, c] : classes) {
      if (c.local_name == local_name) return &c;
    }
    return nullptr;
  }
};

// Fragment after '#', else the substring after the final '/'.
inline std::string local_name_of(std::string_view iri) {
  if (auto hash = iri.rfind('#'); hash != std::string_view::npos) return std::string(iri.substr(hash + 1));
  if (auto slash = iri.rfind('/'); slash != std::string_view::npos) return std::string(iri.substr(slash + 1));
  return std::string(iri);
}

inline void validate_short_name(std::string_view short_name) {
  if (short_name.empty()) throw ContractError("ontology short name is empty");
  if (short_name.find_first_of(",-") != std::string_view::npos)
    throw ContractError("ontology short name must not contain ',' or '-': " + std::string(short_name));
}

namespace detail {

class OwlReader {
 public:
  explicit OwlReader(OntologyModel& model) : model_(model) {}

  void read(const xml::Element& root) {
    std::string base;
    if (const auto* b = root.attribute(xml::kXmlNs, "base")) base = *b;
    collect_declarations(root, base);
    collect_axioms(root, base);
    link_subclasses();
  }

 private:
  static bool is_owl(const xml::Element& e, std::string_view name) { return e.is(xml::kOwlNs, name); }
  static bool is_rdfs(const xml::Element& e, std::string_view name) { return e.is(xml::kRdfsNs, name); }

  static std::string resolve(std::string_view ref, const std::string& base) {
    if (ref.find(':') != std::string_view::npos) return std::string(ref);
    std::string_view stem(base);
    if (auto hash = stem.find('#'); hash != std::string_view::npos) stem = stem.substr(0, hash);
    if (!ref.empty() && ref.front() == '#') return std::string(stem) + std::string(ref);
    if (!stem.empty() && stem.back() != '/') return std::string(stem) + "/" + std::string(ref);
    return std::string(stem) + std::string(ref);
  }

  static std::string scoped_base(const xml::Element& e, const std::string& base) {
    if (const auto* b = e.attribute(xml::kXmlNs, "base")) return *b;
    return base;
  }

  // IRI named by a node element (rdf:about or rdf:ID), if any.
  static std::optional<std::string> node_iri(const xml::Element& e, const std::string& base) {
    if (const auto* about = e.attribute(xml::kRdfNs, "about")) return resolve(*about, base);
    if (const auto* id = e.attribute(xml::kRdfNs, "ID")) return resolve("#" + *id, base);
    return std::nullopt;
  }

  // IRI referenced by a property element: rdf:resource, or a single nested
  // named node element.
  static std::optional<std::string> referenced_iri(const xml::Element& prop, const std::string& base) {
    if (const auto* r = prop.attribute(xml::kRdfNs, "resource")) return resolve(*r, base);
    if (prop.children.size() == 1 && prop.children.front().children.empty())
      return node_iri(prop.children.front(), scoped_base(prop.children.front(), base));
    return std::nullopt;
  }

  static bool is_thing(const std::string& iri) { return iri == std::string(xml::kOwlNs) + "Thing"; }

  static bool declares_class(const xml::Element& e) {
    if (is_owl(e, "Class")) return true;
    if (!e.is(xml::kRdfNs, "Description")) return false;
    for (const auto& c : e.children) {
      if (c.is(xml::kRdfNs, "type")) {
        const auto* r = c.attribute(xml::kRdfNs, "resource");
        if (r && *r == std::string(xml::kOwlNs) + "Class") return true;
      }
    }
    return false;
  }

  void collect_declarations(const xml::Element& e, const std::string& inherited) {
    const std::string base = scoped_base(e, inherited);
    if (declares_class(e)) {
      if (auto iri = node_iri(e, base); iri && !is_thing(*iri)) {
        std::string local = local_name_of(*iri);
        if (local.empty()) {
          ++model_.skipped_axioms;
        } else if (!model_.classes.count(*iri)) {
          ClassInfo info;
          info.iri = *iri;
          info.local_name = std::move(local);
          model_.classes.emplace(*iri, std::move(info));
        }
      }
    }
    for (const auto& c : e.children) collect_declarations(c, base);
  }

  void collect_axioms(const xml::Element& e, const std::string& inherited) {
    const std::string base = scoped_base(e, inherited);
    if (is_owl(e, "ObjectProperty") || is_owl(e, "DatatypeProperty")) {
      read_property(e, base);
    } else if (auto iri = node_iri(e, base); iri && model_.classes.count(*iri)) {
      read_class_body(e, base, *iri);
    }
    for (const auto& c : e.children) collect_axioms(c, base);
  }

  void read_class_body(const xml::Element& e, const std::string& base, const std::string& iri) {
    for (const auto& prop : e.children) {
      if (is_rdfs(prop, "subClassOf")) {
        read_superclass(prop, scoped_base(prop, base), iri);
      } else if (is_owl(prop, "equivalentClass")) {
        // Named equivalences are not rendered; anonymous ones count as dropped.
        if (!referenced_iri(prop, base)) ++model_.skipped_axioms;
      }
    }
  }

  void read_superclass(const xml::Element& prop, const std::string& base, const std::string& iri) {
    if (auto target = referenced_iri(prop, base)) {
      if (!is_thing(*target) && *target != iri) {
        super_iris_[iri].insert(*target);
        add_super(iri, ClassExpr::named(local_name_of(*target)));
      }
      return;
    }
    if (prop.children.size() == 1 && is_owl(prop.children.front(), "Restriction")) {
      if (auto expr = read_restriction(prop.children.front(), base)) {
        add_super(iri, std::move(*expr));
        return;
      }
    }
    ++model_.skipped_axioms;
  }

  std::optional<ClassExpr> read_restriction(const xml::Element& r, const std::string& inherited) const {
    const std::string base = scoped_base(r, inherited);
    std::optional<std::string> property;
    std::optional<std::pair<ExprKind, std::string>> filler;
    for (const auto& c : r.children) {
      if (is_owl(c, "onProperty")) {
        property = referenced_iri(c, base);
        if (!property) return std::nullopt;
      } else if (is_owl(c, "someValuesFrom") || is_owl(c, "allValuesFrom")) {
        auto target = referenced_iri(c, base);
        if (!target || filler) return std::nullopt;
        filler.emplace(is_owl(c, "someValuesFrom") ? ExprKind::SomeValuesFrom : ExprKind::AllValuesFrom,
                       std::move(*target));
      } else {
        // cardinality, hasValue, ...
        return std::nullopt;
      }
    }
    if (!property || !filler || is_datatype(filler->second)) return std::nullopt;
    return ClassExpr{filler->first, local_name_of(*property), local_name_of(filler->second)};
  }

  static bool is_datatype(const std::string& iri) {
    return iri.starts_with("http://www.w3.org/2001/XMLSchema#") || iri == std::string(xml::kRdfsNs) + "Literal";
  }

  void read_property(const xml::Element& e, const std::string& base) {
    auto iri = node_iri(e, base);
    if (!iri) return;
    const bool object = is_owl(e, "ObjectProperty");
    auto& entry = properties_[*iri];
    entry.object = entry.object || object;
    for (const auto& c : e.children) {
      const bool domain = is_rdfs(c, "domain");
      if (!domain && !is_rdfs(c, "range")) continue;
      auto target = referenced_iri(c, base);
      if (!target) {
        ++model_.skipped_axioms;
        continue;
      }
      (domain ? entry.domains : entry.ranges).insert(*target);
    }
  }

  void add_super(const std::string& iri, ClassExpr expr) {
    auto& supers = model_.classes.at(iri).superclasses;
    if (std::find(supers.begin(), supers.end(), expr) == supers.end()) supers.push_back(std::move(expr));
  }

  void link_subclasses() {
    for (const auto& [child, supers] : super_iris_) {
      for (const auto& parent : supers) {
        auto it = model_.classes.find(parent);
        if (it != model_.classes.end()) it->second.subclasses.push_back(child);
      }
    }
    for (const auto& [iri, prop] : properties_) {
      const std::string name = local_name_of(iri);
      for (const auto& domain : prop.domains) {
        auto it = model_.classes.find(domain);
        if (it == model_.classes.end()) continue;
        for (const auto& range : prop.ranges) {
          if (prop.object) {
            it->second.property_uses.push_back({name, local_name_of(range)});
          } else {
            it->second.data_properties.push_back({name, local_name_of(range)});
          }
        }
      }
    }
    for (auto& [iri, c] : model_.classes) {
      for (auto* list : {&c.property_uses, &c.data_properties}) {
        std::sort(list->begin(), list->end());
        list->erase(std::unique(list->begin(), list->end()), list->end());
      }
      std::sort(c.subclasses.begin(), c.subclasses.end());
      c.subclasses.erase(std::unique(c.subclasses.begin(), c.subclasses.end()), c.subclasses.end());
    }
  }

  struct PropertyInfo {
    bool object = false;
    std::set<std::string> domains;
    std::set<std::string> ranges;
  };

  OntologyModel& model_;
  std::map<std::string, std::set<std::string>> super_iris_;
  std::map<std::string, PropertyInfo> properties_;
};

}  // namespace detail

// Reads the OAEI-style RDF/XML subset: owl:Class declarations,
// rdfs:subClassOf (named or single some/only restriction) and
// rdfs:domain / rdfs:range of object and datatype properties.
inline OntologyModel parse_ontology(std::string_view document, std::string short_name) {
  validate_short_name(short_name);
  OntologyModel model;
  model.short_name = std::move(short_name);
  const xml::Element root = xml::parse(document);
  detail::OwlReader(model).read(root);
  if (model.classes.empty()) throw EmptyModelError("no OWL classes found in ontology '" + model.short_name + "'");
  return model;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Short name is the file stem ("edas.owl" -> "edas").
inline OntologyModel load_ontology(const std::filesystem::path& path) {
  try {
    return parse_ontology(read_file(path), path.stem().string());
  } catch (const ParseError& e) {
    throw e.in(path.string());
  }
}

// All *.owl files of a directory, sorted by file name.
inline std::vector<OntologyModel> load_corpus(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".owl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<OntologyModel> models;
  models.reserve(files.size());
  for (const auto& f : files) models.push_back(load_ontology(f));
  return models;
}

}  // namespace cavg

#endif  // CAVG_ONTOLOGY_HPP
