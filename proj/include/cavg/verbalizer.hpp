#ifndef CAVG_VERBALIZER_HPP
#define CAVG_VERBALIZER_HPP

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cavg/error.hpp"
#include "cavg/ontology.hpp"

namespace cavg {

enum class Style { Summary, Verbose };

inline std::string_view to_string(Style s) { return s == Style::Summary ? "summary" : "verbose"; }

inline Style parse_style(std::string_view s) {
  if (s == "summary") return Style::Summary;
  if (s == "verbose") return Style::Verbose;
  throw ContractError("unknown style '" + std::string(s) + "' (expected summary or verbose)");
}

struct VerbalizedClass {
  std::string class_key;  // "<short_name>-<local_name>"
  Style style = Style::Verbose;
  std::string language = "en";
  std::string text;

  friend bool operator==(const VerbalizedClass&, const VerbalizedClass&) = default;
};

namespace detail {

inline void append_sorted(std::vector<std::string>& out, std::vector<std::string> group) {
  std::sort(group.begin(), group.end());
  group.erase(std::unique(group.begin(), group.end()), group.end());
  out.insert(out.end(), group.begin(), group.end());
}

}  // namespace detail

// Clause groups in rendering order: existential restrictions, named
// superclasses, universal restrictions, subclass mentions, property uses.
// Each group is sorted by rendered text. Summary drops the "is a SubClassOf"
// connective from superclass clauses and keeps everything else.
inline std::vector<std::string> class_clauses(const OntologyModel& model, const ClassInfo& c, Style style) {
  const std::string sub = style == Style::Verbose ? "is a SubClassOf " : "";
  std::vector<std::string> some, named, only, supers, uses;
  for (const auto& e : c.superclasses) {
    switch (e.kind) {
      case ExprKind::NamedClass:
        named.push_back(sub + e.filler);
        break;
      case ExprKind::SomeValuesFrom:
        some.push_back(sub + "some " + *e.property + " " + e.filler);
        break;
      case ExprKind::AllValuesFrom:
        only.push_back(sub + "only " + *e.property + " " + e.filler);
        break;
    }
  }
  for (const auto& iri : c.subclasses) {
    auto it = model.classes.find(iri);
    supers.push_back("is a SuperClassOf " + (it != model.classes.end() ? it->second.local_name : local_name_of(iri)));
  }
  for (const auto& u : c.property_uses) uses.push_back(u.property + " " + u.filler);

  std::vector<std::string> out;
  detail::append_sorted(out, std::move(some));
  detail::append_sorted(out, std::move(named));
  detail::append_sorted(out, std::move(only));
  detail::append_sorted(out, std::move(supers));
  detail::append_sorted(out, std::move(uses));
  return out;
}

inline VerbalizedClass verbalize_class(const OntologyModel& model, std::string_view class_iri, Style style) {
  const ClassInfo& c = model.at(class_iri);
  std::string text = c.local_name;
  const auto clauses = class_clauses(model, c, style);
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    text += i == 0 ? " " : " and ";
    text += clauses[i];
  }
  return {model.class_key(c), style, "en", std::move(text)};
}

// One English verbalization per class, ordered by class_key.
inline std::vector<VerbalizedClass> verbalize_all(const OntologyModel& model, Style style) {
  if (model.classes.empty()) throw EmptyModelError("ontology '" + model.short_name + "' has no classes");
  std::vector<VerbalizedClass> out;
  out.reserve(model.classes.size());
  std::set<std::string> keys;
  for (const auto& [iri, c] : model.classes) {
    auto v = verbalize_class(model, iri, style);
    if (!keys.insert(v.class_key).second) throw ContractError("duplicate class key " + v.class_key);
    out.push_back(std::move(v));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.class_key < b.class_key; });
  return out;
}

// Verbalizes a whole corpus; (short_name, local_name) collisions anywhere in
// it are an error.
inline std::vector<VerbalizedClass> verbalize_corpus(std::span<const OntologyModel> models, Style style) {
  std::vector<VerbalizedClass> out;
  std::set<std::string> keys;
  for (const auto& m : models) {
    for (auto& v : verbalize_all(m, style)) {
      if (!keys.insert(v.class_key).second) throw ContractError("duplicate class key " + v.class_key);
      out.push_back(std::move(v));
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.class_key < b.class_key; });
  return out;
}

// JSONL: {"class_key":..,"style":..,"language":..,"text":..}
inline std::string to_jsonl(std::span<const VerbalizedClass> records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["class_key"] = r.class_key;
    j["style"] = to_string(r.style);
    j["language"] = r.language;
    j["text"] = r.text;
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline std::vector<VerbalizedClass> parse_verbalization_jsonl(std::string_view content) {
  std::vector<VerbalizedClass> out;
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
    VerbalizedClass v;
    for (const char* field : {"class_key", "style", "language", "text"}) {
      if (!j.contains(field) || !j[field].is_string()) throw SchemaError(line_no, field, "missing or not a string");
    }
    v.class_key = j["class_key"].get<std::string>();
    try {
      v.style = parse_style(j["style"].get<std::string>());
    } catch (const ContractError& e) {
      throw SchemaError(line_no, "style", e.what());
    }
    v.language = j["language"].get<std::string>();
    v.text = j["text"].get<std::string>();
    if (v.class_key.find('-') == std::string::npos) throw SchemaError(line_no, "class_key", "expected <short>-<local>");
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace cavg

#endif  // CAVG_VERBALIZER_HPP
