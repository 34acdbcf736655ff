#ifndef CAVG_XML_HPP
#define CAVG_XML_HPP

#include <expat.h>

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cavg/error.hpp"

// Minimal namespace-aware DOM built on expat. Only what the OWL and
// alignment readers need: element names resolved to (namespace, local),
// attributes, children and concatenated character data.
namespace cavg::xml {

inline constexpr std::string_view kXmlNs = "http://www.w3.org/XML/1998/namespace";
inline constexpr std::string_view kRdfNs = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
inline constexpr std::string_view kRdfsNs = "http://www.w3.org/2000/01/rdf-schema#";
inline constexpr std::string_view kOwlNs = "http://www.w3.org/2002/07/owl#";

struct Attribute {
  std::string ns;
  std::string name;
  std::string value;
};

struct Element {
  std::string ns;
  std::string name;
  std::vector<Attribute> attributes;
  std::vector<Element> children;
  std::string text;
  std::size_t line = 0;

  bool is(std::string_view want_ns, std::string_view want_name) const {
    return ns == want_ns && name == want_name;
  }

  const std::string* attribute(std::string_view want_ns, std::string_view want_name) const {
    for (const auto& a : attributes) {
      if (a.ns == want_ns && a.name == want_name) return &a.value;
    }
    return nullptr;
  }
};

namespace detail {

inline constexpr char kSeparator = ' ';

inline std::pair<std::string, std::string> split_name(const XML_Char* raw) {
  std::string_view s(raw);
  auto pos = s.find(kSeparator);
  if (pos == std::string_view::npos) return {std::string(), std::string(s)};
  return {std::string(s.substr(0, pos)), std::string(s.substr(pos + 1))};
}

struct Builder {
  XML_Parser parser = nullptr;
  std::vector<Element> stack;
  Element root;
  bool have_root = false;

  static void on_start(void* data, const XML_Char* name, const XML_Char** atts) {
    auto* self = static_cast<Builder*>(data);
    Element e;
    std::tie(e.ns, e.name) = split_name(name);
    e.line = XML_GetCurrentLineNumber(self->parser);
    for (std::size_t i = 0; atts[i] != nullptr; i += 2) {
      auto [ns, local] = split_name(atts[i]);
      e.attributes.push_back({std::move(ns), std::move(local), atts[i + 1]});
    }
    self->stack.push_back(std::move(e));
  }

  static void on_end(void* data, const XML_Char*) {
    auto* self = static_cast<Builder*>(data);
    Element e = std::move(self->stack.back());
    self->stack.pop_back();
    if (self->stack.empty()) {
      self->root = std::move(e);
      self->have_root = true;
    } else {
      self->stack.back().children.push_back(std::move(e));
    }
  }

  static void on_text(void* data, const XML_Char* s, int len) {
    auto* self = static_cast<Builder*>(data);
    if (!self->stack.empty()) self->stack.back().text.append(s, static_cast<std::size_t>(len));
  }
};

struct ParserDeleter {
  void operator()(XML_Parser p) const { XML_ParserFree(p); }
};

}  // namespace detail

// Parses a complete document. Internal DTD entities are expanded; external
// entities are not fetched.
inline Element parse(std::string_view document) {
  std::unique_ptr<XML_ParserStruct, detail::ParserDeleter> parser(
      XML_ParserCreateNS("UTF-8", detail::kSeparator));
  if (!parser) throw Error("unable to allocate XML parser");

  detail::Builder builder;
  builder.parser = parser.get();
  XML_SetUserData(parser.get(), &builder);
  XML_SetElementHandler(parser.get(), &detail::Builder::on_start, &detail::Builder::on_end);
  XML_SetCharacterDataHandler(parser.get(), &detail::Builder::on_text);

  if (XML_Parse(parser.get(), document.data(), static_cast<int>(document.size()), XML_TRUE) ==
      XML_STATUS_ERROR) {
    throw ParseError(std::string("malformed XML: ") + XML_ErrorString(XML_GetErrorCode(parser.get())),
                     XML_GetCurrentLineNumber(parser.get()),
                     XML_GetCurrentColumnNumber(parser.get()) + 1);
  }
  if (!builder.have_root) throw ParseError("document has no root element", 1, 1);
  return std::move(builder.root);
}

}  // namespace cavg::xml

#endif  // CAVG_XML_HPP
