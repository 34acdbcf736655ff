#include <gtest/gtest.h>

#include <filesystem>
#include <regex>
#include <string>

#include "cavg/verbalizer.hpp"

namespace {

const std::filesystem::path kData = CAVG_TEST_DATA_DIR;

cavg::OntologyModel edas_verbose() {
  return cavg::parse_ontology(cavg::read_file(kData / "ontologies/edas_author_verbose.owl"), "edas");
}

cavg::OntologyModel edas_summary() {
  return cavg::parse_ontology(cavg::read_file(kData / "ontologies/edas_author_summary.owl"), "edas");
}

TEST(VerbalizeClass, VerboseAuthor) {
  const auto v = cavg::verbalize_class(edas_verbose(), "http://edas#Author", cavg::Style::Verbose);
  EXPECT_EQ(v.class_key, "edas-Author");
  EXPECT_EQ(v.language, "en");
  EXPECT_EQ(v.text,
            "Author is a SubClassOf some writes Contribution and is a SubClassOf Person and "
            "is a SubClassOf only writes Contribution and writes Contribution");
}

TEST(VerbalizeClass, SummaryAuthor) {
  const auto v = cavg::verbalize_class(edas_summary(), "http://edas#Author", cavg::Style::Summary);
  EXPECT_EQ(v.text, "Author is a SuperClassOf Presenter and hasRelatedPaper Paper");
  EXPECT_EQ(v.style, cavg::Style::Summary);
}

TEST(VerbalizeClass, SummaryDropsSubClassOfConnective) {
  const auto v = cavg::verbalize_class(edas_verbose(), "http://edas#Author", cavg::Style::Summary);
  EXPECT_EQ(v.text, "Author some writes Contribution and Person and only writes Contribution and writes Contribution");
}

TEST(VerbalizeClass, AxiomFreeClassIsBareName) {
  const auto model = cavg::parse_ontology(R"(<rdf:RDF xmlns:rdf="http://www.w3.org/1999/02/22-rdf-syntax-ns#"
      xmlns:owl="http://www.w3.org/2002/07/owl#"><owl:Class rdf:about="http://x.org/o#Thing1"/></rdf:RDF>)",
                                          "mini");
  for (auto style : {cavg::Style::Summary, cavg::Style::Verbose}) {
    EXPECT_EQ(cavg::verbalize_class(model, "http://x.org/o#Thing1", style).text, "Thing1");
  }
}

TEST(VerbalizeClass, UnknownIriIsNotFound) {
  EXPECT_THROW(cavg::verbalize_class(edas_verbose(), "http://edas#Nobody", cavg::Style::Verbose),
               cavg::NotFoundError);
}

TEST(VerbalizeClass, GroupsAreSortedWithinThemselves) {
  const auto model = cavg::parse_ontology(R"(<rdf:RDF xmlns:rdf="http://www.w3.org/1999/02/22-rdf-syntax-ns#"
      xmlns:rdfs="http://www.w3.org/2000/01/rdf-schema#" xmlns:owl="http://www.w3.org/2002/07/owl#"
      xml:base="http://x.org/o">
    <owl:Class rdf:about="#Z"><rdfs:subClassOf rdf:resource="#Top"/></owl:Class>
    <owl:Class rdf:about="#B"><rdfs:subClassOf rdf:resource="#Top"/></owl:Class>
    <owl:Class rdf:about="#Top">
      <rdfs:subClassOf rdf:resource="#Root"/>
      <rdfs:subClassOf rdf:resource="#Entity"/>
      <rdfs:subClassOf><owl:Restriction><owl:onProperty rdf:resource="#q"/><owl:allValuesFrom rdf:resource="#B"/></owl:Restriction></rdfs:subClassOf>
      <rdfs:subClassOf><owl:Restriction><owl:onProperty rdf:resource="#p"/><owl:someValuesFrom rdf:resource="#Z"/></owl:Restriction></rdfs:subClassOf>
      <rdfs:subClassOf><owl:Restriction><owl:onProperty rdf:resource="#p"/><owl:someValuesFrom rdf:resource="#B"/></owl:Restriction></rdfs:subClassOf>
    </owl:Class>
    <owl:Class rdf:about="#Root"/><owl:Class rdf:about="#Entity"/>
    <owl:ObjectProperty rdf:about="#r"><rdfs:domain rdf:resource="#Top"/><rdfs:range rdf:resource="#Z"/><rdfs:range rdf:resource="#B"/></owl:ObjectProperty>
  </rdf:RDF>)",
                                          "o");
  EXPECT_EQ(cavg::verbalize_class(model, "http://x.org/o#Top", cavg::Style::Verbose).text,
            "Top is a SubClassOf some p B and is a SubClassOf some p Z and is a SubClassOf Entity and "
            "is a SubClassOf Root and is a SubClassOf only q B and is a SuperClassOf B and is a SuperClassOf Z and "
            "r B and r Z");
}

TEST(VerbalizeClass, VerboseClausesMatchTemplates) {
  const std::regex clause(
      R"(is a SubClassOf \S+|is a SubClassOf some \S+ \S+|is a SubClassOf only \S+ \S+|is a SuperClassOf \S+|\S+ \S+)");
  for (const auto& model : {edas_verbose(), edas_summary()}) {
    for (const auto& [iri, c] : model.classes) {
      for (const auto& text : cavg::class_clauses(model, c, cavg::Style::Verbose)) {
        EXPECT_TRUE(std::regex_match(text, clause)) << text;
      }
    }
  }
}

TEST(VerbalizeClass, RepeatableAndPure) {
  const auto model = edas_verbose();
  const auto a = cavg::verbalize_class(model, "http://edas#Author", cavg::Style::Verbose);
  const auto b = cavg::verbalize_class(model, "http://edas#Author", cavg::Style::Verbose);
  EXPECT_EQ(a, b);
}

TEST(VerbalizeAll, OnePerClassSortedByKey) {
  const auto all = cavg::verbalize_all(edas_verbose(), cavg::Style::Verbose);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0].class_key, "edas-Author");
  EXPECT_EQ(all[1].class_key, "edas-Contribution");
  EXPECT_EQ(all[2].class_key, "edas-Person");
  EXPECT_EQ(all[2].text, "Person is a SuperClassOf Author");
  for (const auto& v : all) EXPECT_EQ(v.language, "en");
}

TEST(VerbalizeAll, EmptyModelIsAnError) {
  cavg::OntologyModel empty;
  empty.short_name = "none";
  EXPECT_THROW(cavg::verbalize_all(empty, cavg::Style::Summary), cavg::EmptyModelError);
}

TEST(VerbalizeAll, LocalNameCollisionIsAnError) {
  const auto model = cavg::parse_ontology(R"(<rdf:RDF xmlns:rdf="http://www.w3.org/1999/02/22-rdf-syntax-ns#"
      xmlns:owl="http://www.w3.org/2002/07/owl#">
    <owl:Class rdf:about="http://a.org/x#Paper"/><owl:Class rdf:about="http://b.org/y#Paper"/></rdf:RDF>)",
                                          "clash");
  EXPECT_THROW(cavg::verbalize_all(model, cavg::Style::Summary), cavg::ContractError);
}

TEST(VerbalizeCorpus, CrossOntologyKeysStayUnique) {
  std::vector<cavg::OntologyModel> corpus{edas_verbose(), edas_summary()};
  EXPECT_THROW(cavg::verbalize_corpus(corpus, cavg::Style::Summary), cavg::ContractError);
  corpus[1].short_name = "edas2";
  EXPECT_EQ(cavg::verbalize_corpus(corpus, cavg::Style::Summary).size(), 6u);
}

TEST(VerbalizationJsonl, RoundTripPreservesUtf8) {
  std::vector<cavg::VerbalizedClass> in{
      {"edas-Author", cavg::Style::Verbose, "zh", "作者是一个子类人"},
      {"edas-Author", cavg::Style::Summary, "fr", "L'auteur \"écrit\" la contribution"},
  };
  const auto text = cavg::to_jsonl(in);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            R"({"class_key":"edas-Author","style":"verbose","language":"zh","text":"作者是一个子类人"})");
  EXPECT_EQ(cavg::parse_verbalization_jsonl(text), in);
}

TEST(VerbalizationJsonl, SchemaErrorsNameLineAndField) {
  try {
    cavg::parse_verbalization_jsonl(
        "{\"class_key\":\"a-B\",\"style\":\"summary\",\"language\":\"en\",\"text\":\"B\"}\n"
        "{\"class_key\":\"a-B\",\"style\":\"terse\",\"language\":\"en\",\"text\":\"B\"}\n");
    FAIL();
  } catch (const cavg::SchemaError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.field(), "style");
  }
}

}  // namespace
