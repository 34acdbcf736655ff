// cavg: command-line driver for the ontology / concept-activation pipeline.
//
// Exit codes: 0 success, 1 usage or configuration, 2 data error,
// 3 missing data cell.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cavg/activation.hpp"
#include "cavg/alignment.hpp"
#include "cavg/ontology.hpp"
#include "cavg/pipeline.hpp"
#include "cavg/similarity.hpp"
#include "cavg/stats.hpp"
#include "cavg/sweep.hpp"
#include "cavg/synthetic.hpp"
#include "cavg/verbalizer.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kMissing = 3 };

void write_out(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  cavg::detail::write_text(path, content);
}

std::vector<cavg::Style> parse_styles(const std::vector<std::string>& names) {
  std::vector<cavg::Style> out;
  for (const auto& n : names) out.push_back(cavg::parse_style(n));
  return out;
}

// "0-25" or "0,3,7" or a mix ("0-3,12").
std::vector<int> parse_layers(const std::string& spec) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= spec.size()) {
    auto comma = spec.find(',', start);
    const std::string part = spec.substr(start, comma - start);
    const auto dash = part.find('-');
    try {
      if (dash == std::string::npos) {
        out.push_back(std::stoi(part));
      } else {
        const int lo = std::stoi(part.substr(0, dash)), hi = std::stoi(part.substr(dash + 1));
        if (lo > hi) throw cavg::ConfigError("bad layer range '" + part + "'");
        for (int l = lo; l <= hi; ++l) out.push_back(l);
      }
    } catch (const std::logic_error&) {
      throw cavg::ConfigError("bad layer list '" + spec + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<cavg::ReferenceMapping> load_mappings(const std::string& refs, const std::string& corpus,
                                                  std::vector<std::string>& warnings) {
  cavg::ReferenceAlignment all;
  if (!corpus.empty()) {
    const auto models = cavg::load_corpus(corpus);
    all = cavg::load_reference_dir(refs, cavg::classes_of(models));
  } else {
    all = cavg::load_reference_dir(refs);
  }
  warnings = all.warnings;
  return all.mappings;
}

std::string summary_table(const std::vector<cavg::ConfigurationMean>& means) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %-10s %10s %7s\n", "style", "combo", "mean_r", "layers");
  out += line;
  for (const auto& m : means) {
    std::snprintf(line, sizeof line, "%-8s %-10s %10.4f %7zu\n", std::string(cavg::to_string(m.style)).c_str(),
                  m.combo.c_str(), m.mean_r, m.layers);
    out += line;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ontology alignment through sparse-autoencoder concept activations"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress messages");

  // verbalize
  auto* verb = app.add_subcommand("verbalize", "Render ontology classes as text (JSONL)");
  std::string v_corpus, v_ontology, v_name, v_style = "verbose", v_out;
  auto* v_src = verb->add_option("--corpus", v_corpus, "Directory of .owl files")->check(CLI::ExistingDirectory);
  verb->add_option("--ontology", v_ontology, "Single .owl file")->check(CLI::ExistingFile)->excludes(v_src);
  verb->add_option("--name", v_name, "Short name for --ontology (default: file stem)");
  verb->add_option("--style", v_style, "summary | verbose")->check(CLI::IsMember({"summary", "verbose"}));
  verb->add_option("--out", v_out, "Output JSONL (default stdout)");

  // similarity
  auto* sim = app.add_subcommand("similarity", "Score cross-ontology class pairs for one cell (CSV)");
  std::vector<std::string> s_acts;
  std::string s_refs, s_corpus, s_style = "verbose", s_combo = "en", s_out;
  int s_layer = 0;
  sim->add_option("--activations", s_acts, "Activation JSONL file(s)")->required()->check(CLI::ExistingFile);
  sim->add_option("--references", s_refs, "Directory of reference alignments")->required()->check(CLI::ExistingDirectory);
  sim->add_option("--corpus", s_corpus, "Ontology directory; drops non-class cells")->check(CLI::ExistingDirectory);
  sim->add_option("--layer", s_layer, "Layer")->required();
  sim->add_option("--style", s_style, "summary | verbose")->check(CLI::IsMember({"summary", "verbose"}));
  sim->add_option("--combo", s_combo, "Language combination, e.g. en or en+fr");
  sim->add_option("--out", s_out, "Output CSV (default stdout)");

  // correlate
  auto* cor = app.add_subcommand("correlate", "Rebalance a similarity CSV and compute r_pb");
  std::string c_records, c_out, c_style = "verbose", c_combo = "en";
  std::uint64_t c_seed = 0;
  std::size_t c_repeats = 1;
  int c_layer = 0;
  cor->add_option("--records", c_records, "Similarity CSV")->required()->check(CLI::ExistingFile);
  cor->add_option("--seed", c_seed, "Rebalancing seed")->required();
  cor->add_option("--repeats", c_repeats, "Rebalancing draws to average")->check(CLI::PositiveNumber);
  cor->add_option("--layer", c_layer, "Layer label for the CSV row");
  cor->add_option("--style", c_style, "Style label for the CSV row")->check(CLI::IsMember({"summary", "verbose"}));
  cor->add_option("--combo", c_combo, "Combo label for the CSV row");
  cor->add_option("--out", c_out, "Write a one-row correlation CSV");

  // sweep
  auto* swp = app.add_subcommand("sweep", "Correlations for every layer x style x combo");
  std::string w_acts, w_refs, w_corpus, w_layers = "0-25", w_out;
  std::vector<std::string> w_styles{"summary", "verbose"}, w_langs{"en"};
  std::uint64_t w_seed = 0;
  std::size_t w_repeats = 1;
  unsigned w_threads = 0;
  swp->add_option("--activations", w_acts, "Directory of activation JSONL")->required()->check(CLI::ExistingDirectory);
  swp->add_option("--references", w_refs, "Directory of reference alignments")->required()->check(CLI::ExistingDirectory);
  swp->add_option("--corpus", w_corpus, "Ontology directory; drops non-class cells")->check(CLI::ExistingDirectory);
  swp->add_option("--styles", w_styles, "Styles")->delimiter(',')->check(CLI::IsMember({"summary", "verbose"}));
  swp->add_option("--languages", w_langs, "Languages, base first")->delimiter(',');
  swp->add_option("--layers", w_layers, "Layers, e.g. 0-25 or 0,6,12");
  swp->add_option("--seed", w_seed, "Rebalancing seed")->required();
  swp->add_option("--repeats", w_repeats, "Rebalancing draws per layer")->check(CLI::PositiveNumber);
  swp->add_option("--threads", w_threads, "Worker threads (0: all cores)");
  swp->add_option("--out", w_out, "Output directory for correlations/summary/plot CSVs")->required();

  // synth
  auto* syn = app.add_subcommand("synth", "Generate a synthetic two-language activation corpus");
  cavg::SyntheticParams y;
  std::string y_out, y_layers = "0";
  std::vector<std::string> y_styles{"verbose"};
  bool y_eval = false;
  syn->add_option("--out", y_out, "Output directory")->required();
  syn->add_option("--classes", y.n_classes, "Number of classes");
  syn->add_option("--pairs", y.n_mapped_pairs, "Number of mapped pairs");
  syn->add_option("--semantic-dim", y.semantic_dim, "Shared concepts per class");
  syn->add_option("--noise-dim", y.noise_dim, "Language-specific concepts per class");
  syn->add_option("--noise-scale", y.noise_scale, "Weight scale of language-specific concepts");
  syn->add_option("--seed", y.seed, "Generator seed");
  syn->add_option("--layers", y_layers, "Layers to generate, e.g. 0-25");
  syn->add_option("--styles", y_styles, "Styles")->delimiter(',')->check(CLI::IsMember({"summary", "verbose"}));
  syn->add_flag("--evaluate", y_eval, "Print r_pb for en and en+fr (first layer and style)");

  // report
  auto* rep = app.add_subcommand("report", "Summary and plot CSVs from a correlation CSV");
  std::string r_in, r_out;
  rep->add_option("--correlations", r_in, "Correlation CSV")->required()->check(CLI::ExistingFile);
  rep->add_option("--out", r_out, "Output directory")->required();

  // run
  auto* run = app.add_subcommand("run", "Run the whole pipeline from a JSON config");
  std::string cfg_path;
  run->add_option("config", cfg_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  const cavg::LogFn log = [&](const std::string& msg) {
    if (!quiet) std::cerr << "cavg: " << msg << "\n";
  };

  try {
    if (*verb) {
      const auto style = cavg::parse_style(v_style);
      std::vector<cavg::VerbalizedClass> records;
      if (!v_ontology.empty()) {
        auto model = v_name.empty() ? cavg::load_ontology(v_ontology)
                                    : cavg::parse_ontology(cavg::read_file(v_ontology), v_name);
        records = cavg::verbalize_all(model, style);
      } else if (!v_corpus.empty()) {
        records = cavg::verbalize_corpus(cavg::load_corpus(v_corpus), style);
      } else {
        std::cerr << "verbalize: one of --corpus or --ontology is required\n";
        return kUsage;
      }
      write_out(v_out, cavg::to_jsonl(records));
    } else if (*sim) {
      std::vector<std::string> warnings;
      const auto mappings = load_mappings(s_refs, s_corpus, warnings);
      for (const auto& w : warnings) log(w);
      const auto style = cavg::parse_style(s_style);
      const auto plus = s_combo.find('+');
      const std::string base = s_combo.substr(0, plus);
      const std::string other = plus == std::string::npos ? "" : s_combo.substr(plus + 1);
      std::map<std::string, cavg::ConceptVector> a, b;
      cavg::ActivationReadOptions opt;
      opt.max_layer = std::max(cavg::kDefaultMaxLayer, s_layer);
      for (const auto& f : s_acts) {
        for (const auto& s : cavg::read_activation_file(f, opt)) {
          if (s.layer != s_layer || s.style != style) continue;
          if (s.language == base) a[s.class_key] = cavg::reduce_duplicates(s);
          if (!other.empty() && s.language == other) b[s.class_key] = cavg::reduce_duplicates(s);
        }
      }
      std::vector<cavg::ConceptVector> vectors;
      std::vector<std::string> missing;
      for (auto& [k, v] : a) {
        if (other.empty()) {
          vectors.push_back(v);
        } else if (auto it = b.find(k); it != b.end()) {
          vectors.push_back(cavg::conceptual_average(v, it->second));
        } else {
          missing.push_back("activation class_key=" + k + " language=" + other);
        }
      }
      if (!missing.empty()) throw cavg::MissingCellError(std::move(missing));
      write_out(s_out, cavg::write_similarity_csv(cavg::build_similarity_records(vectors, mappings), true));
    } else if (*cor) {
      const auto records = cavg::parse_similarity_csv(cavg::read_file(c_records));
      auto r = cavg::correlate_records(records, c_seed, c_repeats);
      r.layer = c_layer;
      r.style = cavg::parse_style(c_style);
      r.combo = c_combo;
      std::cout << cavg::format_fixed(r.r_pb, 9) << "\n";
      if (!c_out.empty()) write_out(c_out, cavg::write_correlation_csv(std::vector{r}));
    } else if (*swp) {
      std::vector<std::string> warnings;
      const auto mappings = load_mappings(w_refs, w_corpus, warnings);
      for (const auto& w : warnings) log(w);
      if (mappings.empty()) throw cavg::Error("no class mappings in " + w_refs);
      if (w_langs.empty()) throw cavg::ConfigError("--languages must be non-empty");
      const auto styles = parse_styles(w_styles);
      const auto layers = parse_layers(w_layers);

      std::set<std::string, std::less<>> mapped;
      for (const auto& m : mappings) {
        mapped.emplace(cavg::ontology_of(m.entity1));
        mapped.emplace(cavg::ontology_of(m.entity2));
      }
      cavg::ActivationReadOptions opt;
      opt.max_layer = std::max(cavg::kDefaultMaxLayer, *std::max_element(layers.begin(), layers.end()));
      cavg::ActivationIndex index;
      std::set<std::string> classes;
      for (const auto& f : cavg::detail::files_with_extension(w_acts, ".jsonl", true)) {
        for (auto& s : cavg::read_activation_file(f, opt)) {
          if (!mapped.count(cavg::ontology_of(s.class_key))) continue;
          classes.insert(s.class_key);
          cavg::ActivationCell id{s.class_key, s.style, s.language, s.layer};
          if (index.count(id)) throw cavg::Error(f.string() + ": duplicate record for " + cavg::describe(id));
          index.emplace(std::move(id), std::move(s));
        }
      }
      const std::vector<std::string> keys(classes.begin(), classes.end());
      const auto store = cavg::build_vector_store(index, keys, styles, w_langs, layers);
      index.clear();
      cavg::SweepOptions so;
      so.styles = styles;
      so.combos = {w_langs.front()};
      for (std::size_t i = 1; i < w_langs.size(); ++i) so.combos.push_back(w_langs.front() + "+" + w_langs[i]);
      so.layers = layers;
      so.seed = w_seed;
      so.repeats = w_repeats;
      so.threads = w_threads;
      const auto result = cavg::layer_sweep(store, mappings, so);
      const fs::path out = w_out;
      cavg::detail::write_text(out / "correlations.csv", cavg::write_correlation_csv(result.results));
      cavg::detail::write_text(out / "summary.csv", cavg::write_summary_csv(result.means));
      cavg::detail::write_text(out / "plot.csv", cavg::write_plot_csv(result.results));
      std::cout << summary_table(result.means);
    } else if (*syn) {
      const auto styles = parse_styles(y_styles);
      const auto layers = parse_layers(y_layers);
      const fs::path out = y_out;
      std::string jsonl;
      std::vector<cavg::ReferenceMapping> mappings;
      bool first = true;
      for (auto style : styles) {
        for (int layer : layers) {
          auto p = y;
          p.style = style;
          p.layer = layer;
          p.seed = y.seed + static_cast<std::uint64_t>(layer);
          const auto corpus = cavg::generate_synthetic_corpus(p);
          for (const auto& s : corpus.sets) jsonl += cavg::to_json_line(s) + "\n";
          mappings = corpus.mappings;
          if (y_eval && first) {
            const auto e = cavg::evaluate_synthetic(corpus, p.seed);
            std::cout << "en " << cavg::format_fixed(e.english.r_pb, 9) << "\n"
                      << "en+fr " << cavg::format_fixed(e.average.r_pb, 9) << "\n";
          }
          first = false;
        }
      }
      cavg::detail::write_text(out / "activations" / "synthetic.jsonl", jsonl);
      cavg::detail::write_text(out / "references" / "syna-synb.rdf",
                               cavg::write_reference_alignment(mappings, "http://syna", "http://synb"));
    } else if (*rep) {
      const auto results = cavg::parse_correlation_csv(cavg::read_file(r_in));
      const auto means = cavg::configuration_means(results);
      const fs::path out = r_out;
      cavg::detail::write_text(out / "summary.csv", cavg::write_summary_csv(means));
      cavg::detail::write_text(out / "plot.csv", cavg::write_plot_csv(results));
      std::cout << summary_table(means);
    } else if (*run) {
      const auto cfg = cavg::load_config(cfg_path);
      const auto manifest = cavg::run_pipeline(cfg, log);
      log("wrote " + (cfg.output_dir / "manifest.json").string());
      const auto results = cavg::parse_correlation_csv(cavg::read_file(cfg.output_dir / "correlations.csv"));
      std::cout << summary_table(cavg::configuration_means(results));
      for (const auto& w : manifest.warnings) log("warning: " + w);
    }
  } catch (const cavg::MissingCellError& e) {
    std::cerr << "cavg: " << e.what() << "\n";
    return kMissing;
  } catch (const cavg::ConfigError& e) {
    std::cerr << "cavg: " << e.what() << "\n";
    return kUsage;
  } catch (const cavg::Error& e) {
    std::cerr << "cavg: " << e.what() << "\n";
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "cavg: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
