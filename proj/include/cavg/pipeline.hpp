#ifndef CAVG_PIPELINE_HPP
#define CAVG_PIPELINE_HPP

#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "cavg/activation.hpp"
#include "cavg/alignment.hpp"
#include "cavg/digest.hpp"
#include "cavg/error.hpp"
#include "cavg/extractor.hpp"
#include "cavg/ontology.hpp"
#include "cavg/similarity.hpp"
#include "cavg/sweep.hpp"
#include "cavg/verbalizer.hpp"

namespace cavg {

// Where translations or activations come from: a directory of JSONL files,
// or an extractor endpoint (see extractor.hpp). Exactly one is set.
struct SourceConfig {
  std::filesystem::path fixture_dir;
  std::string endpoint;

  bool empty() const { return fixture_dir.empty() && endpoint.empty(); }
};

struct ExperimentConfig {
  std::filesystem::path base_dir;  // directory of the config file
  std::filesystem::path corpus_dir;
  std::filesystem::path reference_dir;
  std::filesystem::path output_dir;
  std::vector<Style> styles{Style::Summary, Style::Verbose};
  std::vector<std::string> languages{"en"};  // base first
  std::vector<int> layers;
  std::uint32_t sae_width = kDefaultSaeWidth;
  std::uint64_t seed = 0;
  SourceConfig activation_source;
  SourceConfig translation_source;
  std::size_t repeats = 1;
  unsigned threads = 0;
  bool write_similarity = true;
  std::string hash;  // sha256 of the canonical config JSON

  // "en", then "en+<t>" for every translation target.
  std::vector<std::string> combos() const {
    std::vector<std::string> out{languages.front()};
    for (std::size_t i = 1; i < languages.size(); ++i) out.push_back(languages.front() + "+" + languages[i]);
    return out;
  }
};

inline std::vector<int> default_layers() {
  std::vector<int> out;
  for (int l = 0; l <= kDefaultMaxLayer; ++l) out.push_back(l);
  return out;
}

namespace detail {

inline SourceConfig parse_source(const nlohmann::json& j, const char* name, const std::filesystem::path& base) {
  if (!j.is_object()) throw ConfigError(std::string(name) + " must be an object");
  SourceConfig s;
  for (const auto& [k, v] : j.items()) {
    if (k == "fixture_dir" && v.is_string()) {
      s.fixture_dir = base / v.get<std::string>();
    } else if (k == "extractor_endpoint" && v.is_string()) {
      s.endpoint = v.get<std::string>();
    } else {
      throw ConfigError(std::string(name) + ": unknown or mistyped key '" + k + "'");
    }
  }
  if (s.fixture_dir.empty() == s.endpoint.empty())
    throw ConfigError(std::string(name) + ": set exactly one of fixture_dir, extractor_endpoint");
  return s;
}

}  // namespace detail

// Paths are resolved against base_dir.
inline ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known{"corpus_dir",        "reference_dir",      "output_dir", "styles",
                                           "languages",         "layers",             "sae_width",  "seed",
                                           "activation_source", "translation_source", "repeats",    "threads",
                                           "write_similarity"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
  }
  auto require_path = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty())
      throw ConfigError(std::string("config needs a string '") + key + "'");
    return base_dir / j[key].get<std::string>();
  };

  ExperimentConfig c;
  c.base_dir = base_dir;
  c.corpus_dir = require_path("corpus_dir");
  c.reference_dir = require_path("reference_dir");
  c.output_dir = require_path("output_dir");

  if (!j.contains("seed") || !j["seed"].is_number_integer() ||
      (!j["seed"].is_number_unsigned() && j["seed"].get<std::int64_t>() < 0))
    throw ConfigError("config needs a non-negative integer 'seed'");
  c.seed = j["seed"].get<std::uint64_t>();

  try {
    if (j.contains("styles")) {
      c.styles.clear();
      for (const auto& s : j.at("styles")) c.styles.push_back(parse_style(s.get<std::string>()));
    }
    if (j.contains("languages")) c.languages = j.at("languages").get<std::vector<std::string>>();
    c.layers = j.contains("layers") ? j.at("layers").get<std::vector<int>>() : default_layers();
    if (j.contains("sae_width")) c.sae_width = j.at("sae_width").get<std::uint32_t>();
    if (j.contains("repeats")) c.repeats = j.at("repeats").get<std::size_t>();
    if (j.contains("threads")) c.threads = j.at("threads").get<unsigned>();
    if (j.contains("write_similarity")) c.write_similarity = j.at("write_similarity").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }

  if (c.styles.empty()) throw ConfigError("styles must be non-empty");
  if (std::set<Style>(c.styles.begin(), c.styles.end()).size() != c.styles.size())
    throw ConfigError("styles contain duplicates");
  if (c.languages.empty() || c.languages.front() != "en") throw ConfigError("languages must start with the base \"en\"");
  std::set<std::string> langs;
  for (const auto& l : c.languages) {
    if (l.empty() || l.find_first_of("+,/ ") != std::string::npos) throw ConfigError("invalid language code '" + l + "'");
    if (!langs.insert(l).second) throw ConfigError("duplicate language '" + l + "'");
  }
  if (c.layers.empty()) throw ConfigError("layers must be non-empty");
  if (std::set<int>(c.layers.begin(), c.layers.end()).size() != c.layers.size())
    throw ConfigError("layers contain duplicates");
  for (int l : c.layers) {
    if (l < 0) throw ConfigError("layers must be >= 0");
  }
  if (c.sae_width == 0) throw ConfigError("sae_width must be > 0");
  if (c.repeats == 0) throw ConfigError("repeats must be >= 1");

  if (!j.contains("activation_source")) throw ConfigError("config needs 'activation_source'");
  c.activation_source = detail::parse_source(j["activation_source"], "activation_source", base_dir);
  if (j.contains("translation_source"))
    c.translation_source = detail::parse_source(j["translation_source"], "translation_source", base_dir);
  if (c.languages.size() > 1 && c.translation_source.empty())
    throw ConfigError("translation targets given but no 'translation_source'");

  c.hash = sha256_hex(j.dump());
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_config(j, base);
}

// ---------------------------------------------------------------------------
// Manifest

struct StageRecord {
  std::string name;
  std::map<std::string, std::string> inputs;   // path or label -> sha256
  std::map<std::string, std::string> outputs;  // path relative to output_dir -> sha256
};

struct ManifestCounts {
  std::size_t ontologies = 0;
  std::size_t classes = 0;
  std::size_t mappings = 0;
  std::size_t analysed_ontologies = 0;
  std::size_t analysed_classes = 0;
  std::size_t pairs = 0;  // per (layer, style, combo) cell
  std::size_t degenerate_pairs = 0;
  std::size_t cells = 0;
  std::size_t skipped_axioms = 0;
  std::size_t skipped_cells = 0;
};

struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  ManifestCounts counts;
  std::vector<StageRecord> stages;
  std::vector<std::string> warnings;
};

inline std::string manifest_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  const auto& c = m.counts;
  j["counts"] = {{"ontologies", c.ontologies},
                 {"classes", c.classes},
                 {"mappings", c.mappings},
                 {"analysed_ontologies", c.analysed_ontologies},
                 {"analysed_classes", c.analysed_classes},
                 {"pairs", c.pairs},
                 {"degenerate_pairs", c.degenerate_pairs},
                 {"cells", c.cells},
                 {"skipped_axioms", c.skipped_axioms},
                 {"skipped_cells", c.skipped_cells}};
  auto stages = nlohmann::ordered_json::array();
  for (const auto& s : m.stages) {
    nlohmann::ordered_json st;
    st["name"] = s.name;
    st["inputs"] = s.inputs;
    st["outputs"] = s.outputs;
    stages.push_back(std::move(st));
  }
  j["stages"] = std::move(stages);
  j["warnings"] = m.warnings;
  return j.dump(2) + "\n";
}

using LogFn = std::function<void(const std::string&)>;

// ---------------------------------------------------------------------------
// Activation index -> vector store

using ActivationCell = std::tuple<std::string, Style, std::string, int>;  // class_key, style, language, layer
using ActivationIndex = std::map<ActivationCell, ActivationSet>;

inline std::string describe(const ActivationCell& k) {
  return "activation class_key=" + std::get<0>(k) + " style=" + std::string(to_string(std::get<1>(k))) +
         " language=" + std::get<2>(k) + " layer=" + std::to_string(std::get<3>(k));
}

// Throws MissingCellError listing every absent (class, style, language, layer).
inline void require_cells(const ActivationIndex& index, std::span<const std::string> classes,
                          std::span<const Style> styles, std::span<const std::string> languages,
                          std::span<const int> layers) {
  std::vector<std::string> missing;
  for (auto style : styles) {
    for (const auto& lang : languages) {
      for (const auto& k : classes) {
        for (int layer : layers) {
          ActivationCell id{k, style, lang, layer};
          if (!index.count(id)) missing.push_back(describe(id));
        }
      }
    }
  }
  if (!missing.empty()) throw MissingCellError(std::move(missing));
}

// languages.front() is the base; combos are base and base+<other>.
inline VectorStore build_vector_store(const ActivationIndex& index, std::span<const std::string> classes,
                                      std::span<const Style> styles, std::span<const std::string> languages,
                                      std::span<const int> layers) {
  require_cells(index, classes, styles, languages, layers);
  VectorStore store;
  const std::string& base = languages.front();
  for (auto style : styles) {
    for (int layer : layers) {
      auto& single = store[{layer, style, base}];
      for (const auto& k : classes) {
        const auto en = reduce_duplicates(index.at({k, style, base, layer}));
        for (std::size_t i = 1; i < languages.size(); ++i) {
          store[{layer, style, base + "+" + languages[i]}].push_back(
              conceptual_average(en, reduce_duplicates(index.at({k, style, languages[i], layer}))));
        }
        single.push_back(en);
      }
    }
  }
  return store;
}

namespace detail {

namespace fs = std::filesystem;

inline void write_text(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("cannot write " + path.string());
}

inline std::vector<fs::path> files_with_extension(const fs::path& dir, std::string_view ext, bool recursive) {
  std::vector<fs::path> out;
  auto take = [&](const fs::directory_entry& e) {
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  };
  if (recursive) {
    for (const auto& e : fs::recursive_directory_iterator(dir)) take(e);
  } else {
    for (const auto& e : fs::directory_iterator(dir)) take(e);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string rel(const fs::path& p, const fs::path& base) {
  return fs::path(p).lexically_normal().lexically_relative(fs::path(base).lexically_normal()).generic_string();
}

inline std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

// Alignment files may spell an ontology differently from its OWL file
// ("cmt-conference.rdf" vs "Conference.owl"); fall back to a unique
// case-insensitive match.
inline std::string resolve_short_name(const std::string& name, const std::vector<OntologyModel>& models,
                                      const std::string& file) {
  std::vector<std::string> folded;
  for (const auto& m : models) {
    if (m.short_name == name) return name;
    if (lower(m.short_name) == lower(name)) folded.push_back(m.short_name);
  }
  if (folded.size() == 1) return folded.front();
  if (folded.empty()) throw Error(file + ": no ontology named '" + name + "' in the corpus");
  throw Error(file + ": ontology name '" + name + "' is ambiguous");
}

using TextKey = std::tuple<std::string, Style, std::string>;  // class_key, style, language
using CellId = ActivationCell;

inline std::string describe_text_key(const TextKey& k) {
  return "translation class_key=" + std::get<0>(k) + " style=" + std::string(to_string(std::get<1>(k))) +
         " language=" + std::get<2>(k);
}

inline std::string describe_cell(const CellId& k) { return describe(k); }

inline std::string join_layers(const std::vector<int>& layers) {
  std::string out;
  for (int l : layers) out += (out.empty() ? "" : ",") + std::to_string(l);
  return out;
}

inline std::string layer_file(int layer) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "layer_%02d.csv", layer);
  return buf;
}

// Request through the cache: identical (endpoint, route, params, body) is
// answered from disk.
inline std::string cached_call(const StageCache& cache, const std::string& endpoint, const EndpointRequest& req,
                               const fs::path& workdir, const LogFn& log, std::string& request_digest) {
  std::string key_text = "call\n" + endpoint + "\n" + req.route + "\n";
  for (const auto& [k, v] : req.params) key_text += k + "=" + v + "\n";
  key_text += sha256_hex(req.body);
  request_digest = sha256_hex(key_text);
  if (auto hit = cache.lookup(request_digest)) {
    if (log) log("cache hit " + req.route + " " + request_digest.substr(0, 12));
    return read_file(*hit / "response.jsonl");
  }
  if (log) log("calling extractor " + endpoint + " " + req.route);
  const std::string response = call_endpoint(endpoint, req, workdir);
  const auto tmp = cache.root() / (".in-" + request_digest + "-" + std::to_string(::getpid()));
  write_text(tmp / "response.jsonl", response);
  cache.store(request_digest, tmp);
  fs::remove_all(tmp);
  return response;
}

inline std::map<std::string, std::string> digest_tree(const fs::path& root, const fs::path& base) {
  std::map<std::string, std::string> out;
  if (!fs::exists(root)) return out;
  if (fs::is_regular_file(root)) {
    out[rel(root, base)] = sha256_file(root);
    return out;
  }
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[rel(e.path(), base)] = sha256_file(e.path());
  }
  return out;
}

// Replaces dst with src (a file or directory) by rename.
inline void install(const fs::path& src, const fs::path& dst) {
  fs::create_directories(dst.parent_path());
  fs::remove_all(dst);
  fs::rename(src, dst);
}

}  // namespace detail

struct ExperimentInputs {
  std::vector<OntologyModel> models;
  std::vector<ReferenceMapping> mappings;  // class-to-class "=" mappings, deduplicated
  std::size_t classes = 0;
  std::size_t skipped_axioms = 0;
  std::size_t skipped_cells = 0;
  std::vector<std::string> warnings;
  std::map<std::string, std::string> digests;  // input file (relative to base_dir) -> sha256
};

// Parses every *.owl of corpus_dir and every <a>-<b>.rdf of reference_dir.
inline ExperimentInputs load_inputs(const std::filesystem::path& corpus_dir, const std::filesystem::path& reference_dir,
                                    const std::filesystem::path& base_dir = ".") {
  ExperimentInputs in;
  const auto owl_files = detail::files_with_extension(corpus_dir, ".owl", false);
  if (owl_files.empty()) throw Error("no .owl files in " + corpus_dir.string());
  for (const auto& f : owl_files) {
    in.digests[detail::rel(f, base_dir)] = sha256_file(f);
    in.models.push_back(load_ontology(f));
    const auto& m = in.models.back();
    in.classes += m.classes.size();
    in.skipped_axioms += m.skipped_axioms;
    if (m.skipped_axioms > 0)
      in.warnings.push_back(m.short_name + ": skipped " + std::to_string(m.skipped_axioms) + " unsupported axiom(s)");
  }

  const auto is_class = classes_of(in.models);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& f : detail::files_with_extension(reference_dir, ".rdf", false)) {
    in.digests[detail::rel(f, base_dir)] = sha256_file(f);
    const auto [raw_a, raw_b] = alignment_short_names(f);
    const std::string file = f.filename().string();
    const auto a = detail::resolve_short_name(raw_a, in.models, file);
    const auto b = detail::resolve_short_name(raw_b, in.models, file);
    ReferenceAlignment one;
    try {
      one = parse_reference_alignment(read_file(f), a, b, is_class);
    } catch (const ParseError& e) {
      throw e.in(f.string());
    }
    in.skipped_cells += one.skipped_cells;
    for (auto& w : one.warnings) in.warnings.push_back(file + ": " + w);
    for (auto& m : one.mappings) {
      if (!seen.insert(ordered_pair(m.entity1, m.entity2)).second) {
        in.warnings.push_back(file + ": duplicate mapping " + m.entity1 + " = " + m.entity2);
        continue;
      }
      in.mappings.push_back(std::move(m));
    }
  }
  return in;
}

inline std::filesystem::path cache_dir_for(const ExperimentConfig& c) {
  if (const char* env = std::getenv("CAVG_CACHE_DIR"); env && *env) return env;
  return c.output_dir / ".cache";
}

// parse -> verbalize -> translations -> activations -> reduce/average ->
// similarity -> correlate -> reports. All missing data is reported before
// any statistic is computed; reports are installed only after every cell
// succeeded.
inline RunManifest run_pipeline(const ExperimentConfig& cfg, const LogFn& log = {}) {
  namespace fs = std::filesystem;
  using detail::rel;
  if (!fs::is_directory(cfg.corpus_dir)) throw ConfigError("corpus_dir does not exist: " + cfg.corpus_dir.string());
  if (!fs::is_directory(cfg.reference_dir))
    throw ConfigError("reference_dir does not exist: " + cfg.reference_dir.string());
  for (const auto* src : {&cfg.activation_source, &cfg.translation_source}) {
    if (!src->fixture_dir.empty() && !fs::is_directory(src->fixture_dir))
      throw ConfigError("fixture_dir does not exist: " + src->fixture_dir.string());
  }

  RunManifest manifest;
  manifest.config_hash = cfg.hash;
  manifest.seed = cfg.seed;
  auto& counts = manifest.counts;
  const fs::path out = cfg.output_dir;
  const StageCache cache(cache_dir_for(cfg));
  fs::create_directories(out);

  // -- parse
  auto inputs = load_inputs(cfg.corpus_dir, cfg.reference_dir, cfg.base_dir);
  const auto& models = inputs.models;
  const auto& mappings = inputs.mappings;
  StageRecord parse_stage{"parse", std::move(inputs.digests), {}};
  counts.ontologies = models.size();
  counts.classes = inputs.classes;
  counts.skipped_axioms = inputs.skipped_axioms;
  counts.skipped_cells = inputs.skipped_cells;
  counts.mappings = mappings.size();
  manifest.warnings = inputs.warnings;
  if (log) log("parsed " + std::to_string(counts.ontologies) + " ontologies, " + std::to_string(counts.classes) + " classes");
  if (mappings.empty()) throw Error("no class mappings found in " + cfg.reference_dir.string());

  std::set<std::string, std::less<>> analysed_ontologies;
  for (const auto& m : mappings) {
    analysed_ontologies.emplace(ontology_of(m.entity1));
    analysed_ontologies.emplace(ontology_of(m.entity2));
  }
  counts.analysed_ontologies = analysed_ontologies.size();
  manifest.stages.push_back(std::move(parse_stage));

  // -- verbalize
  StageRecord verbalize_stage{"verbalize", {}, {}};
  std::map<detail::TextKey, std::string> texts;
  std::vector<std::string> analysed;  // class keys, sorted
  for (auto style : cfg.styles) {
    const auto records = verbalize_corpus(models, style);
    const auto path = out / "verbalizations" / (std::string(to_string(style)) + ".jsonl");
    const auto content = to_jsonl(records);
    detail::write_text(path, content);
    verbalize_stage.outputs[rel(path, out)] = sha256_hex(content);
    for (const auto& r : records) {
      if (!analysed_ontologies.count(ontology_of(r.class_key))) continue;
      texts[{r.class_key, style, "en"}] = r.text;
      if (style == cfg.styles.front()) analysed.push_back(r.class_key);
    }
  }
  counts.analysed_classes = analysed.size();
  manifest.stages.push_back(std::move(verbalize_stage));

  // -- translations
  if (cfg.languages.size() > 1) {
    StageRecord stage{"translate", {}, {}};
    std::map<detail::TextKey, std::string> found;
    auto take = [&](std::vector<VerbalizedClass> records, const std::string& origin) {
      for (auto& r : records) {
        detail::TextKey key{r.class_key, r.style, r.language};
        auto [it, fresh] = found.emplace(key, r.text);
        if (!fresh && it->second != r.text) throw Error(origin + ": conflicting translations for " + detail::describe_text_key(key));
      }
    };
    if (!cfg.translation_source.fixture_dir.empty()) {
      for (const auto& f : detail::files_with_extension(cfg.translation_source.fixture_dir, ".jsonl", true)) {
        stage.inputs[rel(f, cfg.base_dir)] = sha256_file(f);
        try {
          take(parse_verbalization_jsonl(read_file(f)), f.string());
        } catch (const SchemaError& e) {
          throw e.in(f.string());
        } catch (const ParseError& e) {
          throw e.in(f.string());
        }
      }
    } else {
      std::vector<VerbalizedClass> english;
      for (auto style : cfg.styles) {
        for (const auto& k : analysed) english.push_back({k, style, "en", texts.at({k, style, "en"})});
      }
      for (std::size_t i = 1; i < cfg.languages.size(); ++i) {
        EndpointRequest req{"/translate", {{"language", cfg.languages[i]}}, to_jsonl(english)};
        std::string digest;
        const auto body = detail::cached_call(cache, cfg.translation_source.endpoint, req, cfg.base_dir, log, digest);
        stage.inputs["request:translate:" + cfg.languages[i]] = digest;
        take(parse_verbalization_jsonl(body), cfg.translation_source.endpoint);
      }
    }
    std::vector<std::string> missing;
    for (std::size_t i = 1; i < cfg.languages.size(); ++i) {
      std::vector<VerbalizedClass> lang_records;
      for (auto style : cfg.styles) {
        for (const auto& k : analysed) {
          detail::TextKey key{k, style, cfg.languages[i]};
          auto it = found.find(key);
          if (it == found.end()) {
            missing.push_back(detail::describe_text_key(key));
            continue;
          }
          texts[key] = it->second;
          lang_records.push_back({k, style, cfg.languages[i], it->second});
        }
      }
      if (missing.empty()) {
        const auto path = out / "translations" / (cfg.languages[i] + ".jsonl");
        const auto content = to_jsonl(lang_records);
        detail::write_text(path, content);
        stage.outputs[rel(path, out)] = sha256_hex(content);
      }
    }
    if (!missing.empty()) throw MissingCellError(std::move(missing));
    manifest.stages.push_back(std::move(stage));
  }

  // -- activations
  StageRecord act_stage{"activations", {}, {}};
  ActivationIndex sets;
  {
    const std::set<std::string> wanted_keys(analysed.begin(), analysed.end());
    const std::set<std::string> wanted_langs(cfg.languages.begin(), cfg.languages.end());
    const std::set<Style> wanted_styles(cfg.styles.begin(), cfg.styles.end());
    const std::set<int> wanted_layers(cfg.layers.begin(), cfg.layers.end());
    ActivationReadOptions opt;
    opt.max_layer = std::max(kDefaultMaxLayer, *std::max_element(cfg.layers.begin(), cfg.layers.end()));

    auto take = [&](std::vector<ActivationSet> records, const std::string& origin) {
      for (auto& s : records) {
        if (!wanted_keys.count(s.class_key) || !wanted_langs.count(s.language) || !wanted_styles.count(s.style) ||
            !wanted_layers.count(s.layer))
          continue;
        if (s.sae_width != cfg.sae_width)
          throw Error(origin + ": " + s.class_key + " has sae_width " + std::to_string(s.sae_width) +
                      ", configured " + std::to_string(cfg.sae_width));
        detail::CellId id{s.class_key, s.style, s.language, s.layer};
        if (sets.count(id)) throw Error(origin + ": duplicate record for " + detail::describe_cell(id));
        sets.emplace(std::move(id), std::move(s));
      }
    };
    if (!cfg.activation_source.fixture_dir.empty()) {
      for (const auto& f : detail::files_with_extension(cfg.activation_source.fixture_dir, ".jsonl", true)) {
        act_stage.inputs[rel(f, cfg.base_dir)] = sha256_file(f);
        take(read_activation_file(f, opt), f.string());
      }
    } else {
      std::vector<VerbalizedClass> prompts;
      for (auto style : cfg.styles) {
        for (const auto& lang : cfg.languages) {
          for (const auto& k : analysed) prompts.push_back({k, style, lang, texts.at({k, style, lang})});
        }
      }
      EndpointRequest req{"/extract",
                          {{"layers", detail::join_layers(cfg.layers)}, {"sae_width", std::to_string(cfg.sae_width)}},
                          to_jsonl(prompts)};
      std::string digest;
      const auto body = detail::cached_call(cache, cfg.activation_source.endpoint, req, cfg.base_dir, log, digest);
      act_stage.inputs["request:extract"] = digest;
      try {
        take(parse_activation_jsonl(body, opt), cfg.activation_source.endpoint);
      } catch (const SchemaError& e) {
        throw e.in(cfg.activation_source.endpoint);
      } catch (const ParseError& e) {
        throw e.in(cfg.activation_source.endpoint);
      }
    }

    require_cells(sets, analysed, cfg.styles, cfg.languages, cfg.layers);

    for (auto style : cfg.styles) {
      for (const auto& lang : cfg.languages) {
        std::string content;
        for (const auto& k : analysed) {
          for (int layer : cfg.layers) content += to_json_line(sets.at({k, style, lang, layer})) + "\n";
        }
        const auto path = out / "activations" / std::string(to_string(style)) / (lang + ".jsonl");
        detail::write_text(path, content);
        act_stage.outputs[rel(path, out)] = sha256_hex(content);
      }
    }
  }
  if (log) log("loaded " + std::to_string(sets.size()) + " activation sets");

  // -- evaluate (similarity, correlation, reports)
  StageRecord eval_stage{"evaluate", {}, {}};
  std::string mapping_text;
  for (const auto& m : mappings) mapping_text += m.entity1 + "," + m.entity2 + "," + m.relation + "," + format_fixed(m.measure, 9) + "\n";
  eval_stage.inputs["mappings"] = sha256_hex(mapping_text);
  for (const auto& [p, d] : act_stage.outputs) eval_stage.inputs[p] = d;
  manifest.stages.push_back(std::move(act_stage));

  std::string key_text = "evaluate v1\nseed=" + std::to_string(cfg.seed) + "\nrepeats=" + std::to_string(cfg.repeats) +
                         "\nsimilarity=" + (cfg.write_similarity ? "1" : "0") + "\nlayers=" + detail::join_layers(cfg.layers) +
                         "\nstyles=";
  for (auto s : cfg.styles) key_text += std::string(to_string(s)) + ",";
  key_text += "\ncombos=";
  for (const auto& c : cfg.combos()) key_text += c + ",";
  for (const auto& [p, d] : eval_stage.inputs) key_text += "\n" + p + "=" + d;
  const std::string eval_key = sha256_hex(key_text);

  const fs::path staging = out / (".staging-" + std::to_string(::getpid()));
  fs::remove_all(staging);
  struct Cleanup {
    fs::path dir;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(dir, ec);
    }
  } cleanup{staging};

  if (auto hit = cache.lookup(eval_key)) {
    if (log) log("cache hit evaluate " + eval_key.substr(0, 12));
    fs::copy(*hit, staging, fs::copy_options::recursive);
  } else {
    const auto combos = cfg.combos();
    const VectorStore store = build_vector_store(sets, analysed, cfg.styles, cfg.languages, cfg.layers);
    sets.clear();

    SweepOptions opt;
    opt.styles = cfg.styles;
    opt.combos = combos;
    opt.layers = cfg.layers;
    opt.seed = cfg.seed;
    opt.repeats = cfg.repeats;
    opt.threads = cfg.threads;
    std::size_t pairs = 0, degenerate = 0;
    auto sink = [&](const CellKey& key, std::span<const SimilarityRecord> records) {
      pairs = records.size();
      degenerate += static_cast<std::size_t>(
          std::count_if(records.begin(), records.end(), [](const auto& r) { return r.degenerate; }));
      if (cfg.write_similarity) {
        detail::write_text(staging / "similarity" / std::string(to_string(key.style)) / key.combo /
                               detail::layer_file(key.layer),
                           write_similarity_csv(records, true));
      }
    };
    if (log) log("sweeping " + std::to_string(cfg.styles.size() * combos.size() * cfg.layers.size()) + " cells");
    const auto result = layer_sweep(store, mappings, opt, sink);

    detail::write_text(staging / "correlations.csv", write_correlation_csv(result.results));
    detail::write_text(staging / "summary.csv", write_summary_csv(result.means));
    detail::write_text(staging / "plot.csv", write_plot_csv(result.results));
    nlohmann::ordered_json meta{{"pairs", pairs}, {"degenerate_pairs", degenerate}, {"cells", result.results.size()}};
    detail::write_text(staging / "evaluate.json", meta.dump() + "\n");
    cache.store(eval_key, staging);
  }

  const auto meta = nlohmann::json::parse(read_file(staging / "evaluate.json"));
  counts.pairs = meta.at("pairs").get<std::size_t>();
  counts.degenerate_pairs = meta.at("degenerate_pairs").get<std::size_t>();
  counts.cells = meta.at("cells").get<std::size_t>();
  if (counts.degenerate_pairs > 0)
    manifest.warnings.push_back(std::to_string(counts.degenerate_pairs) +
                                " pair score(s) involved an empty vector and were set to 0");
  fs::remove(staging / "evaluate.json");

  // Everything computed: install.
  if (fs::exists(staging / "similarity")) {
    detail::install(staging / "similarity", out / "similarity");
  } else {
    fs::remove_all(out / "similarity");
  }
  for (const char* name : {"correlations.csv", "summary.csv", "plot.csv"}) detail::install(staging / name, out / name);
  eval_stage.outputs = detail::digest_tree(out / "similarity", out);
  for (const char* name : {"correlations.csv", "summary.csv", "plot.csv"})
    eval_stage.outputs[name] = sha256_file(out / name);
  manifest.stages.push_back(std::move(eval_stage));

  detail::write_text(out / "manifest.json", manifest_json(manifest));
  return manifest;
}

}  // namespace cavg

#endif  // CAVG_PIPELINE_HPP
