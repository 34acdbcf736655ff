#ifndef CAVG_SWEEP_HPP
#define CAVG_SWEEP_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <iterator>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include "cavg/activation.hpp"
#include "cavg/alignment.hpp"
#include "cavg/error.hpp"
#include "cavg/rng.hpp"
#include "cavg/similarity.hpp"
#include "cavg/stats.hpp"

namespace cavg {

// One (layer, style, combo) slice of the vector store.
struct CellKey {
  int layer = 0;
  Style style = Style::Verbose;
  std::string combo;

  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

inline std::string describe(const CellKey& k) {
  return "layer=" + std::to_string(k.layer) + " style=" + std::string(to_string(k.style)) + " combo=" + k.combo;
}

using VectorStore = std::map<CellKey, std::vector<ConceptVector>>;

struct CorrelationResult {
  int layer = 0;
  Style style = Style::Verbose;
  std::string combo;
  double r_pb = 0.0;  // mean over repeats
  std::size_t n1 = 0;
  std::size_t n0 = 0;
  std::uint64_t seed = 0;
  std::size_t repeats = 1;
  double r_sd = 0.0;  // population sd over repeats; 0 for a single draw

  friend bool operator==(const CorrelationResult&, const CorrelationResult&) = default;
};

struct ConfigurationMean {
  Style style = Style::Verbose;
  std::string combo;
  double mean_r = 0.0;
  std::size_t layers = 0;
};

struct SweepOptions {
  std::vector<Style> styles{Style::Summary, Style::Verbose};
  std::vector<std::string> combos{"en"};
  std::vector<int> layers;
  std::uint64_t seed = 0;
  std::size_t repeats = 1;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct SweepResult {
  std::vector<CorrelationResult> results;  // style, combo, layer order as requested
  std::vector<ConfigurationMean> means;    // style, combo order
};

// Each layer draws from its own generator seeded with seed ^ layer, so the
// result does not depend on evaluation order or thread count.
inline std::uint64_t layer_seed(std::uint64_t seed, int layer) { return seed ^ static_cast<std::uint64_t>(layer); }

inline std::uint64_t repeat_seed(std::uint64_t base, std::size_t repeat) {
  return repeat == 0 ? base : mix_seed(base + repeat);
}

// Rebalance + point-biserial, averaged over `repeats` draws.
inline CorrelationResult correlate_records(std::span<const SimilarityRecord> records, std::uint64_t seed,
                                           std::size_t repeats = 1) {
  if (repeats == 0) throw ContractError("repeats must be >= 1");
  CorrelationResult out;
  out.seed = seed;
  out.repeats = repeats;
  std::vector<double> rs;
  rs.reserve(repeats);
  for (std::size_t k = 0; k < repeats; ++k) {
    const auto balanced = rebalance(records, repeat_seed(seed, k));
    rs.push_back(point_biserial(balanced));
    out.n1 = out.n0 = balanced.size() / 2;
  }
  double sum = 0.0;
  for (double r : rs) sum += r;
  out.r_pb = sum / static_cast<double>(repeats);
  double ss = 0.0;
  for (double r : rs) ss += (r - out.r_pb) * (r - out.r_pb);
  out.r_sd = std::sqrt(ss / static_cast<double>(repeats));
  return out;
}

inline std::vector<ConfigurationMean> configuration_means(std::span<const CorrelationResult> results) {
  std::vector<ConfigurationMean> means;
  for (const auto& r : results) {
    auto it = std::find_if(means.begin(), means.end(),
                           [&](const auto& m) { return m.style == r.style && m.combo == r.combo; });
    if (it == means.end()) {
      means.push_back({r.style, r.combo, 0.0, 0});
      it = std::prev(means.end());
    }
    it->mean_r += r.r_pb;
    ++it->layers;
  }
  for (auto& m : means) m.mean_r /= static_cast<double>(m.layers);
  return means;
}

// Called with the full (unbalanced) records of every cell. May be invoked
// from worker threads, one call at a time.
using RecordSink = std::function<void(const CellKey&, std::span<const SimilarityRecord>)>;

inline SweepResult layer_sweep(const VectorStore& store, std::span<const ReferenceMapping> mappings,
                               const SweepOptions& opt, const RecordSink& sink = {}) {
  if (opt.layers.empty() || opt.styles.empty() || opt.combos.empty())
    throw ContractError("layer_sweep: layers, styles and combos must be non-empty");
  if (opt.repeats == 0) throw ContractError("repeats must be >= 1");

  std::vector<CellKey> cells;
  std::vector<std::string> missing;
  for (auto style : opt.styles) {
    for (const auto& combo : opt.combos) {
      for (int layer : opt.layers) {
        CellKey key{layer, style, combo};
        if (!store.count(key)) missing.push_back(describe(key));
        cells.push_back(std::move(key));
      }
    }
  }
  if (!missing.empty()) throw MissingCellError(std::move(missing));

  std::vector<CorrelationResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex sink_mutex;
  std::mutex error_mutex;
  std::exception_ptr error;

  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        const auto& key = cells[i];
        const auto records = build_similarity_records(store.at(key), mappings);
        if (sink) {
          std::lock_guard lock(sink_mutex);
          sink(key, records);
        }
        try {
          results[i] = correlate_records(records, layer_seed(opt.seed, key.layer), opt.repeats);
        } catch (const UndefinedCorrelationError& e) {
          throw UndefinedCorrelationError(describe(key) + ": " + e.what());
        } catch (const ContractError& e) {
          throw ContractError(describe(key) + ": " + e.what());
        }
        results[i].layer = key.layer;
        results[i].style = key.style;
        results[i].combo = key.combo;
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = cells.size();
      }
    }
  };

  unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, cells.size()));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);

  return {results, configuration_means(results)};
}

// ---------------------------------------------------------------------------
// Reports

inline constexpr std::string_view kCorrelationHeader = "layer,style,combo,r_pb,n1,n0,seed";

inline std::string write_correlation_csv(std::span<const CorrelationResult> results) {
  const bool repeats = std::any_of(results.begin(), results.end(), [](const auto& r) { return r.repeats > 1; });
  std::string out(kCorrelationHeader);
  if (repeats) out += ",r_sd,repeats";
  out += '\n';
  for (const auto& r : results) {
    out += std::to_string(r.layer) + "," + std::string(to_string(r.style)) + "," + r.combo + "," +
           format_fixed(r.r_pb, 9) + "," + std::to_string(r.n1) + "," + std::to_string(r.n0) + "," +
           std::to_string(r.seed);
    if (repeats) out += "," + format_fixed(r.r_sd, 9) + "," + std::to_string(r.repeats);
    out += '\n';
  }
  return out;
}

inline std::vector<CorrelationResult> parse_correlation_csv(std::string_view content) {
  std::vector<CorrelationResult> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.starts_with("layer,")) continue;

    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      auto comma = line.find(',', start);
      cols.emplace_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cols.size() != 7 && cols.size() != 9)
      throw ParseError("expected 7 or 9 columns, got " + std::to_string(cols.size()), line_no, 1);
    CorrelationResult r;
    try {
      r.layer = std::stoi(cols[0]);
      r.style = parse_style(cols[1]);
      r.combo = cols[2];
      r.r_pb = std::stod(cols[3]);
      r.n1 = std::stoull(cols[4]);
      r.n0 = std::stoull(cols[5]);
      r.seed = std::stoull(cols[6]);
      if (cols.size() == 9) {
        r.r_sd = std::stod(cols[7]);
        r.repeats = std::stoull(cols[8]);
      }
    } catch (const std::logic_error& e) {
      throw ParseError(std::string("invalid correlation row: ") + e.what(), line_no, 1);
    }
    out.push_back(std::move(r));
  }
  return out;
}

// Mean correlation per text style and language combination.
inline std::string write_summary_csv(std::span<const ConfigurationMean> means) {
  std::string out = "style,combo,mean_r,layers\n";
  for (const auto& m : means) {
    out += std::string(to_string(m.style)) + "," + m.combo + "," + format_fixed(m.mean_r, 9) + "," +
           std::to_string(m.layers) + "\n";
  }
  return out;
}

// Layer-by-layer curves, one column per combo, one block per style.
inline std::string write_plot_csv(std::span<const CorrelationResult> results) {
  std::vector<std::string> combos;
  std::map<std::tuple<Style, int>, std::map<std::string, double>> grid;
  for (const auto& r : results) {
    if (std::find(combos.begin(), combos.end(), r.combo) == combos.end()) combos.push_back(r.combo);
    grid[{r.style, r.layer}][r.combo] = r.r_pb;
  }
  std::string out = "style,layer";
  for (const auto& c : combos) out += "," + c;
  out += '\n';
  for (const auto& [key, row] : grid) {
    out += std::string(to_string(std::get<0>(key))) + "," + std::to_string(std::get<1>(key));
    for (const auto& c : combos) {
      auto it = row.find(c);
      out += ",";
      if (it != row.end()) out += format_fixed(it->second, 9);
    }
    out += '\n';
  }
  return out;
}

}  // namespace cavg

#endif  // CAVG_SWEEP_HPP
