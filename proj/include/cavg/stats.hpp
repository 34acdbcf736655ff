#ifndef CAVG_STATS_HPP
#define CAVG_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "cavg/error.hpp"
#include "cavg/rng.hpp"
#include "cavg/similarity.hpp"

namespace cavg {

// r_pb = (M1 - M0) / s * sqrt(n1 * n0 / n^2), with s the population standard
// deviation of all scores. Equal to Pearson's r on the 0/1 label encoding.
inline double point_biserial(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ContractError("point_biserial: scores and labels differ in length");
  std::size_t n1 = 0;
  double sum1 = 0.0, sum0 = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 1) {
      ++n1;
      sum1 += scores[i];
    } else if (labels[i] == 0) {
      sum0 += scores[i];
    } else {
      throw ContractError("point_biserial: labels must be 0 or 1");
    }
  }
  const std::size_t n = scores.size();
  const std::size_t n0 = n - n1;
  if (n1 == 0 || n0 == 0) throw ContractError("point_biserial: both labels must be present");

  const double mean = (sum1 + sum0) / static_cast<double>(n);
  double ss = 0.0;
  for (double s : scores) ss += (s - mean) * (s - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n));
  if (!(sd > 0.0)) throw UndefinedCorrelationError("point_biserial: scores have zero variance");

  const double m1 = sum1 / static_cast<double>(n1);
  const double m0 = sum0 / static_cast<double>(n0);
  const double p = static_cast<double>(n1) / static_cast<double>(n);
  const double q = static_cast<double>(n0) / static_cast<double>(n);
  return std::clamp((m1 - m0) / sd * std::sqrt(p * q), -1.0, 1.0);
}

inline double point_biserial(std::span<const SimilarityRecord> records) {
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(records.size());
  labels.reserve(records.size());
  for (const auto& r : records) {
    scores.push_back(r.score);
    labels.push_back(r.label);
  }
  return point_biserial(scores, labels);
}

namespace detail {

// k indices drawn uniformly without replacement from [0, n), returned sorted.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace detail

// Downsamples the majority label to the size of the minority label. Output
// is the label-1 block followed by the label-0 block, each in input order.
// In the usual case (far fewer mapped pairs) every label-1 record is kept.
inline std::vector<SimilarityRecord> rebalance(std::span<const SimilarityRecord> records, std::uint64_t seed) {
  std::vector<const SimilarityRecord*> ones, zeros;
  for (const auto& r : records) (r.label == 1 ? ones : zeros).push_back(&r);
  if (ones.empty()) throw ContractError("rebalance: no records with label 1 (true mappings)");
  if (zeros.empty()) throw ContractError("rebalance: no records with label 0 (false mappings)");

  Rng rng(seed);
  auto& majority = ones.size() > zeros.size() ? ones : zeros;
  const std::size_t keep = std::min(ones.size(), zeros.size());
  if (majority.size() > keep) {
    std::vector<const SimilarityRecord*> sampled;
    sampled.reserve(keep);
    for (std::size_t i : detail::sample_indices(majority.size(), keep, rng)) sampled.push_back(majority[i]);
    majority = std::move(sampled);
  }

  std::vector<SimilarityRecord> out;
  out.reserve(2 * keep);
  for (const auto* r : ones) out.push_back(*r);
  for (const auto* r : zeros) out.push_back(*r);
  return out;
}

}  // namespace cavg

#endif  // CAVG_STATS_HPP
