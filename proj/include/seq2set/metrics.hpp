#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seq2set/decoding.hpp"

namespace seq2set {

// One 0/1 flag per real label.
using IndicatorVector = std::vector<std::uint8_t>;

// Throws std::invalid_argument for ids outside [0, num_labels).
IndicatorVector to_indicator(std::span<const std::size_t> labels, std::size_t num_labels);
// Name-based variant; throws for names missing from vocab.
IndicatorVector to_indicator(const std::vector<std::string>& labels,
                             const std::vector<std::string>& vocab);

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  void add(const IndicatorVector& pred, const IndicatorVector& gold);
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  bool operator==(const ConfusionCounts&) const = default;
};

struct PRF {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

// 0/0 is defined as 0 for each of P, R and F1.
PRF prf(const ConfusionCounts& c);

double hamming_loss(const std::vector<IndicatorVector>& preds,
                    const std::vector<IndicatorVector>& golds);
PRF micro_prf(const std::vector<IndicatorVector>& preds, const std::vector<IndicatorVector>& golds);
ConfusionCounts count(const std::vector<IndicatorVector>& preds,
                      const std::vector<IndicatorVector>& golds);

// Per-sample F1 between predicted and gold label sets. Depends only on the
// integer overlap counts, so it is exactly order-invariant.
double set_f1(std::span<const std::size_t> predicted, std::span<const std::size_t> gold,
              std::size_t num_labels);
double reward(const DecodeTrace& trace, std::span<const std::size_t> gold, std::size_t num_labels);

struct EvalReport {
  std::size_t num_samples = 0;
  std::size_t num_labels = 0;
  double hamming_loss = 0.0;
  PRF micro;
  ConfusionCounts counts;
  std::string config_hash;
  std::uint64_t seed = 0;

  // Metrics rounded to 4 decimals; no timestamps, so reruns are byte-identical.
  std::string to_json() const;
};

EvalReport evaluate_sets(const std::vector<std::vector<std::size_t>>& predicted,
                         const std::vector<std::vector<std::size_t>>& gold, std::size_t num_labels);

}  // namespace seq2set
