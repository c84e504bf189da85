#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "seq2set/example.hpp"
#include "seq2set/metrics.hpp"
#include "seq2set/training.hpp"

namespace seq2set {

// ---- binary relevance -----------------------------------------------------

struct BRConfig {
  double learning_rate = 2.0;
  std::size_t epochs = 300;
  double l2 = 0.0;
  double threshold = 0.5;

  void validate() const;
};

// One logistic classifier per label over L2-normalized bag-of-words counts.
struct BRModel {
  std::size_t vocab_size = 0;
  std::size_t num_labels = 0;
  std::vector<double> weights;  // num_labels x vocab_size, row-major
  std::vector<double> bias;     // -inf for labels never seen in training
  double threshold = 0.5;

  double probability(std::size_t label, std::span<const int> tokens) const;
  bool operator==(const BRModel&) const = default;
};

// Sparse normalized features: (token id, weight) pairs sorted by id.
std::vector<std::pair<int, double>> bag_of_words(std::span<const int> tokens,
                                                 std::size_t vocab_size);

// Full-batch gradient descent from zero weights, each label independently.
// Label order inside examples is irrelevant: only membership is read.
BRModel br_train(std::span<const Example> data, std::size_t vocab_size, std::size_t num_labels,
                 const BRConfig& cfg);

// Sorted label ids whose probability exceeds the threshold.
std::vector<std::size_t> br_predict(const BRModel& model, std::span<const int> tokens);

EvalReport br_evaluate(const BRModel& model, std::span<const Example> data);

// ---- presets --------------------------------------------------------------

struct Preset {
  std::string name;
  bool binary_relevance = false;
  Variant variant = Variant::kFull;
  TrainConfig training;
};

// seq2seq: full architecture, λ = 0, inference from the sequence decoder.
// seq2set_full: λ = 0.8, inference from the set decoder.
// seq2set_simplified: no sequence decoder, pure self-critical training.
// br: binary relevance; training holds defaults only.
Preset preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace seq2set
