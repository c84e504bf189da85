#include "seq2set/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace seq2set {

void BRConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("br." + m); };
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (epochs == 0) fail("epochs must be positive");
  if (!(l2 >= 0.0)) fail("l2 must be non-negative");
  if (!(threshold > 0.0 && threshold < 1.0)) fail("threshold must lie in (0, 1)");
}

std::vector<std::pair<int, double>> bag_of_words(std::span<const int> tokens,
                                                 std::size_t vocab_size) {
  std::map<int, double> counts;
  for (int t : tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_size) {
      throw std::invalid_argument("bag_of_words: token id " + std::to_string(t) +
                                  " outside vocabulary of " + std::to_string(vocab_size));
    }
    counts[t] += 1.0;
  }
  double norm = 0.0;
  for (const auto& [id, c] : counts) norm += c * c;
  norm = std::sqrt(norm);
  std::vector<std::pair<int, double>> out(counts.begin(), counts.end());
  for (auto& [id, c] : out) c /= norm;
  return out;
}

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double score(const BRModel& m, std::size_t label, const std::vector<std::pair<int, double>>& x) {
  const double* w = m.weights.data() + label * m.vocab_size;
  double z = m.bias[label];
  for (const auto& [id, v] : x) z += w[id] * v;
  return z;
}

}  // namespace

double BRModel::probability(std::size_t label, std::span<const int> tokens) const {
  if (label >= num_labels) throw std::out_of_range("br: label id out of range");
  if (std::isinf(bias[label]) && bias[label] < 0) return 0.0;
  return sigmoid(score(*this, label, bag_of_words(tokens, vocab_size)));
}

BRModel br_train(std::span<const Example> data, std::size_t vocab_size, std::size_t num_labels,
                 const BRConfig& cfg) {
  cfg.validate();
  if (num_labels == 0) throw std::invalid_argument("br_train: empty label vocabulary");
  if (data.empty()) throw std::invalid_argument("br_train: empty training set");
  BRModel m;
  m.vocab_size = vocab_size;
  m.num_labels = num_labels;
  m.threshold = cfg.threshold;
  m.weights.assign(num_labels * vocab_size, 0.0);
  m.bias.assign(num_labels, 0.0);

  std::vector<std::vector<std::pair<int, double>>> x;
  std::vector<std::vector<std::uint8_t>> y(num_labels, std::vector<std::uint8_t>(data.size(), 0));
  std::vector<std::size_t> positives(num_labels, 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    x.push_back(bag_of_words(data[i].tokens, vocab_size));
    for (std::size_t l : data[i].labels) {
      if (l >= num_labels) throw std::invalid_argument("br_train: label id out of range");
      if (!y[l][i]) ++positives[l];
      y[l][i] = 1;
    }
  }
  const double n = static_cast<double>(data.size());
  std::vector<double> gw(vocab_size);
  for (std::size_t l = 0; l < num_labels; ++l) {
    if (positives[l] == 0) {
      m.bias[l] = -std::numeric_limits<double>::infinity();
      continue;
    }
    double* w = m.weights.data() + l * vocab_size;
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
      std::fill(gw.begin(), gw.end(), 0.0);
      double gb = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = sigmoid(score(m, l, x[i])) - static_cast<double>(y[l][i]);
        gb += r;
        for (const auto& [id, v] : x[i]) gw[id] += r * v;
      }
      for (std::size_t j = 0; j < vocab_size; ++j) {
        w[j] -= cfg.learning_rate * (gw[j] / n + cfg.l2 * w[j]);
      }
      m.bias[l] -= cfg.learning_rate * gb / n;
    }
  }
  return m;
}

std::vector<std::size_t> br_predict(const BRModel& model, std::span<const int> tokens) {
  const auto x = bag_of_words(tokens, model.vocab_size);
  std::vector<std::size_t> out;
  for (std::size_t l = 0; l < model.num_labels; ++l) {
    if (std::isinf(model.bias[l]) && model.bias[l] < 0) continue;
    if (sigmoid(score(model, l, x)) > model.threshold) out.push_back(l);
  }
  return out;
}

EvalReport br_evaluate(const BRModel& model, std::span<const Example> data) {
  std::vector<std::vector<std::size_t>> pred, gold;
  for (const Example& ex : data) {
    pred.push_back(br_predict(model, ex.tokens));
    gold.push_back(ex.labels);
  }
  return evaluate_sets(pred, gold, model.num_labels);
}

std::vector<std::string> preset_names() {
  return {"seq2seq", "seq2set_full", "seq2set_simplified", "br"};
}

Preset preset(const std::string& name) {
  Preset p;
  p.name = name;
  if (name == "seq2seq") {
    p.training.lambda = 0.0;
    p.training.inference = InferenceDecoder::kSequence;
  } else if (name == "seq2set_full") {
    p.training.lambda = 0.8;
  } else if (name == "seq2set_simplified") {
    p.variant = Variant::kSimplified;
    p.training.lambda = 1.0;
  } else if (name == "br") {
    p.binary_relevance = true;
  } else {
    throw std::invalid_argument("unknown preset '" + name +
                                "' (expected seq2seq|seq2set_full|seq2set_simplified|br)");
  }
  return p;
}

}  // namespace seq2set
