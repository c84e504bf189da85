#include "seq2set/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace seq2set {

IndicatorVector to_indicator(std::span<const std::size_t> labels, std::size_t num_labels) {
  IndicatorVector v(num_labels, 0);
  for (std::size_t y : labels) {
    if (y >= num_labels) {
      throw std::invalid_argument("label id " + std::to_string(y) + " not in a vocabulary of " +
                                  std::to_string(num_labels));
    }
    v[y] = 1;
  }
  return v;
}

IndicatorVector to_indicator(const std::vector<std::string>& labels,
                             const std::vector<std::string>& vocab) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < vocab.size(); ++i) index.emplace(vocab[i], i);
  IndicatorVector v(vocab.size(), 0);
  for (const auto& name : labels) {
    auto it = index.find(name);
    if (it == index.end()) throw std::invalid_argument("unknown label '" + name + "'");
    v[it->second] = 1;
  }
  return v;
}

void ConfusionCounts::add(const IndicatorVector& pred, const IndicatorVector& gold) {
  if (pred.size() != gold.size()) {
    throw std::invalid_argument("indicator length mismatch: " + std::to_string(pred.size()) +
                                " vs " + std::to_string(gold.size()));
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] && gold[i]) ++tp;
    else if (pred[i]) ++fp;
    else if (gold[i]) ++fn;
    else ++tn;
  }
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void check_lists(const std::vector<IndicatorVector>& preds, const std::vector<IndicatorVector>& golds) {
  if (preds.size() != golds.size()) {
    throw std::invalid_argument("prediction list has " + std::to_string(preds.size()) +
                                " samples, gold list " + std::to_string(golds.size()));
  }
}

double round4(double x) { return std::round(x * 1e4) / 1e4; }

}  // namespace

PRF prf(const ConfusionCounts& c) {
  PRF out;
  out.precision = ratio(c.tp, c.tp + c.fp);
  out.recall = ratio(c.tp, c.tp + c.fn);
  const double denom = out.precision + out.recall;
  out.f1 = denom == 0.0 ? 0.0 : 2.0 * out.precision * out.recall / denom;
  return out;
}

ConfusionCounts count(const std::vector<IndicatorVector>& preds,
                      const std::vector<IndicatorVector>& golds) {
  check_lists(preds, golds);
  ConfusionCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) c.add(preds[i], golds[i]);
  return c;
}

double hamming_loss(const std::vector<IndicatorVector>& preds,
                    const std::vector<IndicatorVector>& golds) {
  const ConfusionCounts c = count(preds, golds);
  return ratio(c.fp + c.fn, c.tp + c.fp + c.fn + c.tn);
}

PRF micro_prf(const std::vector<IndicatorVector>& preds, const std::vector<IndicatorVector>& golds) {
  return prf(count(preds, golds));
}

double set_f1(std::span<const std::size_t> predicted, std::span<const std::size_t> gold,
              std::size_t num_labels) {
  ConfusionCounts c;
  c.add(to_indicator(predicted, num_labels), to_indicator(gold, num_labels));
  return prf(c).f1;
}

double reward(const DecodeTrace& trace, std::span<const std::size_t> gold, std::size_t num_labels) {
  const std::vector<std::size_t> predicted = trace_to_labelset(trace, num_labels);
  return set_f1(predicted, gold, num_labels);
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["num_samples"] = num_samples;
  j["num_labels"] = num_labels;
  j["hamming_loss"] = round4(hamming_loss);
  j["micro_precision"] = round4(micro.precision);
  j["micro_recall"] = round4(micro.recall);
  j["micro_f1"] = round4(micro.f1);
  j["counts"] = {{"tp", counts.tp}, {"fp", counts.fp}, {"fn", counts.fn}, {"tn", counts.tn}};
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

EvalReport evaluate_sets(const std::vector<std::vector<std::size_t>>& predicted,
                         const std::vector<std::vector<std::size_t>>& gold, std::size_t num_labels) {
  if (predicted.size() != gold.size()) {
    throw std::invalid_argument("prediction list has " + std::to_string(predicted.size()) +
                                " samples, gold list " + std::to_string(gold.size()));
  }
  EvalReport r;
  r.num_samples = predicted.size();
  r.num_labels = num_labels;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    r.counts.add(to_indicator(predicted[i], num_labels), to_indicator(gold[i], num_labels));
  }
  const std::uint64_t cells = r.counts.tp + r.counts.fp + r.counts.fn + r.counts.tn;
  r.hamming_loss = ratio(r.counts.fp + r.counts.fn, cells);
  r.micro = prf(r.counts);
  return r;
}

}  // namespace seq2set
