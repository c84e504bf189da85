#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include <json.hpp>

#include "seq2set/metrics.hpp"

namespace seq2set {
namespace {

TEST(ToIndicator, Examples) {
  const std::vector<std::string> abc = {"A", "B", "C"};
  EXPECT_EQ(to_indicator(std::vector<std::string>{}, abc), (IndicatorVector{0, 0, 0}));
  EXPECT_EQ(to_indicator(std::vector<std::string>{"A"}, abc), (IndicatorVector{1, 0, 0}));
  EXPECT_EQ(to_indicator(std::vector<std::string>{"A", "C"}, abc), (IndicatorVector{1, 0, 1}));
  EXPECT_THROW(to_indicator(std::vector<std::string>{"Z"}, abc), std::invalid_argument);
  const std::vector<std::size_t> ids = {2, 0};
  EXPECT_EQ(to_indicator(ids, 3), (IndicatorVector{1, 0, 1}));
  const std::vector<std::size_t> bad = {3};
  EXPECT_THROW(to_indicator(bad, 3), std::invalid_argument);
}

TEST(HammingLoss, Examples) {
  const std::vector<IndicatorVector> gold = {{1, 0, 1, 0}, {0, 1, 0, 0}};
  EXPECT_EQ(hamming_loss(gold, gold), 0.0);
  const std::vector<IndicatorVector> pred = {{0, 0, 1, 1}, {0, 0, 0, 0}};  // 3 mismatches
  EXPECT_DOUBLE_EQ(hamming_loss(pred, gold), 0.375);
  EXPECT_EQ(hamming_loss({{0, 1, 1}}, {{1, 0, 0}}), 1.0);
  EXPECT_THROW(hamming_loss(pred, {gold[0]}), std::invalid_argument);
  EXPECT_THROW(hamming_loss({{0, 1}}, {{0, 1, 0}}), std::invalid_argument);
}

TEST(MicroPrf, Examples) {
  const std::vector<IndicatorVector> gold = {{1, 0, 0, 0}, {0, 0, 1, 1}};
  PRF perfect = micro_prf(gold, gold);
  EXPECT_EQ(perfect.precision, 1.0);
  EXPECT_EQ(perfect.recall, 1.0);
  EXPECT_EQ(perfect.f1, 1.0);

  // preds [{A,B},{C}], golds [{A},{C,D}]
  const std::vector<IndicatorVector> pred = {{1, 1, 0, 0}, {0, 0, 1, 0}};
  ConfusionCounts c = count(pred, gold);
  EXPECT_EQ(c.tp, 2u);
  EXPECT_EQ(c.fp, 1u);
  EXPECT_EQ(c.fn, 1u);
  PRF r = micro_prf(pred, gold);
  EXPECT_DOUBLE_EQ(r.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.f1, 2.0 / 3.0);

  const std::vector<IndicatorVector> empty = {{0, 0, 0, 0}, {0, 0, 0, 0}};
  PRF z = micro_prf(empty, gold);
  EXPECT_EQ(z.precision, 0.0);
  EXPECT_EQ(z.recall, 0.0);
  EXPECT_EQ(z.f1, 0.0);
  PRF zz = micro_prf(empty, empty);
  EXPECT_EQ(zz.f1, 0.0);
}

TEST(Reward, Examples) {
  DecodeTrace t;
  t.symbols = {2, 0, 1, eos_symbol(4)};
  const std::vector<std::size_t> abc = {0, 1, 2};
  EXPECT_EQ(reward(t, abc, 4), 1.0);
  t.symbols = {0, eos_symbol(4)};
  const std::vector<std::size_t> ab = {0, 1};
  EXPECT_DOUBLE_EQ(reward(t, ab, 4), 2.0 / 3.0);
  t.symbols = {eos_symbol(4)};
  const std::vector<std::size_t> a = {0};
  EXPECT_EQ(reward(t, a, 4), 0.0);
}

struct Naive {
  double hl, p, r, f1;
};

Naive naive_metrics(const std::vector<IndicatorVector>& preds, const std::vector<IndicatorVector>& golds) {
  std::uint64_t mismatch = 0, cells = 0, tp = 0, predicted = 0, actual = 0;
  for (std::size_t n = 0; n < preds.size(); ++n) {
    for (std::size_t l = 0; l < preds[n].size(); ++l) {
      ++cells;
      if (preds[n][l] != golds[n][l]) ++mismatch;
      if (preds[n][l] == 1) ++predicted;
      if (golds[n][l] == 1) ++actual;
      if (preds[n][l] == 1 && golds[n][l] == 1) ++tp;
    }
  }
  Naive out{};
  out.hl = cells ? double(mismatch) / double(cells) : 0.0;
  out.p = predicted ? double(tp) / double(predicted) : 0.0;
  out.r = actual ? double(tp) / double(actual) : 0.0;
  out.f1 = out.p + out.r > 0 ? 2 * out.p * out.r / (out.p + out.r) : 0.0;
  return out;
}

TEST(MetricProperties, MatchNaiveRecount) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 8, L = 1 + rng() % 10;
    const double density = static_cast<double>(rng() % 100) / 100.0;
    std::bernoulli_distribution bit(density);
    std::vector<IndicatorVector> preds(n, IndicatorVector(L)), golds(n, IndicatorVector(L));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t l = 0; l < L; ++l) {
        preds[i][l] = bit(rng);
        golds[i][l] = bit(rng);
      }
    }
    const Naive ref = naive_metrics(preds, golds);
    const PRF got = micro_prf(preds, golds);
    const double hl = hamming_loss(preds, golds);
    EXPECT_EQ(hl, ref.hl);
    EXPECT_EQ(got.precision, ref.p);
    EXPECT_EQ(got.recall, ref.r);
    EXPECT_EQ(got.f1, ref.f1);
    for (double v : {hl, got.precision, got.recall, got.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(MetricProperties, RewardPermutationInvariantAndExactAtOne) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t L = 1 + rng() % 12;
    std::vector<std::size_t> labels(L);
    for (std::size_t i = 0; i < L; ++i) labels[i] = i;
    std::shuffle(labels.begin(), labels.end(), rng);
    std::vector<std::size_t> pred(labels.begin(), labels.begin() + rng() % (L + 1));
    std::shuffle(labels.begin(), labels.end(), rng);
    std::vector<std::size_t> gold(labels.begin(), labels.begin() + rng() % (L + 1));

    DecodeTrace t;
    t.symbols = pred;
    t.symbols.push_back(eos_symbol(L));
    const double base = reward(t, gold, L);
    for (int k = 0; k < 5; ++k) {
      std::shuffle(t.symbols.begin(), t.symbols.end() - 1, rng);
      EXPECT_EQ(reward(t, gold, L), base);
    }
    std::vector<std::size_t> ps = pred, gs = gold;
    std::sort(ps.begin(), ps.end());
    std::sort(gs.begin(), gs.end());
    const bool equal = ps == gs;
    EXPECT_EQ(base == 1.0, equal && !gs.empty());
    EXPECT_GE(base, 0.0);
    EXPECT_LE(base, 1.0);
  }
}

TEST(ConfusionCountsTest, AccumulationIsOrderIndependent) {
  const std::vector<IndicatorVector> p = {{1, 0, 1}, {0, 1, 1}, {1, 1, 0}};
  const std::vector<IndicatorVector> g = {{1, 1, 0}, {0, 1, 0}, {0, 1, 1}};
  ConfusionCounts forward, backward, halves_a, halves_b;
  for (std::size_t i = 0; i < 3; ++i) forward.add(p[i], g[i]);
  for (std::size_t i = 3; i-- > 0;) backward.add(p[i], g[i]);
  halves_a.add(p[0], g[0]);
  halves_b.add(p[1], g[1]);
  halves_b.add(p[2], g[2]);
  halves_a += halves_b;
  EXPECT_EQ(forward, backward);
  EXPECT_EQ(forward, halves_a);
  EXPECT_EQ(forward.tp + forward.fn, 5u);
}

TEST(EvalReportTest, JsonHasFourDecimalMetrics) {
  EvalReport r = evaluate_sets({{0, 1}, {2}}, {{0}, {2, 3}}, 4);
  r.config_hash = "abc";
  r.seed = 7;
  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_EQ(j["micro_f1"].get<double>(), 0.6667);
  EXPECT_EQ(j["hamming_loss"].get<double>(), 0.25);
  EXPECT_EQ(j["counts"]["tp"].get<int>(), 2);
  EXPECT_EQ(j["seed"].get<int>(), 7);
  EvalReport again = evaluate_sets({{0, 1}, {2}}, {{0}, {2, 3}}, 4);
  again.config_hash = "abc";
  again.seed = 7;
  EXPECT_EQ(r.to_json(), again.to_json());
}

}  // namespace
}  // namespace seq2set
