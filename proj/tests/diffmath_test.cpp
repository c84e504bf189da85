#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "seq2set/grad_check.hpp"

namespace seq2set {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Array<double> random_array(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  Array<double> a(std::move(shape));
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& v : a.values) v = u(rng);
  return a;
}

std::size_t random_extent(std::mt19937_64& rng, std::size_t lo = 1, std::size_t hi = 6) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

TEST(LstmCell, ZeroWeightsZeroState) {
  Tape<double> t;
  Var x = t.constant({3}, {0.3, -1.0, 2.0});
  Var h = t.constant({5}, std::vector<double>(5, 0.0));
  Var c = t.constant({5}, std::vector<double>(5, 0.0));
  Var wi = t.constant(Array<double>({20, 3}));
  Var wh = t.constant(Array<double>({20, 5}));
  Var b = t.constant(Array<double>({20}));
  Var hc = ops::lstm_cell(t, x, h, c, wi, wh, b);
  ASSERT_EQ(t.shape(hc), Shape({10}));
  for (double v : t.value(hc)) EXPECT_EQ(v, 0.0);
}

TEST(LstmCell, ZeroWeightsCarriesHalfTheCell) {
  Tape<double> t;
  const std::vector<double> cell = {1.0, -2.0, 0.5, 3.0};
  Var x = t.constant({2}, {0.7, -0.4});
  Var h = t.constant({4}, {0.1, 0.2, 0.3, 0.4});
  Var c = t.constant({4}, cell);
  Var hc = ops::lstm_cell(t, x, h, c, t.constant(Array<double>({16, 2})),
                          t.constant(Array<double>({16, 4})), t.constant(Array<double>({16})));
  auto out = t.value(hc);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_NEAR(out[4 + j], 0.5 * cell[j], 1e-15);
    EXPECT_NEAR(out[j], 0.5 * std::tanh(0.5 * cell[j]), 1e-15);
  }
}

TEST(LstmCell, ShapeMismatchNamesDimension) {
  Tape<double> t;
  Var x = t.constant({3}, {0, 0, 0});
  Var h = t.constant({5}, std::vector<double>(5, 0.0));
  Var c = t.constant({5}, std::vector<double>(5, 0.0));
  try {
    ops::lstm_cell(t, x, h, c, t.constant(Array<double>({20, 4})),
                   t.constant(Array<double>({20, 5})), t.constant(Array<double>({20})));
    FAIL() << "expected a shape error";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("input extent 3"), std::string::npos) << e.what();
  }
}

TEST(Softmax, ClosedForms) {
  Tape<double> t;
  auto p = t.value(ops::softmax(t, t.constant({2}, {0.0, 0.0})));
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);

  p = t.value(ops::softmax(t, t.constant({2}, {0.0, std::log(3.0)})));
  EXPECT_NEAR(p[0], 0.25, 1e-15);
  EXPECT_NEAR(p[1], 0.75, 1e-15);

  p = t.value(ops::softmax(t, t.constant({2}, {0.0, -kInf})));
  EXPECT_EQ(p[0], 1.0);
  EXPECT_EQ(p[1], 0.0);
}

TEST(Softmax, NormalisesWithinTolerance) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Tape<double> t;
    auto logits = random_array({random_extent(rng, 1, 30)}, rng, 20.0);
    auto p = t.value(ops::softmax(t, t.constant(logits)));
    double total = 0.0;
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Softmax, RejectsFullyMaskedInput) {
  Tape<double> t;
  EXPECT_THROW(ops::softmax(t, t.constant({2}, {-kInf, -kInf})), std::invalid_argument);
}

TEST(LogSoftmaxAt, RejectsMaskedTarget) {
  Tape<double> t;
  EXPECT_THROW(ops::log_softmax_at(t, t.constant({3}, {0.0, -kInf, 1.0}), 1),
               std::invalid_argument);
}

TEST(GradCheck, LinearMapIsExactUpToRounding) {
  std::mt19937_64 rng(3);
  const double err = grad_check(
      [](Tape<double>& t, std::span<const Var> in) { return ops::matvec(t, in[0], in[1]); },
      {random_array({4, 3}, rng), random_array({3}, rng)}, 1e-5);
  EXPECT_LT(err, 1e-8);
}

TEST(GradCheck, TanhAtZero) {
  const double err = grad_check(
      [](Tape<double>& t, std::span<const Var> in) { return ops::tanh(t, in[0]); },
      {Array<double>({1}, {0.0})}, 1e-5);
  EXPECT_LT(err, 1e-6);
}

TEST(GradCheck, DetectsCorruptedAdjoint) {
  std::mt19937_64 rng(5);
  auto bad_tanh = [](Tape<double>& t, std::span<const Var> in) {
    Var a = in[0];
    auto va = t.value(a);
    std::vector<double> out(va.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(va[i]);
    return t.record(t.shape(a), std::move(out), {a}, [a](Tape<double>& t, Var self) {
      auto g = t.grad(self);
      auto y = t.value(self);
      auto ga = t.grad(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 1.1 * g[i] * (1.0 - y[i] * y[i]);
    });
  };
  EXPECT_GT(grad_check(bad_tanh, {random_array({6}, rng)}, 1e-5), 1e-2);
}

TEST(GradCheck, RejectsNonFiniteOutput) {
  EXPECT_THROW(grad_check([](Tape<double>& t,
                             std::span<const Var> in) { return ops::add_offset<double>(
                                                            t, in[0], std::vector<double>{kInf}); },
                          {Array<double>({1}, {0.0})}, 1e-5),
               std::domain_error);
}

TEST(GradCheck, RejectsEpsOutsideRange) {
  EXPECT_THROW(grad_check([](Tape<double>& t, std::span<const Var> in) { return in[0]; },
                          {Array<double>({1}, {0.0})}, 1e-2),
               std::invalid_argument);
}

// Every primitive over 20 random shapes and seeds.
class PrimitiveGradients : public ::testing::TestWithParam<int> {
 protected:
  void SetUp() override { rng_.seed(1000 + GetParam()); }
  std::size_t n() { return random_extent(rng_); }
  Array<double> rand(Shape s, double scale = 1.0) { return random_array(std::move(s), rng_, scale); }

  std::mt19937_64 rng_;
  static constexpr double kEps = 1e-5;
  static constexpr double kTol = 1e-4;
};

TEST_P(PrimitiveGradients, MatrixProducts) {
  const std::size_t r = n(), c = n(), m = n();
  EXPECT_LE(grad_check([](Tape<double>& t,
                          std::span<const Var> in) { return ops::matvec(t, in[0], in[1]); },
                       {rand({r, c}), rand({c})}, kEps),
            kTol);
  EXPECT_LE(grad_check([](Tape<double>& t,
                          std::span<const Var> in) { return ops::matmul_nt(t, in[0], in[1]); },
                       {rand({m, c}), rand({r, c})}, kEps),
            kTol);
}

TEST_P(PrimitiveGradients, Elementwise) {
  const std::size_t k = n();
  auto a = rand({k}, 2.0);
  auto b = rand({k}, 2.0);
  EXPECT_LE(grad_check([](Tape<double>& t,
                          std::span<const Var> in) { return ops::add(t, in[0], in[1]); },
                       {a, b}, kEps),
            kTol);
  EXPECT_LE(grad_check([](Tape<double>& t,
                          std::span<const Var> in) { return ops::mul(t, in[0], in[1]); },
                       {a, b}, kEps),
            kTol);
  EXPECT_LE(grad_check([](Tape<double>& t, std::span<const Var> in) { return ops::tanh(t, in[0]); },
                       {a}, kEps),
            kTol);
  EXPECT_LE(grad_check([](Tape<double>& t,
                          std::span<const Var> in) { return ops::sigmoid(t, in[0]); },
                       {a}, kEps),
            kTol);
  EXPECT_LE(grad_check([](Tape<double>& t,
                          std::span<const Var> in) { return ops::scale(t, in[0], -0.7); },
                       {a}, kEps),
            kTol);
  EXPECT_LE(grad_check([](Tape<double>& t, std::span<const Var> in) { return ops::sum(t, in[0]); },
                       {a}, kEps),
            kTol);
}

TEST_P(PrimitiveGradients, Structural) {
  const std::size_t a = n(), b = n(), c = n();
  EXPECT_LE(grad_check([](Tape<double>& t,
                          std::span<const Var> in) { return ops::concat(t, in); },
                       {rand({a}), rand({b}), rand({c})}, kEps),
            kTol);
  EXPECT_LE(grad_check([](Tape<double>& t,
                          std::span<const Var> in) { return ops::stack_rows(t, in); },
                       {rand({a}), rand({a}), rand({a})}, kEps),
            kTol);
  const std::size_t len = a + b;
  EXPECT_LE(grad_check([b, a](Tape<double>& t,
                              std::span<const Var> in) { return ops::slice(t, in[0], b, a); },
                       {rand({len})}, kEps),
            kTol);
  EXPECT_LE(grad_check(
                [](Tape<double>& t, std::span<const Var> in) {
                  return ops::linear_combination<double>(t, in, std::vector<double>{0.3, -1.2});
                },
                {rand({a}), rand({a})}, kEps),
            kTol);
  EXPECT_LE(grad_check([](Tape<double>& t,
                          std::span<const Var> in) { return ops::add_n(t, in); },
                       {rand({a}), rand({a}), rand({a})}, kEps),
            kTol);
}

TEST_P(PrimitiveGradients, SoftmaxFamily) {
  const std::size_t k = n() + 1;
  std::vector<double> mask(k, 0.0);
  mask[GetParam() % k] = -kInf;
  EXPECT_LE(grad_check([](Tape<double>& t,
                          std::span<const Var> in) { return ops::softmax(t, in[0]); },
                       {rand({k}, 3.0)}, kEps),
            kTol);
  EXPECT_LE(grad_check(
                [&mask](Tape<double>& t, std::span<const Var> in) {
                  return ops::softmax(t, ops::add_offset<double>(t, in[0], mask));
                },
                {rand({k}, 3.0)}, kEps),
            kTol);
  const std::size_t target = (GetParam() + 1) % k;
  EXPECT_LE(grad_check(
                [&mask, target](Tape<double>& t, std::span<const Var> in) {
                  return ops::log_softmax_at(t, ops::add_offset<double>(t, in[0], mask), target);
                },
                {rand({k}, 3.0)}, kEps),
            kTol);
}

TEST_P(PrimitiveGradients, EmbeddingAndDropout) {
  const std::size_t rows = n(), cols = n();
  const std::size_t id = GetParam() % rows;
  EXPECT_LE(grad_check([id](Tape<double>& t,
                            std::span<const Var> in) { return ops::embedding(t, in[0], id); },
                       {rand({rows, cols})}, kEps),
            kTol);
  std::vector<double> mask(cols);
  for (std::size_t i = 0; i < cols; ++i) mask[i] = (i + GetParam()) % 3 == 0 ? 0.0 : 1.0 / 0.7;
  EXPECT_LE(grad_check([&mask](Tape<double>& t,
                               std::span<const Var> in) { return ops::dropout<double>(t, in[0], mask); },
                       {rand({cols})}, kEps),
            kTol);
}

TEST_P(PrimitiveGradients, LstmCell) {
  const std::size_t d = n(), k = n();
  EXPECT_LE(grad_check(
                [](Tape<double>& t, std::span<const Var> in) {
                  return ops::lstm_cell(t, in[0], in[1], in[2], in[3], in[4], in[5]);
                },
                {rand({d}), rand({k}), rand({k}), rand({4 * k, d}), rand({4 * k, k}), rand({4 * k})},
                kEps),
            kTol);
}

TEST_P(PrimitiveGradients, Attention) {
  const std::size_t m = n(), q = n(), a = n(), km = n();
  EXPECT_LE(grad_check(
                [](Tape<double>& t, std::span<const Var> in) {
                  Var keys = ops::matmul_nt(t, in[1], in[2]);
                  return ops::attention(t, in[0], keys, in[1], in[3], in[4]);
                },
                {rand({q}), rand({m, km}), rand({a, km}), rand({a, q}), rand({a})}, kEps),
            kTol);
}

INSTANTIATE_TEST_SUITE_P(TwentySeeds, PrimitiveGradients, ::testing::Range(0, 20));

TEST(Attention, IdenticalRowsGiveUniformWeights) {
  Tape<double> t;
  std::mt19937_64 rng(9);
  auto row = random_array({4}, rng);
  std::vector<double> mem;
  for (int i = 0; i < 3; ++i) mem.insert(mem.end(), row.values.begin(), row.values.end());
  Var memory = t.constant({3, 4}, mem);
  Var keys = ops::matmul_nt(t, memory, t.constant(random_array({5, 4}, rng)));
  std::vector<double> w;
  Var ctx = ops::attention(t, t.constant(random_array({2}, rng)), keys, memory,
                           t.constant(random_array({5, 2}, rng)),
                           t.constant(random_array({5}, rng)), &w);
  for (double v : w) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(t.value(ctx)[j], row[j], 1e-15);
}

TEST(Tape, GradientOfSumIsSumOfGradients) {
  std::mt19937_64 rng(21);
  auto w = random_array({3, 4}, rng);
  auto x = random_array({4}, rng);
  auto loss_a = [](Tape<double>& t, Var wv, Var xv) {
    return ops::sum(t, ops::tanh(t, ops::matvec(t, wv, xv)));
  };
  auto loss_b = [](Tape<double>& t, Var wv, Var xv) {
    Var y = ops::matvec(t, wv, xv);
    return ops::sum(t, ops::mul(t, y, y));
  };
  auto grad_of = [&](bool use_a, bool use_b) {
    Tape<double> t;
    Var wv = t.input(w);
    Var xv = t.input(x);
    std::vector<Var> terms;
    if (use_a) terms.push_back(loss_a(t, wv, xv));
    if (use_b) terms.push_back(loss_b(t, wv, xv));
    t.backward(ops::add_n<double>(t, terms));
    auto g = t.grad(wv);
    return std::vector<double>(g.begin(), g.end());
  };
  auto ga = grad_of(true, false);
  auto gb = grad_of(false, true);
  auto gab = grad_of(true, true);
  for (std::size_t i = 0; i < gab.size(); ++i) {
    EXPECT_NEAR(gab[i], ga[i] + gb[i], 4 * std::numeric_limits<double>::epsilon() *
                                           (std::abs(ga[i]) + std::abs(gb[i]) + 1.0));
  }
}

TEST(Tape, ReplayIsBitIdentical) {
  auto run = []() {
    std::mt19937_64 rng(77);
    ParameterStore<float> params;
    ParamId wi = params.add("wi", {12, 2});
    ParamId wh = params.add("wh", {12, 3});
    ParamId b = params.add("b", {12});
    for (std::size_t i = 0; i < params.count(); ++i) {
      for (auto& v : params.at(i).values) v = std::uniform_real_distribution<float>(-1, 1)(rng);
    }
    Gradients<float> grads = params.zeros_like();
    Graph<float> g(params, &grads);
    g.enable_dropout(0.3f, 5);
    Tape<float>& t = g.tape();
    Var h = t.constant({3}, {0, 0, 0});
    Var c = h;
    for (int step = 0; step < 4; ++step) {
      Var x = g.dropout(t.constant({2}, {0.5f * step, -0.25f}));
      Var hc = ops::lstm_cell(t, x, h, c, g.param(wi), g.param(wh), g.param(b));
      h = ops::slice(t, hc, 0, 3);
      c = ops::slice(t, hc, 3, 3);
    }
    t.backward(ops::sum(t, h));
    return grads;
  };
  auto a = run();
  auto b = run();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].values, b[i].values);
}

TEST(Tape, UntrackedOperandsReceiveNoGradient) {
  Tape<double> t;
  Var c = t.constant({2}, {1.0, 2.0});
  Var x = t.input(Array<double>({2}, {0.5, 0.5}));
  Var y = ops::sum(t, ops::mul(t, c, x));
  t.backward(y);
  EXPECT_TRUE(t.grad(c).empty());
  EXPECT_DOUBLE_EQ(t.grad(x)[0], 1.0);
  EXPECT_DOUBLE_EQ(t.grad(x)[1], 2.0);
}

TEST(Array, FiniteCheckFlagsFaults) {
  Array<float> a({2}, {1.0f, 2.0f});
  EXPECT_TRUE(a.all_finite());
  a[1] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_FALSE(a.all_finite());
  EXPECT_THROW(Array<float>({2, 2}, std::vector<float>{1.0f}), ShapeError);
}

}  // namespace
}  // namespace seq2set
