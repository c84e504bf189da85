#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "seq2set/parameters.hpp"

namespace seq2set {

// Relative errors are measured against max(|analytic|, |numeric|, floor) so
// that coordinates with vanishing gradient do not divide by rounding noise.
inline constexpr double kGradCheckFloor = 1e-6;

namespace detail {

inline std::vector<double> random_projection(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> w(n);
  for (auto& v : w) v = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
  return w;
}

inline double project(std::span<const double> y, const std::vector<double>& w) {
  if (y.size() != w.size()) throw ShapeError("grad_check: output extent changed between runs");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
  return s;
}

inline void require_finite(std::span<const double> y) {
  for (double v : y) {
    if (!std::isfinite(v)) throw std::domain_error("grad_check: non-finite primal output");
  }
}

inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kGradCheckFloor});
  return std::abs(analytic - numeric) / denom;
}

inline void check_eps(double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw std::invalid_argument("grad_check: eps must lie in [1e-7, 1e-3]");
  }
}

}  // namespace detail

// Compares reverse-mode gradients of a random scalar projection of
// fn(tape, inputs) against central finite differences over every input
// coordinate. Returns the largest relative error.
//   fn: Var(Tape<double>&, std::span<const Var>)
template <class Fn>
double grad_check(Fn&& fn, const std::vector<Array<double>>& inputs, double eps,
                  std::uint64_t seed = 0x5eedULL) {
  detail::check_eps(eps);
  auto evaluate = [&](const std::vector<Array<double>>& xs, Tape<double>& tape) {
    std::vector<Var> vars;
    vars.reserve(xs.size());
    for (const auto& x : xs) vars.push_back(tape.input(x));
    Var out = fn(tape, std::span<const Var>(vars));
    return std::make_pair(out, vars);
  };

  Tape<double> tape;
  auto [out, vars] = evaluate(inputs, tape);
  detail::require_finite(tape.value(out));
  const std::vector<double> w = detail::random_projection(tape.size(out), seed);
  tape.backward(out, std::span<const double>(w));

  double worst = 0.0;
  std::vector<Array<double>> probe = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto analytic = tape.grad(vars[k]);
    for (std::size_t j = 0; j < inputs[k].size(); ++j) {
      const double x0 = inputs[k][j];
      probe[k][j] = x0 + eps;
      Tape<double> tp;
      const double fp = detail::project(tp.value(evaluate(probe, tp).first), w);
      probe[k][j] = x0 - eps;
      Tape<double> tm;
      const double fm = detail::project(tm.value(evaluate(probe, tm).first), w);
      probe[k][j] = x0;
      worst = std::max(worst, detail::relative_error(analytic[j], (fp - fm) / (2.0 * eps)));
    }
  }
  return worst;
}

// Same check over every coordinate of a parameter store.
//   fn: Var(Graph<double>&)
template <class Fn>
double grad_check_parameters(Fn&& fn, ParameterStore<double>& params, double eps,
                             std::uint64_t seed = 0x5eedULL) {
  detail::check_eps(eps);
  Gradients<double> grads = params.zeros_like();
  std::vector<double> w;
  {
    Graph<double> graph(params, &grads);
    Var out = fn(graph);
    detail::require_finite(graph.tape().value(out));
    w = detail::random_projection(graph.tape().size(out), seed);
    graph.tape().backward(out, std::span<const double>(w));
  }
  auto projected = [&]() {
    Graph<double> graph(params, nullptr);
    Var out = fn(graph);
    return detail::project(graph.tape().value(out), w);
  };

  double worst = 0.0;
  for (std::size_t k = 0; k < params.count(); ++k) {
    Array<double>& p = params.at(k);
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double x0 = p[j];
      p[j] = x0 + eps;
      const double fp = projected();
      p[j] = x0 - eps;
      const double fm = projected();
      p[j] = x0;
      worst = std::max(worst, detail::relative_error(grads[k][j], (fp - fm) / (2.0 * eps)));
    }
  }
  return worst;
}

}  // namespace seq2set
