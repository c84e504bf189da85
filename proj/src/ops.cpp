#include "seq2set/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace seq2set {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) os << " x ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace ops {
namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <class T>
Eigen::Map<const RowMat<T>> cmat(std::span<const T> s, std::size_t r, std::size_t c) {
  return Eigen::Map<const RowMat<T>>(s.data(), static_cast<Eigen::Index>(r),
                                     static_cast<Eigen::Index>(c));
}
template <class T>
Eigen::Map<RowMat<T>> mmat(std::span<T> s, std::size_t r, std::size_t c) {
  return Eigen::Map<RowMat<T>>(s.data(), static_cast<Eigen::Index>(r),
                               static_cast<Eigen::Index>(c));
}
template <class T>
Eigen::Map<const Vec<T>> cvec(std::span<const T> s) {
  return Eigen::Map<const Vec<T>>(s.data(), static_cast<Eigen::Index>(s.size()));
}
template <class T>
Eigen::Map<Vec<T>> mvec(std::span<T> s) {
  return Eigen::Map<Vec<T>>(s.data(), static_cast<Eigen::Index>(s.size()));
}

void check(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

template <class T>
std::size_t rank1(const Tape<T>& t, Var v, const char* op, const char* name) {
  const Shape& s = t.shape(v);
  check(s.size() == 1, std::string(op) + ": " + name + " must be a vector, got " +
                           shape_string(s));
  return s[0];
}

template <class T>
std::pair<std::size_t, std::size_t> rank2(const Tape<T>& t, Var v, const char* op,
                                          const char* name) {
  const Shape& s = t.shape(v);
  check(s.size() == 2, std::string(op) + ": " + name + " must be a matrix, got " +
                           shape_string(s));
  return {s[0], s[1]};
}

template <class T>
void accumulate(std::span<T> dst, std::span<const T> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <class T>
T sigmoid_scalar(T x) {
  return T{1} / (T{1} + std::exp(-x));
}

}  // namespace

template <class T>
Var matvec(Tape<T>& t, Var w, Var x) {
  auto [r, c] = rank2(t, w, "matvec", "weight");
  std::size_t n = rank1(t, x, "matvec", "input");
  check(n == c, "matvec: input extent " + std::to_string(n) + " does not match weight columns " +
                    std::to_string(c) + " (weight " + shape_string(t.shape(w)) + ")");
  std::vector<T> out(r);
  mvec<T>(out) = cmat<T>(t.value(w), r, c) * cvec<T>(t.value(x));
  return t.record({r}, std::move(out), {w, x}, [w, x, r, c](Tape<T>& t, Var self) {
    auto g = cvec<T>(t.grad(self));
    if (auto gw = t.grad(w); !gw.empty()) {
      mmat<T>(gw, r, c).noalias() += g * cvec<T>(t.value(x)).transpose();
    }
    if (auto gx = t.grad(x); !gx.empty()) {
      mvec<T>(gx).noalias() += cmat<T>(t.value(w), r, c).transpose() * g;
    }
  });
}

template <class T>
Var matmul_nt(Tape<T>& t, Var a, Var w) {
  auto [m, n] = rank2(t, a, "matmul_nt", "left operand");
  auto [r, c] = rank2(t, w, "matmul_nt", "right operand");
  check(n == c, "matmul_nt: inner extents differ (" + std::to_string(n) + " vs " +
                    std::to_string(c) + ")");
  std::vector<T> out(m * r);
  mmat<T>(out, m, r).noalias() = cmat<T>(t.value(a), m, n) * cmat<T>(t.value(w), r, c).transpose();
  return t.record({m, r}, std::move(out), {a, w}, [a, w, m, n, r](Tape<T>& t, Var self) {
    auto g = cmat<T>(t.grad(self), m, r);
    if (auto ga = t.grad(a); !ga.empty()) {
      mmat<T>(ga, m, n).noalias() += g * cmat<T>(t.value(w), r, n);
    }
    if (auto gw = t.grad(w); !gw.empty()) {
      mmat<T>(gw, r, n).noalias() += g.transpose() * cmat<T>(t.value(a), m, n);
    }
  });
}

template <class T>
Var add(Tape<T>& t, Var a, Var b) {
  check(t.shape(a) == t.shape(b), "add: shapes " + shape_string(t.shape(a)) + " and " +
                                      shape_string(t.shape(b)) + " differ");
  auto va = t.value(a);
  auto vb = t.value(b);
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
  return t.record(t.shape(a), std::move(out), {a, b}, [a, b](Tape<T>& t, Var self) {
    auto g = t.grad(self);
    if (auto ga = t.grad(a); !ga.empty()) accumulate<T>(ga, g);
    if (auto gb = t.grad(b); !gb.empty()) accumulate<T>(gb, g);
  });
}

template <class T>
Var add_n(Tape<T>& t, std::span<const Var> terms) {
  check(!terms.empty(), "add_n: no operands");
  const Shape shape = t.shape(terms[0]);
  std::vector<T> out(element_count(shape), T{0});
  for (Var v : terms) {
    check(t.shape(v) == shape, "add_n: operand shape " + shape_string(t.shape(v)) +
                                   " differs from " + shape_string(shape));
    auto vv = t.value(v);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += vv[i];
  }
  std::vector<Var> ins(terms.begin(), terms.end());
  return t.record(shape, std::move(out), terms, [ins](Tape<T>& t, Var self) {
    auto g = t.grad(self);
    for (Var v : ins) {
      if (auto gv = t.grad(v); !gv.empty()) accumulate<T>(gv, g);
    }
  });
}

template <class T>
Var mul(Tape<T>& t, Var a, Var b) {
  check(t.shape(a) == t.shape(b), "mul: shapes " + shape_string(t.shape(a)) + " and " +
                                      shape_string(t.shape(b)) + " differ");
  auto va = t.value(a);
  auto vb = t.value(b);
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
  return t.record(t.shape(a), std::move(out), {a, b}, [a, b](Tape<T>& t, Var self) {
    auto g = t.grad(self);
    auto va = t.value(a);
    auto vb = t.value(b);
    if (auto ga = t.grad(a); !ga.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
    }
    if (auto gb = t.grad(b); !gb.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
    }
  });
}

template <class T>
Var scale(Tape<T>& t, Var a, T factor) {
  auto va = t.value(a);
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * factor;
  return t.record(t.shape(a), std::move(out), {a}, [a, factor](Tape<T>& t, Var self) {
    auto g = t.grad(self);
    auto ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
  });
}

template <class T>
Var add_offset(Tape<T>& t, Var a, std::span<const T> offset) {
  auto va = t.value(a);
  check(offset.size() == va.size(), "add_offset: offset extent " + std::to_string(offset.size()) +
                                        " does not match operand " + shape_string(t.shape(a)));
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + offset[i];
  return t.record(t.shape(a), std::move(out), {a}, [a](Tape<T>& t, Var self) {
    accumulate<T>(t.grad(a), t.grad(self));
  });
}

template <class T>
Var concat(Tape<T>& t, std::span<const Var> parts) {
  check(!parts.empty(), "concat: no operands");
  std::vector<T> out;
  for (Var p : parts) {
    rank1(t, p, "concat", "operand");
    auto vp = t.value(p);
    out.insert(out.end(), vp.begin(), vp.end());
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  const std::size_t n = out.size();
  return t.record({n}, std::move(out), parts, [ins](Tape<T>& t, Var self) {
    auto g = t.grad(self);
    std::size_t off = 0;
    for (Var p : ins) {
      const std::size_t len = t.size(p);
      if (auto gp = t.grad(p); !gp.empty()) accumulate<T>(gp, g.subspan(off, len));
      off += len;
    }
  });
}

template <class T>
Var slice(Tape<T>& t, Var a, std::size_t offset, std::size_t length) {
  const std::size_t n = rank1(t, a, "slice", "operand");
  check(offset + length <= n, "slice: range [" + std::to_string(offset) + ", " +
                                  std::to_string(offset + length) + ") exceeds extent " +
                                  std::to_string(n));
  auto va = t.value(a).subspan(offset, length);
  return t.record({length}, std::vector<T>(va.begin(), va.end()), {a},
                  [a, offset, length](Tape<T>& t, Var self) {
                    accumulate<T>(t.grad(a).subspan(offset, length), t.grad(self));
                  });
}

template <class T>
Var stack_rows(Tape<T>& t, std::span<const Var> rows) {
  check(!rows.empty(), "stack_rows: no rows");
  const std::size_t k = rank1(t, rows[0], "stack_rows", "row");
  std::vector<T> out;
  out.reserve(rows.size() * k);
  for (Var r : rows) {
    check(rank1(t, r, "stack_rows", "row") == k, "stack_rows: row extents differ");
    auto vr = t.value(r);
    out.insert(out.end(), vr.begin(), vr.end());
  }
  std::vector<Var> ins(rows.begin(), rows.end());
  return t.record({rows.size(), k}, std::move(out), rows, [ins, k](Tape<T>& t, Var self) {
    auto g = t.grad(self);
    for (std::size_t i = 0; i < ins.size(); ++i) {
      if (auto gr = t.grad(ins[i]); !gr.empty()) accumulate<T>(gr, g.subspan(i * k, k));
    }
  });
}

template <class T>
Var tanh(Tape<T>& t, Var a) {
  auto va = t.value(a);
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(va[i]);
  return t.record(t.shape(a), std::move(out), {a}, [a](Tape<T>& t, Var self) {
    auto g = t.grad(self);
    auto y = t.value(self);
    auto ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (T{1} - y[i] * y[i]);
  });
}

template <class T>
Var sigmoid(Tape<T>& t, Var a) {
  auto va = t.value(a);
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_scalar(va[i]);
  return t.record(t.shape(a), std::move(out), {a}, [a](Tape<T>& t, Var self) {
    auto g = t.grad(self);
    auto y = t.value(self);
    auto ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (T{1} - y[i]);
  });
}

namespace {

// Returns softmax probabilities; throws when nothing is admissible.
template <class T>
std::vector<T> stable_softmax(std::span<const T> x) {
  T hi = -std::numeric_limits<T>::infinity();
  for (T v : x) {
    if (std::isnan(v)) throw std::domain_error("softmax: NaN input");
    hi = std::max(hi, v);
  }
  if (!(hi > -std::numeric_limits<T>::infinity())) {
    throw std::invalid_argument("softmax: every entry is -inf (no admissible label)");
  }
  std::vector<T> p(x.size());
  T total{0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    p[i] = std::exp(x[i] - hi);
    total += p[i];
  }
  for (T& v : p) v /= total;
  return p;
}

}  // namespace

template <class T>
Var softmax(Tape<T>& t, Var logits) {
  rank1(t, logits, "softmax", "logits");
  std::vector<T> p = stable_softmax<T>(t.value(logits));
  return t.record(t.shape(logits), std::move(p), {logits}, [logits](Tape<T>& t, Var self) {
    auto g = t.grad(self);
    auto p = t.value(self);
    T dot{0};
    for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * p[i];
    auto gl = t.grad(logits);
    for (std::size_t i = 0; i < g.size(); ++i) gl[i] += p[i] * (g[i] - dot);
  });
}

template <class T>
Var log_softmax_at(Tape<T>& t, Var logits, std::size_t index) {
  const std::size_t n = rank1(t, logits, "log_softmax_at", "logits");
  check(index < n, "log_softmax_at: index " + std::to_string(index) + " outside extent " +
                       std::to_string(n));
  auto x = t.value(logits);
  if (!(x[index] > -std::numeric_limits<T>::infinity())) {
    throw std::invalid_argument("log_softmax_at: target " + std::to_string(index) +
                                " is masked");
  }
  T hi = -std::numeric_limits<T>::infinity();
  for (T v : x) hi = std::max(hi, v);
  T total{0};
  for (T v : x) total += std::exp(v - hi);
  const T value = x[index] - hi - std::log(total);
  return t.record({1}, {value}, {logits}, [logits, index](Tape<T>& t, Var self) {
    const T g = t.grad(self)[0];
    std::vector<T> p = stable_softmax<T>(t.value(logits));
    auto gl = t.grad(logits);
    for (std::size_t i = 0; i < p.size(); ++i) gl[i] -= g * p[i];
    gl[index] += g;
  });
}

template <class T>
Var embedding(Tape<T>& t, Var table, std::size_t index) {
  auto [rows, cols] = rank2(t, table, "embedding", "table");
  if (index >= rows) {
    throw std::out_of_range("embedding: id " + std::to_string(index) + " outside table of " +
                            std::to_string(rows) + " rows");
  }
  auto row = t.value(table).subspan(index * cols, cols);
  return t.record({cols}, std::vector<T>(row.begin(), row.end()), {table},
                  [table, index, cols](Tape<T>& t, Var self) {
                    accumulate<T>(t.grad(table).subspan(index * cols, cols), t.grad(self));
                  });
}

template <class T>
Var dropout(Tape<T>& t, Var x, std::span<const T> mask) {
  auto vx = t.value(x);
  check(mask.size() == vx.size(), "dropout: mask extent " + std::to_string(mask.size()) +
                                      " does not match operand " + shape_string(t.shape(x)));
  std::vector<T> out(vx.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = vx[i] * mask[i];
  std::vector<T> keep(mask.begin(), mask.end());
  return t.record(t.shape(x), std::move(out), {x}, [x, keep](Tape<T>& t, Var self) {
    auto g = t.grad(self);
    auto gx = t.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * keep[i];
  });
}

template <class T>
Var sum(Tape<T>& t, Var a) {
  T total{0};
  for (T v : t.value(a)) total += v;
  return t.record({1}, {total}, {a}, [a](Tape<T>& t, Var self) {
    const T g = t.grad(self)[0];
    for (T& v : t.grad(a)) v += g;
  });
}

template <class T>
Var linear_combination(Tape<T>& t, std::span<const Var> terms, std::span<const T> coeffs) {
  check(!terms.empty(), "linear_combination: no operands");
  check(terms.size() == coeffs.size(), "linear_combination: " + std::to_string(terms.size()) +
                                           " operands but " + std::to_string(coeffs.size()) +
                                           " coefficients");
  const Shape shape = t.shape(terms[0]);
  std::vector<T> out(element_count(shape), T{0});
  for (std::size_t k = 0; k < terms.size(); ++k) {
    check(t.shape(terms[k]) == shape, "linear_combination: operand shapes differ");
    auto v = t.value(terms[k]);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += coeffs[k] * v[i];
  }
  std::vector<Var> ins(terms.begin(), terms.end());
  std::vector<T> cs(coeffs.begin(), coeffs.end());
  return t.record(shape, std::move(out), terms, [ins, cs](Tape<T>& t, Var self) {
    auto g = t.grad(self);
    for (std::size_t k = 0; k < ins.size(); ++k) {
      auto gv = t.grad(ins[k]);
      if (gv.empty()) continue;
      for (std::size_t i = 0; i < g.size(); ++i) gv[i] += cs[k] * g[i];
    }
  });
}

template <class T>
Var detach(Tape<T>& t, Var a) {
  auto va = t.value(a);
  return t.constant(t.shape(a), std::vector<T>(va.begin(), va.end()));
}

template <class T>
Var lstm_cell(Tape<T>& t, Var x, Var h, Var c, Var w_input, Var w_hidden, Var bias) {
  const std::size_t d = rank1(t, x, "lstm_cell", "input");
  const std::size_t k = rank1(t, h, "lstm_cell", "hidden state");
  check(rank1(t, c, "lstm_cell", "cell state") == k,
        "lstm_cell: cell state extent " + std::to_string(t.size(c)) +
            " does not match hidden size " + std::to_string(k));
  auto [wr, wc] = rank2(t, w_input, "lstm_cell", "input weights");
  auto [hr, hc] = rank2(t, w_hidden, "lstm_cell", "hidden weights");
  check(wr == 4 * k, "lstm_cell: input weights have " + std::to_string(wr) +
                         " rows, expected 4 x hidden size = " + std::to_string(4 * k));
  check(wc == d, "lstm_cell: input extent " + std::to_string(d) +
                     " does not match input weight columns " + std::to_string(wc));
  check(hr == 4 * k && hc == k, "lstm_cell: hidden weights " + shape_string(t.shape(w_hidden)) +
                                    " do not match hidden size " + std::to_string(k));
  check(rank1(t, bias, "lstm_cell", "bias") == 4 * k,
        "lstm_cell: bias extent " + std::to_string(t.size(bias)) + " expected " +
            std::to_string(4 * k));

  std::vector<T> gates(4 * k);
  {
    auto pre = mvec<T>(std::span<T>(gates));
    pre.noalias() = cmat<T>(t.value(w_input), 4 * k, d) * cvec<T>(t.value(x));
    pre.noalias() += cmat<T>(t.value(w_hidden), 4 * k, k) * cvec<T>(t.value(h));
    pre += cvec<T>(t.value(bias));
  }
  for (std::size_t j = 0; j < k; ++j) {
    gates[j] = sigmoid_scalar(gates[j]);
    gates[k + j] = sigmoid_scalar(gates[k + j]);
    gates[2 * k + j] = std::tanh(gates[2 * k + j]);
    gates[3 * k + j] = sigmoid_scalar(gates[3 * k + j]);
  }
  auto c_prev = t.value(c);
  std::vector<T> out(2 * k);
  std::vector<T> tanh_c(k);
  for (std::size_t j = 0; j < k; ++j) {
    const T cn = gates[k + j] * c_prev[j] + gates[j] * gates[2 * k + j];
    tanh_c[j] = std::tanh(cn);
    out[j] = gates[3 * k + j] * tanh_c[j];
    out[k + j] = cn;
  }
  return t.record(
      {2 * k}, std::move(out), {x, h, c, w_input, w_hidden, bias},
      [=, gates = std::move(gates), tanh_c = std::move(tanh_c)](Tape<T>& t, Var self) {
        auto g = t.grad(self);
        auto c_prev = t.value(c);
        std::vector<T> dpre(4 * k);
        for (std::size_t j = 0; j < k; ++j) {
          const T i_g = gates[j], f_g = gates[k + j], c_g = gates[2 * k + j],
                  o_g = gates[3 * k + j];
          const T dh = g[j];
          const T dc = g[k + j] + dh * o_g * (T{1} - tanh_c[j] * tanh_c[j]);
          dpre[j] = dc * c_g * i_g * (T{1} - i_g);
          dpre[k + j] = dc * c_prev[j] * f_g * (T{1} - f_g);
          dpre[2 * k + j] = dc * i_g * (T{1} - c_g * c_g);
          dpre[3 * k + j] = dh * tanh_c[j] * o_g * (T{1} - o_g);
          if (auto gc = t.grad(c); !gc.empty()) gc[j] += dc * f_g;
        }
        auto dp = cvec<T>(std::span<const T>(dpre));
        if (auto gw = t.grad(w_input); !gw.empty()) {
          mmat<T>(gw, 4 * k, d).noalias() += dp * cvec<T>(t.value(x)).transpose();
        }
        if (auto gx = t.grad(x); !gx.empty()) {
          mvec<T>(gx).noalias() += cmat<T>(t.value(w_input), 4 * k, d).transpose() * dp;
        }
        if (auto gw = t.grad(w_hidden); !gw.empty()) {
          mmat<T>(gw, 4 * k, k).noalias() += dp * cvec<T>(t.value(h)).transpose();
        }
        if (auto gh = t.grad(h); !gh.empty()) {
          mvec<T>(gh).noalias() += cmat<T>(t.value(w_hidden), 4 * k, k).transpose() * dp;
        }
        if (auto gb = t.grad(bias); !gb.empty()) accumulate<T>(gb, std::span<const T>(dpre));
      });
}

template <class T>
Var attention(Tape<T>& t, Var query, Var keys, Var memory, Var w_query, Var align,
              std::vector<T>* weights) {
  const std::size_t q = rank1(t, query, "attention", "query");
  auto [m, a] = rank2(t, keys, "attention", "keys");
  auto [mm, km] = rank2(t, memory, "attention", "memory");
  auto [wr, wc] = rank2(t, w_query, "attention", "query weights");
  if (m == 0) throw std::invalid_argument("attention: empty memory");
  check(mm == m, "attention: keys have " + std::to_string(m) + " rows but memory has " +
                     std::to_string(mm));
  check(wr == a && wc == q, "attention: query weights " + shape_string(t.shape(w_query)) +
                                " do not map query extent " + std::to_string(q) +
                                " to alignment extent " + std::to_string(a));
  check(rank1(t, align, "attention", "alignment vector") == a,
        "attention: alignment vector extent " + std::to_string(t.size(align)) + " expected " +
            std::to_string(a));

  Vec<T> u = cmat<T>(t.value(w_query), a, q) * cvec<T>(t.value(query));
  RowMat<T> z = cmat<T>(t.value(keys), m, a);
  z.rowwise() += u.transpose();
  z = z.array().tanh().matrix();
  Vec<T> scores = z * cvec<T>(t.value(align));
  std::vector<T> alpha =
      stable_softmax<T>(std::span<const T>(scores.data(), static_cast<std::size_t>(m)));
  std::vector<T> ctx(km);
  mvec<T>(std::span<T>(ctx)).noalias() =
      cmat<T>(t.value(memory), m, km).transpose() * cvec<T>(std::span<const T>(alpha));
  if (weights != nullptr) *weights = alpha;

  return t.record(
      {km}, std::move(ctx), {query, keys, memory, w_query, align},
      [=, z = std::move(z), alpha = std::move(alpha)](Tape<T>& t, Var self) {
        auto g = cvec<T>(t.grad(self));
        auto mem = cmat<T>(t.value(memory), m, km);
        auto al = cvec<T>(std::span<const T>(alpha));
        if (auto gm = t.grad(memory); !gm.empty()) {
          mmat<T>(gm, m, km).noalias() += al * g.transpose();
        }
        Vec<T> dalpha = mem * g;
        const T centre = al.dot(dalpha);
        Vec<T> de = al.cwiseProduct((dalpha.array() - centre).matrix());
        if (auto gv = t.grad(align); !gv.empty()) {
          mvec<T>(gv).noalias() += z.transpose() * de;
        }
        // d pre-activation_i = de_i * v * (1 - z_i^2)
        RowMat<T> dpre = (T{1} - z.array().square()).matrix();
        auto v = cvec<T>(t.value(align));
        for (Eigen::Index i = 0; i < dpre.rows(); ++i) {
          dpre.row(i) = dpre.row(i).cwiseProduct(v.transpose()) * de[i];
        }
        if (auto gk = t.grad(keys); !gk.empty()) mmat<T>(gk, m, a) += dpre;
        Vec<T> du = dpre.colwise().sum().transpose();
        if (auto gw = t.grad(w_query); !gw.empty()) {
          mmat<T>(gw, a, q).noalias() += du * cvec<T>(t.value(query)).transpose();
        }
        if (auto gq = t.grad(query); !gq.empty()) {
          mvec<T>(gq).noalias() += cmat<T>(t.value(w_query), a, q).transpose() * du;
        }
      });
}

#define SEQ2SET_INSTANTIATE_OPS(T)                                                            \
  template Var matvec<T>(Tape<T>&, Var, Var);                                                 \
  template Var matmul_nt<T>(Tape<T>&, Var, Var);                                              \
  template Var add<T>(Tape<T>&, Var, Var);                                                    \
  template Var add_n<T>(Tape<T>&, std::span<const Var>);                                      \
  template Var mul<T>(Tape<T>&, Var, Var);                                                    \
  template Var scale<T>(Tape<T>&, Var, T);                                                    \
  template Var add_offset<T>(Tape<T>&, Var, std::span<const T>);                              \
  template Var concat<T>(Tape<T>&, std::span<const Var>);                                     \
  template Var slice<T>(Tape<T>&, Var, std::size_t, std::size_t);                             \
  template Var stack_rows<T>(Tape<T>&, std::span<const Var>);                                 \
  template Var tanh<T>(Tape<T>&, Var);                                                        \
  template Var sigmoid<T>(Tape<T>&, Var);                                                     \
  template Var softmax<T>(Tape<T>&, Var);                                                     \
  template Var log_softmax_at<T>(Tape<T>&, Var, std::size_t);                                 \
  template Var embedding<T>(Tape<T>&, Var, std::size_t);                                      \
  template Var dropout<T>(Tape<T>&, Var, std::span<const T>);                                 \
  template Var sum<T>(Tape<T>&, Var);                                                         \
  template Var linear_combination<T>(Tape<T>&, std::span<const Var>, std::span<const T>);     \
  template Var detach<T>(Tape<T>&, Var);                                                      \
  template Var lstm_cell<T>(Tape<T>&, Var, Var, Var, Var, Var, Var);                          \
  template Var attention<T>(Tape<T>&, Var, Var, Var, Var, Var, std::vector<T>*);

SEQ2SET_INSTANTIATE_OPS(float)
SEQ2SET_INSTANTIATE_OPS(double)

#undef SEQ2SET_INSTANTIATE_OPS

}  // namespace ops
}  // namespace seq2set
