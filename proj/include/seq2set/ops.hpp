#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "seq2set/tape.hpp"

// Differentiable primitives over a Tape. Vectors are rank-1, matrices are
// row-major rank-2. Every function validates extents and throws ShapeError.
namespace seq2set::ops {

// W[r x c] . x[c] -> [r]
template <class T>
Var matvec(Tape<T>& t, Var w, Var x);

// A[m x n] . W[r x n]^T -> [m x r]
template <class T>
Var matmul_nt(Tape<T>& t, Var a, Var w);

template <class T>
Var add(Tape<T>& t, Var a, Var b);

// Sum of equally shaped operands.
template <class T>
Var add_n(Tape<T>& t, std::span<const Var> terms);

// Elementwise product.
template <class T>
Var mul(Tape<T>& t, Var a, Var b);

template <class T>
Var scale(Tape<T>& t, Var a, T factor);

// a + offset, where offset is an untracked vector (entries may be -inf).
template <class T>
Var add_offset(Tape<T>& t, Var a, std::span<const T> offset);

// Concatenation of rank-1 operands.
template <class T>
Var concat(Tape<T>& t, std::span<const Var> parts);

template <class T>
Var slice(Tape<T>& t, Var a, std::size_t offset, std::size_t length);

// Stacks equally sized rank-1 operands into an [m x k] matrix.
template <class T>
Var stack_rows(Tape<T>& t, std::span<const Var> rows);

template <class T>
Var tanh(Tape<T>& t, Var a);

template <class T>
Var sigmoid(Tape<T>& t, Var a);

// Max-stabilised softmax; -inf entries map to exactly 0. Throws
// std::invalid_argument when every entry is -inf.
template <class T>
Var softmax(Tape<T>& t, Var logits);

// log softmax(logits)[index] as a scalar. Throws std::invalid_argument when
// the index is masked (-inf).
template <class T>
Var log_softmax_at(Tape<T>& t, Var logits, std::size_t index);

// Row `index` of table[V x e].
template <class T>
Var embedding(Tape<T>& t, Var table, std::size_t index);

// Elementwise x * mask with a fixed, untracked mask (inverted dropout keeps
// 1/(1-p) on kept units and 0 elsewhere).
template <class T>
Var dropout(Tape<T>& t, Var x, std::span<const T> mask);

template <class T>
Var sum(Tape<T>& t, Var a);

// Sum_i coeffs[i] * terms[i] over equally shaped operands.
template <class T>
Var linear_combination(Tape<T>& t, std::span<const Var> terms, std::span<const T> coeffs);

// Untracked copy of a.
template <class T>
Var detach(Tape<T>& t, Var a);

// Standard LSTM cell. Gate rows of the 4k-row parameters are ordered
// (input, forget, cell candidate, output):
//   i = sigmoid(.), f = sigmoid(.), g = tanh(.), o = sigmoid(.)
//   c' = f * c + i * g,  h' = o * tanh(c')
// Returns [h'; c'] of extent 2k.
template <class T>
Var lstm_cell(Tape<T>& t, Var x, Var h, Var c, Var w_input, Var w_hidden, Var bias);

// Additive attention over precomputed keys (keys = memory . U^T):
//   e_i = v . tanh(W q + keys_i),  alpha = softmax(e),  context = sum alpha_i memory_i
// Returns the context; the attention weights are written to `weights` when
// non-null.
template <class T>
Var attention(Tape<T>& t, Var query, Var keys, Var memory, Var w_query, Var align,
              std::vector<T>* weights = nullptr);

}  // namespace seq2set::ops
