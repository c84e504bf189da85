#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "seq2set/model.hpp"

namespace seq2set {

enum class Termination { kEos, kMaxLen };

// Emitted symbols (labels, then eos when the episode terminated normally)
// with the log-probability of each emitted symbol under the masked softmax.
struct DecodeTrace {
  std::vector<std::size_t> symbols;
  std::vector<double> log_probs;
  Termination termination = Termination::kEos;

  std::size_t steps() const { return symbols.size(); }
  double log_prob() const {
    double s = 0.0;
    for (double v : log_probs) s += v;
    return s;
  }
};

enum class DecodePolicy { kGreedy, kSample };

// Which decoder produces inference output. kSequence realises the Seq2Seq
// baseline, which decodes straight from the sequence decoder.
enum class InferenceDecoder { kSet, kSequence };

std::string to_string(InferenceDecoder d);
InferenceDecoder parse_inference_decoder(const std::string& s);

template <class T>
struct Rollout {
  DecodeTrace trace;
  std::vector<Var> log_prob_vars;  // one scalar per emitted symbol, on the graph's tape
  std::vector<Var> states;         // top-layer state of every step
};

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Draws from softmax(logits); -inf entries are never drawn.
template <class T>
std::size_t sample_symbol(std::span<const T> logits, std::mt19937_64& rng);

template <class T>
std::size_t argmax_symbol(std::span<const T> logits);

// Runs a decoder one episode. `step(state, y_prev, mask)` returns a StepResult.
// Termination: eos, or max_len steps.
template <class T, class StepFn>
Rollout<T> rollout(Graph<T>& g, StepFn&& step, DecoderState init, std::size_t num_labels,
                   std::size_t max_len, DecodePolicy policy, std::mt19937_64* rng) {
  if (max_len == 0) throw std::invalid_argument("rollout: max_len must be at least 1");
  if (policy == DecodePolicy::kSample && rng == nullptr) {
    throw std::invalid_argument("rollout: sampling needs an explicitly seeded rng");
  }
  Tape<T>& t = g.tape();
  Rollout<T> out;
  out.trace.termination = Termination::kMaxLen;
  LabelMask mask(num_labels);
  DecoderState state = std::move(init);
  std::size_t input = bos_symbol(num_labels);
  for (std::size_t s = 0; s < max_len; ++s) {
    StepResult r = step(state, input, mask);
    auto logits = t.value(r.logits);
    const std::size_t y =
        policy == DecodePolicy::kGreedy ? argmax_symbol<T>(logits) : sample_symbol<T>(logits, *rng);
    Var lp = ops::log_softmax_at(t, r.logits, y);
    out.trace.symbols.push_back(y);
    out.trace.log_probs.push_back(static_cast<double>(t.scalar(lp)));
    out.log_prob_vars.push_back(lp);
    out.states.push_back(r.top_hidden);
    state = std::move(r.state);
    if (y == eos_symbol(num_labels)) {
      out.trace.termination = Termination::kEos;
      break;
    }
    mask.mark(y);
    input = y;
  }
  return out;
}

// Encoder output plus the memories the set decoder attends over.
struct Episode {
  EncoderOutput encoder;
  AttentionMemory set_encoder_memory;
  std::optional<SequenceRun> sequence;                 // full variant only
  std::optional<AttentionMemory> set_sequence_memory;  // full variant only
};

// Builds the encoder pass and, for the full variant, the sequence-decoder
// memory: teacher-forced when `gold` is given, free-running greedy otherwise.
// With detach_sequence_memory the set decoder sees a constant copy of it.
template <class T>
Episode prepare_episode(Graph<T>& g, const Seq2SetModel<T>& model, std::span<const int> tokens,
                        const std::vector<std::size_t>* gold, std::size_t max_len,
                        bool detach_sequence_memory = false);

template <class T>
Rollout<T> decode_set(Graph<T>& g, const Seq2SetModel<T>& model, const Episode& episode,
                      DecodePolicy policy, std::size_t max_len, std::mt19937_64* rng);

// Rollout of the sequence decoder itself (Seq2Seq-style inference).
template <class T>
Rollout<T> decode_sequence(Graph<T>& g, const Seq2SetModel<T>& model, const Episode& episode,
                           DecodePolicy policy, std::size_t max_len, std::mt19937_64* rng);

// Inference pipeline: dropout off, free-running sequence decoder.
template <class T>
DecodeTrace greedy_decode(const Seq2SetModel<T>& model, std::span<const int> tokens,
                          std::size_t max_len,
                          InferenceDecoder decoder = InferenceDecoder::kSet);

template <class T>
DecodeTrace sample_decode(const Seq2SetModel<T>& model, std::span<const int> tokens,
                          std::size_t max_len, std::mt19937_64& rng,
                          InferenceDecoder decoder = InferenceDecoder::kSet);

// Emitted labels as an ascending set; eos and anything beyond the label
// space are dropped.
std::vector<std::size_t> trace_to_labelset(const DecodeTrace& trace, std::size_t num_labels);

}  // namespace seq2set
