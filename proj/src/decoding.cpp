#include "seq2set/decoding.hpp"

#include <algorithm>
#include <limits>

namespace seq2set {

std::string to_string(InferenceDecoder d) { return d == InferenceDecoder::kSet ? "set" : "sequence"; }

InferenceDecoder parse_inference_decoder(const std::string& s) {
  if (s == "set") return InferenceDecoder::kSet;
  if (s == "sequence") return InferenceDecoder::kSequence;
  throw std::invalid_argument("unknown inference decoder '" + s + "' (expected set|sequence)");
}

template <class T>
std::size_t argmax_symbol(std::span<const T> logits) {
  std::size_t best = 0;
  for (T v : logits) {
    if (std::isnan(v)) throw std::domain_error("argmax over NaN logits");
  }
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  if (!(logits[best] > -std::numeric_limits<T>::infinity())) {
    throw std::invalid_argument("argmax over a fully masked distribution");
  }
  return best;
}

template <class T>
std::size_t sample_symbol(std::span<const T> logits, std::mt19937_64& rng) {
  double hi = -std::numeric_limits<double>::infinity();
  for (T v : logits) {
    if (std::isnan(v)) throw std::domain_error("sampling from NaN logits");
    hi = std::max(hi, static_cast<double>(v));
  }
  if (!(hi > -std::numeric_limits<double>::infinity())) {
    throw std::invalid_argument("sampling from a fully masked distribution");
  }
  std::vector<double> w(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(static_cast<double>(logits[i]) - hi);
    total += w[i];
  }
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    acc += w[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

template <class T>
Episode prepare_episode(Graph<T>& g, const Seq2SetModel<T>& model, std::span<const int> tokens,
                        const std::vector<std::size_t>* gold, std::size_t max_len,
                        bool detach_sequence_memory) {
  Episode ep;
  ep.encoder = encode(g, model, tokens);
  const DecoderParams& set = model.set_decoder();
  ep.set_encoder_memory = prepare_memory(g, set.encoder_attention, ep.encoder.memory);
  if (const DecoderParams* seq = model.sequence_decoder()) {
    AttentionMemory seq_enc = prepare_memory(g, seq->encoder_attention, ep.encoder.memory);
    ep.sequence = run_seq_decoder(g, model, ep.encoder, seq_enc, gold, max_len);
    Var mem = ep.sequence->memory;
    if (detach_sequence_memory) mem = ops::detach(g.tape(), mem);
    ep.set_sequence_memory = prepare_memory(g, *set.decoder_attention, mem);
  }
  return ep;
}

template <class T>
Rollout<T> decode_set(Graph<T>& g, const Seq2SetModel<T>& model, const Episode& episode,
                      DecodePolicy policy, std::size_t max_len, std::mt19937_64* rng) {
  const AttentionMemory* seq_mem =
      episode.set_sequence_memory ? &*episode.set_sequence_memory : nullptr;
  DecoderState init = initial_state(g, model, model.set_decoder(), episode.encoder);
  auto step = [&](const DecoderState& s, std::size_t y, const LabelMask& mask) {
    return set_decoder_step(g, model, s, y, episode.set_encoder_memory, seq_mem, mask);
  };
  return rollout<T>(g, step, std::move(init), model.config().num_labels, max_len, policy, rng);
}

template <class T>
Rollout<T> decode_sequence(Graph<T>& g, const Seq2SetModel<T>& model, const Episode& episode,
                           DecodePolicy policy, std::size_t max_len, std::mt19937_64* rng) {
  const DecoderParams* seq = model.sequence_decoder();
  if (seq == nullptr) {
    throw std::invalid_argument("decode_sequence: the simplified variant has no sequence decoder");
  }
  AttentionMemory enc = prepare_memory(g, seq->encoder_attention, episode.encoder.memory);
  DecoderState init = initial_state(g, model, *seq, episode.encoder);
  auto step = [&](const DecoderState& s, std::size_t y, const LabelMask& mask) {
    return seq_decoder_step(g, model, s, y, enc, mask);
  };
  return rollout<T>(g, step, std::move(init), model.config().num_labels, max_len, policy, rng);
}

namespace {

template <class T>
DecodeTrace inference(const Seq2SetModel<T>& model, std::span<const int> tokens, std::size_t max_len,
                      DecodePolicy policy, std::mt19937_64* rng, InferenceDecoder decoder) {
  Graph<T> g(model.params(), nullptr);
  if (decoder == InferenceDecoder::kSequence) {
    Episode ep;
    ep.encoder = encode(g, model, tokens);
    return decode_sequence(g, model, ep, policy, max_len, rng).trace;
  }
  Episode ep = prepare_episode(g, model, tokens, nullptr, max_len);
  return decode_set(g, model, ep, policy, max_len, rng).trace;
}

}  // namespace

template <class T>
DecodeTrace greedy_decode(const Seq2SetModel<T>& model, std::span<const int> tokens,
                          std::size_t max_len, InferenceDecoder decoder) {
  return inference(model, tokens, max_len, DecodePolicy::kGreedy, nullptr, decoder);
}

template <class T>
DecodeTrace sample_decode(const Seq2SetModel<T>& model, std::span<const int> tokens,
                          std::size_t max_len, std::mt19937_64& rng, InferenceDecoder decoder) {
  return inference(model, tokens, max_len, DecodePolicy::kSample, &rng, decoder);
}

std::vector<std::size_t> trace_to_labelset(const DecodeTrace& trace, std::size_t num_labels) {
  std::vector<std::size_t> out;
  for (std::size_t s : trace.symbols) {
    if (s < num_labels) out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

#define SEQ2SET_INSTANTIATE_DECODING(T)                                                           \
  template std::size_t argmax_symbol<T>(std::span<const T>);                                      \
  template std::size_t sample_symbol<T>(std::span<const T>, std::mt19937_64&);                    \
  template Episode prepare_episode<T>(Graph<T>&, const Seq2SetModel<T>&, std::span<const int>,    \
                                      const std::vector<std::size_t>*, std::size_t, bool);        \
  template Rollout<T> decode_set<T>(Graph<T>&, const Seq2SetModel<T>&, const Episode&,            \
                                    DecodePolicy, std::size_t, std::mt19937_64*);                 \
  template Rollout<T> decode_sequence<T>(Graph<T>&, const Seq2SetModel<T>&, const Episode&,       \
                                         DecodePolicy, std::size_t, std::mt19937_64*);            \
  template DecodeTrace greedy_decode<T>(const Seq2SetModel<T>&, std::span<const int>, std::size_t, \
                                        InferenceDecoder);                                        \
  template DecodeTrace sample_decode<T>(const Seq2SetModel<T>&, std::span<const int>, std::size_t, \
                                        std::mt19937_64&, InferenceDecoder);

SEQ2SET_INSTANTIATE_DECODING(float)
SEQ2SET_INSTANTIATE_DECODING(double)

#undef SEQ2SET_INSTANTIATE_DECODING

}  // namespace seq2set
