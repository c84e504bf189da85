#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seq2set/parameters.hpp"

namespace seq2set {

enum class Variant { kFull, kSimplified };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

// Output symbols are label ids 0..L-1 followed by eos. bos and pad only
// appear as decoder inputs and own the last two label-embedding rows.
inline std::size_t eos_symbol(std::size_t num_labels) { return num_labels; }
inline std::size_t bos_symbol(std::size_t num_labels) { return num_labels + 1; }
inline std::size_t pad_symbol(std::size_t num_labels) { return num_labels + 2; }

struct ArchConfig {
  std::size_t vocab_size = 0;
  std::size_t num_labels = 0;
  std::size_t embed_size = 256;
  std::size_t encoder_layers = 2;
  std::size_t encoder_hidden = 256;
  std::size_t decoder_layers = 3;
  std::size_t decoder_hidden = 512;
  std::size_t attention_size = 0;  // 0 selects decoder_hidden
  Variant variant = Variant::kFull;

  std::size_t output_size() const { return num_labels + 1; }
  std::size_t align_size() const { return attention_size == 0 ? decoder_hidden : attention_size; }
  std::size_t encoder_memory_size() const { return 2 * encoder_hidden; }
  // Width of [c^e] or [c^e; c^d].
  std::size_t set_context_size() const {
    return encoder_memory_size() + (variant == Variant::kFull ? decoder_hidden : 0);
  }
  void validate() const;
};

// Admissibility of the L+1 output symbols within one episode.
class LabelMask {
 public:
  explicit LabelMask(std::size_t num_labels);

  // Marks an emitted symbol: a real label becomes inadmissible, eos is a no-op.
  void mark(std::size_t symbol);
  // Removes any symbol, eos included. Used to pin degenerate policies.
  void block(std::size_t symbol);

  bool admissible(std::size_t symbol) const { return admissible_.at(symbol); }
  bool any_admissible() const;
  std::size_t num_labels() const { return admissible_.size() - 1; }
  std::size_t output_size() const { return admissible_.size(); }

  // Additive logit offsets: 0 where admissible, -inf elsewhere.
  template <class T>
  std::vector<T> offsets() const {
    std::vector<T> out(admissible_.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = admissible_[i] ? T{0} : -std::numeric_limits<T>::infinity();
    }
    return out;
  }

  bool operator==(const LabelMask&) const = default;

 private:
  std::vector<bool> admissible_;
};

LabelMask mask_update(LabelMask mask, std::size_t emitted);

// Rows are gates (input, forget, cell candidate, output), each hidden_size tall.
struct LstmLayerParams {
  ParamId input_weights, hidden_weights, bias;
  std::size_t input_size = 0, hidden_size = 0;
};

struct AttentionParams {
  ParamId align;   // v_a
  ParamId query;   // W_a
  ParamId memory;  // U_a
};

struct BridgeParams {
  ParamId hidden_weights, hidden_bias, cell_weights, cell_bias;
};

struct EncoderParams {
  ParamId embedding;
  std::vector<LstmLayerParams> forward, backward;
};

struct DecoderParams {
  ParamId embedding;  // (L + 3) x embed
  std::vector<LstmLayerParams> layers;
  std::vector<BridgeParams> bridge;
  AttentionParams encoder_attention;
  std::optional<AttentionParams> decoder_attention;
  ParamId state_projection;    // W_d
  ParamId context_projection;  // V_d
  ParamId output;              // W_o
  std::size_t context_size = 0;
};

template <class T>
class Seq2SetModel {
 public:
  // Forget-gate biases start at 1, everything else uniform in [-0.08, 0.08].
  Seq2SetModel(const ArchConfig& config, std::uint64_t seed);

  // Zero-filled parameters with the layout implied by config.
  static Seq2SetModel layout(const ArchConfig& config);

  const ArchConfig& config() const { return config_; }
  ParameterStore<T>& params() { return params_; }
  const ParameterStore<T>& params() const { return params_; }
  const EncoderParams& encoder() const { return encoder_; }
  // Null for the simplified variant.
  const DecoderParams* sequence_decoder() const {
    return sequence_decoder_ ? &*sequence_decoder_ : nullptr;
  }
  const DecoderParams& set_decoder() const { return set_decoder_; }

  template <class U>
  Seq2SetModel<U> cast() const {
    Seq2SetModel<U> out = Seq2SetModel<U>::layout(config_);
    for (std::size_t i = 0; i < params_.count(); ++i) {
      out.params().at(i) = params_.at(i).template cast<U>();
    }
    return out;
  }

 private:
  explicit Seq2SetModel(const ArchConfig& config);

  ArchConfig config_;
  ParameterStore<T> params_;
  EncoderParams encoder_;
  std::optional<DecoderParams> sequence_decoder_;
  DecoderParams set_decoder_;
};

struct EncoderOutput {
  Var memory;   // [m x 2k], row i = [forward_i; backward_i]
  Var summary;  // [forward_m; backward_1] of the top layer
  std::size_t length = 0;
};

// Memory plus its precomputed keys U_a . memory_i.
struct AttentionMemory {
  Var memory;
  Var keys;
  std::size_t rows = 0;
};

template <class T>
struct Attended {
  std::vector<T> weights;
  Var context;
};

struct DecoderState {
  std::vector<Var> hidden, cell;
  Var context;  // context of the previous step, fed back as input
};

struct StepResult {
  DecoderState state;
  Var logits;  // masked, extent L+1
  Var top_hidden;
};

struct SequenceRun {
  Var memory;  // [(steps) x k_d] top-layer states
  std::vector<Var> logits;
  std::vector<std::size_t> emitted;  // free-running only
};

template <class T>
EncoderOutput encode(Graph<T>& g, const Seq2SetModel<T>& model, std::span<const int> tokens);

template <class T>
AttentionMemory prepare_memory(Graph<T>& g, const AttentionParams& p, Var memory);

// Single attention read: weights over memory rows and the weighted context.
template <class T>
Attended<T> attend(Graph<T>& g, Var query, Var memory, const AttentionParams& p);

template <class T>
DecoderState initial_state(Graph<T>& g, const Seq2SetModel<T>& model, const DecoderParams& p,
                           const EncoderOutput& enc);

template <class T>
StepResult seq_decoder_step(Graph<T>& g, const Seq2SetModel<T>& model, const DecoderState& state,
                            std::size_t y_prev, const AttentionMemory& enc,
                            const LabelMask& mask);

// seq_memory must be present for the full variant and absent for the
// simplified one.
template <class T>
StepResult set_decoder_step(Graph<T>& g, const Seq2SetModel<T>& model, const DecoderState& state,
                            std::size_t y_prev, const AttentionMemory& enc,
                            const AttentionMemory* seq_memory, const LabelMask& mask);

// Teacher-forced when gold is given (consumes bos, gold_1..gold_n and yields
// n+1 states); otherwise feeds back its own argmax until eos or max_len.
template <class T>
SequenceRun run_seq_decoder(Graph<T>& g, const Seq2SetModel<T>& model, const EncoderOutput& enc,
                            const AttentionMemory& enc_memory,
                            const std::vector<std::size_t>* gold, std::size_t max_len);

// Throws std::invalid_argument when a label repeats or is out of range.
void validate_gold(std::span<const std::size_t> gold, std::size_t num_labels);

}  // namespace seq2set
