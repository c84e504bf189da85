#include "seq2set/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace seq2set {

std::string to_string(Variant v) { return v == Variant::kFull ? "full" : "simplified"; }

Variant parse_variant(const std::string& s) {
  if (s == "full") return Variant::kFull;
  if (s == "simplified") return Variant::kSimplified;
  throw std::invalid_argument("unknown model variant '" + s + "' (expected full|simplified)");
}

void ArchConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw std::invalid_argument(std::string("architecture.") + name + " must be positive");
  };
  positive(vocab_size, "vocab_size");
  positive(num_labels, "num_labels");
  positive(embed_size, "embed_size");
  positive(encoder_layers, "encoder_layers");
  positive(encoder_hidden, "encoder_hidden");
  positive(decoder_layers, "decoder_layers");
  positive(decoder_hidden, "decoder_hidden");
}

LabelMask::LabelMask(std::size_t num_labels) : admissible_(num_labels + 1, true) {
  if (num_labels == 0) throw std::invalid_argument("label mask needs at least one label");
}

void LabelMask::mark(std::size_t symbol) {
  if (symbol > num_labels()) {
    throw std::out_of_range("label mask: symbol " + std::to_string(symbol) +
                            " is neither a label nor eos");
  }
  if (symbol != eos_symbol(num_labels())) admissible_[symbol] = false;
}

void LabelMask::block(std::size_t symbol) { admissible_.at(symbol) = false; }

bool LabelMask::any_admissible() const {
  return std::find(admissible_.begin(), admissible_.end(), true) != admissible_.end();
}

LabelMask mask_update(LabelMask mask, std::size_t emitted) {
  mask.mark(emitted);
  return mask;
}

void validate_gold(std::span<const std::size_t> gold, std::size_t num_labels) {
  std::vector<bool> seen(num_labels, false);
  for (std::size_t y : gold) {
    if (y >= num_labels) {
      throw std::invalid_argument("gold label id " + std::to_string(y) + " outside label space of " +
                                  std::to_string(num_labels));
    }
    if (seen[y]) {
      throw std::invalid_argument("gold label sequence repeats label " + std::to_string(y));
    }
    seen[y] = true;
  }
}

namespace {

template <class T>
LstmLayerParams add_lstm(ParameterStore<T>& store, const std::string& prefix, std::size_t input,
                         std::size_t hidden) {
  LstmLayerParams p;
  p.input_weights = store.add(prefix + ".input_weights", {4 * hidden, input});
  p.hidden_weights = store.add(prefix + ".hidden_weights", {4 * hidden, hidden});
  p.bias = store.add(prefix + ".bias", {4 * hidden});
  p.input_size = input;
  p.hidden_size = hidden;
  return p;
}

template <class T>
AttentionParams add_attention(ParameterStore<T>& store, const std::string& prefix,
                              std::size_t query, std::size_t memory, std::size_t align) {
  AttentionParams p;
  p.align = store.add(prefix + ".align", {align});
  p.query = store.add(prefix + ".query", {align, query});
  p.memory = store.add(prefix + ".memory", {align, memory});
  return p;
}

template <class T>
DecoderParams add_decoder(ParameterStore<T>& store, const std::string& prefix,
                          const ArchConfig& c, bool second_attention) {
  DecoderParams p;
  const std::size_t kd = c.decoder_hidden;
  p.context_size = c.encoder_memory_size() + (second_attention ? kd : 0);
  p.embedding = store.add(prefix + ".label_embedding", {c.num_labels + 3, c.embed_size});
  for (std::size_t l = 0; l < c.decoder_layers; ++l) {
    const std::size_t in = l == 0 ? c.embed_size + p.context_size : kd;
    p.layers.push_back(add_lstm(store, prefix + ".lstm." + std::to_string(l), in, kd));
  }
  const std::size_t summary = c.encoder_memory_size();
  for (std::size_t l = 0; l < c.decoder_layers; ++l) {
    const std::string b = prefix + ".bridge." + std::to_string(l);
    BridgeParams bp;
    bp.hidden_weights = store.add(b + ".hidden_weights", {kd, summary});
    bp.hidden_bias = store.add(b + ".hidden_bias", {kd});
    bp.cell_weights = store.add(b + ".cell_weights", {kd, summary});
    bp.cell_bias = store.add(b + ".cell_bias", {kd});
    p.bridge.push_back(bp);
  }
  p.encoder_attention =
      add_attention(store, prefix + ".encoder_attention", kd, c.encoder_memory_size(), c.align_size());
  if (second_attention) {
    p.decoder_attention = add_attention(store, prefix + ".decoder_attention", kd, kd, c.align_size());
  }
  p.state_projection = store.add(prefix + ".state_projection", {kd, kd});
  p.context_projection = store.add(prefix + ".context_projection", {kd, p.context_size});
  p.output = store.add(prefix + ".output", {c.output_size(), kd});
  return p;
}

}  // namespace

template <class T>
Seq2SetModel<T>::Seq2SetModel(const ArchConfig& config) : config_(config) {
  config_.validate();
  encoder_.embedding = params_.add("encoder.embedding", {config_.vocab_size, config_.embed_size});
  for (std::size_t l = 0; l < config_.encoder_layers; ++l) {
    const std::size_t in = l == 0 ? config_.embed_size : config_.encoder_memory_size();
    encoder_.forward.push_back(
        add_lstm(params_, "encoder.forward." + std::to_string(l), in, config_.encoder_hidden));
    encoder_.backward.push_back(
        add_lstm(params_, "encoder.backward." + std::to_string(l), in, config_.encoder_hidden));
  }
  if (config_.variant == Variant::kFull) {
    sequence_decoder_ = add_decoder(params_, "sequence_decoder", config_, false);
  }
  set_decoder_ = add_decoder(params_, "set_decoder", config_, config_.variant == Variant::kFull);
}

template <class T>
Seq2SetModel<T> Seq2SetModel<T>::layout(const ArchConfig& config) {
  return Seq2SetModel(config);
}

template <class T>
Seq2SetModel<T>::Seq2SetModel(const ArchConfig& config, std::uint64_t seed) : Seq2SetModel(config) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < params_.count(); ++i) {
    Array<T>& a = params_.at(i);
    const std::string& name = params_.name(i);
    if (name.ends_with("embedding")) {
      for (auto& v : a.values) v = static_cast<T>(normal(rng));
      continue;
    }
    // Matrices: U(±1/sqrt(fan_in)). LSTM biases use the hidden size, other
    // vectors their own length.
    std::size_t fan = a.shape.size() == 2 ? a.shape[1] : a.size();
    if (name.ends_with(".bias")) fan = a.size() / 4;
    const double r = 1.0 / std::sqrt(static_cast<double>(fan));
    std::uniform_real_distribution<double> u(-r, r);
    for (auto& v : a.values) v = static_cast<T>(u(rng));
  }
  auto forget_bias = [this](const LstmLayerParams& l) {
    Array<T>& b = params_[l.bias];
    std::fill(b.values.begin() + l.hidden_size, b.values.begin() + 2 * l.hidden_size, T{1});
  };
  for (const auto& l : encoder_.forward) forget_bias(l);
  for (const auto& l : encoder_.backward) forget_bias(l);
  if (sequence_decoder_) {
    for (const auto& l : sequence_decoder_->layers) forget_bias(l);
  }
  for (const auto& l : set_decoder_.layers) forget_bias(l);
}

namespace {

template <class T>
Var zeros(Tape<T>& t, std::size_t n) {
  return t.constant({n}, std::vector<T>(n, T{0}));
}

template <class T>
std::pair<Var, Var> lstm_step(Graph<T>& g, const LstmLayerParams& p, Var x, Var h, Var c) {
  Tape<T>& t = g.tape();
  Var hc = ops::lstm_cell(t, x, h, c, g.param(p.input_weights), g.param(p.hidden_weights),
                          g.param(p.bias));
  return {ops::slice(t, hc, 0, p.hidden_size), ops::slice(t, hc, p.hidden_size, p.hidden_size)};
}

template <class T>
StepResult decoder_step(Graph<T>& g, const ArchConfig& config, const DecoderParams& p,
                        const DecoderState& state, std::size_t y_prev, const AttentionMemory& enc,
                        const AttentionMemory* dec, const LabelMask& mask) {
  Tape<T>& t = g.tape();
  const std::size_t L = config.num_labels;
  if (y_prev == eos_symbol(L) || y_prev > bos_symbol(L)) {
    throw std::invalid_argument("decoder input " + std::to_string(y_prev) +
                                " must be bos or an emitted label");
  }
  if (mask.output_size() != config.output_size()) {
    throw ShapeError("label mask covers " + std::to_string(mask.output_size()) +
                     " symbols, model emits " + std::to_string(config.output_size()));
  }
  if (!mask.any_admissible()) throw std::invalid_argument("label mask admits no symbol");
  if (state.hidden.size() != p.layers.size()) {
    throw ShapeError("decoder state has " + std::to_string(state.hidden.size()) +
                     " layers, decoder has " + std::to_string(p.layers.size()));
  }

  std::vector<Var> parts = {ops::embedding(t, g.param(p.embedding), y_prev), state.context};
  Var x = g.dropout(ops::concat<T>(t, parts));
  StepResult out;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto [h, c] = lstm_step(g, p.layers[l], x, state.hidden[l], state.cell[l]);
    out.state.hidden.push_back(h);
    out.state.cell.push_back(c);
    x = l + 1 < p.layers.size() ? g.dropout(h) : h;
  }
  out.top_hidden = out.state.hidden.back();

  Var context = ops::attention(t, out.top_hidden, enc.keys, enc.memory,
                               g.param(p.encoder_attention.query), g.param(p.encoder_attention.align));
  if (p.decoder_attention) {
    Var dctx = ops::attention(t, out.top_hidden, dec->keys, dec->memory,
                              g.param(p.decoder_attention->query),
                              g.param(p.decoder_attention->align));
    std::vector<Var> both = {context, dctx};
    context = ops::concat<T>(t, both);
  }
  out.state.context = context;

  Var readout = ops::tanh(t, ops::add(t, ops::matvec(t, g.param(p.state_projection), out.top_hidden),
                                      ops::matvec(t, g.param(p.context_projection), context)));
  Var logits = ops::matvec(t, g.param(p.output), g.dropout(readout));
  const std::vector<T> offsets = mask.template offsets<T>();
  out.logits = ops::add_offset(t, logits, std::span<const T>(offsets));
  return out;
}

template <class T>
std::size_t masked_argmax(std::span<const T> logits) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return best;
}

}  // namespace

template <class T>
EncoderOutput encode(Graph<T>& g, const Seq2SetModel<T>& model, std::span<const int> tokens) {
  const ArchConfig& c = model.config();
  if (tokens.empty()) throw std::invalid_argument("encode: empty token sequence");
  for (int id : tokens) {
    if (id < 0 || static_cast<std::size_t>(id) >= c.vocab_size) {
      throw std::out_of_range("encode: token id " + std::to_string(id) + " outside vocabulary of " +
                              std::to_string(c.vocab_size));
    }
  }
  Tape<T>& t = g.tape();
  const EncoderParams& p = model.encoder();
  const std::size_t m = tokens.size();
  const std::size_t k = c.encoder_hidden;

  std::vector<Var> inputs(m);
  for (std::size_t i = 0; i < m; ++i) {
    inputs[i] = g.dropout(ops::embedding(t, g.param(p.embedding), static_cast<std::size_t>(tokens[i])));
  }
  std::vector<Var> fwd(m), bwd(m), rows(m);
  for (std::size_t l = 0; l < c.encoder_layers; ++l) {
    Var h = zeros(t, k), cell = zeros(t, k);
    for (std::size_t i = 0; i < m; ++i) {
      std::tie(h, cell) = lstm_step(g, p.forward[l], inputs[i], h, cell);
      fwd[i] = h;
    }
    h = zeros(t, k);
    cell = zeros(t, k);
    for (std::size_t i = m; i-- > 0;) {
      std::tie(h, cell) = lstm_step(g, p.backward[l], inputs[i], h, cell);
      bwd[i] = h;
    }
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<Var> pair = {fwd[i], bwd[i]};
      rows[i] = ops::concat<T>(t, pair);
      if (l + 1 < c.encoder_layers) inputs[i] = g.dropout(rows[i]);
    }
  }
  EncoderOutput out;
  out.memory = ops::stack_rows<T>(t, rows);
  std::vector<Var> finals = {fwd[m - 1], bwd[0]};
  out.summary = ops::concat<T>(t, finals);
  out.length = m;
  return out;
}

template <class T>
AttentionMemory prepare_memory(Graph<T>& g, const AttentionParams& p, Var memory) {
  Tape<T>& t = g.tape();
  AttentionMemory out;
  out.memory = memory;
  out.keys = ops::matmul_nt(t, memory, g.param(p.memory));
  out.rows = t.shape(memory).at(0);
  return out;
}

template <class T>
Attended<T> attend(Graph<T>& g, Var query, Var memory, const AttentionParams& p) {
  const Shape& s = g.tape().shape(memory);
  if (s.size() != 2 || s[0] == 0) throw std::invalid_argument("attend: empty memory");
  AttentionMemory mem = prepare_memory(g, p, memory);
  Attended<T> out;
  out.context = ops::attention(g.tape(), query, mem.keys, mem.memory, g.param(p.query),
                               g.param(p.align), &out.weights);
  return out;
}

template <class T>
DecoderState initial_state(Graph<T>& g, const Seq2SetModel<T>&, const DecoderParams& p,
                           const EncoderOutput& enc) {
  Tape<T>& t = g.tape();
  DecoderState s;
  for (const auto& b : p.bridge) {
    s.hidden.push_back(ops::add(t, ops::matvec(t, g.param(b.hidden_weights), enc.summary),
                                g.param(b.hidden_bias)));
    s.cell.push_back(
        ops::add(t, ops::matvec(t, g.param(b.cell_weights), enc.summary), g.param(b.cell_bias)));
  }
  s.context = zeros(t, p.context_size);
  return s;
}

template <class T>
StepResult seq_decoder_step(Graph<T>& g, const Seq2SetModel<T>& model, const DecoderState& state,
                            std::size_t y_prev, const AttentionMemory& enc,
                            const LabelMask& mask) {
  const DecoderParams* p = model.sequence_decoder();
  if (p == nullptr) {
    throw std::invalid_argument("seq_decoder_step: the simplified variant has no sequence decoder");
  }
  return decoder_step(g, model.config(), *p, state, y_prev, enc, nullptr, mask);
}

template <class T>
StepResult set_decoder_step(Graph<T>& g, const Seq2SetModel<T>& model, const DecoderState& state,
                            std::size_t y_prev, const AttentionMemory& enc,
                            const AttentionMemory* seq_memory, const LabelMask& mask) {
  const bool full = model.config().variant == Variant::kFull;
  if (full && seq_memory == nullptr) {
    throw std::invalid_argument("set_decoder_step: full variant requires sequence-decoder memory");
  }
  if (!full && seq_memory != nullptr) {
    throw std::invalid_argument(
        "set_decoder_step: simplified variant was given sequence-decoder memory");
  }
  return decoder_step(g, model.config(), model.set_decoder(), state, y_prev, enc, seq_memory, mask);
}

template <class T>
SequenceRun run_seq_decoder(Graph<T>& g, const Seq2SetModel<T>& model, const EncoderOutput& enc,
                            const AttentionMemory& enc_memory,
                            const std::vector<std::size_t>* gold, std::size_t max_len) {
  const DecoderParams* p = model.sequence_decoder();
  if (p == nullptr) {
    throw std::invalid_argument("run_seq_decoder: the simplified variant has no sequence decoder");
  }
  const std::size_t L = model.config().num_labels;
  Tape<T>& t = g.tape();
  SequenceRun run;
  std::vector<Var> states;
  DecoderState state = initial_state(g, model, *p, enc);
  LabelMask mask(L);

  if (gold != nullptr) {
    validate_gold(*gold, L);
    std::size_t input = bos_symbol(L);
    for (std::size_t step = 0; step <= gold->size(); ++step) {
      StepResult r = seq_decoder_step(g, model, state, input, enc_memory, mask);
      states.push_back(r.top_hidden);
      run.logits.push_back(r.logits);
      state = std::move(r.state);
      if (step < gold->size()) {
        input = (*gold)[step];
        mask.mark(input);
      }
    }
  } else {
    if (max_len == 0) throw std::invalid_argument("run_seq_decoder: max_len must be positive");
    std::size_t input = bos_symbol(L);
    for (std::size_t step = 0; step < max_len; ++step) {
      StepResult r = seq_decoder_step(g, model, state, input, enc_memory, mask);
      states.push_back(r.top_hidden);
      run.logits.push_back(r.logits);
      state = std::move(r.state);
      const std::size_t y = masked_argmax(t.value(r.logits));
      run.emitted.push_back(y);
      if (y == eos_symbol(L)) break;
      mask.mark(y);
      input = y;
    }
  }
  run.memory = ops::stack_rows<T>(t, states);
  return run;
}

#define SEQ2SET_INSTANTIATE_MODEL(T)                                                             \
  template class Seq2SetModel<T>;                                                                \
  template EncoderOutput encode<T>(Graph<T>&, const Seq2SetModel<T>&, std::span<const int>);     \
  template AttentionMemory prepare_memory<T>(Graph<T>&, const AttentionParams&, Var);            \
  template Attended<T> attend<T>(Graph<T>&, Var, Var, const AttentionParams&);                   \
  template DecoderState initial_state<T>(Graph<T>&, const Seq2SetModel<T>&, const DecoderParams&, \
                                         const EncoderOutput&);                                  \
  template StepResult seq_decoder_step<T>(Graph<T>&, const Seq2SetModel<T>&, const DecoderState&, \
                                          std::size_t, const AttentionMemory&, const LabelMask&); \
  template StepResult set_decoder_step<T>(Graph<T>&, const Seq2SetModel<T>&, const DecoderState&, \
                                          std::size_t, const AttentionMemory&,                    \
                                          const AttentionMemory*, const LabelMask&);              \
  template SequenceRun run_seq_decoder<T>(Graph<T>&, const Seq2SetModel<T>&, const EncoderOutput&, \
                                          const AttentionMemory&,                                 \
                                          const std::vector<std::size_t>*, std::size_t);

SEQ2SET_INSTANTIATE_MODEL(float)
SEQ2SET_INSTANTIATE_MODEL(double)

#undef SEQ2SET_INSTANTIATE_MODEL

}  // namespace seq2set
