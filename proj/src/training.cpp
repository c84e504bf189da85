#include "seq2set/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "seq2set/hash.hpp"

namespace seq2set {

std::string to_string(SequenceMemoryMode m) {
  return m == SequenceMemoryMode::kTeacherForced ? "teacher_forced" : "free_running";
}

SequenceMemoryMode parse_sequence_memory_mode(const std::string& s) {
  if (s == "teacher_forced") return SequenceMemoryMode::kTeacherForced;
  if (s == "free_running") return SequenceMemoryMode::kFreeRunning;
  throw std::invalid_argument("unknown set-decoder memory mode '" + s +
                              "' (expected teacher_forced|free_running)");
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("training." + msg); };
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail("lambda must lie in [0, 1]");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) fail("lr_decay must lie in (0, 1]");
  if (batch_size == 0) fail("batch_size must be positive");
  if (max_epochs == 0) fail("max_epochs must be positive");
  if (!(clip_norm > 0.0)) fail("clip_norm must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (val_interval == 0) fail("val_interval must be positive");
  if (rl_samples == 0) fail("rl_samples must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) fail("adam_beta1 must lie in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail("adam_beta2 must lie in [0, 1)");
  if (!(adam_eps > 0.0)) fail("adam_eps must be positive");
}

double effective_lambda(const TrainConfig& cfg, Variant variant) {
  return variant == Variant::kSimplified ? 1.0 : cfg.lambda;
}

double learning_rate_at(const TrainConfig& cfg, std::size_t epoch) {
  return cfg.learning_rate * std::pow(cfg.lr_decay, static_cast<double>(epoch));
}

std::size_t default_max_len(std::span<const Example> data) {
  std::size_t longest = 0;
  for (const auto& ex : data) longest = std::max(longest, ex.labels.size());
  return longest + 2;
}

template <class T>
Var mle_loss(Tape<T>& t, std::span<const Var> step_logits, std::span<const std::size_t> gold) {
  if (step_logits.size() != gold.size() + 1) {
    throw std::invalid_argument("mle_loss: " + std::to_string(step_logits.size()) +
                                " steps for " + std::to_string(gold.size()) + " gold labels + eos");
  }
  const std::size_t eos = t.size(step_logits[0]) - 1;
  std::vector<Var> terms;
  terms.reserve(step_logits.size());
  for (std::size_t s = 0; s < step_logits.size(); ++s) {
    terms.push_back(ops::log_softmax_at(t, step_logits[s], s < gold.size() ? gold[s] : eos));
  }
  const std::vector<T> coeffs(terms.size(), T{-1});
  return ops::linear_combination<T>(t, terms, coeffs);
}

template <class T>
Var self_critical_loss(Tape<T>& t, std::span<const Var> log_probs, double sample_reward,
                       double baseline_reward) {
  if (log_probs.empty()) throw std::invalid_argument("self_critical_loss: empty rollout");
  const T advantage = static_cast<T>(sample_reward - baseline_reward);
  const std::vector<T> coeffs(log_probs.size(), -advantage);
  return ops::linear_combination<T>(t, log_probs, coeffs);
}

EpisodeSeeds episode_seeds(std::uint64_t seed, std::uint64_t step, std::uint64_t index) {
  return {derive_seed(seed, step, 2 * index), derive_seed(seed, step, 2 * index + 1)};
}

namespace {

template <class T>
void prepare_graph(Graph<T>& g, const TrainConfig& cfg, std::uint64_t dropout_seed) {
  if (cfg.dropout > 0.0) g.enable_dropout(static_cast<T>(cfg.dropout), dropout_seed);
}

// Reward of the greedy set-decoder rollout under the training-time memory
// mode, computed without dropout and off the gradient path.
template <class T>
double greedy_baseline(const Seq2SetModel<T>& model, const Example& ex, const TrainConfig& cfg,
                       std::size_t max_len) {
  Graph<T> g(model.params(), nullptr);
  const bool teacher = cfg.d2_memory == SequenceMemoryMode::kTeacherForced;
  Episode ep = prepare_episode(g, model, ex.tokens, teacher ? &ex.labels : nullptr, max_len);
  Rollout<T> r = decode_set(g, model, ep, DecodePolicy::kGreedy, max_len, nullptr);
  return reward(r.trace, ex.labels, model.config().num_labels);
}

bool all_finite(double v) { return std::isfinite(v); }

}  // namespace

template <class T>
ExampleStats accumulate_example(const Seq2SetModel<T>& model, const Example& ex,
                                const TrainConfig& cfg, std::size_t max_len, double weight,
                                const EpisodeSeeds& seeds, Gradients<T>* grads,
                                Baseline baseline, double reward_shift) {
  const ArchConfig& arch = model.config();
  const double lambda = effective_lambda(cfg, arch.variant);
  const bool full = arch.variant == Variant::kFull;
  ExampleStats stats;
  validate_gold(ex.labels, arch.num_labels);

  Graph<T> g(model.params(), grads);
  prepare_graph(g, cfg, seeds.dropout);
  Tape<T>& t = g.tape();
  std::vector<Var> terms;
  std::vector<T> coeffs;

  if (lambda == 0.0) {
    // Pure MLE: no set-decoder work and no sampling at all.
    EncoderOutput enc = encode(g, model, ex.tokens);
    AttentionMemory em = prepare_memory(g, model.sequence_decoder()->encoder_attention, enc.memory);
    SequenceRun run = run_seq_decoder(g, model, enc, em, &ex.labels, max_len);
    Var mle = mle_loss<T>(t, run.logits, ex.labels);
    stats.mle = static_cast<double>(t.scalar(mle));
    terms.push_back(mle);
    coeffs.push_back(static_cast<T>(weight));
  } else {
    const bool teacher = cfg.d2_memory == SequenceMemoryMode::kTeacherForced;
    Episode ep = prepare_episode(g, model, ex.tokens, teacher ? &ex.labels : nullptr, max_len,
                                 cfg.stop_gradient_at_d1);
    if (full && lambda < 1.0) {
      std::vector<Var> logits;
      if (teacher) {
        logits = ep.sequence->logits;
      } else {
        AttentionMemory em =
            prepare_memory(g, model.sequence_decoder()->encoder_attention, ep.encoder.memory);
        logits = run_seq_decoder(g, model, ep.encoder, em, &ex.labels, max_len).logits;
      }
      Var mle = mle_loss<T>(t, logits, ex.labels);
      stats.mle = static_cast<double>(t.scalar(mle));
      terms.push_back(mle);
      coeffs.push_back(static_cast<T>(weight * (1.0 - lambda)));
    }

    const double b = (baseline == Baseline::kGreedy ? greedy_baseline(model, ex, cfg, max_len) : 0.0) +
                     reward_shift;
    stats.baseline_reward = b;
    std::mt19937_64 rng(seeds.sampling);
    const double per_sample = weight * lambda / static_cast<double>(cfg.rl_samples);
    for (std::size_t k = 0; k < cfg.rl_samples; ++k) {
      Rollout<T> r = decode_set(g, model, ep, DecodePolicy::kSample, max_len, &rng);
      const double rs = reward(r.trace, ex.labels, arch.num_labels) + reward_shift;
      Var sc = self_critical_loss<T>(t, r.log_prob_vars, rs, b);
      stats.rl += static_cast<double>(t.scalar(sc)) / static_cast<double>(cfg.rl_samples);
      stats.sample_reward += rs / static_cast<double>(cfg.rl_samples);
      terms.push_back(sc);
      coeffs.push_back(static_cast<T>(per_sample));
    }
    stats.samples = cfg.rl_samples;
  }

  Var loss = ops::linear_combination<T>(t, terms, coeffs);
  stats.finite = all_finite(stats.mle) && all_finite(stats.rl) &&
                 std::isfinite(static_cast<double>(t.scalar(loss)));
  if (grads != nullptr && stats.finite) t.backward(loss);
  return stats;
}

template <class T>
double global_norm(const Gradients<T>& grads) {
  double sq = 0.0;
  for (const auto& a : grads) {
    for (T v : a.values) sq += static_cast<double>(v) * static_cast<double>(v);
  }
  return std::sqrt(sq);
}

template <class T>
double clip_gradients(Gradients<T>& grads, const ParameterStore<T>& params, double max_norm) {
  if (grads.size() != params.count()) {
    throw ShapeError("clip_gradients: " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(params.count()) + " parameters");
  }
  for (std::size_t k = 0; k < grads.size(); ++k) {
    for (std::size_t j = 0; j < grads[k].size(); ++j) {
      if (!std::isfinite(static_cast<double>(grads[k][j]))) {
        throw std::domain_error("non-finite gradient in parameter '" + params.name(k) +
                                "' at flat index " + std::to_string(j));
      }
    }
  }
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const T factor = static_cast<T>(max_norm / norm);
    for (auto& a : grads) {
      for (T& v : a.values) v *= factor;
    }
  }
  return norm;
}

template <class T>
Adam<T>::Adam(const ParameterStore<T>& params, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(params.zeros_like()), v_(params.zeros_like()) {}

template <class T>
void Adam<T>::step(ParameterStore<T>& params, const Gradients<T>& grads, double lr) {
  if (grads.size() != m_.size() || params.count() != m_.size()) {
    throw ShapeError("adam: optimizer state does not match the parameter set");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < grads.size(); ++k) {
    Array<T>& p = params.at(k);
    if (grads[k].size() != p.size() || m_[k].size() != p.size()) {
      throw ShapeError("adam: shape mismatch for parameter '" + params.name(k) + "'");
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double g = static_cast<double>(grads[k][j]);
      const double m = beta1_ * static_cast<double>(m_[k][j]) + (1.0 - beta1_) * g;
      const double v = beta2_ * static_cast<double>(v_[k][j]) + (1.0 - beta2_) * g * g;
      m_[k][j] = static_cast<T>(m);
      v_[k][j] = static_cast<T>(v);
      const double update = lr * (m / c1) / (std::sqrt(v / c2) + eps_);
      p[j] = static_cast<T>(static_cast<double>(p[j]) - update);
    }
  }
}

template <class T>
std::vector<DecodeTrace> predict(const Seq2SetModel<T>& model, std::span<const Example> data,
                                 std::size_t max_len, InferenceDecoder decoder) {
  std::vector<DecodeTrace> out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back(greedy_decode(model, ex.tokens, max_len, decoder));
  return out;
}

template <class T>
EvalReport evaluate(const Seq2SetModel<T>& model, std::span<const Example> data,
                    std::size_t max_len, InferenceDecoder decoder) {
  const std::size_t L = model.config().num_labels;
  std::vector<std::vector<std::size_t>> predicted, gold;
  predicted.reserve(data.size());
  gold.reserve(data.size());
  for (const auto& ex : data) {
    predicted.push_back(trace_to_labelset(greedy_decode(model, ex.tokens, max_len, decoder), L));
    gold.push_back(ex.labels);
  }
  return evaluate_sets(predicted, gold, L);
}

template <class T>
TrainResult train(Seq2SetModel<T>& model, std::span<const Example> train_set,
                  std::span<const Example> val_set, const TrainConfig& cfg,
                  const std::function<void(const TrainEvent&)>& on_validation) {
  cfg.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training split");
  if (model.config().variant == Variant::kSimplified && cfg.inference == InferenceDecoder::kSequence) {
    throw std::invalid_argument("train: the simplified variant cannot decode from a sequence decoder");
  }
  const std::size_t max_len = cfg.max_len != 0 ? cfg.max_len : default_max_len(train_set);
  ParameterStore<T>& params = model.params();
  Adam<T> adam(params, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  Gradients<T> grads = params.zeros_like();
  TrainResult result;
  std::vector<Array<T>> best;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainEvent running;
  std::size_t running_count = 0;
  auto validate_now = [&](std::size_t epoch) {
    TrainEvent ev = running;
    if (running_count > 0) {
      const double n = static_cast<double>(running_count);
      ev.mle_loss /= n;
      ev.rl_loss /= n;
      ev.sample_reward /= n;
      ev.baseline_reward /= n;
      ev.grad_norm /= n;
    }
    ev.step = result.steps;
    ev.epoch = epoch;
    ev.learning_rate = learning_rate_at(cfg, epoch);
    const std::span<const Example> target = val_set.empty() ? train_set : val_set;
    try {
      ev.validation = evaluate(model, target, max_len, cfg.inference);
    } catch (const std::domain_error& e) {
      result.divergence = std::string("non-finite validation at step ") +
                          std::to_string(result.steps) + ": " + e.what();
      return false;
    }
    ev.validation->seed = cfg.seed;
    if (ev.validation->micro.f1 > result.best_val_f1) {
      result.best_val_f1 = ev.validation->micro.f1;
      result.best_step = result.steps;
      result.best_report = ev.validation;
      best.clear();
      for (std::size_t k = 0; k < params.count(); ++k) best.push_back(params.at(k));
    }
    if (on_validation) on_validation(ev);
    running = TrainEvent{};
    running_count = 0;
    return true;
  };
  // Without a successful validation the initial parameters are the last good ones.
  std::vector<Array<T>> initial;
  for (std::size_t k = 0; k < params.count(); ++k) initial.push_back(params.at(k));
  auto restore_best = [&]() {
    const std::vector<Array<T>>& src = best.empty() ? initial : best;
    for (std::size_t k = 0; k < params.count(); ++k) params.at(k) = src[k];
  };

  std::size_t last_validated = static_cast<std::size_t>(-1);
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 0x5f1ffULL, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const double lr = learning_rate_at(cfg, epoch);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double weight = 1.0 / static_cast<double>(end - start);
      for (auto& a : grads) a.fill(T{0});
      double mle = 0.0, rl = 0.0, rs = 0.0, rb = 0.0;
      bool finite = true;
      for (std::size_t i = start; i < end && finite; ++i) {
        const Example& ex = train_set[order[i]];
        ExampleStats st;
        try {
          st = accumulate_example(model, ex, cfg, max_len, weight,
                                  episode_seeds(cfg.seed, result.steps, i - start), &grads);
        } catch (const std::domain_error& e) {
          st.finite = false;
          result.divergence = std::string("non-finite forward pass: ") + e.what();
        }
        finite = st.finite;
        mle += st.mle * weight;
        rl += st.rl * weight;
        rs += st.sample_reward * weight;
        rb += st.baseline_reward * weight;
        result.sampled_rollouts += st.samples;
      }
      double norm = 0.0;
      if (finite) {
        try {
          norm = clip_gradients(grads, params, cfg.clip_norm);
        } catch (const std::domain_error& e) {
          result.divergence = e.what();
          finite = false;
        }
      } else if (result.divergence.empty()) {
        result.divergence = "non-finite loss at step " + std::to_string(result.steps);
      }
      if (!finite) {
        result.diverged = true;
        result.epochs = epoch + 1;
        restore_best();
        return result;
      }
      adam.step(params, grads, lr);
      ++result.steps;
      running.mle_loss += mle;
      running.rl_loss += rl;
      running.sample_reward += rs;
      running.baseline_reward += rb;
      running.grad_norm += norm;
      ++running_count;
      if (result.steps % cfg.val_interval == 0) {
        last_validated = result.steps;
        if (!validate_now(epoch)) {
          result.diverged = true;
          result.epochs = epoch + 1;
          restore_best();
          return result;
        }
      }
    }
    result.epochs = epoch + 1;
  }
  if (last_validated != result.steps && !validate_now(result.epochs - 1)) result.diverged = true;
  restore_best();
  return result;
}

#define SEQ2SET_INSTANTIATE_TRAINING(T)                                                          \
  template Var mle_loss<T>(Tape<T>&, std::span<const Var>, std::span<const std::size_t>);        \
  template Var self_critical_loss<T>(Tape<T>&, std::span<const Var>, double, double);            \
  template ExampleStats accumulate_example<T>(const Seq2SetModel<T>&, const Example&,            \
                                              const TrainConfig&, std::size_t, double,           \
                                              const EpisodeSeeds&, Gradients<T>*, Baseline,      \
                                              double);                                           \
  template double clip_gradients<T>(Gradients<T>&, const ParameterStore<T>&, double);            \
  template double global_norm<T>(const Gradients<T>&);                                           \
  template class Adam<T>;                                                                        \
  template std::vector<DecodeTrace> predict<T>(const Seq2SetModel<T>&, std::span<const Example>, \
                                               std::size_t, InferenceDecoder);                   \
  template EvalReport evaluate<T>(const Seq2SetModel<T>&, std::span<const Example>, std::size_t, \
                                  InferenceDecoder);                                             \
  template TrainResult train<T>(Seq2SetModel<T>&, std::span<const Example>,                      \
                                std::span<const Example>, const TrainConfig&,                    \
                                const std::function<void(const TrainEvent&)>&);

SEQ2SET_INSTANTIATE_TRAINING(float)
SEQ2SET_INSTANTIATE_TRAINING(double)

#undef SEQ2SET_INSTANTIATE_TRAINING

}  // namespace seq2set
