#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seq2set/decoding.hpp"
#include "seq2set/example.hpp"
#include "seq2set/metrics.hpp"

namespace seq2set {

enum class SequenceMemoryMode { kTeacherForced, kFreeRunning };

std::string to_string(SequenceMemoryMode m);
SequenceMemoryMode parse_sequence_memory_mode(const std::string& s);

struct TrainConfig {
  double lambda = 0.8;
  double learning_rate = 3e-4;
  double lr_decay = 0.5;  // multiplier applied after every epoch
  std::size_t batch_size = 64;
  std::size_t max_epochs = 10;
  double clip_norm = 10.0;
  double dropout = 0.3;
  std::size_t val_interval = 100;
  std::size_t rl_samples = 1;
  SequenceMemoryMode d2_memory = SequenceMemoryMode::kTeacherForced;
  bool stop_gradient_at_d1 = false;
  InferenceDecoder inference = InferenceDecoder::kSet;
  std::size_t max_len = 0;  // 0: longest training label list + 2
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;

  void validate() const;
};

// λ actually used: the simplified variant has no MLE term.
double effective_lambda(const TrainConfig& cfg, Variant variant);

// Learning rate in effect during the given zero-based epoch.
double learning_rate_at(const TrainConfig& cfg, std::size_t epoch);

std::size_t default_max_len(std::span<const Example> data);

// −Σ log p(gold_t) over teacher-forced logits; targets are gold then eos.
// Throws std::invalid_argument when a gold symbol is masked at its own step.
template <class T>
Var mle_loss(Tape<T>& t, std::span<const Var> step_logits, std::span<const std::size_t> gold);

// −(r_sample − r_baseline) · Σ_t log p(y_t). Rewards enter as constants.
template <class T>
Var self_critical_loss(Tape<T>& t, std::span<const Var> log_probs, double sample_reward,
                       double baseline_reward);

enum class Baseline { kGreedy, kZero };

struct EpisodeSeeds {
  std::uint64_t dropout = 0;
  std::uint64_t sampling = 0;
};

EpisodeSeeds episode_seeds(std::uint64_t seed, std::uint64_t step, std::uint64_t index);

struct ExampleStats {
  double mle = 0.0;         // −log-likelihood of the gold sequence
  double rl = 0.0;          // surrogate, averaged over samples
  double sample_reward = 0.0;
  double baseline_reward = 0.0;
  std::size_t samples = 0;  // 0 on the pure MLE path
  bool finite = true;
};

// Builds weight·[(1−λ)·L_mle + λ·L_rl] for one example and, when grads is
// non-null, accumulates its gradient. reward_shift is added to both rewards.
template <class T>
ExampleStats accumulate_example(const Seq2SetModel<T>& model, const Example& ex,
                                const TrainConfig& cfg, std::size_t max_len, double weight,
                                const EpisodeSeeds& seeds, Gradients<T>* grads,
                                Baseline baseline = Baseline::kGreedy, double reward_shift = 0.0);

// Scales all gradients by max_norm/norm when the global L2 norm exceeds
// max_norm. Returns the norm before clipping. Throws std::domain_error
// naming the parameter on a non-finite entry.
template <class T>
double clip_gradients(Gradients<T>& grads, const ParameterStore<T>& params, double max_norm);

template <class T>
double global_norm(const Gradients<T>& grads);

template <class T>
class Adam {
 public:
  Adam(const ParameterStore<T>& params, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  void step(ParameterStore<T>& params, const Gradients<T>& grads, double lr);

  std::uint64_t steps() const { return t_; }
  const Gradients<T>& first_moment() const { return m_; }
  const Gradients<T>& second_moment() const { return v_; }

 private:
  double beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  Gradients<T> m_, v_;
};

template <class T>
std::vector<DecodeTrace> predict(const Seq2SetModel<T>& model, std::span<const Example> data,
                                 std::size_t max_len, InferenceDecoder decoder);

template <class T>
EvalReport evaluate(const Seq2SetModel<T>& model, std::span<const Example> data,
                    std::size_t max_len, InferenceDecoder decoder);

struct TrainEvent {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  double mle_loss = 0.0;
  double rl_loss = 0.0;
  double sample_reward = 0.0;
  double baseline_reward = 0.0;
  double grad_norm = 0.0;
  std::optional<EvalReport> validation;
};

struct TrainResult {
  std::size_t steps = 0;
  std::size_t epochs = 0;
  std::size_t best_step = 0;
  double best_val_f1 = -1.0;
  std::optional<EvalReport> best_report;
  std::size_t sampled_rollouts = 0;
  bool diverged = false;
  std::string divergence;
};

// Mini-batch training with periodic validation. On return the model holds
// the parameters with the best validation micro-F1 (ties keep the earlier).
template <class T>
TrainResult train(Seq2SetModel<T>& model, std::span<const Example> train_set,
                  std::span<const Example> val_set, const TrainConfig& cfg,
                  const std::function<void(const TrainEvent&)>& on_validation = {});

}  // namespace seq2set
