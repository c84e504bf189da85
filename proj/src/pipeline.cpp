#include "seq2set/pipeline.hpp"

#include <cmath>
#include <set>
#include <unordered_set>

#include "seq2set/hash.hpp"

namespace seq2set {

namespace {

using ojson = nlohmann::ordered_json;

double round4(double v) { return std::round(v * 1e4) / 1e4; }

void keep_labels_within(Corpus& c, const std::unordered_set<std::string>& allowed) {
  std::erase_if(c, [&](const Sample& s) {
    for (const auto& l : s.labels) {
      if (!allowed.count(l)) return true;
    }
    return false;
  });
}

void drop_labels(Corpus& c, const std::unordered_set<std::string>& gone) {
  for (Sample& s : c) {
    std::erase_if(s.labels, [&](const std::string& l) { return gone.count(l) != 0; });
    std::erase_if(s.ordered_labels, [&](const std::string& l) { return gone.count(l) != 0; });
  }
  std::erase_if(c, [](const Sample& s) { return s.labels.empty(); });
}

}  // namespace

PreparedData prepare_data(const RunConfig& cfg) {
  const DataConfig& d = cfg.data;
  const ExperimentConfig& e = cfg.experiment;
  PreparedData p;
  if (!d.corpus.empty()) {
    Splits s = split(load_corpus(d.corpus), d.split_ratios, d.split_seed);
    p.train = std::move(s.train);
    p.val = std::move(s.val);
    p.test = std::move(s.test);
  } else {
    p.train = load_corpus(d.train);
    if (!d.val.empty()) p.val = load_corpus(d.val);
    if (!d.test.empty()) p.test = load_corpus(d.test);
  }
  p.log["loaded"] = {{"train", p.train.size()}, {"val", p.val.size()}, {"test", p.test.size()}};

  ojson filtered;
  for (auto [name, c] : {std::pair{"train", &p.train}, {"val", &p.val}, {"test", &p.test}}) {
    FilterResult f = filter_long(*c, d.max_text_length);
    filtered[name] = {{"removed", f.removed}, {"removed_fraction", round4(f.removed_fraction)}};
    *c = std::move(f.samples);
  }
  p.log["filter_long"] = filtered;
  if (p.train.empty()) throw std::invalid_argument("training split is empty after filtering");

  if (e.uncorrelated_max_corr) {
    UncorrelatedResult u = uncorrelated_subset(p.train, *e.uncorrelated_max_corr);
    const std::unordered_set<std::string> allowed(u.admitted.begin(), u.admitted.end());
    p.train = std::move(u.samples);
    keep_labels_within(p.val, allowed);
    keep_labels_within(p.test, allowed);
    p.log["uncorrelated"] = {{"max_corr", *e.uncorrelated_max_corr},
                             {"admitted", u.admitted},
                             {"max_abs_phi", round4(u.max_abs_phi)}};
  }
  if (e.remove_top_k > 0) {
    RemoveTopKResult r = remove_top_k(p.train, e.remove_top_k);
    const std::unordered_set<std::string> gone(r.removed_labels.begin(), r.removed_labels.end());
    p.train = std::move(r.samples);
    drop_labels(p.val, gone);
    drop_labels(p.test, gone);
    p.log["remove_top_k"] = {{"k", e.remove_top_k}, {"removed", r.removed_labels}};
  }

  const LabelCounts train_counts = label_frequencies(p.train);
  if (e.shuffle_labels) {
    p.train = shuffle_labels(p.train, e.shuffle_seed);
    p.val = shuffle_labels(p.val, derive_seed(e.shuffle_seed, 1));
    p.test = shuffle_labels(p.test, derive_seed(e.shuffle_seed, 2));
    p.log["label_order"] = "shuffled";
  } else {
    const LabelOrderPolicy policy{d.label_order, d.label_order_seed};
    p.train = order_labels(p.train, policy, train_counts);
    p.val = order_labels(p.val, policy, train_counts);
    p.test = order_labels(p.test, policy, train_counts);
    p.log["label_order"] = to_string(d.label_order);
  }

  p.vocab = build_vocab(p.train, d.vocab_cap);
  std::vector<std::string> names = labels_by_frequency(train_counts);
  std::set<std::string> unseen;
  for (const Corpus* c : {&p.val, &p.test}) {
    for (const Sample& s : *c) {
      for (const auto& l : s.labels) {
        if (!train_counts.count(l)) unseen.insert(l);
      }
    }
  }
  names.insert(names.end(), unseen.begin(), unseen.end());
  p.labels = LabelVocabulary(names);
  p.log["vocab_size"] = p.vocab.size();
  p.log["num_labels"] = p.labels.size();
  p.log["labels_unseen_in_train"] = unseen.size();

  p.train_examples = to_examples(p.train, p.vocab, p.labels);
  p.val_examples = to_examples(p.val, p.vocab, p.labels);
  p.test_examples = to_examples(p.test, p.vocab, p.labels);
  return p;
}

TrainedRun run_training(const RunConfig& cfg, const PreparedData& data,
                        const ValidationHook& on_validation) {
  ArchConfig arch = cfg.architecture;
  arch.vocab_size = data.vocab.size();
  arch.num_labels = data.labels.size();
  TrainedRun run{Seq2SetModel<float>(arch, cfg.training.seed), {}, 0, std::nullopt};
  run.max_len = cfg.training.max_len != 0 ? cfg.training.max_len
                                          : default_max_len(data.train_examples);
  TrainConfig tc = cfg.training;
  tc.max_len = run.max_len;
  const std::string hash = config_hash(cfg);
  auto tagged = [&](const TrainEvent& ev) {
    if (!on_validation) return;
    TrainEvent copy = ev;
    if (copy.validation) copy.validation->config_hash = hash;
    on_validation(copy, run.model);
  };
  run.result = train(run.model, data.train_examples, data.val_examples, tc, tagged);
  if (run.result.best_report) run.result.best_report->config_hash = hash;
  if (!data.test_examples.empty()) {
    run.test_report = evaluate(run.model, data.test_examples, run.max_len, tc.inference);
    run.test_report->config_hash = hash;
    run.test_report->seed = tc.seed;
  }
  return run;
}

ojson train_event_json(const TrainEvent& ev) {
  ojson j;
  j["step"] = ev.step;
  j["epoch"] = ev.epoch;
  j["learning_rate"] = ev.learning_rate;
  j["mle_loss"] = ev.mle_loss;
  j["rl_loss"] = ev.rl_loss;
  j["sample_reward"] = ev.sample_reward;
  j["baseline_reward"] = ev.baseline_reward;
  j["grad_norm"] = ev.grad_norm;
  if (ev.validation) {
    j["hamming_loss"] = round4(ev.validation->hamming_loss);
    j["micro_precision"] = round4(ev.validation->micro.precision);
    j["micro_recall"] = round4(ev.validation->micro.recall);
    j["micro_f1"] = round4(ev.validation->micro.f1);
  }
  return j;
}

}  // namespace seq2set
