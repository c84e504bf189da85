#pragma once

#include <functional>
#include <optional>

#include <json.hpp>

#include "seq2set/baselines.hpp"
#include "seq2set/config.hpp"
#include "seq2set/data.hpp"
#include "seq2set/training.hpp"

namespace seq2set {

struct PreparedData {
  Corpus train, val, test;
  Vocabulary vocab;
  LabelVocabulary labels;
  std::vector<Example> train_examples, val_examples, test_examples;
  nlohmann::ordered_json log = nlohmann::ordered_json::object();  // what each step did
};

// Loads and transforms the data a run config describes:
//   1. train/val/test files, or corpus split by split_ratios / split_seed
//   2. filter_long on every split
//   3. uncorrelated_subset, then remove_top_k; both decide on the training
//      split and apply that decision to every split
//   4. shuffle_labels (then the order is kept as given), else label_order
//      ranked by training-split frequencies
//   5. token vocabulary from the training split; label ids cover every split
//      (training frequency first, unseen labels last by name)
PreparedData prepare_data(const RunConfig& cfg);

struct TrainedRun {
  Seq2SetModel<float> model;
  TrainResult result;
  std::size_t max_len = 0;
  std::optional<EvalReport> test_report;
};

// Called after every validation with the model as it was evaluated.
using ValidationHook = std::function<void(const TrainEvent&, const Seq2SetModel<float>&)>;

// Builds the model seeded with training.seed, trains on train/val and
// evaluates the restored best parameters on test when present.
TrainedRun run_training(const RunConfig& cfg, const PreparedData& data,
                        const ValidationHook& on_validation = {});

// One JSON line per validation event.
nlohmann::ordered_json train_event_json(const TrainEvent& ev);

}  // namespace seq2set
