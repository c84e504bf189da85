#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "seq2set/baselines.hpp"
#include "seq2set/data.hpp"
#include "seq2set/model.hpp"
#include "seq2set/training.hpp"

namespace seq2set {

// Raised for invalid config documents; what() names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DataConfig {
  std::string train;   // JSONL paths; either train (+ val, test) or corpus
  std::string val;
  std::string test;
  std::string corpus;  // split with split_ratios / split_seed when set
  SplitRatios split_ratios;
  std::uint64_t split_seed = 0;
  std::size_t vocab_cap = 50000;
  std::size_t max_text_length = 500;
  LabelOrderPolicy::Kind label_order = LabelOrderPolicy::Kind::kFrequencyDesc;
  std::uint64_t label_order_seed = 0;
};

struct ExperimentConfig {
  std::string preset;  // empty: none
  bool shuffle_labels = false;
  std::uint64_t shuffle_seed = 0;
  std::size_t remove_top_k = 0;
  std::optional<double> uncorrelated_max_corr;
  BRConfig br;
};

// architecture.vocab_size and architecture.num_labels are derived from the
// data and may not be set in a run config.
struct RunConfig {
  ArchConfig architecture;
  TrainConfig training;
  DataConfig data;
  ExperimentConfig experiment;

  void validate() const;  // throws ConfigError
};

// Defaults, then the preset named in experiment.preset (or preset_override),
// then every key present in the document. Unknown keys are errors.
RunConfig parse_run_config(const nlohmann::json& doc,
                           const std::optional<std::string>& preset_override = std::nullopt);
RunConfig load_run_config(const std::filesystem::path& path,
                          const std::optional<std::string>& preset_override = std::nullopt);

// Fully resolved document; parse_run_config(to_json(c)) == c.
nlohmann::ordered_json to_json(const RunConfig& c);
nlohmann::ordered_json to_json(const ArchConfig& c);
nlohmann::ordered_json to_json(const TrainConfig& c);
nlohmann::ordered_json to_json(const SynthSpec& s);

// Strict readers for standalone sections (checkpoint metadata, synth specs).
ArchConfig parse_arch_config(const nlohmann::json& j);
SynthSpec parse_synth_spec(const nlohmann::json& j);

// FNV-1a of the compact resolved config.
std::string config_hash(const RunConfig& c);

}  // namespace seq2set
