#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "seq2set/baselines.hpp"
#include "seq2set/data.hpp"
#include "seq2set/model.hpp"

namespace seq2set {

// Checkpoint directory layout:
//   metadata.json  kind, architecture, vocabulary hashes, step, validation
//                  micro-F1, extra fields, and a manifest of
//                  {name, shape, offset, count} entries into params.bin
//   params.bin     float32 little-endian values, arrays back to back
//   vocab.txt      token<TAB>count per line, reserved entries first
//   labels.txt     one label per line in id order
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointInfo {
  std::string kind;  // "seq2set" or "br"
  std::size_t step = 0;
  double val_micro_f1 = 0.0;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();
};

void save_checkpoint(const std::filesystem::path& dir, const Seq2SetModel<float>& model,
                     const Vocabulary& vocab, const LabelVocabulary& labels,
                     const CheckpointInfo& info);

struct LoadedModel {
  Seq2SetModel<float> model;
  Vocabulary vocab;
  LabelVocabulary labels;
  CheckpointInfo info;
};

// Rebuilds the layout from the stored architecture and checks every manifest
// entry against it by name and shape. Throws CheckpointError on mismatch.
LoadedModel load_checkpoint(const std::filesystem::path& dir);

void save_br_checkpoint(const std::filesystem::path& dir, const BRModel& model,
                        const Vocabulary& vocab, const LabelVocabulary& labels,
                        const CheckpointInfo& info);

struct LoadedBR {
  BRModel model;
  Vocabulary vocab;
  LabelVocabulary labels;
  CheckpointInfo info;
};

LoadedBR load_br_checkpoint(const std::filesystem::path& dir);

// Kind tag of a checkpoint directory without loading its parameters.
std::string checkpoint_kind(const std::filesystem::path& dir);

}  // namespace seq2set
