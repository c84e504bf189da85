#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "seq2set/example.hpp"

namespace seq2set {

// Raised for malformed corpus files; the message carries source and line.
class CorpusError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Sample {
  std::string id;
  std::vector<std::string> text;
  std::vector<std::string> labels;          // distinct, in file order
  std::vector<std::string> ordered_labels;  // empty until order_labels runs

  // ordered_labels when set, otherwise labels.
  const std::vector<std::string>& training_order() const {
    return ordered_labels.empty() ? labels : ordered_labels;
  }
  bool operator==(const Sample&) const = default;
};

using Corpus = std::vector<Sample>;

// JSONL: one object per line with "text" (whitespace-separated string),
// "labels" (non-empty list of distinct strings), optional "id" and optional
// "ordered_labels" (a permutation of labels). Blank lines are skipped.
// Missing ids become the zero-based record position.
Corpus parse_corpus(std::istream& in, const std::string& source = "<stream>");
Corpus load_corpus(const std::filesystem::path& path);
void write_corpus(std::ostream& out, const Corpus& corpus);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

struct FilterResult {
  Corpus samples;
  std::size_t removed = 0;
  double removed_fraction = 0.0;
};

// Drops samples with more than `limit` tokens.
FilterResult filter_long(const Corpus& samples, std::size_t limit = 500);

using LabelCounts = std::map<std::string, std::size_t>;

LabelCounts label_frequencies(const Corpus& samples);

// Labels by descending count, ties by ascending name.
std::vector<std::string> labels_by_frequency(const LabelCounts& counts);

struct LabelOrderPolicy {
  enum class Kind { kFrequencyDesc, kShuffled, kAsGiven };
  Kind kind = Kind::kFrequencyDesc;
  std::uint64_t seed = 0;

  static LabelOrderPolicy frequency_desc() { return {Kind::kFrequencyDesc, 0}; }
  static LabelOrderPolicy shuffled(std::uint64_t seed) { return {Kind::kShuffled, seed}; }
  static LabelOrderPolicy as_given() { return {Kind::kAsGiven, 0}; }
};

std::string to_string(LabelOrderPolicy::Kind k);
LabelOrderPolicy::Kind parse_label_order(const std::string& s);

// Sets ordered_labels. frequency_desc ranks by `counts` (pass the training
// split's counts); labels missing from counts rank as frequency 0. shuffled
// permutes each sample's labels with a stream derived from (seed, position),
// starting from name order so the result does not depend on file order.
Corpus order_labels(const Corpus& samples, const LabelOrderPolicy& policy,
                    const LabelCounts& counts);
Corpus order_labels(const Corpus& samples, const LabelOrderPolicy& policy);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr std::size_t kReserved = 4;

  Vocabulary();
  // Reserved entries first, then `tokens` in the given order. Throws on
  // duplicates or a token spelled like a reserved symbol.
  explicit Vocabulary(const std::vector<std::string>& tokens,
                      const std::vector<std::size_t>& counts = {});

  int id(const std::string& token) const;  // kUnk when absent
  bool contains(const std::string& token) const { return ids_.count(token) != 0; }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t count(int id) const { return counts_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(const std::vector<std::string>& text) const;

  // One token per line, reserved entries included.
  std::string serialize() const;
  static Vocabulary deserialize(const std::string& text);
  std::string hash() const;

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> counts_;
  std::unordered_map<std::string, int> ids_;
};

// Keeps the cap − 4 most frequent tokens (ties: ascending token), so the
// vocabulary size including reserved entries never exceeds cap.
Vocabulary build_vocab(const Corpus& samples, std::size_t cap);

// Label id table. Ids follow descending training frequency, ties by name.
class LabelVocabulary {
 public:
  LabelVocabulary() = default;
  explicit LabelVocabulary(std::vector<std::string> names);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(std::size_t id) const { return names_.at(id); }
  std::optional<std::size_t> find(const std::string& name) const;
  // Throws std::invalid_argument naming the unknown label.
  std::size_t id(const std::string& name) const;

  std::string serialize() const;
  static LabelVocabulary deserialize(const std::string& text);
  std::string hash() const;

  bool operator==(const LabelVocabulary& o) const { return names_ == o.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> ids_;
};

LabelVocabulary build_label_vocab(const Corpus& samples);

// Token ids via vocab (OOV → unk) and label ids in training order.
Example to_example(const Sample& s, const Vocabulary& vocab, const LabelVocabulary& labels);
std::vector<Example> to_examples(const Corpus& samples, const Vocabulary& vocab,
                                 const LabelVocabulary& labels);

struct SplitRatios {
  double train = 0.8, val = 0.1, test = 0.1;
};

struct Splits {
  Corpus train, val, test;
};

// Seeded shuffle, then slices of round(n·train) and round(n·val); the test
// split takes the rest.
Splits split(const Corpus& samples, const SplitRatios& ratios, std::uint64_t seed);

struct RemoveTopKResult {
  Corpus samples;
  std::vector<std::string> removed_labels;
  std::size_t dropped_samples = 0;
};

// Deletes the k most frequent labels; samples left without labels are dropped.
RemoveTopKResult remove_top_k(const Corpus& samples, std::size_t k);

// Pearson phi of two indicator columns over n samples. A constant column
// has no variance; its phi with anything is defined as 0.
double phi_coefficient(std::size_t n, std::size_t count_a, std::size_t count_b,
                       std::size_t count_ab);

struct PhiMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> phi;  // symmetric, diagonal 1
  double at(const std::string& a, const std::string& b) const;
};

PhiMatrix label_phi(const Corpus& samples);

struct UncorrelatedResult {
  Corpus samples;
  std::vector<std::string> admitted;  // in admission order
  double max_abs_phi = 0.0;           // over admitted pairs, on the source corpus
};

// Greedy admission in descending frequency: a label joins when its |phi|
// with every admitted label is ≤ max_corr. Keeps samples whose labels all lie
// in the admitted set. Throws std::invalid_argument when fewer than two
// labels exist or when nothing survives.
UncorrelatedResult uncorrelated_subset(const Corpus& samples, double max_corr = 0.28);

// Per-sample label permutation drawn from seed; ordered_labels carries the
// result, so training under as_given order sees the shuffled sequence.
Corpus shuffle_labels(const Corpus& samples, std::uint64_t seed);

struct SynthSpec {
  enum class Correlation { kIndependent, kTree };

  std::size_t num_samples = 1000;
  std::size_t num_labels = 10;
  std::size_t vocab_size = 200;
  Correlation correlation = Correlation::kIndependent;
  std::size_t min_length = 20;
  std::size_t max_length = 40;
  double label_prob = 0.25;        // independent labels and tree roots
  double child_prob = 0.6;         // P(child | parent present)
  std::size_t tree_roots = 0;      // 0: ceil(num_labels / 3)
  std::size_t words_per_label = 5; // signature words reserved per label
  double signal = 0.5;             // P(token drawn from a present label's words)

  void validate() const;  // throws std::invalid_argument naming the field
  // Tree parent of a label, or nullopt for roots and independent specs.
  std::optional<std::size_t> parent(std::size_t label) const;
  std::size_t roots() const;
};

std::string to_string(SynthSpec::Correlation c);
SynthSpec::Correlation parse_correlation(const std::string& s);

// Labels are named L000.., words w0000... Every sample gets at least one
// label (empty draws are redrawn).
Corpus synth_generate(const SynthSpec& spec, std::uint64_t seed);

struct CorpusStats {
  std::size_t samples = 0;
  std::size_t distinct_labels = 0;
  std::size_t distinct_tokens = 0;
  double mean_length = 0.0;
  double mean_labels = 0.0;
  std::size_t max_length = 0;
};

CorpusStats corpus_stats(const Corpus& samples);

}  // namespace seq2set
