#include "seq2set/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "seq2set/hash.hpp"

namespace seq2set {

namespace {

using nlohmann::json;

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> string_list(const json& j, const char* field, const std::string& where) {
  if (!j.is_array()) throw CorpusError(where + ": \"" + field + "\" must be a list of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw CorpusError(where + ": \"" + field + "\" must be a list of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return std::mt19937_64(derive_seed(seed, a, b));
}

double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t below(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform(rng) * static_cast<double>(n));
}

// Fisher-Yates with our own index draws so the permutation does not depend
// on the standard library's shuffle implementation.
template <class V>
void shuffle_in_place(V& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(rng, i)]);
}

}  // namespace

// ---- corpus IO ------------------------------------------------------------

Corpus parse_corpus(std::istream& in, const std::string& source) {
  Corpus out;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw CorpusError(where + ": malformed record (" + e.what() + ")");
    }
    if (!j.is_object()) throw CorpusError(where + ": record must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() != "id" && it.key() != "text" && it.key() != "labels" &&
          it.key() != "ordered_labels") {
        throw CorpusError(where + ": unknown field \"" + it.key() + "\"");
      }
    }
    Sample s;
    if (j.contains("id")) {
      if (!j["id"].is_string()) throw CorpusError(where + ": \"id\" must be a string");
      s.id = j["id"].get<std::string>();
    } else {
      s.id = std::to_string(out.size());
    }
    if (!j.contains("text") || !j["text"].is_string()) {
      throw CorpusError(where + ": \"text\" must be a string");
    }
    s.text = split_ws(j["text"].get<std::string>());
    if (!j.contains("labels")) throw CorpusError(where + ": missing \"labels\"");
    s.labels = string_list(j["labels"], "labels", where);
    if (s.labels.empty()) throw CorpusError(where + ": empty label list");
    std::set<std::string> distinct(s.labels.begin(), s.labels.end());
    if (distinct.size() != s.labels.size()) throw CorpusError(where + ": repeated label");
    for (const auto& l : s.labels) {
      if (l.empty() || l.find_first_of(" \t\r\n") != std::string::npos) {
        throw CorpusError(where + ": label names must be non-empty and contain no whitespace");
      }
    }
    if (j.contains("ordered_labels")) {
      s.ordered_labels = string_list(j["ordered_labels"], "ordered_labels", where);
      std::vector<std::string> a = s.labels, b = s.ordered_labels;
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      if (a != b) throw CorpusError(where + ": ordered_labels is not a permutation of labels");
    }
    if (!ids.insert(s.id).second) throw CorpusError(where + ": duplicate id \"" + s.id + "\"");
    out.push_back(std::move(s));
  }
  return out;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus " + path.string());
  return parse_corpus(in, path.string());
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const Sample& s : corpus) {
    nlohmann::ordered_json j;
    j["id"] = s.id;
    std::string text;
    for (std::size_t i = 0; i < s.text.size(); ++i) {
      if (i) text += ' ';
      text += s.text[i];
    }
    j["text"] = text;
    j["labels"] = s.labels;
    if (!s.ordered_labels.empty()) j["ordered_labels"] = s.ordered_labels;
    out << j.dump() << '\n';
  }
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write corpus " + path.string());
  write_corpus(out, corpus);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

FilterResult filter_long(const Corpus& samples, std::size_t limit) {
  FilterResult r;
  for (const Sample& s : samples) {
    if (s.text.size() > limit) {
      ++r.removed;
    } else {
      r.samples.push_back(s);
    }
  }
  r.removed_fraction =
      samples.empty() ? 0.0 : static_cast<double>(r.removed) / static_cast<double>(samples.size());
  return r;
}

// ---- label ordering -------------------------------------------------------

LabelCounts label_frequencies(const Corpus& samples) {
  LabelCounts c;
  for (const Sample& s : samples) {
    for (const auto& l : s.labels) ++c[l];
  }
  return c;
}

std::vector<std::string> labels_by_frequency(const LabelCounts& counts) {
  std::vector<std::pair<std::string, std::size_t>> v(counts.begin(), counts.end());
  // counts is name-ordered already, so a stable sort keeps ties by name.
  std::stable_sort(v.begin(), v.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (auto& [name, n] : v) out.push_back(name);
  return out;
}

std::string to_string(LabelOrderPolicy::Kind k) {
  switch (k) {
    case LabelOrderPolicy::Kind::kFrequencyDesc: return "frequency_desc";
    case LabelOrderPolicy::Kind::kShuffled: return "shuffled";
    case LabelOrderPolicy::Kind::kAsGiven: return "as_given";
  }
  return "?";
}

LabelOrderPolicy::Kind parse_label_order(const std::string& s) {
  if (s == "frequency_desc") return LabelOrderPolicy::Kind::kFrequencyDesc;
  if (s == "shuffled") return LabelOrderPolicy::Kind::kShuffled;
  if (s == "as_given") return LabelOrderPolicy::Kind::kAsGiven;
  throw std::invalid_argument("unknown label order '" + s +
                              "' (expected frequency_desc|shuffled|as_given)");
}

Corpus order_labels(const Corpus& samples, const LabelOrderPolicy& policy,
                    const LabelCounts& counts) {
  Corpus out = samples;
  for (std::size_t i = 0; i < out.size(); ++i) {
    Sample& s = out[i];
    std::vector<std::string> v = s.labels;
    switch (policy.kind) {
      case LabelOrderPolicy::Kind::kAsGiven:
        v = s.training_order();
        break;
      case LabelOrderPolicy::Kind::kFrequencyDesc: {
        auto freq = [&](const std::string& l) {
          auto it = counts.find(l);
          return it == counts.end() ? std::size_t{0} : it->second;
        };
        std::sort(v.begin(), v.end(), [&](const std::string& a, const std::string& b) {
          const std::size_t fa = freq(a), fb = freq(b);
          return fa != fb ? fa > fb : a < b;
        });
        break;
      }
      case LabelOrderPolicy::Kind::kShuffled: {
        std::sort(v.begin(), v.end());
        auto rng = stream(policy.seed, 0x0de7ULL, i);
        shuffle_in_place(v, rng);
        break;
      }
    }
    s.ordered_labels = std::move(v);
  }
  return out;
}

Corpus order_labels(const Corpus& samples, const LabelOrderPolicy& policy) {
  return order_labels(samples, policy, label_frequencies(samples));
}

Corpus shuffle_labels(const Corpus& samples, std::uint64_t seed) {
  return order_labels(samples, LabelOrderPolicy::shuffled(seed), {});
}

// ---- vocabularies ---------------------------------------------------------

namespace {
const std::vector<std::string>& reserved_tokens() {
  static const std::vector<std::string> r = {"<pad>", "<unk>", "<bos>", "<eos>"};
  return r;
}
}  // namespace

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens,
                       const std::vector<std::size_t>& counts) {
  if (!counts.empty() && counts.size() != tokens.size()) {
    throw std::invalid_argument("vocabulary: " + std::to_string(counts.size()) + " counts for " +
                                std::to_string(tokens.size()) + " tokens");
  }
  for (const auto& r : reserved_tokens()) {
    ids_.emplace(r, static_cast<int>(tokens_.size()));
    tokens_.push_back(r);
    counts_.push_back(0);
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].empty() || tokens[i].find_first_of(" \t\r\n") != std::string::npos) {
      throw std::invalid_argument("vocabulary: invalid token '" + tokens[i] + "'");
    }
    if (!ids_.emplace(tokens[i], static_cast<int>(tokens_.size())).second) {
      throw std::invalid_argument("vocabulary: duplicate or reserved token '" + tokens[i] + "'");
    }
    tokens_.push_back(tokens[i]);
    counts_.push_back(counts.empty() ? 0 : counts[i]);
  }
}

int Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& text) const {
  std::vector<int> out;
  out.reserve(text.size());
  for (const auto& t : text) out.push_back(id(t));
  return out;
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out += tokens_[i] + "\t" + std::to_string(counts_[i]) + "\n";
  }
  return out;
}

Vocabulary Vocabulary::deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> tokens;
  std::vector<std::size_t> counts;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    std::string tok = line.substr(0, tab);
    std::size_t n = 0;
    if (tab != std::string::npos) {
      try {
        n = std::stoull(line.substr(tab + 1));
      } catch (const std::exception&) {
        throw std::invalid_argument("vocabulary line " + std::to_string(lineno) + ": bad count");
      }
    }
    if (lineno <= kReserved) {
      if (tok != reserved_tokens()[lineno - 1]) {
        throw std::invalid_argument("vocabulary line " + std::to_string(lineno) + ": expected " +
                                    reserved_tokens()[lineno - 1]);
      }
      continue;
    }
    tokens.push_back(tok);
    counts.push_back(n);
  }
  if (lineno < kReserved) throw std::invalid_argument("vocabulary: missing reserved entries");
  return Vocabulary(tokens, counts);
}

std::string Vocabulary::hash() const {
  std::uint64_t h = fnv1a64("");
  for (const auto& t : tokens_) h = fnv1a64(t + "\n", h);
  return hex64(h);
}

Vocabulary build_vocab(const Corpus& samples, std::size_t cap) {
  if (cap < Vocabulary::kReserved) {
    throw std::invalid_argument("vocab cap " + std::to_string(cap) + " is below the " +
                                std::to_string(Vocabulary::kReserved) + " reserved entries");
  }
  std::map<std::string, std::size_t> freq;
  for (const Sample& s : samples) {
    for (const auto& t : s.text) ++freq[t];
  }
  for (const auto& r : reserved_tokens()) freq.erase(r);
  std::vector<std::pair<std::string, std::size_t>> v(freq.begin(), freq.end());
  std::stable_sort(v.begin(), v.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  v.resize(std::min(v.size(), cap - Vocabulary::kReserved));
  std::vector<std::string> tokens;
  std::vector<std::size_t> counts;
  for (auto& [t, n] : v) {
    tokens.push_back(t);
    counts.push_back(n);
  }
  return Vocabulary(tokens, counts);
}

LabelVocabulary::LabelVocabulary(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty() || names_[i].find_first_of(" \t\r\n") != std::string::npos) {
      throw std::invalid_argument("label vocabulary: invalid label '" + names_[i] + "'");
    }
    if (!ids_.emplace(names_[i], i).second) {
      throw std::invalid_argument("label vocabulary: duplicate label '" + names_[i] + "'");
    }
  }
}

std::optional<std::size_t> LabelVocabulary::find(const std::string& name) const {
  auto it = ids_.find(name);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::size_t LabelVocabulary::id(const std::string& name) const {
  auto it = ids_.find(name);
  if (it == ids_.end()) throw std::invalid_argument("unknown label '" + name + "'");
  return it->second;
}

std::string LabelVocabulary::serialize() const {
  std::string out;
  for (const auto& n : names_) out += n + "\n";
  return out;
}

LabelVocabulary LabelVocabulary::deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> names;
  while (std::getline(in, line)) {
    if (!line.empty()) names.push_back(line);
  }
  return LabelVocabulary(std::move(names));
}

std::string LabelVocabulary::hash() const {
  std::uint64_t h = fnv1a64("");
  for (const auto& n : names_) h = fnv1a64(n + "\n", h);
  return hex64(h);
}

LabelVocabulary build_label_vocab(const Corpus& samples) {
  return LabelVocabulary(labels_by_frequency(label_frequencies(samples)));
}

Example to_example(const Sample& s, const Vocabulary& vocab, const LabelVocabulary& labels) {
  Example ex;
  ex.id = s.id;
  ex.tokens = vocab.encode(s.text);
  for (const auto& l : s.training_order()) {
    auto id = labels.find(l);
    if (!id) {
      throw std::invalid_argument("sample " + s.id + ": label '" + l +
                                  "' is not in the label vocabulary");
    }
    ex.labels.push_back(*id);
  }
  return ex;
}

std::vector<Example> to_examples(const Corpus& samples, const Vocabulary& vocab,
                                 const LabelVocabulary& labels) {
  std::vector<Example> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) out.push_back(to_example(s, vocab, labels));
  return out;
}

// ---- splits and dataset surgery -------------------------------------------

Splits split(const Corpus& samples, const SplitRatios& r, std::uint64_t seed) {
  if (!(r.train > 0.0) || !(r.val > 0.0) || !(r.test > 0.0)) {
    throw std::invalid_argument("split ratios must be positive");
  }
  if (std::abs(r.train + r.val + r.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must sum to 1");
  }
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = stream(seed, 0x5b117ULL);
  shuffle_in_place(order, rng);
  const double n = static_cast<double>(samples.size());
  const std::size_t n_train = std::min(samples.size(), static_cast<std::size_t>(std::llround(n * r.train)));
  const std::size_t n_val =
      std::min(samples.size() - n_train, static_cast<std::size_t>(std::llround(n * r.val)));
  Splits out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    Corpus& dst = i < n_train ? out.train : i < n_train + n_val ? out.val : out.test;
    dst.push_back(samples[order[i]]);
  }
  return out;
}

RemoveTopKResult remove_top_k(const Corpus& samples, std::size_t k) {
  const LabelCounts counts = label_frequencies(samples);
  if (k >= counts.size()) {
    throw std::invalid_argument("remove_top_k: k = " + std::to_string(k) + " must be below the " +
                                std::to_string(counts.size()) + " distinct labels");
  }
  RemoveTopKResult r;
  const std::vector<std::string> ranked = labels_by_frequency(counts);
  r.removed_labels.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k));
  const std::unordered_set<std::string> gone(r.removed_labels.begin(), r.removed_labels.end());
  auto keep = [&](std::vector<std::string> v) {
    std::erase_if(v, [&](const std::string& l) { return gone.count(l) != 0; });
    return v;
  };
  for (const Sample& s : samples) {
    Sample t = s;
    t.labels = keep(s.labels);
    t.ordered_labels = keep(s.ordered_labels);
    if (t.labels.empty()) {
      ++r.dropped_samples;
      continue;
    }
    r.samples.push_back(std::move(t));
  }
  return r;
}

double phi_coefficient(std::size_t n, std::size_t a, std::size_t b, std::size_t ab) {
  if (ab > a || ab > b || a > n || b > n || a + b - ab > n) {
    throw std::invalid_argument("phi_coefficient: inconsistent contingency counts");
  }
  const double N = static_cast<double>(n), A = static_cast<double>(a), B = static_cast<double>(b),
               AB = static_cast<double>(ab);
  const double denom = A * (N - A) * B * (N - B);
  if (denom == 0.0) return 0.0;
  return (N * AB - A * B) / std::sqrt(denom);
}

double PhiMatrix::at(const std::string& a, const std::string& b) const {
  auto ia = std::find(labels.begin(), labels.end(), a);
  auto ib = std::find(labels.begin(), labels.end(), b);
  if (ia == labels.end() || ib == labels.end()) {
    throw std::invalid_argument("phi: unknown label");
  }
  return phi[static_cast<std::size_t>(ia - labels.begin())][static_cast<std::size_t>(ib - labels.begin())];
}

PhiMatrix label_phi(const Corpus& samples) {
  PhiMatrix m;
  const LabelCounts counts = label_frequencies(samples);
  for (const auto& [name, n] : counts) m.labels.push_back(name);
  const std::size_t L = m.labels.size();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < L; ++i) index[m.labels[i]] = i;
  std::vector<std::vector<std::size_t>> joint(L, std::vector<std::size_t>(L, 0));
  for (const Sample& s : samples) {
    for (const auto& x : s.labels) {
      for (const auto& y : s.labels) ++joint[index[x]][index[y]];
    }
  }
  m.phi.assign(L, std::vector<double>(L, 0.0));
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < L; ++j) {
      m.phi[i][j] = i == j ? 1.0
                           : phi_coefficient(samples.size(), joint[i][i], joint[j][j], joint[i][j]);
    }
  }
  return m;
}

UncorrelatedResult uncorrelated_subset(const Corpus& samples, double max_corr) {
  if (!(max_corr >= 0.0)) throw std::invalid_argument("uncorrelated_subset: max_corr must be >= 0");
  const LabelCounts counts = label_frequencies(samples);
  if (counts.size() < 2) {
    throw std::invalid_argument("uncorrelated_subset: needs at least 2 distinct labels, found " +
                                std::to_string(counts.size()));
  }
  const PhiMatrix m = label_phi(samples);
  UncorrelatedResult r;
  for (const auto& cand : labels_by_frequency(counts)) {
    bool ok = true;
    for (const auto& a : r.admitted) {
      if (std::abs(m.at(cand, a)) > max_corr) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    for (const auto& a : r.admitted) r.max_abs_phi = std::max(r.max_abs_phi, std::abs(m.at(cand, a)));
    r.admitted.push_back(cand);
  }
  const std::unordered_set<std::string> in(r.admitted.begin(), r.admitted.end());
  for (const Sample& s : samples) {
    if (std::all_of(s.labels.begin(), s.labels.end(),
                    [&](const std::string& l) { return in.count(l) != 0; })) {
      r.samples.push_back(s);
    }
  }
  if (r.samples.empty()) {
    throw std::invalid_argument("uncorrelated_subset: no sample has all labels in the " +
                                std::to_string(r.admitted.size()) + " admitted labels (of " +
                                std::to_string(counts.size()) + ") at max_corr " +
                                std::to_string(max_corr));
  }
  return r;
}

// ---- synthetic corpora ----------------------------------------------------

std::string to_string(SynthSpec::Correlation c) {
  return c == SynthSpec::Correlation::kTree ? "tree" : "independent";
}

SynthSpec::Correlation parse_correlation(const std::string& s) {
  if (s == "independent") return SynthSpec::Correlation::kIndependent;
  if (s == "tree") return SynthSpec::Correlation::kTree;
  throw std::invalid_argument("unknown correlation '" + s + "' (expected independent|tree)");
}

std::size_t SynthSpec::roots() const {
  if (correlation != Correlation::kTree) return num_labels;
  return tree_roots != 0 ? tree_roots : (num_labels + 2) / 3;
}

std::optional<std::size_t> SynthSpec::parent(std::size_t label) const {
  const std::size_t r = roots();
  if (label < r) return std::nullopt;
  return label - r;
}

void SynthSpec::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("synth." + m); };
  if (num_samples == 0) fail("num_samples must be >= 1");
  if (num_labels < 2) fail("num_labels must be >= 2");
  if (min_length < 1) fail("min_length must be >= 1");
  if (max_length < min_length) fail("max_length must be >= min_length");
  if (words_per_label < 1) fail("words_per_label must be >= 1");
  if (vocab_size < num_labels * words_per_label + 1) {
    fail("vocab_size must be at least num_labels * words_per_label + 1 (" +
         std::to_string(num_labels * words_per_label + 1) + ")");
  }
  if (!(label_prob > 0.0 && label_prob <= 1.0)) fail("label_prob must be in (0, 1]");
  if (!(child_prob > 0.0 && child_prob <= 1.0)) fail("child_prob must be in (0, 1]");
  if (!(signal >= 0.0 && signal <= 1.0)) fail("signal must be in [0, 1]");
  if (correlation == Correlation::kTree && (roots() < 1 || roots() >= num_labels)) {
    fail("tree_roots must be in [1, num_labels)");
  }
}

Corpus synth_generate(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  auto label_name = [](std::size_t l) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "L%03zu", l);
    return std::string(buf);
  };
  auto word_name = [](std::size_t w) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "w%04zu", w);
    return std::string(buf);
  };
  const std::size_t L = spec.num_labels;
  Corpus out;
  out.reserve(spec.num_samples);
  for (std::size_t i = 0; i < spec.num_samples; ++i) {
    auto rng = stream(seed, 0x5717ULL, i);
    std::vector<std::size_t> present;
    for (int attempt = 0; present.empty(); ++attempt) {
      if (attempt == 10000) throw std::invalid_argument("synth: label draws keep coming up empty");
      std::vector<bool> on(L, false);
      for (std::size_t l = 0; l < L; ++l) {
        const auto p = spec.parent(l);
        const double prob = p ? (on[*p] ? spec.child_prob : 0.0) : spec.label_prob;
        on[l] = uniform(rng) < prob;
      }
      for (std::size_t l = 0; l < L; ++l) {
        if (on[l]) present.push_back(l);
      }
    }
    Sample s;
    char id[24];
    std::snprintf(id, sizeof id, "s%06zu", i);
    s.id = id;
    for (std::size_t l : present) s.labels.push_back(label_name(l));
    const std::size_t len =
        spec.min_length + below(rng, spec.max_length - spec.min_length + 1);
    for (std::size_t t = 0; t < len; ++t) {
      std::size_t w;
      if (uniform(rng) < spec.signal) {
        const std::size_t l = present[below(rng, present.size())];
        w = l * spec.words_per_label + below(rng, spec.words_per_label);
      } else {
        w = below(rng, spec.vocab_size);
      }
      s.text.push_back(word_name(w));
    }
    out.push_back(std::move(s));
  }
  return out;
}

CorpusStats corpus_stats(const Corpus& samples) {
  CorpusStats st;
  st.samples = samples.size();
  std::unordered_set<std::string> tokens, labels;
  std::size_t len = 0, nl = 0;
  for (const Sample& s : samples) {
    len += s.text.size();
    nl += s.labels.size();
    st.max_length = std::max(st.max_length, s.text.size());
    tokens.insert(s.text.begin(), s.text.end());
    labels.insert(s.labels.begin(), s.labels.end());
  }
  st.distinct_labels = labels.size();
  st.distinct_tokens = tokens.size();
  if (!samples.empty()) {
    st.mean_length = static_cast<double>(len) / static_cast<double>(samples.size());
    st.mean_labels = static_cast<double>(nl) / static_cast<double>(samples.size());
  }
  return st;
}

}  // namespace seq2set
