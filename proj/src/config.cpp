#include "seq2set/config.hpp"

#include <cmath>
#include <concepts>
#include <fstream>
#include <set>

#include "seq2set/hash.hpp"

namespace seq2set {

namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

// Reads keys from one object and rejects anything it was not asked about.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <std::unsigned_integral U>
  void read(const std::string& key, U& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
        throw ConfigError(field(key) + " must be a non-negative integer");
      }
      out = v->get<U>();
    }
  }
  void read(const std::string& key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) throw ConfigError(field(key) + " must be a number");
      out = v->get<double>();
    }
  }
  void read(const std::string& key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) throw ConfigError(field(key) + " must be true or false");
      out = v->get<bool>();
    }
  }
  void read(const std::string& key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) throw ConfigError(field(key) + " must be a string");
      out = v->get<std::string>();
    }
  }
  template <class E, class Parse>
  void read_enum(const std::string& key, E& out, Parse parse) {
    std::string s;
    if (!has(key)) return;
    read(key, s);
    try {
      out = parse(s);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(field(key) + ": " + e.what());
    }
  }
  void read(const std::string& key, std::optional<double>& out) {
    if (const json* v = take(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      if (!v->is_number()) throw ConfigError(field(key) + " must be a number or null");
      out = v->get<double>();
    }
  }
  std::optional<Section> sub(const std::string& key) {
    if (const json* v = take(key)) return Section(*v, field(key));
    return std::nullopt;
  }
  const json* raw(const std::string& key) { return take(key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown key " + field(it.key()));
    }
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json* take(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
void rethrow_as_config(F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void read_arch(Section& s, ArchConfig& a, bool allow_derived) {
  if (allow_derived) {
    s.read("vocab_size", a.vocab_size);
    s.read("num_labels", a.num_labels);
  } else {
    for (const char* k : {"vocab_size", "num_labels"}) {
      if (s.has(k)) throw ConfigError(s.field(k) + " is derived from the data and cannot be set");
    }
  }
  s.read("embed_size", a.embed_size);
  s.read("encoder_layers", a.encoder_layers);
  s.read("encoder_hidden", a.encoder_hidden);
  s.read("decoder_layers", a.decoder_layers);
  s.read("decoder_hidden", a.decoder_hidden);
  s.read("attention_size", a.attention_size);
  s.read_enum("variant", a.variant, parse_variant);
  s.finish();
}

void read_training(Section& s, TrainConfig& t) {
  s.read("lambda", t.lambda);
  s.read("learning_rate", t.learning_rate);
  s.read("lr_decay", t.lr_decay);
  s.read("batch_size", t.batch_size);
  s.read("max_epochs", t.max_epochs);
  s.read("clip_norm", t.clip_norm);
  s.read("dropout", t.dropout);
  s.read("val_interval", t.val_interval);
  s.read("rl_samples", t.rl_samples);
  s.read_enum("d2_memory_mode", t.d2_memory, parse_sequence_memory_mode);
  s.read("stop_gradient_at_d1", t.stop_gradient_at_d1);
  s.read_enum("inference_decoder", t.inference, parse_inference_decoder);
  s.read("max_decode_length", t.max_len);
  s.read("adam_beta1", t.adam_beta1);
  s.read("adam_beta2", t.adam_beta2);
  s.read("adam_eps", t.adam_eps);
  s.read("seed", t.seed);
  s.finish();
}

void read_data(Section& s, DataConfig& d) {
  s.read("train", d.train);
  s.read("val", d.val);
  s.read("test", d.test);
  s.read("corpus", d.corpus);
  if (const json* r = s.raw("split_ratios")) {
    if (!r->is_array() || r->size() != 3 || !(*r)[0].is_number() || !(*r)[1].is_number() ||
        !(*r)[2].is_number()) {
      throw ConfigError(s.field("split_ratios") + " must be [train, val, test]");
    }
    d.split_ratios = {(*r)[0].get<double>(), (*r)[1].get<double>(), (*r)[2].get<double>()};
  }
  s.read("split_seed", d.split_seed);
  s.read("vocab_cap", d.vocab_cap);
  s.read("max_text_length", d.max_text_length);
  s.read_enum("label_order", d.label_order, parse_label_order);
  s.read("label_order_seed", d.label_order_seed);
  s.finish();
}

void read_br(Section& s, BRConfig& b) {
  s.read("learning_rate", b.learning_rate);
  s.read("epochs", b.epochs);
  s.read("l2", b.l2);
  s.read("threshold", b.threshold);
  s.finish();
}

void read_experiment(Section& s, ExperimentConfig& e) {
  s.read("preset", e.preset);
  s.read("shuffle_labels", e.shuffle_labels);
  s.read("shuffle_seed", e.shuffle_seed);
  s.read("remove_top_k", e.remove_top_k);
  s.read("uncorrelated_max_corr", e.uncorrelated_max_corr);
  if (auto br = s.sub("br")) read_br(*br, e.br);
  s.finish();
}

}  // namespace

void RunConfig::validate() const {
  rethrow_as_config([&] {
    training.validate();
    experiment.br.validate();
    auto positive = [](std::size_t v, const char* name) {
      if (v == 0) throw ConfigError(std::string("architecture.") + name + " must be positive");
    };
    positive(architecture.embed_size, "embed_size");
    positive(architecture.encoder_layers, "encoder_layers");
    positive(architecture.encoder_hidden, "encoder_hidden");
    positive(architecture.decoder_layers, "decoder_layers");
    positive(architecture.decoder_hidden, "decoder_hidden");
  });
  if (architecture.variant == Variant::kSimplified &&
      training.inference == InferenceDecoder::kSequence) {
    throw ConfigError(
        "training.inference_decoder: the simplified variant has no sequence decoder");
  }
  if (data.corpus.empty() == data.train.empty()) {
    throw ConfigError("data: set exactly one of data.train or data.corpus");
  }
  if (!data.corpus.empty() && (!data.val.empty() || !data.test.empty())) {
    throw ConfigError("data: data.val and data.test come from the split when data.corpus is set");
  }
  const SplitRatios& r = data.split_ratios;
  if (!(r.train > 0.0 && r.val > 0.0 && r.test > 0.0) ||
      std::abs(r.train + r.val + r.test - 1.0) > 1e-9) {
    throw ConfigError("data.split_ratios must be positive and sum to 1");
  }
  if (data.vocab_cap < Vocabulary::kReserved) {
    throw ConfigError("data.vocab_cap must be at least " + std::to_string(Vocabulary::kReserved));
  }
  if (data.max_text_length == 0) throw ConfigError("data.max_text_length must be positive");
  if (!experiment.preset.empty()) {
    rethrow_as_config([&] { preset(experiment.preset); });
  }
  if (experiment.uncorrelated_max_corr && !(*experiment.uncorrelated_max_corr >= 0.0)) {
    throw ConfigError("experiment.uncorrelated_max_corr must be non-negative");
  }
}

RunConfig parse_run_config(const json& doc, const std::optional<std::string>& preset_override) {
  Section root(doc, "");
  RunConfig c;
  std::string preset_name;
  if (const json* e = doc.is_object() && doc.contains("experiment") ? &doc["experiment"] : nullptr) {
    if (e->is_object() && e->contains("preset") && (*e)["preset"].is_string()) {
      preset_name = (*e)["preset"].get<std::string>();
    }
  }
  if (preset_override) preset_name = *preset_override;
  if (!preset_name.empty()) {
    Preset p;
    rethrow_as_config([&] { p = preset(preset_name); });
    c.architecture.variant = p.variant;
    c.training = p.training;
  }
  if (auto s = root.sub("architecture")) read_arch(*s, c.architecture, false);
  if (auto s = root.sub("training")) read_training(*s, c.training);
  if (auto s = root.sub("data")) read_data(*s, c.data);
  if (auto s = root.sub("experiment")) read_experiment(*s, c.experiment);
  root.finish();
  c.experiment.preset = preset_name;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path,
                          const std::optional<std::string>& preset_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_run_config(doc, preset_override);
}

ojson to_json(const ArchConfig& a) {
  ojson j;
  j["vocab_size"] = a.vocab_size;
  j["num_labels"] = a.num_labels;
  j["embed_size"] = a.embed_size;
  j["encoder_layers"] = a.encoder_layers;
  j["encoder_hidden"] = a.encoder_hidden;
  j["decoder_layers"] = a.decoder_layers;
  j["decoder_hidden"] = a.decoder_hidden;
  j["attention_size"] = a.attention_size;
  j["variant"] = to_string(a.variant);
  return j;
}

ojson to_json(const TrainConfig& t) {
  ojson j;
  j["lambda"] = t.lambda;
  j["learning_rate"] = t.learning_rate;
  j["lr_decay"] = t.lr_decay;
  j["batch_size"] = t.batch_size;
  j["max_epochs"] = t.max_epochs;
  j["clip_norm"] = t.clip_norm;
  j["dropout"] = t.dropout;
  j["val_interval"] = t.val_interval;
  j["rl_samples"] = t.rl_samples;
  j["d2_memory_mode"] = to_string(t.d2_memory);
  j["stop_gradient_at_d1"] = t.stop_gradient_at_d1;
  j["inference_decoder"] = to_string(t.inference);
  j["max_decode_length"] = t.max_len;
  j["adam_beta1"] = t.adam_beta1;
  j["adam_beta2"] = t.adam_beta2;
  j["adam_eps"] = t.adam_eps;
  j["seed"] = t.seed;
  return j;
}

ojson to_json(const RunConfig& c) {
  ojson j;
  ojson arch = to_json(c.architecture);
  arch.erase("vocab_size");
  arch.erase("num_labels");
  j["architecture"] = arch;
  j["training"] = to_json(c.training);
  ojson d;
  d["train"] = c.data.train;
  d["val"] = c.data.val;
  d["test"] = c.data.test;
  d["corpus"] = c.data.corpus;
  d["split_ratios"] = {c.data.split_ratios.train, c.data.split_ratios.val, c.data.split_ratios.test};
  d["split_seed"] = c.data.split_seed;
  d["vocab_cap"] = c.data.vocab_cap;
  d["max_text_length"] = c.data.max_text_length;
  d["label_order"] = to_string(c.data.label_order);
  d["label_order_seed"] = c.data.label_order_seed;
  j["data"] = d;
  ojson e;
  e["preset"] = c.experiment.preset;
  e["shuffle_labels"] = c.experiment.shuffle_labels;
  e["shuffle_seed"] = c.experiment.shuffle_seed;
  e["remove_top_k"] = c.experiment.remove_top_k;
  e["uncorrelated_max_corr"] = c.experiment.uncorrelated_max_corr
                                   ? ojson(*c.experiment.uncorrelated_max_corr)
                                   : ojson(nullptr);
  e["br"] = {{"learning_rate", c.experiment.br.learning_rate},
             {"epochs", c.experiment.br.epochs},
             {"l2", c.experiment.br.l2},
             {"threshold", c.experiment.br.threshold}};
  j["experiment"] = e;
  return j;
}

ArchConfig parse_arch_config(const json& j) {
  Section s(j, "architecture");
  ArchConfig a;
  read_arch(s, a, true);
  rethrow_as_config([&] { a.validate(); });
  return a;
}

ojson to_json(const SynthSpec& sp) {
  ojson j;
  j["num_samples"] = sp.num_samples;
  j["num_labels"] = sp.num_labels;
  j["vocab_size"] = sp.vocab_size;
  j["correlation"] = to_string(sp.correlation);
  j["min_length"] = sp.min_length;
  j["max_length"] = sp.max_length;
  j["label_prob"] = sp.label_prob;
  j["child_prob"] = sp.child_prob;
  j["tree_roots"] = sp.tree_roots;
  j["words_per_label"] = sp.words_per_label;
  j["signal"] = sp.signal;
  return j;
}

SynthSpec parse_synth_spec(const json& j) {
  Section s(j, "synth");
  SynthSpec sp;
  s.read("num_samples", sp.num_samples);
  s.read("num_labels", sp.num_labels);
  s.read("vocab_size", sp.vocab_size);
  s.read_enum("correlation", sp.correlation, parse_correlation);
  s.read("min_length", sp.min_length);
  s.read("max_length", sp.max_length);
  s.read("label_prob", sp.label_prob);
  s.read("child_prob", sp.child_prob);
  s.read("tree_roots", sp.tree_roots);
  s.read("words_per_label", sp.words_per_label);
  s.read("signal", sp.signal);
  s.finish();
  rethrow_as_config([&] { sp.validate(); });
  return sp;
}

std::string config_hash(const RunConfig& c) { return hex64(fnv1a64(to_json(c).dump())); }

}  // namespace seq2set
