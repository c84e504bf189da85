// seq2set command-line tool: data preparation, training, evaluation and the
// binary-relevance baseline. Exit codes: 0 success, 1 usage or config error,
// 2 runtime failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "seq2set/baselines.hpp"
#include "seq2set/checkpoint.hpp"
#include "seq2set/config.hpp"
#include "seq2set/data.hpp"
#include "seq2set/pipeline.hpp"
#include "seq2set/provenance.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using namespace seq2set;

namespace {

// Bad arguments or inputs; maps to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runtime failure after work started; maps to exit code 2.
class RunFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& what, const fs::path& p) {
  if (p.empty()) throw UsageError(what + " is required");
  if (!fs::is_regular_file(p)) throw UsageError(what + " not found: " + p.string());
}

void require_dir(const std::string& what, const fs::path& p) {
  if (!fs::is_directory(p)) throw UsageError(what + " not found: " + p.string());
}

// Outputs always go to a new (or empty) directory so inputs are never touched.
void check_fresh(const fs::path& out) {
  if (out.empty()) throw UsageError("--out is required");
  if (fs::exists(out) && !(fs::is_directory(out) && fs::is_empty(out))) {
    throw UsageError("output directory exists and is not empty: " + out.string());
  }
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw RunFailure("cannot write " + p.string());
}

void write_json(const fs::path& p, const ojson& j) { write_text(p, j.dump(2) + "\n"); }

// Writes into <dir>.tmp, then swaps it in, so a crash never leaves a torn
// checkpoint where the last good one used to be.
template <class SaveFn>
void replace_dir(const fs::path& dir, SaveFn&& save) {
  fs::path tmp = dir;
  tmp += ".tmp";
  fs::remove_all(tmp);
  save(tmp);
  fs::remove_all(dir);
  fs::rename(tmp, dir);
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string config, out, preset;
  std::optional<std::uint64_t> seed;
};

RunConfig resolve_config(const std::string& path, const std::string& preset,
                         std::optional<std::uint64_t> seed) {
  require_file("--config", path);
  std::optional<std::string> override_preset;
  if (!preset.empty()) override_preset = preset;
  RunConfig cfg = load_run_config(path, override_preset);
  if (seed) cfg.training.seed = *seed;
  for (const std::string& p : {cfg.data.train, cfg.data.val, cfg.data.test, cfg.data.corpus}) {
    if (!p.empty()) require_file("data file", p);
  }
  return cfg;
}

ojson train_extra(const RunConfig& cfg, std::size_t max_len) {
  return ojson{{"config_hash", config_hash(cfg)},
               {"preset", cfg.experiment.preset},
               {"seed", cfg.training.seed},
               {"inference_decoder", to_string(cfg.training.inference)},
               {"max_decode_length", max_len}};
}

int cmd_train(const TrainArgs& a) {
  const RunConfig cfg = resolve_config(a.config, a.preset, a.seed);
  if (cfg.experiment.preset == "br") {
    throw UsageError("preset br trains with `baseline br-train`");
  }
  check_fresh(a.out);
  PreparedData data = prepare_data(cfg);

  const fs::path out = a.out;
  fs::create_directories(out);
  write_json(out / "config.json", to_json(cfg));
  write_json(out / "data_log.json", data.log);
  std::ofstream log(out / "train_log.jsonl");

  const std::size_t max_len = cfg.training.max_len != 0 ? cfg.training.max_len
                                                        : default_max_len(data.train_examples);
  double best_f1 = -1.0;
  auto hook = [&](const TrainEvent& ev, const Seq2SetModel<float>& model) {
    log << train_event_json(ev).dump() << "\n" << std::flush;
    if (!ev.validation || ev.validation->micro.f1 <= best_f1) return;
    best_f1 = ev.validation->micro.f1;
    CheckpointInfo info{"seq2set", ev.step, best_f1, train_extra(cfg, max_len)};
    replace_dir(out / "checkpoint", [&](const fs::path& d) {
      save_checkpoint(d, model, data.vocab, data.labels, info);
    });
  };
  TrainedRun run = run_training(cfg, data, hook);

  ojson summary;
  summary["steps"] = run.result.steps;
  summary["epochs"] = run.result.epochs;
  summary["best_step"] = run.result.best_step;
  summary["sampled_rollouts"] = run.result.sampled_rollouts;
  summary["diverged"] = run.result.diverged;
  if (run.result.diverged) summary["divergence"] = run.result.divergence;
  if (run.result.best_report) summary["best_validation"] = ojson::parse(run.result.best_report->to_json());
  if (run.test_report) {
    write_text(out / "test_report.json", run.test_report->to_json());
    summary["test"] = ojson::parse(run.test_report->to_json());
  }
  write_json(out / "summary.json", summary);

  if (run.result.diverged) {
    throw RunFailure("training diverged at step " + std::to_string(run.result.steps) + ": " +
                     run.result.divergence +
                     (fs::exists(out / "checkpoint") ? " (last good checkpoint kept)" : ""));
  }
  std::cout << "best validation micro-F1 " << run.result.best_val_f1 << " at step "
            << run.result.best_step << "\n";
  if (run.test_report) std::cout << run.test_report->to_json();
  return 0;
}

// ----------------------------------------------------------- evaluate

struct EvalArgs {
  std::string checkpoint, data, out, decoder;
  bool labels_shuffled = false;
  std::uint64_t seed = 0;
};

// Labels the checkpoint has never seen mean the data and checkpoint disagree
// on the label vocabulary; a corpus without a single known token means the
// token vocabulary belongs to a different dataset.
void check_compatible(const Corpus& corpus, const Vocabulary& vocab, const LabelVocabulary& labels) {
  bool any_known = false;
  for (const Sample& s : corpus) {
    for (const auto& l : s.labels) {
      if (!labels.find(l)) {
        throw UsageError("vocabulary mismatch: label '" + l + "' of sample " + s.id +
                         " is not in the checkpoint label vocabulary");
      }
    }
    for (const auto& t : s.text) any_known = any_known || vocab.contains(t);
  }
  if (!corpus.empty() && !any_known) {
    throw UsageError("vocabulary mismatch: no token of the data is in the checkpoint vocabulary");
  }
}

ojson names_of(const std::vector<std::size_t>& ids, const LabelVocabulary& labels) {
  ojson a = ojson::array();
  for (std::size_t id : ids) a.push_back(labels.name(id));
  return a;
}

// Emitted labels in decode order, eos excluded.
std::vector<std::size_t> emitted(const DecodeTrace& t, std::size_t num_labels) {
  std::vector<std::size_t> out;
  for (std::size_t s : t.symbols) {
    if (s < num_labels) out.push_back(s);
  }
  return out;
}

struct Predicted {
  std::vector<std::vector<std::size_t>> labels;  // decode order
  std::vector<std::vector<double>> log_probs;    // per decode step, eos included; empty for BR
  LabelVocabulary names;
  ojson checkpoint;
};

void write_predictions(const fs::path& path, const Corpus& corpus, const Predicted& p, bool with_gold) {
  std::ofstream out(path);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    ojson j{{"id", corpus[i].id}, {"predicted", names_of(p.labels[i], p.names)}};
    if (!p.log_probs.empty()) j["step_log_probs"] = p.log_probs[i];
    if (with_gold) j["gold"] = corpus[i].labels;
    out << j.dump() << "\n";
  }
  if (!out) throw RunFailure("cannot write " + path.string());
}

Predicted predict_corpus(const fs::path& ckpt, const Corpus& corpus, const std::string& decoder_flag,
                         bool check_labels) {
  require_dir("--checkpoint", ckpt);
  Predicted p;
  if (checkpoint_kind(ckpt) == "br") {
    LoadedBR m = load_br_checkpoint(ckpt);
    if (check_labels) check_compatible(corpus, m.vocab, m.labels);
    for (const Sample& s : corpus) p.labels.push_back(br_predict(m.model, m.vocab.encode(s.text)));
    p.names = m.labels;
    p.checkpoint = {{"kind", "br"}, {"step", m.info.step}, {"extra", m.info.extra}};
    return p;
  }
  LoadedModel m = load_checkpoint(ckpt);
  if (check_labels) check_compatible(corpus, m.vocab, m.labels);
  InferenceDecoder decoder = InferenceDecoder::kSet;
  if (m.info.extra.contains("inference_decoder")) {
    decoder = parse_inference_decoder(m.info.extra["inference_decoder"].get<std::string>());
  }
  if (!decoder_flag.empty()) decoder = parse_inference_decoder(decoder_flag);
  if (decoder == InferenceDecoder::kSequence && m.model.sequence_decoder() == nullptr) {
    throw UsageError("--decoder sequence: the checkpoint has no sequence decoder");
  }
  std::size_t max_len = m.labels.size() + 1;
  if (m.info.extra.contains("max_decode_length")) {
    max_len = m.info.extra["max_decode_length"].get<std::size_t>();
  }
  const std::size_t L = m.labels.size();
  for (const Sample& s : corpus) {
    const DecodeTrace t = greedy_decode(m.model, m.vocab.encode(s.text), max_len, decoder);
    p.labels.push_back(emitted(t, L));
    p.log_probs.push_back(t.log_probs);
  }
  p.names = m.labels;
  p.checkpoint = {{"kind", m.info.kind},
                  {"step", m.info.step},
                  {"decoder", to_string(decoder)},
                  {"max_decode_length", max_len},
                  {"extra", m.info.extra}};
  return p;
}

int cmd_evaluate(const EvalArgs& a, const std::string& required_kind = "") {
  require_dir("--checkpoint", a.checkpoint);
  require_file("--data", a.data);
  if (!required_kind.empty() && checkpoint_kind(a.checkpoint) != required_kind) {
    throw UsageError("checkpoint kind is '" + checkpoint_kind(a.checkpoint) + "', expected '" +
                     required_kind + "'");
  }
  check_fresh(a.out);
  Corpus corpus = load_corpus(a.data);
  if (a.labels_shuffled) corpus = shuffle_labels(corpus, a.seed);
  Predicted p = predict_corpus(a.checkpoint, corpus, a.decoder, true);

  std::vector<std::vector<std::size_t>> gold;
  for (const Sample& s : corpus) {
    std::vector<std::size_t> g;
    for (const auto& l : s.training_order()) g.push_back(p.names.id(l));
    gold.push_back(std::move(g));
  }
  EvalReport report = evaluate_sets(p.labels, gold, p.names.size());
  const ojson& extra = p.checkpoint["extra"];
  if (extra.contains("config_hash")) report.config_hash = extra["config_hash"].get<std::string>();
  if (extra.contains("seed")) report.seed = extra["seed"].get<std::uint64_t>();

  fs::create_directories(a.out);
  write_text(fs::path(a.out) / "report.json", report.to_json());
  write_predictions(fs::path(a.out) / "predictions.jsonl", corpus, p, true);
  write_json(fs::path(a.out) / "evaluation.json",
             ojson{{"checkpoint", a.checkpoint},
                   {"data", a.data},
                   {"data_digest", file_digest(a.data)},
                   {"labels_shuffled", a.labels_shuffled},
                   {"checkpoint_info", p.checkpoint}});
  std::cout << report.to_json();
  return 0;
}

// ------------------------------------------------------------ predict

struct PredictArgs {
  std::string checkpoint, data, out, decoder;
};

// Texts to label: JSONL with "text" and optional "id"; labels are ignored.
Corpus load_texts(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  Corpus out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(n);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw CorpusError(where + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
      throw CorpusError(where + ": expected an object with a string \"text\"");
    }
    Sample s;
    s.id = j.contains("id") ? (j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump())
                            : std::to_string(out.size());
    std::istringstream words(j["text"].get<std::string>());
    for (std::string w; words >> w;) s.text.push_back(w);
    out.push_back(std::move(s));
  }
  return out;
}

int cmd_predict(const PredictArgs& a) {
  require_dir("--checkpoint", a.checkpoint);
  require_file("--data", a.data);
  check_fresh(a.out);
  const Corpus corpus = load_texts(a.data);
  Predicted p = predict_corpus(a.checkpoint, corpus, a.decoder, false);
  fs::create_directories(a.out);
  write_predictions(fs::path(a.out) / "predictions.jsonl", corpus, p, false);
  return 0;
}

// --------------------------------------------------------------- data

struct DataArgs {
  std::string in, out, spec, ratios = "0.8,0.1,0.1";
  std::uint64_t seed = 0;
  std::size_t k = 0;
  double max_corr = 0.28;
};

ojson label_summary(const Corpus& c) {
  const CorpusStats s = corpus_stats(c);
  return ojson{{"samples", s.samples}, {"distinct_labels", s.distinct_labels}};
}

void emit_corpus(const DataArgs& a, const Corpus& corpus, Provenance prov) {
  const fs::path out = a.out;
  fs::create_directories(out);
  save_corpus(out / "corpus.jsonl", corpus);
  prov.outputs["corpus.jsonl"] = label_summary(corpus);
  write_provenance(out, prov);
}

Corpus load_input(const DataArgs& a) {
  require_file("--in", a.in);
  check_fresh(a.out);
  return load_corpus(a.in);
}

int cmd_synth(const DataArgs& a) {
  require_file("--spec", a.spec);
  check_fresh(a.out);
  std::ifstream in(a.spec);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(a.spec + ": " + e.what());
  }
  const SynthSpec spec = parse_synth_spec(doc);
  emit_corpus(a, synth_generate(spec, a.seed),
              {"synth", ojson{{"spec", to_json(spec)}}, a.seed, {a.spec}, {}});
  return 0;
}

int cmd_shuffle(const DataArgs& a) {
  const Corpus c = load_input(a);
  emit_corpus(a, shuffle_labels(c, a.seed), {"shuffle-labels", ojson::object(), a.seed, {a.in}, {}});
  return 0;
}

int cmd_remove_top_k(const DataArgs& a) {
  const Corpus c = load_input(a);
  RemoveTopKResult r = remove_top_k(c, a.k);
  Provenance p{"remove-top-k", ojson{{"k", a.k}}, 0, {a.in}, {}};
  p.outputs["removed_labels"] = r.removed_labels;
  p.outputs["dropped_samples"] = r.dropped_samples;
  p.outputs["input"] = label_summary(c);
  emit_corpus(a, r.samples, p);
  return 0;
}

int cmd_uncorrelated(const DataArgs& a) {
  const Corpus c = load_input(a);
  UncorrelatedResult r = uncorrelated_subset(c, a.max_corr);
  Provenance p{"uncorrelated", ojson{{"max_corr", a.max_corr}}, 0, {a.in}, {}};
  p.outputs["admitted_labels"] = r.admitted;
  p.outputs["max_abs_phi"] = r.max_abs_phi;
  p.outputs["input"] = label_summary(c);
  emit_corpus(a, r.samples, p);
  return 0;
}

SplitRatios parse_ratios(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  for (std::string part; std::getline(ss, part, ',');) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError("--ratios: '" + part + "' is not a number");
    }
  }
  if (v.size() != 3) throw UsageError("--ratios needs three comma-separated values");
  return SplitRatios{v[0], v[1], v[2]};
}

int cmd_split(const DataArgs& a) {
  const SplitRatios ratios = parse_ratios(a.ratios);
  const Corpus c = load_input(a);
  Splits s = split(c, ratios, a.seed);
  const fs::path out = a.out;
  fs::create_directories(out);
  Provenance p{"split", ojson{{"ratios", {ratios.train, ratios.val, ratios.test}}}, a.seed, {a.in}, {}};
  for (auto [name, part] : {std::pair{"train", &s.train}, {"val", &s.val}, {"test", &s.test}}) {
    const std::string file = std::string(name) + ".jsonl";
    save_corpus(out / file, *part);
    p.outputs[file] = label_summary(*part);
  }
  write_provenance(out, p);
  return 0;
}

int cmd_stats(const DataArgs& a) {
  require_file("--in", a.in);
  const Corpus c = load_corpus(a.in);
  const CorpusStats s = corpus_stats(c);
  ojson j{{"samples", s.samples},
          {"distinct_labels", s.distinct_labels},
          {"distinct_tokens", s.distinct_tokens},
          {"mean_length", s.mean_length},
          {"max_length", s.max_length},
          {"mean_labels", s.mean_labels}};
  ojson freq = ojson::object();
  const LabelCounts counts = label_frequencies(c);
  for (const auto& l : labels_by_frequency(counts)) freq[l] = counts.at(l);
  j["label_frequencies"] = freq;
  std::cout << j.dump(2) << "\n";
  return 0;
}

// ----------------------------------------------------------- baseline

int cmd_br_train(const TrainArgs& a) {
  RunConfig cfg = resolve_config(a.config, a.preset, a.seed);
  check_fresh(a.out);
  PreparedData data = prepare_data(cfg);
  BRModel m = br_train(data.train_examples, data.vocab.size(), data.labels.size(), cfg.experiment.br);

  const fs::path out = a.out;
  fs::create_directories(out);
  write_json(out / "config.json", to_json(cfg));
  write_json(out / "data_log.json", data.log);
  const std::string hash = config_hash(cfg);
  ojson summary = ojson::object();
  double val_f1 = 0.0;
  for (auto [name, part] : {std::pair{"validation", &data.val_examples}, {"test", &data.test_examples}}) {
    if (part->empty()) continue;
    EvalReport r = br_evaluate(m, *part);
    r.config_hash = hash;
    r.seed = cfg.training.seed;
    if (std::string(name) == "validation") val_f1 = r.micro.f1;
    write_text(out / (std::string(name) + "_report.json"), r.to_json());
    summary[name] = ojson::parse(r.to_json());
  }
  save_br_checkpoint(out / "checkpoint", m, data.vocab, data.labels,
                     {"br", cfg.experiment.br.epochs, val_f1,
                      ojson{{"config_hash", hash}, {"preset", "br"}, {"seed", cfg.training.seed}}});
  write_json(out / "summary.json", summary);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-label text classification with sequence and set decoders"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto add_train_flags = [](CLI::App* c, TrainArgs& t) {
    c->add_option("--config", t.config, "Run config (JSON)")->required();
    c->add_option("--out", t.out, "New output directory")->required();
    c->add_option("--seed", t.seed, "Overrides training.seed");
    c->add_option("--preset", t.preset, "Experiment preset")
        ->check(CLI::IsMember(preset_names()));
  };
  auto* train_cmd = app.add_subcommand("train", "Train a model from a run config");
  add_train_flags(train_cmd, train_args);

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "Greedy-decode a labelled set and score it");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint)->required();
  eval_cmd->add_option("--data", eval_args.data, "Labelled JSONL corpus")->required();
  eval_cmd->add_option("--out", eval_args.out, "New output directory")->required();
  eval_cmd->add_option("--decoder", eval_args.decoder, "Override the inference decoder")
      ->check(CLI::IsMember({"set", "sequence"}));
  eval_cmd->add_flag("--labels-shuffled", eval_args.labels_shuffled,
                     "Shuffle gold label order before scoring");
  eval_cmd->add_option("--seed", eval_args.seed, "Seed for --labels-shuffled");

  PredictArgs pred_args;
  auto* pred_cmd = app.add_subcommand("predict", "Label unlabelled texts");
  pred_cmd->add_option("--checkpoint", pred_args.checkpoint)->required();
  pred_cmd->add_option("--data", pred_args.data, "JSONL with \"text\" and optional \"id\"")->required();
  pred_cmd->add_option("--out", pred_args.out, "New output directory")->required();
  pred_cmd->add_option("--decoder", pred_args.decoder)->check(CLI::IsMember({"set", "sequence"}));

  DataArgs data_args;
  auto* data_cmd = app.add_subcommand("data", "Build derived corpora");
  data_cmd->require_subcommand(1);
  auto* synth = data_cmd->add_subcommand("synth", "Generate a synthetic corpus");
  synth->add_option("--spec", data_args.spec, "Generator spec (JSON)")->required();
  auto* shuffle = data_cmd->add_subcommand("shuffle-labels", "Per-sample random label order");
  auto* topk = data_cmd->add_subcommand("remove-top-k", "Remove the k most frequent labels");
  topk->add_option("--k", data_args.k)->required();
  auto* uncorr = data_cmd->add_subcommand("uncorrelated", "Keep a weakly correlated label subset");
  uncorr->add_option("--max-corr", data_args.max_corr, "Largest admitted |phi|");
  auto* split_cmd = data_cmd->add_subcommand("split", "Seeded train/val/test split");
  split_cmd->add_option("--ratios", data_args.ratios, "train,val,test fractions");
  auto* stats = data_cmd->add_subcommand("stats", "Print corpus statistics");
  for (auto* c : {synth, shuffle, topk, uncorr, split_cmd}) {
    c->add_option("--out", data_args.out, "New output directory")->required();
  }
  for (auto* c : {shuffle, topk, uncorr, split_cmd, stats}) {
    c->add_option("--in", data_args.in, "Input JSONL corpus")->required();
  }
  for (auto* c : {synth, shuffle, split_cmd}) c->add_option("--seed", data_args.seed);

  TrainArgs br_args;
  EvalArgs br_eval_args;
  auto* base_cmd = app.add_subcommand("baseline", "Binary-relevance baseline");
  base_cmd->require_subcommand(1);
  auto* br_train_cmd = base_cmd->add_subcommand("br-train", "Train one classifier per label");
  add_train_flags(br_train_cmd, br_args);
  auto* br_eval_cmd = base_cmd->add_subcommand("br-eval", "Score a binary-relevance checkpoint");
  br_eval_cmd->add_option("--checkpoint", br_eval_args.checkpoint)->required();
  br_eval_cmd->add_option("--data", br_eval_args.data)->required();
  br_eval_cmd->add_option("--out", br_eval_args.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) return cmd_train(train_args);
    if (*eval_cmd) return cmd_evaluate(eval_args);
    if (*pred_cmd) return cmd_predict(pred_args);
    if (*synth) return cmd_synth(data_args);
    if (*shuffle) return cmd_shuffle(data_args);
    if (*topk) return cmd_remove_top_k(data_args);
    if (*uncorr) return cmd_uncorrelated(data_args);
    if (*split_cmd) return cmd_split(data_args);
    if (*stats) return cmd_stats(data_args);
    if (*br_train_cmd) return cmd_br_train(br_args);
    if (*br_eval_cmd) return cmd_evaluate(br_eval_args, "br");
  } catch (const RunFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const CorpusError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 1;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
