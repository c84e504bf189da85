#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "seq2set/data.hpp"

namespace seq2set {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("seq2set_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Exit status; stderr lands in err_.
  int run(const std::string& args) {
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = std::string(SEQ2SET_CLI) + " " + args + " > " + (dir_ / "stdout.txt").string() +
                            " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    err_ = slurp(err);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  std::string synth(const std::string& name, json spec, int seed = 1) {
    std::ofstream(path(name + ".spec.json")) << spec.dump();
    EXPECT_EQ(run("data synth --spec " + path(name + ".spec.json").string() + " --seed " +
                  std::to_string(seed) + " --out " + path(name).string()),
              0)
        << err_;
    return (path(name) / "corpus.jsonl").string();
  }

  void write_config(const std::string& name, const json& doc) { std::ofstream(path(name)) << doc.dump(2); }

  static json small_model(std::size_t width) {
    return {{"embed_size", width},   {"encoder_layers", 1},     {"encoder_hidden", width},
            {"decoder_layers", 1},   {"decoder_hidden", width}, {"attention_size", width}};
  }

  fs::path dir_;
  std::string err_;
};

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("train --out x"), 1);
  EXPECT_EQ(run("train --config c.json --out x --preset seq2tree"), 1);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, MissingDataFileLeavesNoOutputs) {
  write_config("run.json", {{"data", {{"train", path("absent.jsonl").string()}}}});
  EXPECT_EQ(run("train --config " + path("run.json").string() + " --out " + path("out").string()), 1);
  EXPECT_NE(err_.find("absent.jsonl"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("out")));
}

TEST_F(Cli, InvalidConfigNamesTheField) {
  const std::string corpus = synth("syn", {{"num_samples", 20}});
  write_config("run.json", {{"data", {{"train", corpus}}}, {"training", {{"batch_sise", 4}}}});
  EXPECT_EQ(run("train --config " + path("run.json").string() + " --out " + path("out").string()), 1);
  EXPECT_NE(err_.find("training.batch_sise"), std::string::npos);
  write_config("bad.json", {{"data", {{"train", corpus}}}, {"training", {{"dropout", 2.0}}}});
  EXPECT_EQ(run("train --config " + path("bad.json").string() + " --out " + path("out").string()), 1);
  EXPECT_NE(err_.find("training.dropout"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("out")));
}

TEST_F(Cli, DataCommandsWriteNewDirectoriesWithProvenance) {
  const json spec = {{"num_samples", 300}, {"num_labels", 10}, {"correlation", "tree"}};
  const std::string corpus = synth("a", spec, 4);
  synth("b", spec, 4);
  EXPECT_EQ(slurp(corpus), slurp(path("b") / "corpus.jsonl"));
  const json prov = json::parse(slurp(path("a") / "provenance.json"));
  EXPECT_EQ(prov["operation"], "synth");
  EXPECT_EQ(prov["seed"], 4);
  const std::string before = slurp(corpus);

  ASSERT_EQ(run("data remove-top-k --in " + corpus + " --k 3 --out " + path("top").string()), 0) << err_;
  EXPECT_EQ(label_frequencies(load_corpus(path("top") / "corpus.jsonl")).size(),
            label_frequencies(load_corpus(corpus)).size() - 3);

  ASSERT_EQ(run("data uncorrelated --in " + corpus + " --max-corr 0.28 --out " + path("unc").string()), 0)
      << err_;
  const json up = json::parse(slurp(path("unc") / "provenance.json"));
  EXPECT_LE(up["outputs"]["max_abs_phi"].get<double>(), 0.28);
  EXPECT_EQ(up["parameters"]["max_corr"], 0.28);

  ASSERT_EQ(run("data split --in " + corpus + " --seed 2 --out " + path("split").string()), 0) << err_;
  EXPECT_EQ(load_corpus(path("split") / "train.jsonl").size(), 240u);
  EXPECT_EQ(load_corpus(path("split") / "val.jsonl").size(), 30u);

  ASSERT_EQ(run("data shuffle-labels --in " + corpus + " --seed 2 --out " + path("shuf").string()), 0);
  const Corpus shuffled = load_corpus(path("shuf") / "corpus.jsonl");
  const Corpus original = load_corpus(corpus);
  ASSERT_EQ(shuffled.size(), original.size());
  for (std::size_t i = 0; i < original.size(); ++i) EXPECT_EQ(shuffled[i].labels, original[i].labels);

  ASSERT_EQ(run("data stats --in " + corpus), 0);
  EXPECT_EQ(json::parse(slurp(path("stdout.txt")))["samples"], 300);

  // Existing outputs are never overwritten; inputs are never touched.
  EXPECT_EQ(run("data remove-top-k --in " + corpus + " --k 2 --out " + path("top").string()), 1);
  EXPECT_EQ(run("data remove-top-k --in " + corpus + " --k 10 --out " + path("top2").string()), 1);
  EXPECT_FALSE(fs::exists(path("top2")));
  EXPECT_EQ(slurp(corpus), before);
}

TEST_F(Cli, TrainEvaluateRoundTrip) {
  const std::string corpus = synth("syn", {{"num_samples", 16},
                                            {"num_labels", 4},
                                            {"vocab_size", 40},
                                            {"min_length", 6},
                                            {"max_length", 10}});
  write_config("run.json",
               {{"data", {{"train", corpus}}},
                {"experiment", {{"preset", "seq2set_full"}}},
                {"architecture", small_model(16)},
                {"training",
                 {{"learning_rate", 3e-3}, {"lr_decay", 1.0}, {"batch_size", 4}, {"max_epochs", 150},
                  {"dropout", 0.0}, {"val_interval", 50}, {"rl_samples", 4}}}});
  ASSERT_EQ(run("train --config " + path("run.json").string() + " --out " + path("run").string() +
                " --seed 3"),
            0)
      << err_;
  for (const char* f : {"config.json", "train_log.jsonl", "summary.json", "checkpoint/metadata.json",
                        "checkpoint/params.bin", "checkpoint/vocab.txt", "checkpoint/labels.txt"}) {
    EXPECT_TRUE(fs::exists(path("run") / f)) << f;
  }
  const json resolved = json::parse(slurp(path("run") / "config.json"));
  EXPECT_EQ(resolved["training"]["seed"], 3);
  EXPECT_EQ(resolved["training"]["lambda"], 0.8);
  std::istringstream log(slurp(path("run") / "train_log.jsonl"));
  std::size_t lines = 0;
  for (std::string line; std::getline(log, line); ++lines) {
    const json ev = json::parse(line);
    for (const char* k : {"step", "mle_loss", "rl_loss", "hamming_loss", "micro_precision",
                          "micro_recall", "micro_f1", "learning_rate"}) {
      EXPECT_TRUE(ev.contains(k)) << k;
    }
  }
  EXPECT_EQ(lines, 12u);  // 150 epochs x 4 batches, every 50 updates

  const std::string ckpt = (path("run") / "checkpoint").string();
  ASSERT_EQ(run("evaluate --checkpoint " + ckpt + " --data " + corpus + " --out " + path("e1").string()), 0)
      << err_;
  const std::string report = slurp(path("e1") / "report.json");
  EXPECT_GE(json::parse(report)["micro_f1"].get<double>(), 0.99);
  EXPECT_NE(report.find("\"micro_f1\""), std::string::npos);
  for (const std::string key : {"hamming_loss", "micro_precision", "micro_recall", "micro_f1"}) {
    const double v = json::parse(report)[key].get<double>();
    EXPECT_EQ(std::round(v * 1e4) / 1e4, v) << key;
  }
  std::istringstream preds(slurp(path("e1") / "predictions.jsonl"));
  std::size_t n = 0;
  for (std::string line; std::getline(preds, line); ++n) {
    const json rec = json::parse(line);
    ASSERT_TRUE(rec.contains("predicted"));
    // One log-probability per emitted label, plus eos unless truncated.
    const std::size_t steps = rec["step_log_probs"].size();
    EXPECT_TRUE(steps == rec["predicted"].size() + 1 || steps == rec["predicted"].size());
  }
  EXPECT_EQ(n, 16u);

  ASSERT_EQ(run("evaluate --labels-shuffled --seed 9 --checkpoint " + ckpt + " --data " + corpus +
                " --out " + path("e2").string()),
            0);
  EXPECT_EQ(slurp(path("e2") / "report.json"), report);

  // Labels the checkpoint does not know.
  const std::string other = synth("other", {{"num_samples", 20}, {"num_labels", 8}, {"vocab_size", 60}});
  EXPECT_EQ(run("evaluate --checkpoint " + ckpt + " --data " + other + " --out " + path("e3").string()), 1);
  EXPECT_NE(err_.find("vocabulary mismatch"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("e3")));

  std::ofstream(path("texts.jsonl")) << "{\"id\": \"q\", \"text\": \"w0001 w0002\"}\n";
  ASSERT_EQ(run("predict --checkpoint " + ckpt + " --data " + path("texts.jsonl").string() + " --out " +
                path("p").string()),
            0)
      << err_;
  EXPECT_EQ(json::parse(slurp(path("p") / "predictions.jsonl"))["id"], "q");
}

TEST_F(Cli, DivergenceExitsTwo) {
  const std::string corpus = synth("syn", {{"num_samples", 16}, {"num_labels", 4}, {"vocab_size", 40}});
  write_config("run.json", {{"data", {{"train", corpus}}},
                            {"architecture", small_model(4)},
                            {"training", {{"learning_rate", 1e30}, {"batch_size", 4}, {"val_interval", 1}}}});
  EXPECT_EQ(run("train --config " + path("run.json").string() + " --out " + path("run").string()), 2);
  EXPECT_NE(err_.find("diverged"), std::string::npos);
  const json summary = json::parse(slurp(path("run") / "summary.json"));
  EXPECT_TRUE(summary["diverged"].get<bool>());
  EXPECT_FALSE(fs::exists(path("run") / "checkpoint.tmp"));
}

TEST_F(Cli, BinaryRelevanceBaseline) {
  const std::string corpus = synth("syn", {{"num_samples", 200}, {"num_labels", 5}, {"signal", 0.8}});
  write_config("run.json", {{"data", {{"corpus", corpus}}}, {"experiment", {{"preset", "br"}}}});
  EXPECT_EQ(run("train --config " + path("run.json").string() + " --out " + path("bad").string()), 1);
  ASSERT_EQ(run("baseline br-train --config " + path("run.json").string() + " --out " + path("br").string()), 0)
      << err_;
  const json summary = json::parse(slurp(path("br") / "summary.json"));
  EXPECT_GT(summary["test"]["micro_f1"].get<double>(), 0.5);
  ASSERT_EQ(run("baseline br-eval --checkpoint " + (path("br") / "checkpoint").string() + " --data " +
                corpus + " --out " + path("eval").string()),
            0)
      << err_;
  EXPECT_TRUE(fs::exists(path("eval") / "report.json"));
}

}  // namespace
}  // namespace seq2set
