#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "seq2set/checkpoint.hpp"
#include "seq2set/config.hpp"

namespace seq2set {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string config_error(const json& doc) {
  try {
    parse_run_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

json minimal() { return json{{"data", {{"train", "train.jsonl"}}}}; }

TEST(RunConfig, DefaultsFollowTheReferenceSetup) {
  RunConfig c = parse_run_config(minimal());
  EXPECT_EQ(c.training.learning_rate, 3e-4);
  EXPECT_EQ(c.training.lr_decay, 0.5);
  EXPECT_EQ(c.training.batch_size, 64u);
  EXPECT_EQ(c.training.clip_norm, 10.0);
  EXPECT_EQ(c.training.val_interval, 100u);
  EXPECT_EQ(c.architecture.embed_size, 256u);
  EXPECT_EQ(c.architecture.encoder_layers, 2u);
  EXPECT_EQ(c.architecture.decoder_layers, 3u);
  EXPECT_EQ(c.architecture.encoder_hidden, 256u);
  EXPECT_EQ(c.architecture.decoder_hidden, 512u);
  EXPECT_EQ(c.data.vocab_cap, 50000u);
  EXPECT_EQ(c.data.max_text_length, 500u);
}

TEST(RunConfig, UnknownKeysNameTheField) {
  json d = minimal();
  d["training"]["lamda"] = 0.5;
  EXPECT_NE(config_error(d).find("training.lamda"), std::string::npos);
  d = minimal();
  d["experiment"] = {{"br", {{"thresh", 0.4}}}};
  EXPECT_NE(config_error(d).find("experiment.br.thresh"), std::string::npos);
  d = minimal();
  d["model"] = json::object();
  EXPECT_NE(config_error(d).find("model"), std::string::npos);
}

TEST(RunConfig, FieldLevelDiagnostics) {
  json d = minimal();
  d["training"]["lambda"] = 1.5;
  EXPECT_NE(config_error(d).find("training.lambda"), std::string::npos);
  d = minimal();
  d["training"]["batch_size"] = -3;
  EXPECT_NE(config_error(d).find("training.batch_size"), std::string::npos);
  d = minimal();
  d["training"]["dropout"] = "high";
  EXPECT_NE(config_error(d).find("training.dropout"), std::string::npos);
  d = minimal();
  d["architecture"]["vocab_size"] = 10;
  EXPECT_NE(config_error(d).find("architecture.vocab_size"), std::string::npos);
  d = minimal();
  d["data"]["corpus"] = "all.jsonl";
  EXPECT_NE(config_error(d).find("data"), std::string::npos);
  d = minimal();
  d["architecture"]["variant"] = "simplified";
  d["training"]["inference_decoder"] = "sequence";
  EXPECT_NE(config_error(d).find("inference_decoder"), std::string::npos);
  d = minimal();
  d["data"]["label_order"] = "alphabetical";
  EXPECT_NE(config_error(d).find("data.label_order"), std::string::npos);
  d = minimal();
  d["experiment"] = {{"preset", "seq2tree"}};
  EXPECT_NE(config_error(d).find("seq2tree"), std::string::npos);
}

TEST(RunConfig, PresetThenExplicitKeys) {
  json d = minimal();
  d["experiment"] = {{"preset", "seq2seq"}};
  RunConfig c = parse_run_config(d);
  EXPECT_EQ(c.training.lambda, 0.0);
  EXPECT_EQ(c.training.inference, InferenceDecoder::kSequence);
  d["training"]["lambda"] = 0.3;
  EXPECT_EQ(parse_run_config(d).training.lambda, 0.3);
  RunConfig o = parse_run_config(d, std::string("seq2set_simplified"));
  EXPECT_EQ(o.architecture.variant, Variant::kSimplified);
  EXPECT_EQ(o.training.inference, InferenceDecoder::kSet);
  EXPECT_EQ(o.experiment.preset, "seq2set_simplified");
}

TEST(RunConfig, ResolvedDocumentRoundTrips) {
  json d = minimal();
  d["experiment"] = {{"preset", "seq2set_full"}, {"remove_top_k", 3}, {"uncorrelated_max_corr", 0.28}};
  d["training"] = {{"seed", 17}, {"rl_samples", 2}, {"d2_memory_mode", "free_running"}};
  d["data"]["split_ratios"] = {0.7, 0.2, 0.1};
  RunConfig c = parse_run_config(d);
  const auto resolved = to_json(c);
  RunConfig back = parse_run_config(json::parse(resolved.dump()));
  EXPECT_EQ(to_json(back).dump(), resolved.dump());
  EXPECT_EQ(config_hash(back), config_hash(c));
  back.training.seed = 18;
  EXPECT_NE(config_hash(back), config_hash(c));
}

TEST(SynthSpecConfig, StrictAndValidated) {
  SynthSpec s = parse_synth_spec(json{{"num_samples", 10}, {"correlation", "tree"}});
  EXPECT_EQ(s.num_samples, 10u);
  EXPECT_EQ(s.correlation, SynthSpec::Correlation::kTree);
  EXPECT_THROW(parse_synth_spec(json{{"samples", 10}}), ConfigError);
  EXPECT_THROW(parse_synth_spec(json{{"num_labels", 1}}), ConfigError);
  const SynthSpec back = parse_synth_spec(json::parse(to_json(s).dump()));
  EXPECT_EQ(to_json(back).dump(), to_json(s).dump());
}

class Checkpoint : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("seq2set_ckpt_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static ArchConfig arch() {
    ArchConfig c;
    c.vocab_size = Vocabulary::kReserved + 3;
    c.num_labels = 2;
    c.embed_size = 3;
    c.encoder_layers = 1;
    c.encoder_hidden = 2;
    c.decoder_layers = 1;
    c.decoder_hidden = 3;
    return c;
  }

  fs::path dir_;
  Vocabulary vocab_{std::vector<std::string>{"a", "b", "c"}, {5, 3, 1}};
  LabelVocabulary labels_{std::vector<std::string>{"X", "Y"}};
};

TEST_F(Checkpoint, RoundTripIsExact) {
  Seq2SetModel<float> m(arch(), 3);
  CheckpointInfo info{"seq2set", 120, 0.75, {{"config_hash", "abc"}}};
  save_checkpoint(dir_, m, vocab_, labels_, info);
  EXPECT_EQ(fs::file_size(dir_ / "params.bin"), 4 * m.params().scalar_count());
  LoadedModel l = load_checkpoint(dir_);
  ASSERT_EQ(l.model.params().count(), m.params().count());
  for (std::size_t i = 0; i < m.params().count(); ++i) {
    EXPECT_EQ(l.model.params().at(i).values, m.params().at(i).values) << m.params().name(i);
  }
  EXPECT_EQ(l.vocab, vocab_);
  EXPECT_EQ(l.vocab.count(l.vocab.id("a")), 5u);
  EXPECT_EQ(l.labels, labels_);
  EXPECT_EQ(l.info.step, 120u);
  EXPECT_EQ(l.info.val_micro_f1, 0.75);
  EXPECT_EQ(l.info.extra["config_hash"], "abc");
  const std::vector<int> toks = {4, 5, 6, 1};
  EXPECT_EQ(greedy_decode(l.model, toks, 4).symbols, greedy_decode(m, toks, 4).symbols);
  EXPECT_EQ(checkpoint_kind(dir_), "seq2set");
}

TEST_F(Checkpoint, ParamsAreLittleEndianFloat32) {
  Seq2SetModel<float> m(arch(), 3);
  m.params().at(0)[0] = 1.0f;  // 0x3f800000
  save_checkpoint(dir_, m, vocab_, labels_, {"seq2set"});
  std::ifstream in(dir_ / "params.bin", std::ios::binary);
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  EXPECT_EQ(b[0], 0x00);
  EXPECT_EQ(b[1], 0x00);
  EXPECT_EQ(b[2], 0x80);
  EXPECT_EQ(b[3], 0x3f);
}

void rewrite(const fs::path& p, const std::function<void(std::string&)>& edit) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string s = ss.str();
  in.close();
  edit(s);
  std::ofstream(p, std::ios::binary) << s;
}

TEST_F(Checkpoint, RejectsTampering) {
  Seq2SetModel<float> m(arch(), 3);
  auto fresh = [&] {
    fs::remove_all(dir_);
    save_checkpoint(dir_, m, vocab_, labels_, {"seq2set"});
  };
  fresh();
  rewrite(dir_ / "params.bin", [](std::string& s) { s.pop_back(); });
  EXPECT_THROW(load_checkpoint(dir_), CheckpointError);
  fresh();
  rewrite(dir_ / "vocab.txt", [](std::string& s) { s += "d\t1\n"; });
  EXPECT_THROW(load_checkpoint(dir_), CheckpointError);
  fresh();
  rewrite(dir_ / "metadata.json", [](std::string& s) {
    s.replace(s.find("encoder.embedding"), 17, "encoder.embeddinG");
  });
  EXPECT_THROW(load_checkpoint(dir_), CheckpointError);
  fresh();
  rewrite(dir_ / "metadata.json", [](std::string& s) {
    s.replace(s.find("\"embed_size\": 3"), 15, "\"embed_size\": 4");
  });
  EXPECT_THROW(load_checkpoint(dir_), CheckpointError);
  fresh();
  EXPECT_THROW(load_br_checkpoint(dir_), CheckpointError);
  EXPECT_THROW(load_checkpoint(dir_ / "missing"), CheckpointError);
}

TEST_F(Checkpoint, BinaryRelevanceRoundTrip) {
  BRModel m;
  m.vocab_size = vocab_.size();
  m.num_labels = 2;
  m.threshold = 0.4;
  for (std::size_t i = 0; i < 2 * m.vocab_size; ++i) m.weights.push_back(0.25 * static_cast<double>(i) - 1.0);
  m.bias = {0.5, -std::numeric_limits<double>::infinity()};
  save_br_checkpoint(dir_, m, vocab_, labels_, {"br"});
  EXPECT_EQ(checkpoint_kind(dir_), "br");
  LoadedBR l = load_br_checkpoint(dir_);
  EXPECT_TRUE(l.model == m);  // every value is exact in float32
  EXPECT_THROW(load_checkpoint(dir_), CheckpointError);
}

}  // namespace
}  // namespace seq2set
