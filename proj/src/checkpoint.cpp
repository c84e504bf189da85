#include "seq2set/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "seq2set/config.hpp"

namespace seq2set {

namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr int kFormatVersion = 1;

struct Blob {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw CheckpointError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + p.string());
  out << bytes;
  if (!out) throw CheckpointError("write failed for " + p.string());
}

void put_f32(std::string& out, float v) {
  const auto u = std::bit_cast<std::uint32_t>(v);
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((u >> (8 * b)) & 0xff));
}

float get_f32(const std::string& in, std::size_t at) {
  std::uint32_t u = 0;
  for (int b = 0; b < 4; ++b) {
    u |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + b])) << (8 * b);
  }
  return std::bit_cast<float>(u);
}

void write_container(const fs::path& dir, const std::string& kind, const ojson& architecture,
                     const std::vector<Blob>& blobs, const Vocabulary& vocab,
                     const LabelVocabulary& labels, const CheckpointInfo& info) {
  fs::create_directories(dir);
  std::string bin;
  ojson manifest = ojson::array();
  for (const Blob& b : blobs) {
    manifest.push_back({{"name", b.name},
                        {"shape", b.shape},
                        {"offset", bin.size()},
                        {"count", b.values.size()}});
    for (float v : b.values) put_f32(bin, v);
  }
  ojson meta;
  meta["format_version"] = kFormatVersion;
  meta["kind"] = kind;
  meta["architecture"] = architecture;
  meta["vocab_hash"] = vocab.hash();
  meta["labels_hash"] = labels.hash();
  meta["step"] = info.step;
  meta["val_micro_f1"] = info.val_micro_f1;
  meta["extra"] = info.extra;
  meta["manifest"] = manifest;
  write_file(dir / "params.bin", bin);
  write_file(dir / "vocab.txt", vocab.serialize());
  write_file(dir / "labels.txt", labels.serialize());
  write_file(dir / "metadata.json", meta.dump(2) + "\n");
}

struct Container {
  nlohmann::json meta;
  std::vector<Blob> blobs;
  Vocabulary vocab;
  LabelVocabulary labels;
  CheckpointInfo info;
};

Container read_container(const fs::path& dir, const std::string& expected_kind) {
  Container c;
  try {
    c.meta = nlohmann::json::parse(read_file(dir / "metadata.json"));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(dir.string() + "/metadata.json: " + e.what());
  }
  try {
    if (c.meta.at("format_version").get<int>() != kFormatVersion) {
      throw CheckpointError("unsupported checkpoint format version");
    }
    c.info.kind = c.meta.at("kind").get<std::string>();
    if (c.info.kind != expected_kind) {
      throw CheckpointError("checkpoint " + dir.string() + " holds a '" + c.info.kind +
                            "' model, expected '" + expected_kind + "'");
    }
    c.info.step = c.meta.at("step").get<std::size_t>();
    c.info.val_micro_f1 = c.meta.at("val_micro_f1").get<double>();
    c.info.extra = c.meta.at("extra");
    c.vocab = Vocabulary::deserialize(read_file(dir / "vocab.txt"));
    c.labels = LabelVocabulary::deserialize(read_file(dir / "labels.txt"));
    if (c.vocab.hash() != c.meta.at("vocab_hash").get<std::string>()) {
      throw CheckpointError("vocab.txt does not match the hash in metadata.json");
    }
    if (c.labels.hash() != c.meta.at("labels_hash").get<std::string>()) {
      throw CheckpointError("labels.txt does not match the hash in metadata.json");
    }
    const std::string bin = read_file(dir / "params.bin");
    std::size_t expected_offset = 0;
    for (const auto& e : c.meta.at("manifest")) {
      Blob b;
      b.name = e.at("name").get<std::string>();
      b.shape = e.at("shape").get<Shape>();
      const auto offset = e.at("offset").get<std::size_t>();
      const auto count = e.at("count").get<std::size_t>();
      if (count != element_count(b.shape)) {
        throw CheckpointError("manifest entry " + b.name + ": count disagrees with shape");
      }
      if (offset != expected_offset || offset + 4 * count > bin.size()) {
        throw CheckpointError("manifest entry " + b.name + " points outside params.bin");
      }
      b.values.resize(count);
      for (std::size_t i = 0; i < count; ++i) b.values[i] = get_f32(bin, offset + 4 * i);
      expected_offset = offset + 4 * count;
      c.blobs.push_back(std::move(b));
    }
    if (expected_offset != bin.size()) {
      throw CheckpointError("params.bin has " + std::to_string(bin.size() - expected_offset) +
                            " bytes not covered by the manifest");
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(dir.string() + "/metadata.json: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(dir.string() + ": " + e.what());
  }
  return c;
}

}  // namespace

std::string checkpoint_kind(const fs::path& dir) {
  try {
    return nlohmann::json::parse(read_file(dir / "metadata.json")).at("kind").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(dir.string() + "/metadata.json: " + e.what());
  }
}

void save_checkpoint(const fs::path& dir, const Seq2SetModel<float>& model,
                     const Vocabulary& vocab, const LabelVocabulary& labels,
                     const CheckpointInfo& info) {
  const ArchConfig& a = model.config();
  if (a.vocab_size != vocab.size() || a.num_labels != labels.size()) {
    throw CheckpointError("model dimensions disagree with the vocabularies being saved");
  }
  std::vector<Blob> blobs;
  const ParameterStore<float>& ps = model.params();
  for (std::size_t i = 0; i < ps.count(); ++i) {
    blobs.push_back({ps.name(i), ps.at(i).shape, ps.at(i).values});
  }
  write_container(dir, "seq2set", to_json(a), blobs, vocab, labels, info);
}

LoadedModel load_checkpoint(const fs::path& dir) {
  Container c = read_container(dir, "seq2set");
  ArchConfig arch;
  try {
    arch = parse_arch_config(c.meta.at("architecture"));
  } catch (const std::exception& e) {
    throw CheckpointError(dir.string() + ": architecture: " + e.what());
  }
  if (arch.vocab_size != c.vocab.size() || arch.num_labels != c.labels.size()) {
    throw CheckpointError(dir.string() + ": architecture disagrees with vocab.txt / labels.txt");
  }
  LoadedModel out{Seq2SetModel<float>::layout(arch), std::move(c.vocab), std::move(c.labels),
                  std::move(c.info)};
  ParameterStore<float>& ps = out.model.params();
  if (c.blobs.size() != ps.count()) {
    throw CheckpointError(dir.string() + ": manifest lists " + std::to_string(c.blobs.size()) +
                          " arrays, architecture needs " + std::to_string(ps.count()));
  }
  for (std::size_t i = 0; i < ps.count(); ++i) {
    const Blob& b = c.blobs[i];
    if (b.name != ps.name(i)) {
      throw CheckpointError(dir.string() + ": manifest entry " + std::to_string(i) + " is '" +
                            b.name + "', expected '" + ps.name(i) + "'");
    }
    if (b.shape != ps.at(i).shape) {
      throw CheckpointError(dir.string() + ": " + b.name + " has shape " + shape_string(b.shape) +
                            ", expected " + shape_string(ps.at(i).shape));
    }
    ps.at(i).values = b.values;
  }
  return out;
}

void save_br_checkpoint(const fs::path& dir, const BRModel& m, const Vocabulary& vocab,
                        const LabelVocabulary& labels, const CheckpointInfo& info) {
  if (m.vocab_size != vocab.size() || m.num_labels != labels.size()) {
    throw CheckpointError("BR model dimensions disagree with the vocabularies being saved");
  }
  std::vector<Blob> blobs;
  blobs.push_back({"br.weights", {m.num_labels, m.vocab_size},
                   std::vector<float>(m.weights.begin(), m.weights.end())});
  blobs.push_back({"br.bias", {m.num_labels}, std::vector<float>(m.bias.begin(), m.bias.end())});
  CheckpointInfo i = info;
  i.extra["threshold"] = m.threshold;
  ojson arch{{"vocab_size", m.vocab_size}, {"num_labels", m.num_labels}};
  write_container(dir, "br", arch, blobs, vocab, labels, i);
}

LoadedBR load_br_checkpoint(const fs::path& dir) {
  Container c = read_container(dir, "br");
  LoadedBR out;
  try {
    out.model.vocab_size = c.meta.at("architecture").at("vocab_size").get<std::size_t>();
    out.model.num_labels = c.meta.at("architecture").at("num_labels").get<std::size_t>();
    out.model.threshold = c.info.extra.at("threshold").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(dir.string() + "/metadata.json: " + e.what());
  }
  const Shape w{out.model.num_labels, out.model.vocab_size}, b{out.model.num_labels};
  if (c.blobs.size() != 2 || c.blobs[0].name != "br.weights" || c.blobs[0].shape != w ||
      c.blobs[1].name != "br.bias" || c.blobs[1].shape != b) {
    throw CheckpointError(dir.string() + ": BR manifest must hold br.weights " + shape_string(w) +
                          " and br.bias " + shape_string(b));
  }
  if (out.model.vocab_size != c.vocab.size() || out.model.num_labels != c.labels.size()) {
    throw CheckpointError(dir.string() + ": architecture disagrees with vocab.txt / labels.txt");
  }
  out.model.weights.assign(c.blobs[0].values.begin(), c.blobs[0].values.end());
  out.model.bias.assign(c.blobs[1].values.begin(), c.blobs[1].values.end());
  out.vocab = std::move(c.vocab);
  out.labels = std::move(c.labels);
  out.info = std::move(c.info);
  return out;
}

}  // namespace seq2set
