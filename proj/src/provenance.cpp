#include "seq2set/provenance.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "seq2set/hash.hpp"

namespace seq2set {

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a64(ss.str()));
}

nlohmann::ordered_json Provenance::to_json() const {
  nlohmann::ordered_json j;
  j["operation"] = operation;
  j["parameters"] = parameters;
  j["seed"] = seed;
  j["inputs"] = nlohmann::ordered_json::array();
  for (const auto& in : inputs) {
    j["inputs"].push_back({{"path", in}, {"fnv1a64", file_digest(in)}});
  }
  j["outputs"] = outputs;
  return j;
}

void write_provenance(const std::filesystem::path& dir, const Provenance& p) {
  std::ofstream out(dir / "provenance.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / "provenance.json").string());
  out << p.to_json().dump(2) << "\n";
}

}  // namespace seq2set
