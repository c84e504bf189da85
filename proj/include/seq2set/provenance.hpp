#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace seq2set {

struct Provenance {
  std::string operation;
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;  // paths as given
  nlohmann::ordered_json outputs = nlohmann::ordered_json::object();

  nlohmann::ordered_json to_json() const;
};

// Writes <dir>/provenance.json. Input entries carry an FNV-1a digest of the
// file contents so a derived dataset can be traced to exact bytes.
void write_provenance(const std::filesystem::path& dir, const Provenance& p);

std::string file_digest(const std::filesystem::path& path);

}  // namespace seq2set
