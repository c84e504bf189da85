#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace seq2set {

// Encoded sample: token ids and label ids in training order.
struct Example {
  std::string id;
  std::vector<int> tokens;
  std::vector<std::size_t> labels;
};

}  // namespace seq2set
