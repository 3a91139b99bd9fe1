#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "degen/network.hpp"

namespace degen::detail {

// Offsets into the flat parameter vector. Matrices are column-major (rows x cols).
struct Layout {
  int in = 0, embed = 0, hidden = 0;
  std::size_t w_embed = 0;  // embed x in
  std::size_t b_embed = 0;
  std::size_t w_x = 0;  // 4H x embed, gate order i f g o
  std::size_t w_h = 0;  // 4H x H
  std::size_t b_gate = 0;
  std::vector<std::size_t> w_head;  // A_k x H
  std::vector<std::size_t> b_head;
  std::vector<int> head_size;
  std::vector<int> head_offset;  // into the concatenated logits
  std::size_t w_value = 0;       // 1 x H
  std::size_t b_value = 0;
  std::size_t total = 0;
  int logits = 0;

  explicit Layout(const NetworkShape& shape);
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void validate_shape(const NetworkShape& shape);

}  // namespace degen::detail
