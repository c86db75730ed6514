// Copyright 2026 The Anyword Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "anyword/grid.hpp"

namespace anyword {

// Coordinate system a mask lives in. Attention masks are at the denoiser's
// cross-attention resolution; image masks are at full pixel resolution.
enum class Frame { kAttention, kImage };

struct ImageSize {
  std::size_t width = 0;
  std::size_t height = 0;
  bool operator==(const ImageSize&) const = default;
};

// A cell index in some grid. Never carries image coordinates.
struct Cell {
  std::size_t row = 0;
  std::size_t col = 0;
  bool operator==(const Cell&) const = default;
};

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(std::size_t rows, std::size_t cols, Frame frame)
      : cells_(rows, cols, 0), frame_(frame) {}
  BinaryMask(Grid<std::uint8_t> cells, Frame frame) : cells_(std::move(cells)), frame_(frame) {
    for (auto& v : cells_) v = v ? 1 : 0;
  }

  std::size_t rows() const { return cells_.rows(); }
  std::size_t cols() const { return cells_.cols(); }
  GridShape shape() const { return cells_.shape(); }
  Frame frame() const { return frame_; }

  bool at(std::size_t r, std::size_t c) const { return cells_(r, c) != 0; }
  void set(std::size_t r, std::size_t c, bool v = true) { cells_(r, c) = v ? 1 : 0; }

  std::size_t count() const;
  bool any() const { return count() > 0; }
  std::vector<Cell> true_cells() const;

  const Grid<std::uint8_t>& cells() const { return cells_; }

  bool operator==(const BinaryMask&) const = default;

 private:
  Grid<std::uint8_t> cells_;
  Frame frame_ = Frame::kImage;
};

// Nearest-neighbour rescale of an attention-frame mask to the image frame.
BinaryMask upscale_to_image(const BinaryMask& mask, ImageSize image);

// Pixel-wise union; shapes must agree.
BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);

}  // namespace anyword
