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

#include "anyword/mask.hpp"

#include <algorithm>

namespace anyword {

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

std::vector<Cell> BinaryMask::true_cells() const {
  std::vector<Cell> out;
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t c = 0; c < cols(); ++c) {
      if (at(r, c)) out.push_back({r, c});
    }
  }
  return out;
}

BinaryMask upscale_to_image(const BinaryMask& mask, ImageSize image) {
  if (mask.rows() == 0 || mask.cols() == 0 || image.width == 0 || image.height == 0) {
    throw Error(ErrorCode::kShapeMismatch, "cannot upscale an empty mask");
  }
  BinaryMask out(image.height, image.width, Frame::kImage);
  for (std::size_t y = 0; y < image.height; ++y) {
    std::size_t r = y * mask.rows() / image.height;
    for (std::size_t x = 0; x < image.width; ++x) {
      std::size_t c = x * mask.cols() / image.width;
      if (mask.at(r, c)) out.set(y, x);
    }
  }
  return out;
}

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  if (a.shape() != b.shape()) throw Error(ErrorCode::kShapeMismatch, "mask_union: shapes differ");
  BinaryMask out = a;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) {
      if (b.at(r, c)) out.set(r, c);
    }
  }
  return out;
}

}  // namespace anyword
