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

// Column-major run-length mask encoding as used by COCO-family annotations.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "anyword/mask.hpp"

namespace anyword::rle {

// Alternating runs starting with background, column-major. Throws
// kLengthMismatch unless the runs sum to height * width.
BinaryMask decode(const std::vector<std::uint32_t>& counts, std::size_t height, std::size_t width);
std::vector<std::uint32_t> encode(const BinaryMask& mask);

// COCO compressed-string form of the counts (LEB128-like, delta coded).
std::string compress(const std::vector<std::uint32_t>& counts);
std::vector<std::uint32_t> decompress(std::string_view text);

// Even-odd fill of a polygon given as [x0, y0, x1, y1, ...] in pixel
// coordinates; a pixel is inside when its centre is.
BinaryMask rasterize_polygon(const std::vector<double>& xy, std::size_t height, std::size_t width);

}  // namespace anyword::rle
