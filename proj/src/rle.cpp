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

#include "anyword/rle.hpp"

#include <algorithm>
#include <cmath>

namespace anyword::rle {

BinaryMask decode(const std::vector<std::uint32_t>& counts, std::size_t height, std::size_t width) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total != static_cast<std::uint64_t>(height) * width) {
    throw Error(ErrorCode::kLengthMismatch, "run lengths sum to " + std::to_string(total) + ", expected " +
                                                std::to_string(height * width));
  }
  BinaryMask mask(height, width, Frame::kImage);
  std::size_t pos = 0;
  bool fg = false;
  for (auto run : counts) {
    if (fg) {
      for (std::size_t i = pos; i < pos + run; ++i) mask.set(i % height, i / height);
    }
    pos += run;
    fg = !fg;
  }
  return mask;
}

std::vector<std::uint32_t> encode(const BinaryMask& mask) {
  std::vector<std::uint32_t> counts;
  bool cur = false;
  std::uint32_t run = 0;
  for (std::size_t c = 0; c < mask.cols(); ++c) {
    for (std::size_t r = 0; r < mask.rows(); ++r) {
      const bool v = mask.at(r, c);
      if (v != cur) {
        counts.push_back(run);
        run = 0;
        cur = v;
      }
      ++run;
    }
  }
  counts.push_back(run);
  return counts;
}

std::string compress(const std::vector<std::uint32_t>& counts) {
  std::string out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    long long x = counts[i];
    if (i > 2) x -= static_cast<long long>(counts[i - 2]);
    bool more = true;
    while (more) {
      long long c = x & 0x1f;
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      out.push_back(static_cast<char>(c + 48));
    }
  }
  return out;
}

std::vector<std::uint32_t> decompress(std::string_view text) {
  std::vector<std::uint32_t> counts;
  std::size_t p = 0;
  while (p < text.size()) {
    long long x = 0;
    int k = 0;
    bool more = true;
    while (more) {
      if (p >= text.size()) throw Error(ErrorCode::kLengthMismatch, "truncated compressed RLE");
      const long long c = static_cast<long long>(text[p]) - 48;
      if (c < 0 || c > 63) throw Error(ErrorCode::kLengthMismatch, "invalid character in compressed RLE");
      x |= (c & 0x1f) << (5 * k);
      more = (c & 0x20) != 0;
      ++p;
      ++k;
      if (!more && (c & 0x10)) x |= -1LL << (5 * k);
    }
    if (counts.size() > 2) x += static_cast<long long>(counts[counts.size() - 2]);
    if (x < 0) throw Error(ErrorCode::kLengthMismatch, "negative run in compressed RLE");
    counts.push_back(static_cast<std::uint32_t>(x));
  }
  return counts;
}

BinaryMask rasterize_polygon(const std::vector<double>& xy, std::size_t height, std::size_t width) {
  if (xy.size() < 6 || xy.size() % 2 != 0) throw Error(ErrorCode::kInvalidArgument, "polygon needs at least 3 vertices");
  BinaryMask mask(height, width, Frame::kImage);
  const std::size_t n = xy.size() / 2;
  std::vector<double> crossings;
  for (std::size_t y = 0; y < height; ++y) {
    const double py = static_cast<double>(y) + 0.5;
    crossings.clear();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const double yi = xy[2 * i + 1], yj = xy[2 * j + 1];
      if ((yi > py) != (yj > py)) {
        const double xi = xy[2 * i], xj = xy[2 * j];
        crossings.push_back(xi + (py - yi) * (xj - xi) / (yj - yi));
      }
    }
    std::sort(crossings.begin(), crossings.end());
    for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
      // Pixel x is inside when x + 0.5 lies in [a, b).
      const double a = crossings[k] - 0.5;
      const double b = crossings[k + 1] - 0.5;
      const long long x0 = std::max(0LL, static_cast<long long>(std::ceil(a)));
      const long long x1 = std::min(static_cast<long long>(width), static_cast<long long>(std::ceil(b)));
      for (long long x = x0; x < x1; ++x) mask.set(y, static_cast<std::size_t>(x));
    }
  }
  return mask;
}

}  // namespace anyword::rle
