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
#include <string>
#include <vector>

namespace anyword {

// One embedding vector per expression token. Only trainable vectors may be
// changed by the optimiser.
struct EmbeddingSet {
  std::size_t width = 0;
  std::vector<std::vector<double>> vectors;
  std::vector<bool> trainable;

  std::size_t size() const { return vectors.size(); }
  std::size_t trainable_count() const;
  // Content hash over width, vectors and the trainable mask (hex string).
  std::string fingerprint() const;

  bool operator==(const EmbeddingSet&) const = default;
};

}  // namespace anyword
