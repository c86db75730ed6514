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

#include "anyword/embedding.hpp"

#include <algorithm>

#include "anyword/hash.hpp"

namespace anyword {

std::size_t EmbeddingSet::trainable_count() const {
  return static_cast<std::size_t>(std::count(trainable.begin(), trainable.end(), true));
}

std::string EmbeddingSet::fingerprint() const {
  Sha256 h;
  h.update_u64(width);
  h.update_u64(vectors.size());
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    h.update_u64(k < trainable.size() && trainable[k] ? 1 : 0);
    h.update_u64(vectors[k].size());
    for (double x : vectors[k]) h.update_f64(x);
  }
  return h.hex_digest();
}

}  // namespace anyword
