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

#include <string_view>

namespace anyword::textgraph::lexdata {

extern const std::string_view kDeterminers;
extern const std::string_view kFunctionWords;
extern const std::string_view kAttributeNouns;
extern const std::string_view kNouns;
extern const std::string_view kAdjectives;
extern const std::string_view kVerbs;
extern const std::string_view kIrregularVerbs;
extern const std::string_view kIngNouns;
extern const std::string_view kFrameNouns;

}  // namespace anyword::textgraph::lexdata
