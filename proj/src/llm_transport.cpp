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

#include <httplib.h>

#include <json.hpp>

#include "anyword/errors.hpp"
#include "anyword/textgraph.hpp"

namespace anyword::textgraph {

namespace {

class HttpLlmTransport : public LlmTransport {
 public:
  HttpLlmTransport(std::string base, std::string path, std::string model)
      : client_(base), path_(std::move(path)), model_(std::move(model)) {
    client_.set_connection_timeout(5);
    client_.set_read_timeout(120);
  }

  std::string complete(const std::string& prompt) override {
    nlohmann::json body = {
        {"model", model_},
        {"temperature", 0},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
    };
    auto res = client_.Post(path_, body.dump(), "application/json");
    if (!res) {
      throw Error(ErrorCode::kBackendUnavailable,
                  "LLM endpoint unreachable: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw Error(ErrorCode::kBackendUnavailable, "LLM endpoint returned HTTP " + std::to_string(res->status),
                  res->body);
    }
    try {
      auto reply = nlohmann::json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kBackendUnavailable, std::string("unexpected LLM response: ") + e.what(),
                  res->body);
    }
  }

 private:
  httplib::Client client_;
  std::string path_;
  std::string model_;
};

}  // namespace

std::shared_ptr<LlmTransport> make_http_llm_transport(const std::string& url, std::string model) {
  constexpr std::string_view kScheme = "http://";
  if (!url.starts_with(kScheme)) {
    throw Error(ErrorCode::kBackendUnavailable, "only http:// LLM endpoints are supported: " + url);
  }
  const auto slash = url.find('/', kScheme.size());
  std::string base = slash == std::string::npos ? url : url.substr(0, slash);
  std::string path = slash == std::string::npos ? "/v1/chat/completions" : url.substr(slash);
  return std::make_shared<HttpLlmTransport>(std::move(base), std::move(path), std::move(model));
}

}  // namespace anyword::textgraph
