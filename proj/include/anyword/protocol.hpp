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

// Length-prefixed request/response framing for out-of-process denoiser and
// segmentor backends.
//
// Frame:  u32 LE payload length | u8 message type | body
// Tensor: u32 LE rank | rank x u32 LE dims | float32 LE data (row-major)

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "anyword/diffusion.hpp"
#include "anyword/segmentor.hpp"

namespace anyword::protocol {

enum class MessageType : std::uint8_t {
  kDenoiseRequest = 1,
  kDenoiseResponse = 2,
  kSegmentRequest = 3,
  kSegmentResponse = 4,
  kError = 255,
};

struct Frame {
  MessageType type = MessageType::kError;
  std::vector<std::uint8_t> body;
  bool operator==(const Frame&) const = default;
};

constexpr std::size_t kMaxFrameBytes = 256u << 20;

std::vector<std::uint8_t> encode_frame(const Frame& frame);
// Decodes exactly one frame occupying all of `bytes`. Throws kProtocolError.
Frame decode_frame(std::span<const std::uint8_t> bytes);

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

class Writer {
 public:
  Writer& u8(std::uint8_t v);
  Writer& u32(std::uint32_t v);
  Writer& u64(std::uint64_t v);
  Writer& f32(float v);
  Writer& string(const std::string& s);
  Writer& tensor(const Tensor& t);
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  std::string string();
  Tensor tensor();
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const;
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

class FrameTransport {
 public:
  virtual ~FrameTransport() = default;
  // Sends one request and waits for its response. Throws kBackendUnavailable.
  virtual Frame exchange(const Frame& request) = 0;
};

using Handler = std::function<Frame(const Frame&)>;

// Runs the handler in-process but still round-trips every frame through the
// byte codec.
class LoopbackTransport : public FrameTransport {
 public:
  explicit LoopbackTransport(Handler handler) : handler_(std::move(handler)) {}
  Frame exchange(const Frame& request) override;

 private:
  Handler handler_;
};

// One persistent connection; exchanges are serialised.
class TcpTransport : public FrameTransport {
 public:
  TcpTransport(std::string host, std::uint16_t port);
  ~TcpTransport() override;
  Frame exchange(const Frame& request) override;

 private:
  void connect_locked();
  std::string host_;
  std::uint16_t port_;
  int fd_ = -1;
  std::mutex mutex_;
};

// Parses "tcp://host:port". Throws kInvalidArgument.
std::pair<std::string, std::uint16_t> parse_tcp_uri(const std::string& uri);

// Accepts connections on 127.0.0.1 (or the given host) and answers frames
// with the handler, one thread per connection.
class TcpServer {
 public:
  TcpServer(Handler handler, std::uint16_t port = 0, const std::string& host = "127.0.0.1");
  ~TcpServer();
  std::uint16_t port() const { return port_; }
  // Blocks until stop() is called from another thread.
  void serve();
  // Starts serve() on a background thread.
  void start();
  void stop();

 private:
  Handler handler_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread thread_;
  std::vector<std::thread> workers_;
  std::mutex workers_mutex_;
};

Frame error_frame(const std::string& message);

// Handlers exposing a local backend over the protocol.
Handler make_denoiser_handler(std::shared_ptr<const diffusion::DenoiserBackend> backend);
Handler make_segmentor_handler(std::shared_ptr<const segmentor::PromptableSegmentor> backend);

// Denoiser proxy. Tensors travel as float32, so results are rounded.
class RemoteDenoiser : public diffusion::DenoiserBackend {
 public:
  RemoteDenoiser(std::shared_ptr<FrameTransport> transport, GridShape resolution = {16, 16},
                 std::string name = "remote-denoiser");
  diffusion::DenoiserOutput predict(const Latent& z, std::size_t t, const EmbeddingSet& v) const override;
  GridShape attention_resolution() const override { return resolution_; }
  std::string name() const override { return name_; }

 private:
  std::shared_ptr<FrameTransport> transport_;
  GridShape resolution_;
  std::string name_;
};

class RemoteSegmentor : public segmentor::PromptableSegmentor {
 public:
  RemoteSegmentor(std::shared_ptr<FrameTransport> transport, std::size_t max_concurrency = 1,
                  std::string name = "remote-segmentor");
  segmentor::ScoredMask run(const Image& image, const promptmine::MaskPrompt& prompt) const override;
  segmentor::SegmentorInfo info() const override { return {name_, {0, 0}, max_concurrency_}; }

 private:
  std::shared_ptr<FrameTransport> transport_;
  std::size_t max_concurrency_;
  std::string name_;
};

}  // namespace anyword::protocol
