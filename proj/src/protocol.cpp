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

#include "anyword/protocol.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cstring>

#include "anyword/rle.hpp"

namespace anyword::protocol {
namespace {

void send_all(int fd, const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w < 0 && errno == EINTR) continue;
    if (w <= 0) throw Error(ErrorCode::kBackendUnavailable, std::string("send failed: ") + std::strerror(errno));
    data += w;
    n -= static_cast<std::size_t>(w);
  }
}

// Returns false on a clean end of stream before the first byte.
bool recv_all(int fd, std::uint8_t* data, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, data + got, n - got, 0);
    if (r < 0 && errno == EINTR) continue;
    if (r == 0 && got == 0) return false;
    if (r <= 0) throw Error(ErrorCode::kBackendUnavailable, "connection closed mid-frame");
    got += static_cast<std::size_t>(r);
  }
  return true;
}

bool read_frame(int fd, Frame& frame) {
  std::uint8_t head[4];
  if (!recv_all(fd, head, 4)) return false;
  const std::uint32_t len = static_cast<std::uint32_t>(head[0]) | static_cast<std::uint32_t>(head[1]) << 8 |
                            static_cast<std::uint32_t>(head[2]) << 16 | static_cast<std::uint32_t>(head[3]) << 24;
  if (len == 0 || len > kMaxFrameBytes) throw Error(ErrorCode::kProtocolError, "bad frame length");
  std::vector<std::uint8_t> bytes(4 + len);
  std::memcpy(bytes.data(), head, 4);
  if (!recv_all(fd, bytes.data() + 4, len)) throw Error(ErrorCode::kBackendUnavailable, "connection closed mid-frame");
  frame = decode_frame(bytes);
  return true;
}

void write_frame(int fd, const Frame& frame) {
  const auto bytes = encode_frame(frame);
  send_all(fd, bytes.data(), bytes.size());
}

Tensor latent_tensor(const Latent& z) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(z.channels), static_cast<std::uint32_t>(z.height),
            static_cast<std::uint32_t>(z.width)};
  t.data.assign(z.values.begin(), z.values.end());
  return t;
}

Latent tensor_latent(const Tensor& t) {
  if (t.dims.size() != 3) throw Error(ErrorCode::kProtocolError, "latent tensor must have rank 3");
  Latent z(t.dims[0], t.dims[1], t.dims[2]);
  if (t.data.size() != z.size()) throw Error(ErrorCode::kProtocolError, "latent tensor size mismatch");
  std::copy(t.data.begin(), t.data.end(), z.values.begin());
  return z;
}

Frame check_reply(const Frame& reply, MessageType expected) {
  if (reply.type == MessageType::kError) {
    Reader r(reply.body);
    throw Error(ErrorCode::kBackendFailure, "remote error: " + r.string());
  }
  if (reply.type != expected) throw Error(ErrorCode::kProtocolError, "unexpected reply type");
  return reply;
}

}  // namespace

Writer& Writer::u8(std::uint8_t v) {
  bytes_.push_back(v);
  return *this;
}

Writer& Writer::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  return *this;
}

Writer& Writer::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  return *this;
}

Writer& Writer::f32(float v) { return u32(std::bit_cast<std::uint32_t>(v)); }

Writer& Writer::string(const std::string& s) {
  u32(static_cast<std::uint32_t>(s.size()));
  bytes_.insert(bytes_.end(), s.begin(), s.end());
  return *this;
}

Writer& Writer::tensor(const Tensor& t) {
  std::size_t n = 1;
  for (auto d : t.dims) n *= d;
  if (n != t.data.size()) throw Error(ErrorCode::kProtocolError, "tensor payload does not match its shape");
  u32(static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) u32(d);
  for (float f : t.data) f32(f);
  return *this;
}

void Reader::need(std::size_t n) const {
  if (bytes_.size() - pos_ < n) throw Error(ErrorCode::kProtocolError, "message truncated");
}

std::uint8_t Reader::u8() {
  need(1);
  return bytes_[pos_++];
}

std::uint32_t Reader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
  return v;
}

std::uint64_t Reader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
  return v;
}

float Reader::f32() { return std::bit_cast<float>(u32()); }

std::string Reader::string() {
  const std::uint32_t n = u32();
  need(n);
  std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
  pos_ += n;
  return s;
}

Tensor Reader::tensor() {
  Tensor t;
  const std::uint32_t rank = u32();
  if (rank > 8) throw Error(ErrorCode::kProtocolError, "tensor rank too large");
  std::uint64_t n = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    t.dims.push_back(u32());
    n *= t.dims.back();
  }
  if (n * 4 > bytes_.size() - pos_) throw Error(ErrorCode::kProtocolError, "tensor payload truncated");
  t.data.resize(n);
  for (auto& f : t.data) f = f32();
  return t;
}

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
  const std::size_t len = 1 + frame.body.size();
  if (len > kMaxFrameBytes) throw Error(ErrorCode::kProtocolError, "frame too large");
  Writer w;
  w.u32(static_cast<std::uint32_t>(len)).u8(static_cast<std::uint8_t>(frame.type));
  auto bytes = w.take();
  bytes.insert(bytes.end(), frame.body.begin(), frame.body.end());
  return bytes;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const std::uint32_t len = r.u32();
  if (len == 0 || len != bytes.size() - 4) throw Error(ErrorCode::kProtocolError, "frame length does not match payload");
  Frame f;
  const std::uint8_t type = r.u8();
  switch (static_cast<MessageType>(type)) {
    case MessageType::kDenoiseRequest:
    case MessageType::kDenoiseResponse:
    case MessageType::kSegmentRequest:
    case MessageType::kSegmentResponse:
    case MessageType::kError:
      break;
    default:
      throw Error(ErrorCode::kProtocolError, "unknown message type " + std::to_string(type));
  }
  f.type = static_cast<MessageType>(type);
  f.body.assign(bytes.begin() + 5, bytes.end());
  return f;
}

Frame error_frame(const std::string& message) {
  Writer w;
  w.string(message);
  return {MessageType::kError, w.take()};
}

Frame LoopbackTransport::exchange(const Frame& request) {
  const Frame decoded = decode_frame(encode_frame(request));
  Frame reply;
  try {
    reply = handler_(decoded);
  } catch (const std::exception& e) {
    reply = error_frame(e.what());
  }
  return decode_frame(encode_frame(reply));
}

std::pair<std::string, std::uint16_t> parse_tcp_uri(const std::string& uri) {
  constexpr std::string_view kScheme = "tcp://";
  if (!std::string_view(uri).starts_with(kScheme)) throw Error(ErrorCode::kInvalidArgument, "expected tcp://host:port, got " + uri);
  const std::string rest = uri.substr(kScheme.size());
  const auto colon = rest.rfind(':');
  if (colon == std::string::npos || colon == 0) throw Error(ErrorCode::kInvalidArgument, "missing port in " + uri);
  const std::string port = rest.substr(colon + 1);
  unsigned long p = 0;
  try {
    std::size_t used = 0;
    p = std::stoul(port, &used);
    if (used != port.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "bad port in " + uri);
  }
  if (p == 0 || p > 65535) throw Error(ErrorCode::kInvalidArgument, "bad port in " + uri);
  return {rest.substr(0, colon), static_cast<std::uint16_t>(p)};
}

TcpTransport::TcpTransport(std::string host, std::uint16_t port) : host_(std::move(host)), port_(port) {}

TcpTransport::~TcpTransport() {
  if (fd_ >= 0) ::close(fd_);
}

void TcpTransport::connect_locked() {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(port_);
  if (::getaddrinfo(host_.c_str(), port.c_str(), &hints, &res) != 0 || !res) {
    throw Error(ErrorCode::kBackendUnavailable, "cannot resolve " + host_);
  }
  int fd = -1;
  for (addrinfo* a = res; a; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw Error(ErrorCode::kBackendUnavailable, "cannot connect to " + host_ + ":" + port);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  fd_ = fd;
}

Frame TcpTransport::exchange(const Frame& request) {
  std::lock_guard lock(mutex_);
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      if (fd_ < 0) connect_locked();
      write_frame(fd_, request);
      Frame reply;
      if (!read_frame(fd_, reply)) throw Error(ErrorCode::kBackendUnavailable, "server closed the connection");
      return reply;
    } catch (const Error& e) {
      if (fd_ >= 0) ::close(fd_);
      fd_ = -1;
      if (e.code() != ErrorCode::kBackendUnavailable || attempt == 1) throw;
    }
  }
  throw Error(ErrorCode::kBackendUnavailable, "unreachable");
}

TcpServer::TcpServer(Handler handler, std::uint16_t port, const std::string& host) : handler_(std::move(handler)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(ErrorCode::kIoError, "cannot create socket");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw Error(ErrorCode::kInvalidArgument, "listen address must be IPv4: " + host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    throw Error(ErrorCode::kIoError, "cannot listen on " + host + ": " + why);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpServer::~TcpServer() {
  stop();
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void TcpServer::serve() {
  running_ = true;
  while (running_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&p, 1, 100);
    if (ready <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    std::lock_guard lock(workers_mutex_);
    workers_.emplace_back([this, fd] {
      try {
        Frame request;
        while (running_) {
          pollfd q{fd, POLLIN, 0};
          if (::poll(&q, 1, 100) <= 0) continue;
          if (!read_frame(fd, request)) break;
          Frame reply;
          try {
            reply = handler_(request);
          } catch (const std::exception& e) {
            reply = error_frame(e.what());
          }
          write_frame(fd, reply);
        }
      } catch (const std::exception&) {
      }
      ::close(fd);
    });
  }
}

void TcpServer::start() {
  running_ = true;
  thread_ = std::thread([this] { serve(); });
}

void TcpServer::stop() {
  running_ = false;
  if (thread_.joinable()) thread_.join();
  std::lock_guard lock(workers_mutex_);
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
  workers_.clear();
}

Handler make_denoiser_handler(std::shared_ptr<const diffusion::DenoiserBackend> backend) {
  return [backend](const Frame& request) -> Frame {
    if (request.type != MessageType::kDenoiseRequest) return error_frame("expected a denoise request");
    Reader r(request.body);
    const Latent z = tensor_latent(r.tensor());
    const std::size_t t = r.u32();
    const Tensor emb = r.tensor();
    const Tensor mask = r.tensor();
    if (emb.dims.size() != 2 || mask.dims.size() != 1 || mask.dims[0] != emb.dims[0]) {
      return error_frame("embedding tensor must be tokens x width");
    }
    EmbeddingSet v;
    v.width = emb.dims[1];
    for (std::size_t k = 0; k < emb.dims[0]; ++k) {
      v.vectors.emplace_back(emb.data.begin() + static_cast<std::ptrdiff_t>(k * v.width),
                             emb.data.begin() + static_cast<std::ptrdiff_t>((k + 1) * v.width));
      v.trainable.push_back(mask.data[k] != 0.0f);
    }
    const auto out = backend->predict(z, t, v);
    Writer w;
    w.tensor(latent_tensor(out.noise));
    w.u32(static_cast<std::uint32_t>(out.attention.size()));
    for (const auto& g : out.attention) {
      Tensor tg;
      tg.dims = {static_cast<std::uint32_t>(g.rows()), static_cast<std::uint32_t>(g.cols())};
      tg.data.assign(g.begin(), g.end());
      w.tensor(tg);
    }
    return {MessageType::kDenoiseResponse, w.take()};
  };
}

Handler make_segmentor_handler(std::shared_ptr<const segmentor::PromptableSegmentor> backend) {
  return [backend](const Frame& request) -> Frame {
    if (request.type != MessageType::kSegmentRequest) return error_frame("expected a segment request");
    Reader r(request.body);
    const Tensor img = r.tensor();
    if (img.dims.size() != 3) return error_frame("image tensor must be height x width x channels");
    Image image(img.dims[1], img.dims[0], img.dims[2]);
    image.pixels = img.data;
    promptmine::MaskPrompt prompt;
    prompt.entity_id = r.u32();
    prompt.label = r.string();
    const std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
      const auto polarity = r.u8() ? promptmine::Polarity::kNegative : promptmine::Polarity::kPositive;
      const std::uint32_t token = r.u32();
      const float x = r.f32();
      const float y = r.f32();
      auto p = promptmine::Point::in_image(x, y, image.size(), polarity, token);
      (polarity == promptmine::Polarity::kPositive ? prompt.positives : prompt.negatives).push_back(p);
    }
    const auto out = segmentor::segment(image, prompt, *backend);
    Writer w;
    w.u32(static_cast<std::uint32_t>(out.mask.rows())).u32(static_cast<std::uint32_t>(out.mask.cols()));
    const auto counts = rle::encode(out.mask);
    w.u32(static_cast<std::uint32_t>(counts.size()));
    for (auto c : counts) w.u32(c);
    w.f32(static_cast<float>(out.score));
    return {MessageType::kSegmentResponse, w.take()};
  };
}

RemoteDenoiser::RemoteDenoiser(std::shared_ptr<FrameTransport> transport, GridShape resolution, std::string name)
    : transport_(std::move(transport)), resolution_(resolution), name_(std::move(name)) {
  if (!transport_) throw Error(ErrorCode::kBackendUnavailable, "no transport");
}

diffusion::DenoiserOutput RemoteDenoiser::predict(const Latent& z, std::size_t t, const EmbeddingSet& v) const {
  Writer w;
  w.tensor(latent_tensor(z));
  w.u32(static_cast<std::uint32_t>(t));
  Tensor emb;
  emb.dims = {static_cast<std::uint32_t>(v.size()), static_cast<std::uint32_t>(v.width)};
  for (const auto& row : v.vectors) emb.data.insert(emb.data.end(), row.begin(), row.end());
  w.tensor(emb);
  Tensor mask;
  mask.dims = {static_cast<std::uint32_t>(v.size())};
  for (std::size_t k = 0; k < v.size(); ++k) mask.data.push_back(k < v.trainable.size() && v.trainable[k] ? 1.0f : 0.0f);
  w.tensor(mask);

  const Frame reply = check_reply(transport_->exchange({MessageType::kDenoiseRequest, w.take()}),
                                  MessageType::kDenoiseResponse);
  Reader r(reply.body);
  diffusion::DenoiserOutput out;
  out.noise = tensor_latent(r.tensor());
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const Tensor g = r.tensor();
    if (g.dims.size() != 2) throw Error(ErrorCode::kProtocolError, "attention tensor must have rank 2");
    out.attention.emplace_back(g.dims[0], g.dims[1], std::vector<double>(g.data.begin(), g.data.end()));
  }
  return out;
}

RemoteSegmentor::RemoteSegmentor(std::shared_ptr<FrameTransport> transport, std::size_t max_concurrency,
                                 std::string name)
    : transport_(std::move(transport)), max_concurrency_(max_concurrency), name_(std::move(name)) {
  if (!transport_) throw Error(ErrorCode::kBackendUnavailable, "no transport");
}

segmentor::ScoredMask RemoteSegmentor::run(const Image& image, const promptmine::MaskPrompt& prompt) const {
  Writer w;
  Tensor img;
  img.dims = {static_cast<std::uint32_t>(image.height), static_cast<std::uint32_t>(image.width),
              static_cast<std::uint32_t>(image.channels)};
  img.data = image.pixels;
  w.tensor(img);
  w.u32(static_cast<std::uint32_t>(prompt.entity_id));
  w.string(prompt.label);
  w.u32(static_cast<std::uint32_t>(prompt.positives.size() + prompt.negatives.size()));
  auto put = [&](const promptmine::Point& p) {
    w.u8(p.polarity() == promptmine::Polarity::kNegative ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(p.source_token()));
    w.f32(static_cast<float>(p.x()));
    w.f32(static_cast<float>(p.y()));
  };
  for (const auto& p : prompt.positives) put(p);
  for (const auto& p : prompt.negatives) put(p);

  const Frame reply = check_reply(transport_->exchange({MessageType::kSegmentRequest, w.take()}),
                                  MessageType::kSegmentResponse);
  Reader r(reply.body);
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  const std::uint32_t n = r.u32();
  std::vector<std::uint32_t> counts(n);
  for (auto& c : counts) c = r.u32();
  segmentor::ScoredMask out;
  out.mask = rle::decode(counts, rows, cols);
  out.score = r.f32();
  return out;
}

}  // namespace anyword::protocol
