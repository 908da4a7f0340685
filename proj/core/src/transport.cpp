#include "smsrecon/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstring>

namespace smsrecon {

namespace {

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return left.count() <= 0 ? 0 : static_cast<int>(left.count());
}

[[noreturn]] void transport_fail(const std::string& what) {
  fail(ErrorKind::Transport, what + ": " + std::strerror(errno));
}

void ignore_sigpipe_once() {
  static const bool done = [] {
    std::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)done;
}

}  // namespace

// --- Endpoint -----------------------------------------------------------------

Endpoint Endpoint::parse(std::string_view descriptor) {
  Endpoint e;
  if (descriptor.starts_with("subprocess:")) {
    e.kind = Kind::Subprocess;
    e.command = std::string(descriptor.substr(11));
    require(!e.command.empty(), ErrorKind::Configuration, "endpoint: empty subprocess command");
    return e;
  }
  if (descriptor.starts_with("tcp:")) {
    const std::string_view rest = descriptor.substr(4);
    const auto colon = rest.rfind(':');
    require(colon != std::string_view::npos && colon > 0, ErrorKind::Configuration,
            "endpoint: expected tcp:<host>:<port>");
    e.kind = Kind::Tcp;
    e.host = std::string(rest.substr(0, colon));
    const std::string port(rest.substr(colon + 1));
    char* end = nullptr;
    const long value = std::strtol(port.c_str(), &end, 10);
    require(!port.empty() && *end == '\0' && value > 0 && value < 65536, ErrorKind::Configuration,
            "endpoint: invalid port '" + port + "'");
    e.port = static_cast<std::uint16_t>(value);
    return e;
  }
  fail(ErrorKind::Configuration, "endpoint: descriptor must start with 'subprocess:' or 'tcp:'");
}

std::string Endpoint::describe() const {
  return kind == Kind::Subprocess ? "subprocess:" + command
                                  : "tcp:" + host + ":" + std::to_string(port);
}

// --- FdStream -----------------------------------------------------------------

FdStream::~FdStream() {
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  if (read_fd_ >= 0) ::close(read_fd_);
}

void FdStream::close_write() {
  if (write_fd_ < 0) return;
  if (write_fd_ == read_fd_) {
    ::shutdown(write_fd_, SHUT_WR);
  } else {
    ::close(write_fd_);
  }
  write_fd_ = -1;
}

bool FdStream::fill(Clock::time_point deadline) {
  pollfd pfd{read_fd_, POLLIN, 0};
  for (;;) {
    const int rc = ::poll(&pfd, 1, remaining_ms(deadline));
    if (rc < 0) {
      if (errno == EINTR) continue;
      transport_fail("poll");
    }
    if (rc == 0) fail(ErrorKind::Transport, "predictor endpoint timed out");
    break;
  }
  char chunk[65536];
  for (;;) {
    const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      transport_fail("read");
    }
    if (n == 0) return false;
    buffer_.append(chunk, static_cast<std::size_t>(n));
    return true;
  }
}

std::string FdStream::read_line(std::chrono::milliseconds timeout, std::size_t max_len) {
  const auto deadline = Clock::now() + timeout;
  for (;;) {
    if (const auto pos = buffer_.find('\n'); pos != std::string::npos) {
      std::string line = buffer_.substr(0, pos + 1);
      buffer_.erase(0, pos + 1);
      return line;
    }
    if (buffer_.size() > max_len) fail(ErrorKind::Protocol, "header line exceeds maximum length");
    if (!fill(deadline)) {
      if (buffer_.empty()) return {};
      fail(ErrorKind::Transport, "connection closed mid-line");
    }
  }
}

std::string FdStream::read_exact(std::size_t n, std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  while (buffer_.size() < n) {
    if (!fill(deadline)) fail(ErrorKind::Transport, "connection closed mid-payload");
  }
  std::string out = buffer_.substr(0, n);
  buffer_.erase(0, n);
  return out;
}

void FdStream::write_all(std::string_view data, std::chrono::milliseconds timeout) {
  require(write_fd_ >= 0, ErrorKind::Transport, "stream is closed for writing");
  const auto deadline = Clock::now() + timeout;
  while (!data.empty()) {
    pollfd pfd{write_fd_, POLLOUT, 0};
    const int rc = ::poll(&pfd, 1, remaining_ms(deadline));
    if (rc < 0) {
      if (errno == EINTR) continue;
      transport_fail("poll");
    }
    if (rc == 0) fail(ErrorKind::Transport, "predictor endpoint timed out");
    ssize_t n = ::send(write_fd_, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0 && errno == ENOTSOCK) n = ::write(write_fd_, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      transport_fail("write");
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

// --- client -------------------------------------------------------------------

namespace {

int connect_tcp(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &result); rc != 0) {
    fail(ErrorKind::Transport, "cannot resolve '" + host + "': " + ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* ai = result; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(result);
  if (fd < 0) transport_fail("cannot connect to " + host + ":" + service);
  return fd;
}

}  // namespace

ExternalPredictor::ExternalPredictor(const Endpoint& endpoint, std::chrono::milliseconds timeout)
    : endpoint_(endpoint), timeout_(timeout) {
  ignore_sigpipe_once();
  if (endpoint.kind == Endpoint::Kind::Tcp) {
    const int fd = connect_tcp(endpoint.host, endpoint.port);
    stream_ = std::make_unique<FdStream>(fd, fd);
  } else {
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) transport_fail("pipe");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      transport_fail("pipe");
    }
    const pid_t pid = ::fork();
    if (pid < 0) transport_fail("fork");
    if (pid == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", endpoint.command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    child_pid_ = pid;
    stream_ = std::make_unique<FdStream>(from_child[0], to_child[1]);
  }

  std::string hello;
  try {
    hello = stream_->read_line(timeout_);
  } catch (const Error& e) {
    throw Error(e.kind(), "predictor endpoint " + endpoint.describe() + ": " + e.what());
  }
  if (hello.empty()) {
    fail(ErrorKind::Transport, "predictor endpoint " + endpoint.describe() +
                                   " closed the connection before the handshake");
  }
  if (hello != wire::kHandshake) {
    fail(ErrorKind::Protocol, "predictor endpoint " + endpoint.describe() +
                                  ": unsupported handshake '" +
                                  hello.substr(0, hello.size() - 1) + "'");
  }
}

ExternalPredictor::~ExternalPredictor() {
  if (stream_) stream_->close_write();
  stream_.reset();
  if (child_pid_ > 0) {
    for (int i = 0; i < 100; ++i) {
      int status = 0;
      if (::waitpid(child_pid_, &status, WNOHANG) != 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(child_pid_, SIGTERM);
    ::waitpid(child_pid_, nullptr, 0);
  }
}

Degradation ExternalPredictor::predict(const TrajectoryState& state, const Schedule& sched) {
  std::lock_guard lock(mutex_);
  const wire::FrameHeader request = wire::header_for(state.x, sched.normalized(state.t), state.stage);
  std::string frame = wire::encode_header(request);
  frame += wire::encode_payload(state.x);
  stream_->write_all(frame, timeout_);

  const std::string line = stream_->read_line(timeout_);
  if (line.empty()) fail(ErrorKind::Transport, "predictor endpoint closed the connection");
  const wire::ParsedHeader parsed = wire::parse_header(line);
  if (parsed.is_error) fail(ErrorKind::Protocol, "predictor endpoint error: " + parsed.error);
  const wire::FrameHeader& h = parsed.header;
  if (h.coils != request.coils || h.rows != request.rows || h.cols != request.cols) {
    fail(ErrorKind::Protocol, "predictor response shape does not match the request");
  }
  if (h.stage != request.stage) fail(ErrorKind::Protocol, "predictor response stage does not match");
  const std::string payload = stream_->read_exact(h.bytes, timeout_);
  return {wire::decode_payload(payload, h.coils, h.rows, h.cols), h.stage};
}

Degradation external_predict(const TrajectoryState& state, const Schedule& sched,
                             ExternalPredictor& endpoint) {
  return endpoint.predict(state, sched);
}

Predictor make_external_predictor(std::shared_ptr<ExternalPredictor> endpoint) {
  require(endpoint != nullptr, ErrorKind::Configuration, "external predictor: no endpoint");
  return [endpoint = std::move(endpoint)](const TrajectoryState& state, const Schedule& sched) {
    return endpoint->predict(state, sched);
  };
}

// --- server -------------------------------------------------------------------

void serve_stream(FdStream& stream, const PredictHandler& handler) {
  constexpr auto kIdle = std::chrono::hours(24);
  stream.write_all(wire::kHandshake, std::chrono::seconds(30));
  for (;;) {
    const std::string line = stream.read_line(kIdle);
    if (line.empty()) return;
    wire::FrameHeader h;
    try {
      const wire::ParsedHeader parsed = wire::parse_header(line);
      if (parsed.is_error) {
        stream.write_all(wire::encode_error("unexpected error record from client"), kIdle);
        continue;
      }
      h = parsed.header;
    } catch (const Error& e) {
      stream.write_all(wire::encode_error(e.what()), kIdle);
      continue;
    }
    const std::string payload = stream.read_exact(h.bytes, kIdle);
    std::string response;
    try {
      const MultiCoilKSpace x = wire::decode_payload(payload, h.coils, h.rows, h.cols);
      const MultiCoilKSpace d = handler(x, h.t, h.stage);
      if (!d.same_shape(x)) fail(ErrorKind::Shape, "handler returned a different shape");
      response = wire::encode_header(wire::header_for(d, h.t, h.stage)) + wire::encode_payload(d);
    } catch (const std::exception& e) {
      response = wire::encode_error(e.what());
    }
    stream.write_all(response, kIdle);
  }
}

TcpPredictorServer::TcpPredictorServer(PredictHandler handler, std::uint16_t port, std::string host)
    : handler_(std::move(handler)) {
  ignore_sigpipe_once();
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) transport_fail("socket");
  const int yes = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    fail(ErrorKind::Configuration, "server: invalid IPv4 address '" + host + "'");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listen_fd_, 4) != 0) {
    const int err = errno;
    ::close(listen_fd_);
    errno = err;
    transport_fail("bind/listen");
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  thread_ = std::thread([this] { run(); });
}

TcpPredictorServer::~TcpPredictorServer() { stop(); }

void TcpPredictorServer::wait() {
  if (thread_.joinable()) thread_.join();
}

void TcpPredictorServer::stop() {
  stopping_ = true;
  if (thread_.joinable()) thread_.join();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
}

void TcpPredictorServer::run() {
  while (!stopping_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, 50);
    if (rc <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    FdStream stream(fd, fd);
    try {
      serve_stream(stream, handler_);
    } catch (const Error&) {
      // Client vanished; keep accepting.
    }
  }
}

}  // namespace smsrecon
