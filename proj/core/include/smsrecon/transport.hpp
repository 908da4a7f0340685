#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>

#include "smsrecon/trajectory.hpp"
#include "smsrecon/wire.hpp"

namespace smsrecon {

/// Where an external predictor lives: `subprocess:<command>` (spoken over the
/// child's stdin/stdout) or `tcp:<host>:<port>`.
struct Endpoint {
  enum class Kind { Subprocess, Tcp };
  Kind kind = Kind::Subprocess;
  std::string command;
  std::string host;
  std::uint16_t port = 0;

  static Endpoint parse(std::string_view descriptor);
  std::string describe() const;
};

/// Bidirectional byte stream over a pair of file descriptors, with per-call
/// deadlines. Owns the descriptors.
class FdStream {
 public:
  FdStream(int read_fd, int write_fd) : read_fd_(read_fd), write_fd_(write_fd) {}
  ~FdStream();
  FdStream(const FdStream&) = delete;
  FdStream& operator=(const FdStream&) = delete;

  /// Reads through the next '\n' (included). Returns an empty string on EOF
  /// before any byte.
  std::string read_line(std::chrono::milliseconds timeout, std::size_t max_len = 1 << 16);
  std::string read_exact(std::size_t n, std::chrono::milliseconds timeout);
  void write_all(std::string_view data, std::chrono::milliseconds timeout);
  void close_write();

 private:
  bool fill(std::chrono::steady_clock::time_point deadline);

  int read_fd_;
  int write_fd_;
  std::string buffer_;
};

/// Client side of the predictor protocol. Requests on one connection are
/// serialized; concurrent callers queue on an internal lock.
class ExternalPredictor {
 public:
  explicit ExternalPredictor(const Endpoint& endpoint,
                             std::chrono::milliseconds timeout = std::chrono::seconds(30));
  ~ExternalPredictor();
  ExternalPredictor(const ExternalPredictor&) = delete;
  ExternalPredictor& operator=(const ExternalPredictor&) = delete;

  Degradation predict(const TrajectoryState& state, const Schedule& sched);
  const Endpoint& endpoint() const noexcept { return endpoint_; }

 private:
  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
  std::unique_ptr<FdStream> stream_;
  int child_pid_ = -1;
  std::mutex mutex_;
};

Degradation external_predict(const TrajectoryState& state, const Schedule& sched,
                             ExternalPredictor& endpoint);
Predictor make_external_predictor(std::shared_ptr<ExternalPredictor> endpoint);

/// Server-side handler: (x_t, normalized t, stage) -> predicted degradation.
using PredictHandler =
    std::function<MultiCoilKSpace(const MultiCoilKSpace& x, double t, Stage stage)>;

/// Speaks the server side of the protocol on one stream until EOF. Malformed
/// frames and handler failures produce error records; the connection stays up.
void serve_stream(FdStream& stream, const PredictHandler& handler);

/// Accepts connections on host:port (port 0 picks a free port) and serves them
/// one at a time on a background thread.
class TcpPredictorServer {
 public:
  explicit TcpPredictorServer(PredictHandler handler, std::uint16_t port = 0,
                              std::string host = "127.0.0.1");
  ~TcpPredictorServer();
  TcpPredictorServer(const TcpPredictorServer&) = delete;
  TcpPredictorServer& operator=(const TcpPredictorServer&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  /// Blocks until stop() is called from elsewhere.
  void wait();
  void stop();

 private:
  void run();

  PredictHandler handler_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread thread_;
};

}  // namespace smsrecon
