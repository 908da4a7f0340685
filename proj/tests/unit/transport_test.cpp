#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <memory>

#include "gen.hpp"
#include "smsrecon/inference.hpp"
#include "smsrecon/transport.hpp"

using namespace smsrecon;
using namespace std::chrono_literals;

namespace {

std::string stub(const std::string& mode) { return std::string("subprocess:") + PREDICTOR_STUB + " " + mode; }

Endpoint tcp(std::uint16_t port) { return Endpoint::parse("tcp:127.0.0.1:" + std::to_string(port)); }

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::InvalidData;
}

int raw_connect(std::uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd);
    return -1;
  }
  return fd;
}

}  // namespace

TEST(Endpoint, Parse) {
  const auto s = Endpoint::parse("subprocess:python3 -m serve --x");
  EXPECT_EQ(s.kind, Endpoint::Kind::Subprocess);
  EXPECT_EQ(s.command, "python3 -m serve --x");
  const auto t = Endpoint::parse("tcp:localhost:9000");
  EXPECT_EQ(t.kind, Endpoint::Kind::Tcp);
  EXPECT_EQ(t.host, "localhost");
  EXPECT_EQ(t.port, 9000);
  EXPECT_EQ(t.describe(), "tcp:localhost:9000");
  EXPECT_EQ(kind_of([] { (void)Endpoint::parse("tcp:host"); }), ErrorKind::Configuration);
  EXPECT_EQ(kind_of([] { (void)Endpoint::parse("tcp:host:99999"); }), ErrorKind::Configuration);
  EXPECT_EQ(kind_of([] { (void)Endpoint::parse("http://x"); }), ErrorKind::Configuration);
  EXPECT_EQ(kind_of([] { (void)Endpoint::parse("subprocess:"); }), ErrorKind::Configuration);
}

TEST(Subprocess, EchoIsBitIdenticalAndZeroIsZero) {
  testgen::Rng rng(81);
  const auto x = testgen::kspace_f32(rng, 2, 5, 7);
  const Schedule sched = linear_schedule(4);
  {
    ExternalPredictor echo(Endpoint::parse(stub("echo")), 10s);
    const auto d = echo.predict({x, 3, Stage::U}, sched);
    EXPECT_EQ(d.value, x);
    EXPECT_EQ(d.stage, Stage::U);
  }
  {
    ExternalPredictor zero(Endpoint::parse(stub("zero")), 10s);
    EXPECT_EQ(squared_norm(zero.predict({x, 1, Stage::M}, sched).value), 0.0);
  }
}

TEST(Subprocess, HandshakeMismatchIsProtocolError) {
  EXPECT_EQ(kind_of([] { ExternalPredictor p(Endpoint::parse(stub("badhello")), 5s); }), ErrorKind::Protocol);
}

TEST(Subprocess, TimeoutIsTransportError) {
  ExternalPredictor p(Endpoint::parse(stub("silent")), 300ms);
  const MultiCoilKSpace x(1, 2, 2);
  EXPECT_EQ(kind_of([&] { (void)p.predict({x, 1, Stage::M}, linear_schedule(1)); }), ErrorKind::Transport);
}

TEST(Subprocess, ShapeMismatchIsProtocolError) {
  ExternalPredictor p(Endpoint::parse(stub("wrongshape")), 5s);
  const MultiCoilKSpace x(1, 2, 2);
  EXPECT_EQ(kind_of([&] { (void)p.predict({x, 1, Stage::M}, linear_schedule(1)); }), ErrorKind::Protocol);
}

TEST(Subprocess, MissingCommandIsTransportError) {
  EXPECT_EQ(kind_of([] { ExternalPredictor p(Endpoint::parse("subprocess:/nonexistent/predictor"), 5s); }),
            ErrorKind::Transport);
}

TEST(Tcp, UnreachableIsTransportError) {
  // Bind and close to find a port nobody listens on.
  std::uint16_t port = 0;
  {
    TcpPredictorServer probe([](const MultiCoilKSpace& x, double, Stage) { return x; });
    port = probe.port();
  }
  EXPECT_EQ(kind_of([&] { ExternalPredictor p(tcp(port), 2s); }), ErrorKind::Transport);
}

TEST(Tcp, HandlerSeesNormalizedStepAndStage) {
  std::vector<std::pair<double, Stage>> seen;
  TcpPredictorServer server([&](const MultiCoilKSpace& x, double t, Stage st) {
    seen.emplace_back(t, st);
    return MultiCoilKSpace(x.coils(), x.rows(), x.cols());
  });
  {
    ExternalPredictor p(tcp(server.port()), 5s);
    const MultiCoilKSpace x(1, 3, 3);
    (void)run_reverse_chain(x, Stage::U, linear_schedule(4), make_external_predictor(
                                                                  std::shared_ptr<ExternalPredictor>(&p, [](auto*) {})));
  }
  server.stop();
  ASSERT_EQ(seen.size(), 4u);
  EXPECT_EQ(seen.front().first, 1.0);
  EXPECT_EQ(seen.back().first, 0.25);
  EXPECT_EQ(seen.front().second, Stage::U);
}

TEST(Tcp, HandlerErrorBecomesProtocolErrorAndConnectionSurvives) {
  int calls = 0;
  TcpPredictorServer server([&](const MultiCoilKSpace& x, double, Stage) {
    if (++calls == 1) throw std::runtime_error("model not loaded");
    return x;
  });
  {
    ExternalPredictor p(tcp(server.port()), 5s);
    const MultiCoilKSpace x(1, 2, 2);
    try {
      (void)p.predict({x, 1, Stage::M}, linear_schedule(1));
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Protocol);
      EXPECT_NE(std::string(e.what()).find("model not loaded"), std::string::npos);
    }
    EXPECT_EQ(p.predict({x, 1, Stage::M}, linear_schedule(1)).value, x);
  }
  server.stop();
}

TEST(Tcp, MalformedFrameGetsErrorRecord) {
  TcpPredictorServer server([](const MultiCoilKSpace& x, double, Stage) { return x; });
  const int fd = raw_connect(server.port());
  ASSERT_GE(fd, 0);
  {
    FdStream s(fd, fd);
    EXPECT_EQ(s.read_line(5s), std::string(wire::kHandshake));
    s.write_all("{\"t\":1}\n", 5s);
    EXPECT_TRUE(wire::parse_header(s.read_line(5s)).is_error);
    MultiCoilKSpace x(1, 1, 2);
    x.coil(0)(0, 1) = cplx(2.0, -1.0);
    s.write_all(wire::encode_header(wire::header_for(x, 0.5, Stage::M)) + wire::encode_payload(x), 5s);
    const auto h = wire::parse_header(s.read_line(5s));
    ASSERT_FALSE(h.is_error);
    EXPECT_EQ(wire::decode_payload(s.read_exact(h.header.bytes, 5s), 1, 1, 2), x);
  }
  server.stop();
}

TEST(Tcp, OracleServerMatchesInProcessChain) {
  testgen::Rng rng(82);
  const std::size_t rows = 8;
  const std::size_t cols = 12;
  const CaipiScheme scheme({0.0, 0.5, -0.25}, rows, cols);
  const auto stack = std::make_shared<const SliceStack>(testgen::stack(rng, 3, 2, rows, cols));
  const std::size_t target = 2;
  const OracleTruth truth{stack, scheme, std::nullopt, target};
  TcpPredictorServer server([&](const MultiCoilKSpace& x, double, Stage st) {
    return oracle_predict({x, 1, st}, truth).value;
  });
  const auto y_aligned = target_aligned_collapse(*stack, scheme, target);
  const Schedule sched = linear_schedule(5);
  const auto local = run_reverse_chain(y_aligned, Stage::M, sched, make_oracle_predictor(truth));
  MultiCoilKSpace remote;
  {
    auto p = std::make_shared<ExternalPredictor>(tcp(server.port()), 5s);
    remote = run_reverse_chain(y_aligned, Stage::M, sched, make_external_predictor(p));
  }
  server.stop();
  EXPECT_LT(testgen::relative_error(remote, local), 1e-6);
  EXPECT_LT(testgen::relative_error(local, stack->slice(target)), 1e-12);
}
