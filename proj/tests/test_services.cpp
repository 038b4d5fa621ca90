// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <memory>

#include "evse_decoy/ftp/decoy_ftp.hpp"
#include "evse_decoy/net/line_reader.hpp"
#include "evse_decoy/net/tcp_service.hpp"
#include "evse_decoy/telnet/decoy_telnet.hpp"
#include "support.hpp"

using namespace evse_decoy;
using namespace test_support;

namespace {

/// A decoy of type D behind a TcpService on an ephemeral loopback port.
template <typename D, typename Options>
struct Live {
  TempDir dir;
  log::InteractionLog log{log_options(dir.path())};
  D decoy;
  net::StopSignal stop;
  std::unique_ptr<net::TcpService> service;

  explicit Live(Options options, std::string name) : decoy(std::move(options), log) {
    auto* logp = &log;
    service = std::make_unique<net::TcpService>(
        name, net::Listener::bind("127.0.0.1", 0), [this](net::Connection& c) { decoy.serve(c); },
        [logp, name](const std::string& peer, int port) { logp->record({port, peer, log::PortPayload{name}}); },
        stop);
    service->start();
  }
  ~Live() {
    service->stop_accepting();
    stop.request();
    service->drain(2000ms);
    service->force_close();
    service->join();
  }
  int port() const { return service->port(); }
  std::vector<log::InteractionRecord> records() {
    log.flush();
    return read_records(dir.path());
  }
};

using LiveFtp = Live<ftp::FtpDecoy, ftp::FtpOptions>;
using LiveTelnet = Live<telnet::TelnetDecoy, telnet::TelnetOptions>;

telnet::TelnetOptions fast_telnet() {
  telnet::TelnetOptions o;
  o.failure_delay = 20ms;
  return o;
}

std::size_t occurrences(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t p = 0; (p = hay.find(needle, p)) != std::string::npos; p += needle.size()) ++n;
  return n;
}

std::vector<std::string> drain_lines(net::LineReader& r) {
  std::vector<std::string> out;
  while (auto l = r.next_line()) out.push_back(*l);
  return out;
}

const std::string kIac(1, static_cast<char>(net::telnet::IAC));

}  // namespace

TEST_CASE("line reader terminators") {
  net::LineReader r;
  r.feed("a\r\nb\nc\rd\r");
  r.feed(std::string("\0e\r\n", 4));
  CHECK(drain_lines(r) == std::vector<std::string>{"a", "b", "c", "d", "e"});
  r.feed("partial");
  CHECK_FALSE(r.has_line());
  r.feed("\n");
  CHECK(r.next_line() == "partial");
}

TEST_CASE("line reader strips telnet negotiation") {
  net::LineReader r;
  std::string bytes;
  bytes += kIac + static_cast<char>(net::telnet::WILL) + static_cast<char>(net::telnet::ECHO);
  bytes += "ro";
  bytes += kIac + static_cast<char>(net::telnet::DO) + static_cast<char>(net::telnet::SUPPRESS_GO_AHEAD);
  bytes += "ot";
  bytes += kIac + static_cast<char>(net::telnet::SB) + "\x18\x01xterm" + kIac + static_cast<char>(net::telnet::SE);
  bytes += "\r\n";
  r.feed(bytes);
  CHECK(drain_lines(r) == std::vector<std::string>{"root"});
  CHECK(r.negotiation_commands() == 3);
}

TEST_CASE("line reader negotiation split across reads") {
  net::LineReader r;
  r.feed("ad" + kIac);
  r.feed(std::string(1, static_cast<char>(net::telnet::WONT)));
  r.feed("\x01min\r");
  r.feed("\n");
  CHECK(drain_lines(r) == std::vector<std::string>{"admin"});
}

TEST_CASE("line reader editing and limits") {
  net::LineReader r(8);
  r.feed("abx\bc\x7f" "d\n");
  r.feed(std::string(20, 'z') + "\n");
  r.feed("ta\tb\x01" "c\n");
  auto lines = drain_lines(r);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "abd");
  CHECK(lines[1] == std::string(8, 'z'));
  CHECK(lines[2] == "ta\tbc");
}

TEST_CASE("ftp protocol replies") {
  ftp::FtpOptions options;
  ftp::FtpProtocol p(options);
  CHECK(p.greeting().wire() == "220 EVSE-FW FTP server (GNU inetutils 1.9.4) ready.\r\n");

  struct Row {
    const char* line;
    int code;
    const char* verb;
    const char* arg;
  };
  const Row rows[] = {
      {"USER anonymous", 331, "USER", "anonymous"},
      {"PASS guest@", 530, "PASS", "guest@"},
      {"user root", 331, "USER", "root"},
      {"pass  spaced pw ", 530, "PASS", "spaced pw"},
      {"LIST", 530, "LIST", ""},
      {"RETR /etc/passwd", 530, "RETR", "/etc/passwd"},
      {"SITE EXEC sh", 530, "SITE", "EXEC sh"},
      {"XYZZY", 502, "XYZZY", ""},
      {"FOOB arg", 502, "FOOB", "arg"},
      {"GET / HTTP/1.1", 502, "GET", "/ HTTP/1.1"},
      {"", 502, "", ""},
  };
  for (const auto& row : rows) {
    CAPTURE(row.line);
    auto reply = p.on_line(row.line);
    CHECK(reply.code == row.code);
    CHECK_FALSE(reply.close);
    CHECK(p.last_command() == row.verb);
    CHECK(p.last_argument() == row.arg);
  }
  auto quit = p.on_line("QUIT");
  CHECK(quit.code == 221);
  CHECK(quit.close);
  CHECK(p.commands_seen() == std::size(rows) + 1);
}

TEST_CASE("ftp never accepts a login") {
  ftp::FtpOptions options;
  options.max_commands = 10000;
  ftp::FtpProtocol p(options);
  for (int i = 0; i < 500; ++i) {
    CHECK(p.on_line("USER u" + std::to_string(i)).code == 331);
    auto r = p.on_line("PASS p" + std::to_string(i));
    CHECK(r.code == 530);
    CHECK(r.text == "Login incorrect.");
  }
}

TEST_CASE("known ftp verbs") {
  for (const char* v : {"USER", "PASS", "ACCT", "CWD", "CDUP", "QUIT", "PORT", "PASV", "EPSV", "TYPE", "STOR",
                        "RETR", "LIST", "NLST", "MLSD", "FEAT", "OPTS", "SIZE", "MDTM", "SYST", "NOOP", "HELP"}) {
    CAPTURE(v);
    CHECK(ftp::is_known_verb(v));
  }
  CHECK_FALSE(ftp::is_known_verb("XYZZY"));
  CHECK_FALSE(ftp::is_known_verb("user"));
}

TEST_CASE("ftp session over a socket") {
  LiveFtp live(ftp::FtpOptions{}, "ftp");
  Client c(live.port());
  REQUIRE(c.connected());
  CHECK(c.read_until("\r\n").rfind("220 ", 0) == 0);
  c.clear();
  c.send("USER admin\r\n");
  CHECK(c.read_until("\r\n") == "331 Please specify the password.\r\n");
  c.clear();
  c.send("PASS admin\r\n");
  CHECK(c.read_until("\r\n") == "530 Login incorrect.\r\n");
  c.clear();
  c.send("QUIT\r\n");
  CHECK(c.read_all() == "221 Goodbye.\r\n");
  CHECK(c.eof());

  CHECK(eventually([&] { return live.records().size() == 4; }));
  auto rs = live.records();
  CHECK(rs[0].category() == log::Category::Port);
  CHECK(std::get<log::PortPayload>(rs[0].payload).service == "ftp");
  CHECK(std::get<log::FtpPayload>(rs[1].payload) == log::FtpPayload{"USER", "admin", 331});
  CHECK(std::get<log::FtpPayload>(rs[2].payload) == log::FtpPayload{"PASS", "admin", 530});
  CHECK(std::get<log::FtpPayload>(rs[3].payload) == log::FtpPayload{"QUIT", "", 221});
  for (const auto& r : rs) CHECK(r.port == live.port());
}

TEST_CASE("ftp hangs up after the command limit") {
  LiveFtp live(ftp::FtpOptions{}, "ftp");
  Client c(live.port());
  c.read_until("\r\n");
  std::size_t refused = 0;
  for (int i = 0; i < 100; ++i) {
    c.clear();
    c.send("PASS guess" + std::to_string(i) + "\r\n");
    refused += c.read_until("\r\n").rfind("530 Login incorrect.\r\n", 0) == 0;
  }
  CHECK(refused == 100);
  auto tail = c.read_all(5000ms);
  CHECK(c.eof());
  CHECK(tail.find("421 Too many commands, closing control connection.\r\n") != std::string::npos);
  CHECK(eventually([&] { return live.records().size() == 101; }));
}

TEST_CASE("ftp pipelined burst is cut at the command limit") {
  LiveFtp live(ftp::FtpOptions{}, "ftp");
  Client c(live.port());
  std::string burst;
  for (int i = 0; i < 150; ++i) burst += "PASS guess" + std::to_string(i) + "\r\n";
  c.send(burst);
  c.read_all(10000ms);
  CHECK(c.eof());
  CHECK(eventually([&] { return live.records().size() == 101; }));
  std::this_thread::sleep_for(100ms);
  CHECK(live.records().size() == 101);
}

TEST_CASE("ftp idle timeout") {
  ftp::FtpOptions o;
  o.idle_timeout = 100ms;
  LiveFtp live(o, "ftp");
  Client c(live.port());
  auto out = c.read_all(3000ms);
  CHECK(c.eof());
  CHECK(out.find("421 Timeout.\r\n") != std::string::npos);
}

TEST_CASE("telnet rejects a login and keeps prompting") {
  LiveTelnet live(fast_telnet(), "telnet");
  Client c(live.port());
  REQUIRE(c.connected());
  auto greet = c.read_until("login: ");
  CHECK(greet == "\r\nEVSE-Linux 4.9.88 ccs-evse ttymxc0\r\n\r\nccs-evse login: ");
  c.clear();
  c.send("root\r\n");
  auto pw = c.read_until("Password: " + kIac + "\xfb\x01");
  CHECK(pw == "Password: " + kIac + "\xfb\x01");
  c.clear();
  c.send("root\r\n");
  auto after = c.read_until("login: ");
  CHECK(after == kIac + "\xfc\x01" + "\r\nLogin incorrect\r\n\r\nccs-evse login: ");

  CHECK(eventually([&] { return live.records().size() == 2; }));
  auto rs = live.records();
  CHECK(std::get<log::TelnetPayload>(rs[1].payload) == log::TelnetPayload{"root", "root", 1});
}

TEST_CASE("telnet closes after three attempts") {
  LiveTelnet live(fast_telnet(), "telnet");
  Client c(live.port());
  std::string client_negotiation = kIac + "\xfd\x01" + kIac + "\xfb\x1f";
  c.send(client_negotiation + "admin\r\n1234\r\n\r\nuser\r\npass\r\nsupport\r\nsupport\r\nextra\r\n");
  auto out = c.read_all(5000ms);
  CHECK(c.eof());
  CHECK(occurrences(out, "Login incorrect\r\n") == 3);
  CHECK(occurrences(out, "ccs-evse login: ") == 4);

  CHECK(eventually([&] { return live.records().size() == 4; }));
  auto rs = live.records();
  CHECK(std::get<log::TelnetPayload>(rs[1].payload) == log::TelnetPayload{"admin", "1234", 1});
  CHECK(std::get<log::TelnetPayload>(rs[2].payload) == log::TelnetPayload{"user", "pass", 2});
  CHECK(std::get<log::TelnetPayload>(rs[3].payload) == log::TelnetPayload{"support", "support", 3});
}

TEST_CASE("telnet failure delay is observed") {
  telnet::TelnetOptions o;
  o.failure_delay = 300ms;
  LiveTelnet live(o, "telnet");
  Client c(live.port());
  c.read_until("login: ");
  c.send("a\r\nb\r\n");
  c.read_until(kIac + "\xfc\x01");
  auto t0 = std::chrono::steady_clock::now();
  c.read_until("Login incorrect");
  CHECK(std::chrono::steady_clock::now() - t0 >= 250ms);
}

TEST_CASE("stop interrupts an idle telnet session") {
  auto live = std::make_unique<LiveTelnet>(telnet::TelnetOptions{}, "telnet");
  Client c(live->port());
  c.read_until("login: ");
  auto t0 = std::chrono::steady_clock::now();
  live.reset();
  CHECK(std::chrono::steady_clock::now() - t0 < 2000ms);
  c.read_all(2000ms);
  CHECK(c.eof());
}

TEST_CASE("tcp service forces out a handler that ignores stop") {
  net::StopSignal stop;
  std::atomic<bool> entered{false}, returned{false};
  net::TcpService service(
      "stubborn", net::Listener::bind("127.0.0.1", 0),
      [&](net::Connection& c) {
        entered = true;
        char buf[64];
        while (::recv(c.socket.fd(), buf, sizeof buf, 0) > 0) {
        }
        returned = true;
      },
      nullptr, stop);
  service.start();
  Client client(service.port());
  REQUIRE(eventually([&] { return entered.load(); }));

  stop.request();
  service.stop_accepting();
  auto t0 = std::chrono::steady_clock::now();
  CHECK_FALSE(service.drain(200ms));
  CHECK(std::chrono::steady_clock::now() - t0 >= 200ms);
  CHECK(service.active() == 1);
  CHECK_FALSE(returned);

  service.force_close();
  CHECK(service.drain(2000ms));
  service.join();
  CHECK(returned);
  CHECK(service.active() == 0);
}
