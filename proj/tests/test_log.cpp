// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <fstream>
#include <set>
#include <thread>

#include "evse_decoy/log/interaction_log.hpp"
#include "evse_decoy/log/log_reader.hpp"
#include "evse_decoy/log/record.hpp"
#include "support.hpp"

using namespace evse_decoy::log;
using test_support::TempDir;
namespace fs = std::filesystem;

namespace {

Timestamp at(const char* text) { return *parse_timestamp(text); }

std::vector<std::string> lines_of(const fs::path& file) {
  std::ifstream in(file);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

HttpEnvelope get_root() { return {"GET", "/", "", "", 200, "curl/8.0"}; }

}  // namespace

TEST_SUITE("record format") {
  TEST_CASE("timestamps") {
    auto ts = at("2026-10-17T08:15:02.125Z");
    CHECK(format_timestamp(ts) == "2026-10-17T08:15:02.125Z");
    CHECK(format_timestamp(at("1999-12-31T23:59:59.000Z")) == "1999-12-31T23:59:59.000Z");
    CHECK_FALSE(parse_timestamp("2026-10-17 08:15:02"));
    CHECK_FALSE(parse_timestamp("2026-10-17T08:15:02.125"));
    CHECK_FALSE(parse_timestamp("2026-13-17T08:15:02.125Z"));
  }

  TEST_CASE("encoded line is bit-exact") {
    InteractionRecord r{7, at("2026-10-17T08:15:02.125Z"), 5000, "203.0.113.5",
                        HttpRequestPayload{get_root()}};
    CHECK(encode_record(r) ==
          R"({"v":1,"id":7,"ts":"2026-10-17T08:15:02.125Z","cat":"HttpRequest","port":5000,)"
          R"("ip":"203.0.113.5","data":{"http":{"method":"GET","path":"/","query":"","status":200,)"
          R"("body":"","ua":"curl/8.0"}}})");
  }

  TEST_CASE("round trip of every category") {
    auto ts = at("2026-01-02T03:04:05.006Z");
    std::vector<Payload> payloads = {
        PortPayload{"telnet"},
        ActionPayload{{"POST", "/api/action", "", R"({"kind":"Pause"})", 200, "x"}, "Pause", "TX1", "applied"},
        HttpRequestPayload{get_root()},
        TimingPayload{{"POST", "/api/timing", "", "", 200, ""}, "/dashboard", 2000},
        TimingPayload{{"POST", "/api/timing", "", "", 400, ""}, "/dashboard", std::nullopt},
        FtpPayload{"USER", "anonymous", 331},
        TelnetPayload{"root", "root", 1},
        LoginPayload{{"POST", "/login", "", "username=a", 400, ""}, "Login", std::string("a"), std::nullopt},
        SystemPayload{"startup", "version x", 0},
    };
    std::uint64_t id = 1;
    for (const auto& p : payloads) {
      InteractionRecord r{id++, ts, 21, "2001:db8::1", p};
      auto line = encode_record(r);
      CAPTURE(line);
      CHECK(decode_record(line) == r);
    }
  }

  TEST_CASE("categories") {
    CHECK(category_of(PortPayload{}) == Category::Port);
    CHECK(category_of(LoginPayload{}) == Category::Login);
    CHECK(to_string(Category::HttpRequest) == "HttpRequest");
    CHECK(parse_category("Timing") == Category::Timing);
    CHECK_FALSE(parse_category("timing"));
    CHECK(http_envelope(Payload{FtpPayload{}}) == nullptr);
    CHECK(http_envelope(Payload{TimingPayload{}}) != nullptr);
  }

  TEST_CASE("invalid utf-8 is escaped, valid text kept") {
    CHECK(escape_invalid_utf8("plain") == "plain");
    CHECK(escape_invalid_utf8("caf\xC3\xA9") == "caf\xC3\xA9");
    CHECK(escape_invalid_utf8("a\xFF" "b") == "a\\xFFb");
    CHECK(escape_invalid_utf8("\xC3") == "\\xC3");
    InteractionRecord r{1, at("2026-01-01T00:00:00.000Z"), 23, "1.2.3.4", TelnetPayload{"\xFE\xFF", "x", 1}};
    auto decoded = decode_record(encode_record(r));
    CHECK(std::get<TelnetPayload>(decoded.payload).username == "\\xFE\\xFF");
  }

  TEST_CASE("malformed lines are rejected") {
    CHECK_THROWS_AS(decode_record(""), RecordFormatError);
    CHECK_THROWS_AS(decode_record(R"({"v":1,"id":1)"), RecordFormatError);
    CHECK_THROWS_AS(decode_record(R"({"v":2,"id":1,"ts":"2026-01-01T00:00:00.000Z","cat":"Port","port":1,"ip":"1.1.1.1","data":{"service":"x"}})"),
                    RecordFormatError);
    CHECK_THROWS_AS(decode_record(R"({"v":1,"id":1,"ts":"2026-01-01T00:00:00.000Z","cat":"Nope","port":1,"ip":"1.1.1.1","data":{}})"),
                    RecordFormatError);
    CHECK_THROWS_AS(decode_record(R"({"v":1,"id":1,"ts":"2026-01-01T00:00:00.000Z","cat":"Ftp","port":1,"ip":"1.1.1.1","data":{"service":"x"}})"),
                    RecordFormatError);
  }
}

TEST_SUITE("interaction log") {
  TEST_CASE("ids increase and records round trip through the file") {
    TempDir dir;
    std::vector<LogEvent> events = {
        {5000, "203.0.113.5", HttpRequestPayload{get_root()}},
        {21, "198.51.100.7", FtpPayload{"USER", "root", 331}},
        {23, "198.51.100.7", TelnetPayload{"admin", "1234", 1}},
    };
    {
      InteractionLog log(test_support::log_options(dir.path()));
      std::uint64_t prev = 0;
      for (const auto& e : events) {
        auto id = log.record(e);
        CHECK(id > prev);
        prev = id;
      }
      CHECK(log.current_file() == dir.path() / "interactions.jsonl");
    }
    auto records = test_support::read_records(dir.path());
    REQUIRE(records.size() == events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
      CHECK(records[i].record_id == i + 1);
      CHECK(records[i].port == events[i].port);
      CHECK(records[i].source_ip == events[i].source_ip);
      CHECK(records[i].payload == events[i].payload);
    }
  }

  TEST_CASE("file names") {
    auto ts = at("2026-10-17T23:59:59.999Z");
    CHECK(log_file_name("interactions", Rotation::Daily, ts) == "interactions-2026-10-17.jsonl");
    CHECK(log_file_name("x", Rotation::None, ts) == "x.jsonl");
  }

  TEST_CASE("daily rotation splits files at UTC midnight") {
    TempDir dir;
    auto opts = test_support::log_options(dir.path());
    opts.rotation = Rotation::Daily;
    Timestamp now = at("2026-10-17T23:59:59.500Z");
    opts.clock = [&now] { return now; };
    {
      InteractionLog log(opts);
      log.record({23, "1.1.1.1", PortPayload{"telnet"}});
      now = at("2026-10-18T00:00:00.100Z");
      log.record({23, "1.1.1.1", PortPayload{"telnet"}});
    }
    CHECK(lines_of(dir / "interactions-2026-10-17.jsonl").size() == 1);
    CHECK(lines_of(dir / "interactions-2026-10-18.jsonl").size() == 1);
    auto records = test_support::read_records(dir.path());
    REQUIRE(records.size() == 2);
    CHECK(records[0].record_id == 1);
    CHECK(records[1].record_id == 2);
  }

  TEST_CASE("ids continue across restarts") {
    TempDir dir;
    {
      InteractionLog log(test_support::log_options(dir.path()));
      for (int i = 0; i < 5; ++i) log.record({21, "1.1.1.1", FtpPayload{"NOOP", "", 530}});
    }
    InteractionLog log(test_support::log_options(dir.path()));
    CHECK(log.record({21, "1.1.1.1", FtpPayload{"NOOP", "", 530}}) == 6);
  }

  TEST_CASE("torn tail is reported on read and repaired on reopen") {
    TempDir dir;
    {
      InteractionLog log(test_support::log_options(dir.path()));
      for (int i = 0; i < 10; ++i) log.record({80, "1.1.1.1", HttpRequestPayload{get_root()}});
    }
    auto file = dir / "interactions.jsonl";
    {
      std::ofstream out(file, std::ios::app);
      out << R"({"v":1,"id":11,"ts":"2026-01-01T00:0)";
    }
    auto result = read_log(file);
    CHECK(result.records.size() == 10);
    CHECK(result.warnings.size() == 1);

    InteractionLog log(test_support::log_options(dir.path()));
    CHECK(log.record({80, "1.1.1.1", HttpRequestPayload{get_root()}}) == 11);
    log.close();
    auto lines = lines_of(file);
    CHECK(lines.size() == 11);
    auto again = read_log(file);
    CHECK(again.warnings.empty());
    CHECK(again.records.back().record_id == 11);
  }

  TEST_CASE("corrupt line before the end is an error naming the line") {
    TempDir dir;
    {
      InteractionLog log(test_support::log_options(dir.path()));
      for (int i = 0; i < 3; ++i) log.record({80, "1.1.1.1", HttpRequestPayload{get_root()}});
    }
    auto file = dir / "interactions.jsonl";
    auto lines = lines_of(file);
    {
      std::ofstream out(file, std::ios::trunc);
      out << lines[0] << "\n" << "garbage\n" << lines[2] << "\n";
    }
    try {
      read_log(file);
      FAIL("expected LogCorruption");
    } catch (const LogCorruption& e) {
      CHECK(e.line_number() == 2);
    }
  }

  TEST_CASE("filters") {
    TempDir dir;
    Timestamp now = at("2026-10-17T10:00:00.000Z");
    auto opts = test_support::log_options(dir.path());
    opts.clock = [&now] { return now; };
    {
      InteractionLog log(opts);
      log.record({80, "1.1.1.1", HttpRequestPayload{get_root()}});
      now += std::chrono::minutes(1);
      log.record({5000, "2.2.2.2", ActionPayload{get_root(), "Stop", "TX", "applied"}});
      now += std::chrono::minutes(1);
      log.record({5000, "1.1.1.1", ActionPayload{get_root(), "Pause", "TX", "applied"}});
      now += std::chrono::minutes(1);
      log.record({21, "1.1.1.1", FtpPayload{"USER", "a", 331}});
    }
    LogFilter actions;
    actions.category = Category::Actions;
    auto r = read_log(dir.path(), actions).records;
    REQUIRE(r.size() == 2);
    CHECK(r[0].record_id == 2);
    CHECK(r[1].record_id == 3);

    LogFilter by_ip;
    by_ip.source_ip = "1.1.1.1";
    CHECK(read_log(dir.path(), by_ip).records.size() == 3);

    LogFilter window;
    window.from = at("2026-10-17T10:01:00.000Z");
    window.to = at("2026-10-17T10:03:00.000Z");
    r = read_log(dir.path(), window).records;
    REQUIRE(r.size() == 2);
    CHECK(r[0].record_id == 2);

    CHECK(read_log(dir.path()).records.size() == 4);
  }

  TEST_CASE("concurrent writers produce complete, distinct records") {
    TempDir dir;
    constexpr int kThreads = 8;
    constexpr int kPerThread = 500;
    std::vector<std::vector<std::uint64_t>> ids(kThreads);
    {
      InteractionLog log(test_support::log_options(dir.path()));
      std::vector<std::thread> threads;
      for (int t = 0; t < kThreads; ++t) {
        threads.emplace_back([&, t] {
          for (int i = 0; i < kPerThread; ++i) {
            ids[t].push_back(log.record({23, "10.0.0." + std::to_string(t),
                                         TelnetPayload{"user" + std::to_string(i), std::string(100, 'p'), 1}}));
          }
        });
      }
      for (auto& th : threads) th.join();
    }
    std::set<std::uint64_t> all;
    for (const auto& v : ids) all.insert(v.begin(), v.end());
    CHECK(all.size() == kThreads * kPerThread);

    auto lines = lines_of(dir / "interactions.jsonl");
    REQUIRE(lines.size() == kThreads * kPerThread);
    std::uint64_t prev = 0;
    bool ordered = true;
    for (const auto& line : lines) {
      auto r = decode_record(line);
      ordered = ordered && r.record_id > prev;
      prev = r.record_id;
    }
    CHECK(ordered);
  }

  TEST_CASE("unwritable destination buffers, drops oldest, then recovers with a marker") {
    TempDir dir;
    auto blocker = dir / "blocker";
    { std::ofstream(blocker) << "not a directory"; }
    auto opts = test_support::log_options(blocker / "logs");
    opts.buffer_limit = 5;
    std::vector<std::string> alarms;
    opts.alarm = [&alarms](const std::string& m) { alarms.push_back(m); };

    InteractionLog log(opts);
    for (int i = 0; i < 8; ++i) log.record({21, "1.1.1.1", FtpPayload{"USER", std::to_string(i), 331}});
    CHECK_FALSE(log.healthy());
    CHECK(log.buffered() == 5);
    CHECK(log.dropped_total() == 3);
    CHECK_FALSE(alarms.empty());

    fs::remove(blocker);
    CHECK(log.flush());
    CHECK(log.healthy());
    log.record({21, "1.1.1.1", FtpPayload{"QUIT", "", 221}});
    log.close();

    auto records = read_log(blocker / "logs").records;
    REQUIRE(records.size() == 7);
    // The five newest buffered records survive; the marker carries the id
    // reserved at the first drop, so it sits between them in id order.
    std::vector<std::string> survivors;
    std::optional<SystemPayload> marker;
    for (const auto& r : records) {
      if (const auto* f = std::get_if<FtpPayload>(&r.payload)) {
        survivors.push_back(f->command == "QUIT" ? "QUIT" : f->argument);
      } else {
        marker = std::get<SystemPayload>(r.payload);
      }
    }
    CHECK(survivors == std::vector<std::string>{"3", "4", "5", "6", "7", "QUIT"});
    REQUIRE(marker);
    CHECK(marker->event == "records_dropped");
    CHECK(marker->count == 3);

    auto lines = lines_of(blocker / "logs" / "interactions.jsonl");
    std::uint64_t prev = 0;
    for (const auto& line : lines) {
      auto id = decode_record(line).record_id;
      CHECK(id > prev);
      prev = id;
    }
  }

  TEST_CASE("record after close is a logic error") {
    TempDir dir;
    InteractionLog log(test_support::log_options(dir.path()));
    log.close();
    CHECK_THROWS_AS(log.record({21, "1.1.1.1", FtpPayload{}}), std::logic_error);
  }

  TEST_CASE("empty source ip is recorded as the unspecified address") {
    TempDir dir;
    {
      InteractionLog log(test_support::log_options(dir.path()));
      log.record({0, "", SystemPayload{"startup", "", 0}});
    }
    CHECK(test_support::read_records(dir.path()).at(0).source_ip == "0.0.0.0");
  }
}
