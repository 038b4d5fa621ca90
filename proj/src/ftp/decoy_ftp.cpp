// SPDX-License-Identifier: Apache-2.0
#include "evse_decoy/ftp/decoy_ftp.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "evse_decoy/net/line_reader.hpp"
#include "evse_decoy/util/url.hpp"

namespace evse_decoy::ftp {

namespace {

constexpr std::array<std::string_view, 56> kKnownVerbs{
    "ABOR", "ACCT", "ADAT", "ALLO", "APPE", "AUTH", "CCC",  "CDUP", "CLNT", "CWD",
    "DELE", "EPRT", "EPSV", "FEAT", "HELP", "HOST", "LANG", "LIST", "MDTM", "MFMT",
    "MKD",  "MLSD", "MLST", "MODE", "NLST", "NOOP", "OPTS", "PASS", "PASV", "PBSZ",
    "PORT", "PROT", "PWD",  "QUIT", "REIN", "REST", "RETR", "RMD",  "RNFR", "RNTO",
    "SITE", "SIZE", "SMNT", "STAT", "STOR", "STOU", "STRU", "SYST", "TYPE", "USER",
    "XCUP", "XCWD", "XMKD", "XPWD", "XRMD", "CSID"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string FtpReply::wire() const { return std::to_string(code) + " " + text + "\r\n"; }

bool is_known_verb(std::string_view verb) {
  return std::find(kKnownVerbs.begin(), kKnownVerbs.end(), verb) != kKnownVerbs.end();
}

FtpReply FtpProtocol::greeting() const { return {220, options_.banner, false}; }

FtpReply FtpProtocol::on_line(std::string_view line) {
  ++commands_;
  line = trim(line);
  auto space = line.find(' ');
  command_ = util::to_upper(line.substr(0, space));
  argument_ = space == std::string_view::npos ? "" : std::string(trim(line.substr(space + 1)));

  bool syntactic = !command_.empty() && command_.size() <= 4 &&
                   std::all_of(command_.begin(), command_.end(),
                               [](char c) { return std::isalpha(static_cast<unsigned char>(c)); });
  if (!syntactic || !is_known_verb(command_)) return {502, "Command not implemented.", false};
  if (command_ == "QUIT") return {221, "Goodbye.", true};
  if (command_ == "USER") {
    user_given_ = true;
    return {331, "Please specify the password.", false};
  }
  if (command_ == "PASS") {
    user_given_ = false;
    return {530, "Login incorrect.", false};
  }
  return {530, "Please login with USER and PASS.", false};
}

FtpDecoy::FtpDecoy(FtpOptions options, log::InteractionLog& log)
    : options_(std::move(options)), log_(log) {}

void FtpDecoy::serve(net::Connection& conn) {
  FtpProtocol protocol(options_);
  net::LineReader reader(options_.max_line);
  if (!conn.socket.write_all(protocol.greeting().wire())) return;

  while (true) {
    auto result = net::read_line(conn.socket, reader, options_.idle_timeout, &conn.stop);
    if (result.status == net::IoStatus::Timeout) {
      conn.socket.write_all("421 Timeout.\r\n");
      return;
    }
    if (result.status != net::IoStatus::Data) return;

    FtpReply reply = protocol.on_line(result.line);
    log_.record({conn.local_port, conn.peer_ip,
                 log::FtpPayload{protocol.last_command(), protocol.last_argument(), reply.code}});
    if (!conn.socket.write_all(reply.wire()) || reply.close) return;
    if (protocol.exhausted()) {
      conn.socket.write_all("421 Too many commands, closing control connection.\r\n");
      return;
    }
  }
}

}  // namespace evse_decoy::ftp
