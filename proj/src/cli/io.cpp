#include "npspec/cli/io.hpp"

#include <charconv>
#include <sstream>

#include "npspec/errors.hpp"

namespace npspec::cli {
namespace {

bool skip_line(const std::string& line) {
  const auto p = line.find_first_not_of(" \t\r");
  return p == std::string::npos || line[p] == '#';
}

std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Sequences read_sequences(std::istream& is, const std::string& source) {
  Sequences out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    std::istringstream tokens(line);
    std::vector<double> seq;
    std::string tok;
    while (tokens >> tok) {
      double v = 0.0;
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
        raise(ErrorKind::Parse, where(source, lineno) + "bad number '" + tok + "'");
      }
      if (!(v >= 0.0 && v <= 1.0)) {
        raise(ErrorKind::Validation, where(source, lineno) + "observation " + tok + " outside [0, 1]");
      }
      seq.push_back(v);
    }
    out.push_back(std::move(seq));
  }
  if (is.bad()) raise(ErrorKind::Io, "read failed: " + source);
  return out;
}

Sequences read_sequences_file(const std::string& path) {
  auto in = open_input(path);
  return read_sequences(in, path);
}

void write_sequences(std::ostream& os, const Sequences& seqs) {
  for (const auto& s : seqs) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i > 0) os << ' ';
      os << format_real(s[i]);
    }
    os << '\n';
  }
}

std::string format_real(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ConfigEntries read_config(std::istream& is, const std::string& source) {
  ConfigEntries out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) raise(ErrorKind::Parse, where(source, lineno) + "expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) raise(ErrorKind::Parse, where(source, lineno) + "empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

ConfigEntries read_config_file(const std::string& path) {
  auto in = open_input(path);
  return read_config(in, path);
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorKind::Io, "cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) raise(ErrorKind::Io, "cannot open '" + path + "' for writing");
  return out;
}

}  // namespace npspec::cli
