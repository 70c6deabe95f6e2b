#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace npspec::cli {

/// Runs one command line (without the program name) and returns the exit
/// code. Results go to out; diagnostics and progress go to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Comma-separated counts, e.g. "500,2000,8000".
std::vector<std::size_t> parse_sizes(const std::string& text);
/// Comma-separated seeds or inclusive ranges, e.g. "0-4" or "1,5,9".
std::vector<std::uint64_t> parse_seeds(const std::string& text);

}  // namespace npspec::cli
