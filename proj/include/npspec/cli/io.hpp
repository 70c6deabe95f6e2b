#pragma once

// Text formats for the command-line tool.
//
// Sequence files hold one sequence per line as whitespace-separated
// observations in [0, 1]. Blank lines and lines starting with '#' are
// skipped. Config files hold key=value lines with the same comment rule.

#include <fstream>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace npspec::cli {

using Sequences = std::vector<std::vector<double>>;

/// Parse errors carry "<source>:<line>:" and raise Parse; observations
/// outside [0, 1] raise Validation with the same prefix.
Sequences read_sequences(std::istream& is, const std::string& source);
Sequences read_sequences_file(const std::string& path);

void write_sequences(std::ostream& os, const Sequences& seqs);

/// Shortest decimal form that reads back to the same double.
std::string format_real(double v);

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;
ConfigEntries read_config(std::istream& is, const std::string& source);
ConfigEntries read_config_file(const std::string& path);

/// Opens for reading or writing; failures raise Io.
std::ifstream open_input(const std::string& path);
std::ofstream open_output(const std::string& path);

}  // namespace npspec::cli
