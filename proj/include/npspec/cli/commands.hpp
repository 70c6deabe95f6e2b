#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "npspec/errors.hpp"
#include "npspec/hmm.hpp"
#include "npspec/spectral.hpp"

namespace npspec::cli {

/// 0 success, 2 validation, 3 numerical failure, 4 I/O.
int exit_code(ErrorKind kind);

/// Bandwidth and approximation settings shared by train and benchmark.
struct LearnOptions {
  std::optional<double> h1, h21, h321;
  int folds = kde::kDefaultFolds;
  double tol = 1e-10;

  void validate() const;
  spectral::LearnConfig to_config() const;
};

struct SimulateOptions {
  std::string model_path;  // HMM model file; empty means a suite model
  std::string suite = "m4";
  std::optional<std::uint64_t> model_seed;  // defaults to seed
  std::size_t len = 3;
  std::size_t count = 1000;
  std::uint64_t seed = 0;
  std::string out;
  std::string save_model;  // optional copy of the generating model

  void validate() const;
};

struct TrainOptions {
  std::string data;
  std::size_t m = 0;
  std::string out;
  LearnOptions learn;

  void validate() const;
};

struct DensityOptions {
  std::string model;
  std::vector<double> sequence;

  void validate() const;
};

struct PredictOptions {
  std::string model;
  std::string history;
  std::string method = "mean";

  void validate() const;
};

struct BenchmarkOptions {
  std::string suite = "m4";
  std::vector<std::size_t> sizes{500, 2000, 8000};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::string out;
  std::size_t test_count = 200;
  LearnOptions learn;
  bool timing = true;  // false writes seconds = 0 for byte-stable output

  void validate() const;
};

struct VerifyOptions {
  std::string lemma = "all";
  std::size_t count = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

void cmd_simulate(const SimulateOptions& o, std::ostream& log);
void cmd_train(const TrainOptions& o, std::ostream& log);
void cmd_density(const DensityOptions& o, std::ostream& out);
void cmd_predict(const PredictOptions& o, std::ostream& out);
void cmd_benchmark(const BenchmarkOptions& o, std::ostream& log);
/// Returns the total number of violations.
std::size_t cmd_verify(const VerifyOptions& o, std::ostream& out);

// Benchmark pieces, exposed for the acceptance harness.

inline constexpr std::size_t kBenchmarkHistory = 5;
inline constexpr std::size_t kL1GridPoints = 257;

struct BenchmarkRow {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double l1 = 0.0;        // mean L1 distance of p(x6 | x1:5), estimate vs truth
  double pred_err = 0.0;  // mean |predicted mean - x6| for the estimate
  double true_err = 0.0;  // the same for the true conditional
  double seconds = 0.0;   // training wall time
  std::size_t degenerate = 0;  // test histories the estimate could not filter
};

/// Training triples: n length-3 sequences; sequence i depends only on
/// (seed, i), so smaller n gives a prefix of larger n.
std::vector<std::vector<double>> benchmark_training(const hmm::HMMModel& model, std::size_t n,
                                                    std::uint64_t seed);
/// Length-6 test sequences, determined by the seed alone.
std::vector<std::vector<double>> benchmark_test(const hmm::HMMModel& model, std::size_t count,
                                                std::uint64_t seed);

/// Scores a representation against the model on test sequences.
BenchmarkRow score(const hmm::HMMModel& model, const spectral::ObservableRep& rep,
                   const std::vector<std::vector<double>>& test);

BenchmarkRow benchmark_cell(hmm::SuiteKind kind, std::size_t n, std::uint64_t seed,
                            const BenchmarkOptions& o);

std::string benchmark_header();
std::string format_row(const BenchmarkRow& row);

}  // namespace npspec::cli
