#include "npspec/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>

#include "npspec/cli/io.hpp"
#include "npspec/parallel.hpp"
#include "npspec/perturbation.hpp"

namespace npspec::cli {
namespace {

const cheb::Interval kUnit(0.0, 1.0);
constexpr std::uint64_t kTrainSalt = 0x747261696eull;  // "train"
constexpr std::uint64_t kTestSalt = 0x74657374ull;     // "test"

[[noreturn]] void invalid(const std::string& what) { raise(ErrorKind::Validation, what); }

void require_path(const std::string& p, const char* what) {
  if (p.empty()) invalid(std::string(what) + " path is required");
}

spectral::ObservableRep load_rep_file(const std::string& path) {
  auto in = open_input(path);
  return spectral::load_rep(in);
}

spectral::PredictMethod parse_method(const std::string& m) {
  if (m == "mean") return spectral::PredictMethod::Mean;
  if (m == "mode") return spectral::PredictMethod::Mode;
  invalid("method must be mean or mode, got '" + m + "'");
}

bool is_numerical(ErrorKind k) { return exit_code(k) == 3; }

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
      return 4;
    case ErrorKind::NonResolved:
    case ErrorKind::ZeroMatrix:
    case ErrorKind::RankDeficient:
    case ErrorKind::DegenerateData:
    case ErrorKind::DegenerateState:
    case ErrorKind::ZeroProbabilityHistory:
    case ErrorKind::ConstructionFailed:
      return 3;
    case ErrorKind::OutOfDomain:
    case ErrorKind::DomainMismatch:
    case ErrorKind::EmptyInput:
    case ErrorKind::ShapeMismatch:
    case ErrorKind::TooShort:
    case ErrorKind::Validation:
    case ErrorKind::Parse:
      return 2;
  }
  return 2;
}

void LearnOptions::validate() const {
  for (const auto* h : {&h1, &h21, &h321}) {
    if (*h && !(**h > 0.0 && std::isfinite(**h))) invalid("bandwidths must be positive");
  }
  if (folds < 2) invalid("folds must be >= 2");
  if (!(tol > 0.0 && tol <= 1e-3)) invalid("tol must lie in (0, 1e-3]");
}

spectral::LearnConfig LearnOptions::to_config() const {
  spectral::LearnConfig cfg;
  cfg.h1 = h1;
  cfg.h21 = h21;
  cfg.h321 = h321;
  cfg.folds = folds;
  cfg.tol = tol;
  return cfg;
}

void SimulateOptions::validate() const {
  if (len < 1) invalid("len must be >= 1");
  if (count < 1) invalid("count must be >= 1");
  require_path(out, "output");
  if (model_path.empty()) hmm::parse_suite(suite);
}

void TrainOptions::validate() const {
  require_path(data, "data");
  require_path(out, "output");
  if (m < 1) invalid("m must be >= 1");
  learn.validate();
}

void DensityOptions::validate() const {
  require_path(model, "model");
  if (sequence.empty()) raise(ErrorKind::EmptyInput, "sequence is empty");
  for (double x : sequence) {
    if (!(x >= 0.0 && x <= 1.0)) invalid("observation " + format_real(x) + " outside [0, 1]");
  }
}

void PredictOptions::validate() const {
  require_path(model, "model");
  require_path(history, "history");
  parse_method(method);
}

void BenchmarkOptions::validate() const {
  hmm::parse_suite(suite);
  if (sizes.empty()) invalid("at least one N is required");
  for (auto n : sizes) {
    if (n < 1) invalid("N must be >= 1");
  }
  if (seeds.empty()) invalid("at least one seed is required");
  if (test_count < 1) invalid("test count must be >= 1");
  require_path(out, "output");
  learn.validate();
}

void VerifyOptions::validate() const {
  if (lemma != "all" && lemma != "weyl" && lemma != "wedin" && lemma != "pinv") {
    invalid("lemma must be all, weyl, wedin or pinv");
  }
  if (count < 1) invalid("count must be >= 1");
}

void cmd_simulate(const SimulateOptions& o, std::ostream& log) {
  o.validate();
  hmm::HMMModel model = [&] {
    if (!o.model_path.empty()) {
      auto in = open_input(o.model_path);
      return hmm::load_model(in);
    }
    return hmm::synthetic_suite(hmm::parse_suite(o.suite), o.model_seed.value_or(o.seed));
  }();
  const auto seqs = hmm::sample(model, o.len, o.count, o.seed);
  auto out = open_output(o.out);
  write_sequences(out, seqs);
  if (!out) raise(ErrorKind::Io, "write failed: " + o.out);
  if (!o.save_model.empty()) {
    auto mf = open_output(o.save_model);
    hmm::save(mf, model);
  }
  log << "wrote " << o.count << " sequences of length " << o.len << " to " << o.out << '\n';
}

void cmd_train(const TrainOptions& o, std::ostream& log) {
  o.validate();
  const auto seqs = read_sequences_file(o.data);
  if (seqs.empty()) raise(ErrorKind::EmptyInput, o.data + ": no sequences");
  const auto triples = spectral::make_triples(seqs);
  const auto rep = spectral::learn(triples, o.m, o.learn.to_config());
  auto out = open_output(o.out);
  spectral::save(out, rep);
  log << "triples " << rep.n_triples << '\n';
  log << "bandwidths h1=" << format_real(rep.h1) << " h21=" << format_real(rep.h21)
      << " h321=" << format_real(rep.h321) << '\n';
  log << "sigma";
  for (Eigen::Index i = 0; i < rep.sigma.size(); ++i) log << ' ' << format_real(rep.sigma(i));
  log << '\n';
}

void cmd_density(const DensityOptions& o, std::ostream& out) {
  o.validate();
  const auto rep = load_rep_file(o.model);
  out << "joint " << format_real(spectral::joint_density(rep, o.sequence)) << '\n';
  auto s = spectral::init_state(rep);
  for (std::size_t t = 1; t < o.sequence.size(); ++t) {
    s = spectral::update_state(rep, s, o.sequence[t - 1]);
    out << "conditional " << t + 1 << ' '
        << format_real(spectral::conditional_density(rep, s, o.sequence[t])) << '\n';
  }
}

void cmd_predict(const PredictOptions& o, std::ostream& out) {
  o.validate();
  const auto method = parse_method(o.method);
  const auto rep = load_rep_file(o.model);
  const auto histories = read_sequences_file(o.history);
  if (histories.empty()) raise(ErrorKind::EmptyInput, o.history + ": no histories");
  const spectral::Predictor pred(rep);
  for (const auto& h : histories) {
    auto s = spectral::init_state(rep);
    for (double x : h) s = spectral::update_state(rep, s, x);
    out << format_real(pred.predict(s, method)) << '\n';
  }
}

std::vector<std::vector<double>> benchmark_training(const hmm::HMMModel& model, std::size_t n,
                                                    std::uint64_t seed) {
  return hmm::sample(model, 3, n, seed ^ kTrainSalt);
}

std::vector<std::vector<double>> benchmark_test(const hmm::HMMModel& model, std::size_t count,
                                                std::uint64_t seed) {
  return hmm::sample(model, kBenchmarkHistory + 1, count, seed ^ kTestSalt);
}

BenchmarkRow score(const hmm::HMMModel& model, const spectral::ObservableRep& rep,
                   const std::vector<std::vector<double>>& test) {
  const auto w = cheb::cc_weights(kL1GridPoints, kUnit);
  const spectral::Predictor pred(rep);
  const auto identity = cheb::ChebSeries::identity(kUnit);
  BenchmarkRow row;
  for (const auto& seq : test) {
    const std::span<const double> hist(seq.data(), kBenchmarkHistory);
    const double next = seq[kBenchmarkHistory];

    const auto truth = hmm::conditional_series(model, hist);
    const auto tv = cheb::values_on_grid(truth, kL1GridPoints);
    const double true_mean =
        cheb::integrate(cheb::multiply(truth, identity)) / cheb::integrate(truth);

    // A history the estimate cannot filter falls back to the uniform density.
    std::vector<double> ev(kL1GridPoints, 1.0);
    double mean = 0.5;
    try {
      auto s = spectral::init_state(rep);
      for (double x : hist) s = spectral::update_state(rep, s, x);
      const auto g = pred.conditional(s);
      ev = spectral::truncated_density_on_grid(g, kL1GridPoints);
      mean = spectral::truncated_mean(g);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateState) throw;
      ++row.degenerate;
    }
    double l1 = 0.0;
    for (std::size_t i = 0; i < kL1GridPoints; ++i) l1 += w[i] * std::abs(ev[i] - tv[i]);
    row.l1 += l1;
    row.pred_err += std::abs(mean - next);
    row.true_err += std::abs(true_mean - next);
  }
  const double n = static_cast<double>(test.size());
  row.l1 /= n;
  row.pred_err /= n;
  row.true_err /= n;
  return row;
}

BenchmarkRow benchmark_cell(hmm::SuiteKind kind, std::size_t n, std::uint64_t seed,
                            const BenchmarkOptions& o) {
  const auto model = hmm::synthetic_suite(kind, seed);
  const auto triples = spectral::make_triples(benchmark_training(model, n, seed));
  const auto test = benchmark_test(model, o.test_count, seed);
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = spectral::learn(triples, model.m, o.learn.to_config());
  const auto t1 = std::chrono::steady_clock::now();
  BenchmarkRow row = score(model, rep, test);
  row.n = n;
  row.seed = seed;
  row.seconds = o.timing ? std::chrono::duration<double>(t1 - t0).count() : 0.0;
  return row;
}

std::string benchmark_header() { return "N,seed,l1,pred_err,true_err,seconds"; }

std::string format_row(const BenchmarkRow& r) {
  std::ostringstream os;
  os << r.n << ',' << r.seed << ',' << format_real(r.l1) << ',' << format_real(r.pred_err) << ','
     << format_real(r.true_err) << ',' << format_real(r.seconds);
  return os.str();
}

void cmd_benchmark(const BenchmarkOptions& o, std::ostream& log) {
  o.validate();
  const auto kind = hmm::parse_suite(o.suite);
  auto sizes = o.sizes;
  auto seeds = o.seeds;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
  auto out = open_output(o.out);

  // Cells in (N, seed) order; each writes its own slot.
  std::vector<BenchmarkRow> rows(sizes.size() * seeds.size());
  std::mutex log_mutex;
  parallel_for(rows.size(), [&](std::size_t c) {
    const std::size_t n = sizes[c / seeds.size()];
    const std::uint64_t seed = seeds[c % seeds.size()];
    try {
      rows[c] = benchmark_cell(kind, n, seed, o);
    } catch (const Error& e) {
      if (!is_numerical(e.kind())) throw;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      rows[c] = BenchmarkRow{n, seed, nan, nan, nan, 0.0, 0};
      std::lock_guard lock(log_mutex);
      log << "warning: N=" << n << " seed=" << seed << ": " << e.what() << '\n';
      return;
    }
    std::lock_guard lock(log_mutex);
    log << "N=" << n << " seed=" << seed << " l1=" << format_real(rows[c].l1);
    if (rows[c].degenerate > 0) log << " (" << rows[c].degenerate << " degenerate histories)";
    log << '\n';
  });
  out << benchmark_header() << '\n';
  for (const auto& r : rows) out << format_row(r) << '\n';
  if (!out) raise(ErrorKind::Io, "write failed: " + o.out);
}

std::size_t cmd_verify(const VerifyOptions& o, std::ostream& out) {
  o.validate();
  using perturbation::Lemma;
  std::vector<Lemma> lemmas;
  if (o.lemma == "all" || o.lemma == "weyl") lemmas.push_back(Lemma::Weyl);
  if (o.lemma == "all" || o.lemma == "wedin") lemmas.push_back(Lemma::Wedin);
  if (o.lemma == "all" || o.lemma == "pinv") lemmas.push_back(Lemma::Pinv);
  std::size_t total = 0;
  for (auto lemma : lemmas) {
    const auto res = perturbation::run_suite(lemma, o.count, o.seed);
    const auto name = perturbation::to_string(lemma);
    for (const auto& e : res.entries) {
      out << name << ' ' << e.index << " rank=" << e.rank << " scale=" << format_real(e.scale)
          << " lhs=" << format_real(e.report.lhs) << " rhs=" << format_real(e.report.rhs)
          << " slack=" << format_real(e.report.slack) << (e.report.passed ? " pass" : " FAIL")
          << '\n';
    }
    out << name << ": " << res.entries.size() << " instances, " << res.violations()
        << " violations\n";
    total += res.violations();
  }
  return total;
}

}  // namespace npspec::cli
