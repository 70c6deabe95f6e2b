#include "npspec/cli/app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <iostream>

#include "npspec/cli/commands.hpp"
#include "npspec/cli/io.hpp"

namespace npspec::cli {
namespace {

template <typename T>
T parse_unsigned(const std::string& tok, const std::string& what) {
  T v{};
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    raise(ErrorKind::Validation, "bad " + what + " '" + tok + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto p = text.find(sep, start);
    out.push_back(text.substr(start, p - start));
    if (p == std::string::npos) break;
    start = p + 1;
  }
  return out;
}

// Config entries become "--key=value" arguments placed right after the
// subcommand, so anything given on the command line comes later and wins.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    if (a == "--config") {
      if (i + 1 >= args.size()) raise(ErrorKind::Validation, "--config needs a path");
      path = args[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      path = a.substr(9);
    } else {
      rest.push_back(a);
    }
  }
  if (path.empty() || rest.empty()) return rest;
  std::vector<std::string> out{rest.front()};
  for (const auto& [key, value] : read_config_file(path)) {
    if (key == "config") raise(ErrorKind::Validation, path + ": config files cannot nest");
    out.push_back("--" + key + "=" + value);
  }
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

void add_learn_options(CLI::App* sub, LearnOptions& o) {
  sub->add_option("--h1", o.h1, "Fixed bandwidth for P1 (default: cross-validated)");
  sub->add_option("--h21", o.h21, "Fixed bandwidth for P21");
  sub->add_option("--h321", o.h321, "Fixed bandwidth for P321");
  sub->add_option("--folds", o.folds, "Cross-validation folds")->capture_default_str();
  sub->add_option("--tol", o.tol, "Cross approximation tolerance")->capture_default_str();
}

void add_config_option(CLI::App* sub) {
  // Consumed before parsing; declared so it shows in --help.
  sub->add_option("--config", "Flat key=value file; command-line flags win");
}

}  // namespace

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& tok : split(text, ',')) out.push_back(parse_unsigned<std::size_t>(tok, "size"));
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& tok : split(text, ',')) {
    const auto dash = tok.find('-');
    if (dash == std::string::npos) {
      out.push_back(parse_unsigned<std::uint64_t>(tok, "seed"));
      continue;
    }
    const auto lo = parse_unsigned<std::uint64_t>(tok.substr(0, dash), "seed");
    const auto hi = parse_unsigned<std::uint64_t>(tok.substr(dash + 1), "seed");
    if (hi < lo || hi - lo > 100000) raise(ErrorKind::Validation, "bad seed range '" + tok + "'");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
  }
  return out;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nonparametric spectral learning of continuous-emission HMMs"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  SimulateOptions sim;
  std::uint64_t model_seed = 0;
  auto* s = app.add_subcommand("simulate", "Sample observation sequences from an HMM");
  s->add_option("--model", sim.model_path, "HMM model file (default: a synthetic suite model)");
  s->add_option("--suite", sim.suite, "Synthetic suite: m1, m2, m4 or m8")->capture_default_str();
  auto* model_seed_opt = s->add_option("--model-seed", model_seed, "Suite model seed (default: --seed)");
  s->add_option("--len", sim.len, "Sequence length")->capture_default_str();
  s->add_option("--count", sim.count, "Number of sequences")->capture_default_str();
  s->add_option("--seed", sim.seed, "Sampling seed")->capture_default_str();
  s->add_option("--out", sim.out, "Output sequence file");
  s->add_option("--save-model", sim.save_model, "Also write the generating model here");
  add_config_option(s);

  TrainOptions train;
  auto* t = app.add_subcommand("train", "Learn an observable representation");
  t->add_option("--data", train.data, "Sequence file (length >= 3 per line)");
  t->add_option("--m", train.m, "Number of hidden states");
  t->add_option("--out", train.out, "Output representation file");
  add_learn_options(t, train.learn);
  add_config_option(t);

  DensityOptions dens;
  auto* d = app.add_subcommand("density", "Joint density and one-step conditionals of a sequence");
  d->add_option("--model", dens.model, "Representation file");
  d->add_option("sequence", dens.sequence, "Observations in [0, 1]")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  add_config_option(d);

  PredictOptions pred;
  auto* p = app.add_subcommand("predict", "One-step-ahead prediction for each history");
  p->add_option("--model", pred.model, "Representation file");
  p->add_option("--history", pred.history, "Sequence file, one history per line");
  p->add_option("--method", pred.method, "mean or mode")->capture_default_str();
  add_config_option(p);

  BenchmarkOptions bench;
  std::string sizes = "500,2000,8000", seeds = "0-4";
  bool no_timing = false;
  auto* b = app.add_subcommand("benchmark", "Synthetic consistency benchmark, CSV output");
  b->add_option("--suite", bench.suite, "Synthetic suite: m1, m2, m4 or m8")->capture_default_str();
  b->add_option("--n", sizes, "Training sizes, comma separated")->capture_default_str();
  b->add_option("--seeds", seeds, "Seeds: list and/or ranges, e.g. 0-4")->capture_default_str();
  b->add_option("--test-count", bench.test_count, "Test sequences per cell")->capture_default_str();
  b->add_option("--out", bench.out, "Output CSV file");
  b->add_flag("--no-timing", no_timing, "Write seconds = 0 so reruns are byte-identical");
  add_learn_options(b, bench.learn);
  add_config_option(b);

  VerifyOptions ver;
  auto* v = app.add_subcommand("verify", "Randomized checks of the perturbation bounds");
  v->add_option("--lemma", ver.lemma, "all, weyl, wedin or pinv")->capture_default_str();
  v->add_option("--count", ver.count, "Instances per lemma")->capture_default_str();
  v->add_option("--seed", ver.seed, "Suite seed")->capture_default_str();
  add_config_option(v);

  try {
    auto args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    try {
      app.parse(args);
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) return app.exit(e, out, err);
      err << "error: " << e.what() << '\n';
      return 2;
    }

    if (app.got_subcommand(s)) {
      if (model_seed_opt->count() > 0) sim.model_seed = model_seed;
      cmd_simulate(sim, err);
    } else if (app.got_subcommand(t)) {
      cmd_train(train, out);
    } else if (app.got_subcommand(d)) {
      cmd_density(dens, out);
    } else if (app.got_subcommand(p)) {
      cmd_predict(pred, out);
    } else if (app.got_subcommand(b)) {
      bench.sizes = parse_sizes(sizes);
      bench.seeds = parse_seeds(seeds);
      bench.timing = !no_timing;
      cmd_benchmark(bench, err);
    } else if (app.got_subcommand(v)) {
      if (cmd_verify(ver, out) > 0) return 3;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace npspec::cli
