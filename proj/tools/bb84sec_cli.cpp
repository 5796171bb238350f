// bb84sec command-line front end: bound tables, bound verification scans and
// protocol sessions.
//
// Exit codes: 0 success, 1 usage, 2 verification failure, 3 runtime/config error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bb84sec/bb84sec.hpp"
#include "bb84sec/io.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitVerify = 2;
constexpr int kExitRuntime = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Range {
  double lo, hi;
  int steps;
};

Range parse_range(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 3) throw UsageError("--range expects a:b:n");
  try {
    std::size_t used = 0;
    Range r{};
    r.lo = std::stod(parts[0], &used);
    if (used != parts[0].size()) throw UsageError("bad range start");
    r.hi = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw UsageError("bad range end");
    r.steps = std::stoi(parts[2], &used);
    if (used != parts[2].size()) throw UsageError("bad range count");
    if (!(r.lo >= 0.0 && r.lo < r.hi && r.hi <= 1.0 && r.steps >= 2))
      throw UsageError("--range needs 0 <= a < b <= 1 and n >= 2");
    return r;
  } catch (const std::logic_error&) {
    throw UsageError("--range expects numbers a:b:n");
  }
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::logic_error&) {
      throw UsageError("--grid: '" + item + "' is not a number");
    }
    if (used != item.size()) throw UsageError("--grid: '" + item + "' is not a number");
    if (!(v >= 0.0 && v <= 1.0 / 3.0)) throw UsageError("--grid values must lie within [0, 1/3]");
    grid.push_back(v);
  }
  if (grid.empty()) throw UsageError("--grid is empty");
  return grid;
}

int run_bounds(const std::optional<double>& d_m, const std::string& curve, const std::string& range) {
  if (!curve.empty()) {
    if (range.empty()) throw UsageError("--curve needs --range a:b:n");
    bb84sec::bounds::Curve c;
    try {
      c = bb84sec::bounds::curve_from_string(curve);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    const Range r = parse_range(range);
    std::cout << bb84sec::io::curve_csv(bb84sec::bounds::tabulate_curve(c, r.lo, r.hi, r.steps));
    return 0;
  }
  if (!range.empty()) throw UsageError("--range needs --curve");
  if (!d_m) throw UsageError("bounds needs a disturbance value or --curve");
  if (!(*d_m >= 0.0 && *d_m <= 1.0)) throw UsageError("disturbance must lie in [0,1]");
  std::cout << bb84sec::io::bound_report_csv(bb84sec::bounds::evaluate(*d_m));
  return 0;
}

int run_verify(bb84sec::io::VerifyConfig cfg) {
  using namespace bb84sec;
  std::cout << io::kScanHeader << '\n';
  double max_violation = 0.0, max_gap = 0.0;
  int infeasible = 0;
  for (double d : cfg.grid) {
    try {
      const auto r = cfg.two_pair ? optimizer::max_two_pair_at_disturbance(cfg.mode, d, cfg.search)
                                  : (cfg.mode == optimizer::Mode::shannon
                                         ? optimizer::max_information_at_disturbance(d, cfg.search)
                                         : optimizer::max_collision_at_disturbance(d, cfg.search));
      std::cout << io::scan_row_csv(r) << '\n';
      max_violation = std::max(max_violation, -r.slack);
      max_gap = std::max(max_gap, r.slack);
      std::cerr << "d=" << io::fmt12(d) << " best=" << io::fmt12(r.best_value) << " bound=" << io::fmt12(r.bound_value)
                << " evaluations=" << r.evaluations;
      if (cfg.mode == optimizer::Mode::collision) std::cerr << " tau1=" << io::fmt12(r.tau1());
      std::cerr << '\n';
    } catch (const std::runtime_error& e) {
      ++infeasible;
      std::cerr << "d=" << io::fmt12(d) << " infeasible: " << e.what() << '\n';
    }
  }
  const bool held = max_violation <= 1e-6;
  std::cerr << "summary: mode=" << optimizer::to_string(cfg.mode) << " points=" << cfg.grid.size()
            << " max_violation=" << io::fmt12(max_violation) << " max_gap=" << io::fmt12(max_gap)
            << " infeasible=" << infeasible << " bound_held=" << (held ? "yes" : "no") << '\n';
  if (!held) return kExitVerify;
  return infeasible > 0 ? kExitRuntime : 0;
}

void print_summary(const bb84sec::protocol::SessionResult& r) {
  using bb84sec::io::fmt12;
  std::cerr << "status               " << bb84sec::protocol::to_string(r.status) << '\n'
            << "signals              " << r.n_signals << '\n'
            << "detected             " << r.detected_count << '\n'
            << "sifted               " << r.sifted_length << '\n'
            << "sampled              " << r.sample_size << '\n'
            << "measured error rate  " << fmt12(r.measured_error_rate) << " +- " << fmt12(r.error_rate_stddev) << '\n'
            << "corrected length     " << r.corrected_key.size() << '\n'
            << "EC secret consumed   " << r.ec_consumed_secret_bits << '\n'
            << "tau1 applied         " << fmt12(r.tau1_applied) << " (" << bb84sec::protocol::to_string(r.tau1_source)
            << ")\n"
            << "security parameter   " << r.security_param << '\n'
            << "final key length     " << r.final_key_length << '\n'
            << "keys agree           " << (r.final_key == r.receiver_final_key ? "yes" : "no") << '\n';
}

int run_simulate(const std::string& path, bool summary, const std::string& transcript,
                 const std::optional<std::uint64_t>& seed) {
  using namespace bb84sec;
  const io::ExperimentConfig exp = io::load_experiment(path);
  if (!exp.simulate) throw io::ConfigError("config: missing 'simulate' section");
  protocol::ProtocolConfig cfg = *exp.simulate;
  if (seed) cfg.seed = *seed;
  if (!transcript.empty()) cfg.record_transcript = true;
  const protocol::SessionResult r = protocol::run_session(cfg);
  std::cout << io::to_json(r).dump() << '\n';
  if (!transcript.empty()) {
    std::ofstream out(transcript);
    if (!out) throw std::runtime_error("cannot write transcript '" + transcript + "'");
    out << io::transcript_csv(r);
  }
  if (summary) print_summary(r);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BB84 eavesdropping bounds, bound verification and protocol simulation"};
  app.require_subcommand(1);

  auto* bounds_cmd = app.add_subcommand("bounds", "Evaluate closed-form bounds at a measured disturbance, or tabulate a curve");
  std::optional<double> d_m;
  std::string curve, range;
  bounds_cmd->add_option("d_m", d_m, "Measured disturbance (error rate on sifted signals), in [0,1]");
  bounds_cmd->add_option("--curve", curve,
                         "Curve to tabulate: shannon_sharp, shannon_linear, tau1, delayed_tau1, tau1_nondelayed");
  bounds_cmd->add_option("--range", range, "Grid a:b:n, n evenly spaced points from a to b");

  auto* verify_cmd = app.add_subcommand("verify", "Search attacks numerically and check the bounds are never exceeded");
  std::string config_path, mode = "shannon", grid;
  bool two_pair = false;
  std::optional<unsigned> workers;
  std::optional<std::uint64_t> verify_seed;
  std::optional<int> grid_size, refine_starts;
  verify_cmd->add_option("--config", config_path, "JSON config; its 'optimizer' section supplies defaults");
  verify_cmd->add_option("--mode", mode, "shannon or collision (default shannon)");
  verify_cmd->add_option("--grid", grid, "Comma-separated disturbance targets in [0,1/3] (default 0.01,0.02,0.05,0.10,0.20,0.30)");
  verify_cmd->add_flag("--two-pair", two_pair, "Search two-pair strategies with independent eta");
  verify_cmd->add_option("--workers", workers, "Parallel simplex starts (default 1; result is independent of it)");
  verify_cmd->add_option("--seed", verify_seed, "Seed for random starts (default 1)");
  verify_cmd->add_option("--grid-size", grid_size, "Coarse grid points per angle (default 32)");
  verify_cmd->add_option("--refine-starts", refine_starts, "Grid points refined by simplex (default 4)");

  auto* sim_cmd = app.add_subcommand("simulate", "Run a BB84 session from a JSON config and print the result as JSON");
  std::string sim_config, transcript;
  bool summary = false;
  std::optional<std::uint64_t> sim_seed;
  sim_cmd->add_option("config", sim_config,
                      "JSON config with a 'simulate' section. Keys (defaults): n_signals (100000), seed (required), "
                      "sample_fraction (0.1), ec_mode (oracle|block-parity), security_param (0), loss_prob (0), "
                      "tau1_source (nondelayed|delayed), record_transcript (false), attack {kind: none|intercept-resend|"
                      "breidbart|shannon-canonical|collision-symmetric|raw-kraus, basis, ops, operators, partition}")
      ->required();
  sim_cmd->add_flag("--summary", summary, "Print a human-readable summary on stderr");
  sim_cmd->add_option("--transcript", transcript, "Write a per-signal CSV transcript to this path");
  sim_cmd->add_option("--seed", sim_seed, "Override the config seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*bounds_cmd) return run_bounds(d_m, curve, range);
    if (*verify_cmd) {
      bb84sec::io::VerifyConfig cfg;
      if (!config_path.empty()) {
        const auto exp = bb84sec::io::load_experiment(config_path);
        if (exp.optimizer) cfg = *exp.optimizer;
      }
      if (verify_cmd->count("--mode") > 0) {
        try {
          cfg.mode = bb84sec::optimizer::mode_from_string(mode);
        } catch (const std::invalid_argument& e) {
          throw UsageError(e.what());
        }
      }
      if (verify_cmd->count("--grid") > 0) cfg.grid = parse_grid(grid);
      if (cfg.grid.empty()) throw UsageError("--grid is empty");
      if (two_pair) cfg.two_pair = true;
      if (workers) cfg.search.workers = *workers;
      if (verify_seed) cfg.search.seed = *verify_seed;
      if (grid_size) cfg.search.grid_size = *grid_size;
      if (refine_starts) cfg.search.refine_starts = *refine_starts;
      return run_verify(cfg);
    }
    if (*sim_cmd) return run_simulate(sim_config, summary, transcript, sim_seed);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
