#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "bb84sec/attacks.hpp"
#include "bb84sec/bounds.hpp"
#include "bb84sec/metrics.hpp"
#include "bb84sec/rng.hpp"
#include "bb84sec/simplex.hpp"

namespace bb84sec::optimizer {

enum class Mode { shannon, collision };

inline std::string to_string(Mode m) { return m == Mode::shannon ? "shannon" : "collision"; }

inline Mode mode_from_string(const std::string& s) {
  if (s == "shannon") return Mode::shannon;
  if (s == "collision") return Mode::collision;
  throw std::invalid_argument("unknown mode '" + s + "'");
}

struct SearchConfig {
  int grid_size = 32;                 // coarse grid points per angle
  int refine_starts = 4;              // best grid points refined by simplex
  int random_screen = 512;            // screening points for families of dimension > 2
  double param_tol = 1e-8;
  double value_tol = 1e-10;
  std::size_t max_evals = 100000;     // per start
  double disturbance_tol = 1e-6;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::optional<double> fixed_eta;    // skip the eta solve (single-pair families only)
};

struct PairParams {
  double weight;
  double eta;
  double phi;    // rotation angle (0 for symmetric ops)
  double theta;  // projector angle
};

struct OptResult {
  Mode mode = Mode::shannon;
  double target_d = 0.0;
  double achieved_d = 0.0;
  double best_value = 0.0;   // bits (shannon) or per-bit collision probability
  double bound_value = 0.0;
  double slack = 0.0;        // bound_value - best_value
  std::vector<PairParams> best_params;
  std::size_t evaluations = 0;

  // tau1 implied by the optimum (collision mode).
  double tau1() const { return 1.0 + std::log2(best_value); }
};

inline double bound_for(Mode mode, double d) {
  if (mode == Mode::shannon) return bounds::shannon_sharp_bound(d);
  return d <= 1.0 / 3.0 ? bounds::collision_bound(bounds::eta_bar_collision(d)) : 1.0;
}

namespace detail {

inline constexpr double kPi = std::numbers::pi;

struct Candidate {
  double value;
  double achieved_d;
  std::vector<PairParams> params;
};

// Root of a monotone f on [lo, hi] by bisection; nullopt unless f(lo), f(hi)
// bracket the target.
inline std::optional<double> solve_monotone(const std::function<double(double)>& f, double lo, double hi,
                                            double target, double tol) {
  double flo = f(lo), fhi = f(hi);
  if (std::abs(flo - target) <= 1e-15) return lo;
  if (std::abs(fhi - target) <= 1e-15) return hi;
  if (target < std::min(flo, fhi) || target > std::max(flo, fhi)) return std::nullopt;
  const bool increasing = fhi > flo;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < target) == increasing) lo = mid; else hi = mid;
  }
  const double x = 0.5 * (lo + hi);
  if (std::abs(f(x) - target) > tol) return std::nullopt;
  return x;
}

// A parametrised attack family: box-bounded free parameters, with the
// disturbance constraint solved internally.
struct Family {
  std::vector<double> lower, upper;
  std::function<std::optional<Candidate>(std::span<const double>)> evaluate;
};

inline double mode_value(Mode mode, const KrausSet& set) {
  return mode == Mode::shannon ? shannon_information(set) : collision_corrected(set).per_bit_collision;
}

inline bool params_less(const std::vector<PairParams>& a, const std::vector<PairParams>& b) {
  auto key = [](const std::vector<PairParams>& p) {
    std::vector<double> k;
    for (const auto& q : p) {
      k.push_back(q.eta);
      k.push_back(q.phi);
      k.push_back(q.theta);
    }
    return k;
  };
  return key(a) < key(b);
}

// Larger value wins; values within 1e-12 tie and the lexicographically
// smallest (eta, phi, theta) is kept.
inline bool better(const Candidate& a, const Candidate& b) {
  if (a.value > b.value + 1e-12) return true;
  if (b.value > a.value + 1e-12) return false;
  return params_less(a.params, b.params);
}

inline std::vector<std::vector<double>> grid_points(const Family& fam, int per_axis) {
  std::vector<std::vector<double>> pts;
  const std::size_t dims = fam.lower.size();
  std::vector<int> idx(dims, 0);
  while (true) {
    std::vector<double> x(dims);
    for (std::size_t i = 0; i < dims; ++i)
      x[i] = fam.lower[i] + (fam.upper[i] - fam.lower[i]) * idx[i] / per_axis;
    pts.push_back(std::move(x));
    std::size_t i = 0;
    while (i < dims && ++idx[i] == per_axis) idx[i++] = 0;
    if (i == dims) break;
  }
  return pts;
}

inline std::vector<std::vector<double>> random_points(const Family& fam, int count, std::uint64_t seed) {
  StreamEngine eng(seed, 0x5eed);
  std::vector<std::vector<double>> pts(static_cast<std::size_t>(count));
  for (auto& x : pts) {
    x.resize(fam.lower.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = fam.lower[i] + (fam.upper[i] - fam.lower[i]) * eng.uniform();
  }
  return pts;
}

struct SearchOutcome {
  std::optional<Candidate> best;
  std::size_t evaluations = 0;
};

inline SearchOutcome run_search(const Family& fam, const std::vector<std::vector<double>>& screen,
                                const SearchConfig& cfg) {
  SearchOutcome out;
  struct Scored {
    Candidate cand;
    std::vector<double> x;
  };
  std::vector<Scored> feasible;
  for (const auto& x : screen) {
    ++out.evaluations;
    if (auto c = fam.evaluate(x)) feasible.push_back({std::move(*c), x});
  }
  std::stable_sort(feasible.begin(), feasible.end(),
                   [](const Scored& a, const Scored& b) { return better(a.cand, b.cand); });
  const std::size_t starts = std::min<std::size_t>(feasible.size(), static_cast<std::size_t>(std::max(cfg.refine_starts, 0)));

  const SimplexOptions sopt{cfg.param_tol, cfg.value_tol, cfg.max_evals, 0.05};
  auto refine = [&](std::size_t s) {
    auto objective = [&](std::span<const double> x) {
      const auto c = fam.evaluate(x);
      return c ? -c->value : 1e6;
    };
    SimplexResult r = nelder_mead(objective, feasible[s].x, fam.lower, fam.upper, sopt);
    std::optional<Candidate> c = fam.evaluate(r.x);
    return std::make_pair(std::move(c), r.evaluations + 1);
  };

  std::vector<std::pair<std::optional<Candidate>, std::size_t>> refined(starts);
  const unsigned workers = std::max(1u, cfg.workers);
  if (workers == 1 || starts <= 1) {
    for (std::size_t s = 0; s < starts; ++s) refined[s] = refine(s);
  } else {
    for (std::size_t base = 0; base < starts; base += workers) {
      std::vector<std::future<std::pair<std::optional<Candidate>, std::size_t>>> jobs;
      for (std::size_t s = base; s < std::min<std::size_t>(starts, base + workers); ++s)
        jobs.push_back(std::async(std::launch::async, refine, s));
      for (std::size_t j = 0; j < jobs.size(); ++j) refined[base + j] = jobs[j].get();
    }
  }

  // Reduction in start order keeps the answer independent of worker count.
  for (const auto& f : feasible)
    if (!out.best || better(f.cand, *out.best)) out.best = f.cand;
  for (auto& [cand, evals] : refined) {
    out.evaluations += evals;
    if (cand && (!out.best || better(*cand, *out.best))) out.best = std::move(*cand);
  }
  return out;
}

inline void check_target(double d) {
  if (!(d >= 0.0 && d <= 0.5)) throw std::domain_error("disturbance target must lie in [0, 0.5]");
}

inline OptResult finish(Mode mode, double d, SearchOutcome&& s) {
  if (!s.best) throw std::runtime_error("no feasible attack reaches disturbance " + std::to_string(d));
  OptResult r;
  r.mode = mode;
  r.target_d = d;
  r.achieved_d = s.best->achieved_d;
  r.best_value = s.best->value;
  r.bound_value = bound_for(mode, d);
  r.slack = r.bound_value - r.best_value;
  r.best_params = std::move(s.best->params);
  r.evaluations = s.evaluations;
  return r;
}

// Builds the strategy for given free eta, solves eta so that D_fid equals d.
template <class Build>
std::optional<Candidate> solve_and_score(Mode mode, double d, const SearchConfig& cfg, double eta_lo, double eta_hi,
                                         Build&& build, bool allow_fixed_eta) {
  auto dist = [&](double eta) { return disturbance_fid(strategy_to_kraus(build(eta).first)).d_fid; };
  std::optional<double> eta;
  if (allow_fixed_eta && cfg.fixed_eta) {
    if (std::abs(dist(*cfg.fixed_eta) - d) <= cfg.disturbance_tol) eta = *cfg.fixed_eta;
  } else {
    eta = solve_monotone(dist, eta_lo, eta_hi, d, cfg.disturbance_tol);
  }
  if (!eta) return std::nullopt;
  auto [strategy, params] = build(*eta);
  const KrausSet set = strategy_to_kraus(strategy);
  const double achieved = disturbance_fid(set).d_fid;
  if (std::abs(achieved - d) > cfg.disturbance_tol) return std::nullopt;
  return Candidate{mode_value(mode, set), achieved, std::move(params)};
}

}  // namespace detail

// Maximum Shannon information over single canonical pairs (eta, phi, theta)
// at D_fid == d_target.
inline OptResult max_information_at_disturbance(double d_target, const SearchConfig& cfg = {}) {
  detail::check_target(d_target);
  detail::Family fam;
  fam.lower = {0.0, 0.0};
  fam.upper = {detail::kPi, detail::kPi};
  fam.evaluate = [&](std::span<const double> x) {
    const double phi = x[0], theta = x[1];
    return detail::solve_and_score(
        Mode::shannon, d_target, cfg, 0.0, 1.0,
        [&](double eta) {
          return std::make_pair(AttackStrategy::shannon_canonical({CanonicalAttackOp::from_eta(1.0, eta, phi, theta)}),
                                std::vector<PairParams>{{1.0, eta, phi, theta}});
        },
        true);
  };
  return detail::finish(Mode::shannon, d_target, detail::run_search(fam, detail::grid_points(fam, cfg.grid_size), cfg));
}

// Maximum per-bit collision probability of the corrected key over single
// symmetric pairs (signed eta, theta) at D_fid == d_target.
inline OptResult max_collision_at_disturbance(double d_target, const SearchConfig& cfg = {}) {
  detail::check_target(d_target);
  detail::Family fam;
  fam.lower = {0.0};
  fam.upper = {detail::kPi};
  fam.evaluate = [&](std::span<const double> x) {
    const double theta = x[0];
    return detail::solve_and_score(
        Mode::collision, d_target, cfg, -1.0, 1.0,
        [&](double eta) {
          return std::make_pair(AttackStrategy::collision_symmetric({SymmetricAttackOp::from_eta(1.0, eta, theta)}),
                                std::vector<PairParams>{{1.0, eta, 0.0, theta}});
        },
        true);
  };
  return detail::finish(Mode::collision, d_target,
                        detail::run_search(fam, detail::grid_points(fam, cfg.grid_size * cfg.grid_size), cfg));
}

// Two pairs with independent (eta, angles) and free weight split; the second
// pair's eta absorbs the disturbance constraint.
inline OptResult max_two_pair_at_disturbance(Mode mode, double d_target, const SearchConfig& cfg = {}) {
  detail::check_target(d_target);
  detail::Family fam;
  if (mode == Mode::shannon) {
    // w, eta1, eta2, theta1, theta2, beta. A pair's disturbance is
    // 1/2 - (1 + lambda) cos(2 phi) / 4, so the rotation angles
    // (phi1, phi2) = r (cos beta, sin beta) are solved through the radius r,
    // monotone on [0, pi/2]; the disc covers every point with D <= 1/2.
    fam.lower = {0.02, 0.0, 0.0, 0.0, 0.0, 0.0};
    fam.upper = {0.98, 1.0, 1.0, detail::kPi, detail::kPi, 2 * detail::kPi};
    fam.evaluate = [&](std::span<const double> x) {
      const std::vector<double> p(x.begin(), x.end());
      return detail::solve_and_score(
          mode, d_target, cfg, 0.0, detail::kPi / 2,
          [p](double r) {
            const double phi1 = r * std::cos(p[5]), phi2 = r * std::sin(p[5]);
            return std::make_pair(
                AttackStrategy::shannon_canonical({CanonicalAttackOp::from_eta(p[0], p[1], phi1, p[3]),
                                                   CanonicalAttackOp::from_eta(1.0 - p[0], p[2], phi2, p[4])}),
                std::vector<PairParams>{{p[0], p[1], phi1, p[3]}, {1.0 - p[0], p[2], phi2, p[4]}});
          },
          false);
    };
  } else {
    // w, eta1, theta1, theta2
    fam.lower = {0.02, -1.0, 0.0, 0.0};
    fam.upper = {0.98, 1.0, detail::kPi, detail::kPi};
    fam.evaluate = [&](std::span<const double> x) {
      const std::vector<double> p(x.begin(), x.end());
      return detail::solve_and_score(
          mode, d_target, cfg, -1.0, 1.0,
          [p](double eta2) {
            return std::make_pair(
                AttackStrategy::collision_symmetric({SymmetricAttackOp::from_eta(p[0], p[1], p[2]),
                                                     SymmetricAttackOp::from_eta(1.0 - p[0], eta2, p[3])}),
                std::vector<PairParams>{{p[0], p[1], 0.0, p[2]}, {1.0 - p[0], eta2, 0.0, p[3]}});
          },
          false);
    };
  }
  return detail::finish(mode, d_target,
                        detail::run_search(fam, detail::random_points(fam, cfg.random_screen, cfg.seed), cfg));
}

// Collision search restricted to strategies that spend a nonzero weight
// w = u * d_target (u in [0.01, 1]) on an antisymmetric pair.
inline OptResult max_collision_with_antisymmetric(double d_target, const SearchConfig& cfg = {}) {
  detail::check_target(d_target);
  if (d_target <= 0.0) throw std::domain_error("antisymmetric operators cannot reach zero disturbance");
  detail::Family fam;
  fam.lower = {0.01, 0.0};
  fam.upper = {1.0, detail::kPi};
  fam.evaluate = [&](std::span<const double> x) {
    const double w = x[0] * d_target, theta = x[1];
    return detail::solve_and_score(
        Mode::collision, d_target, cfg, -1.0, 1.0,
        [&](double eta) {
          return std::make_pair(AttackStrategy::collision_symmetric({SymmetricAttackOp::from_eta(1.0 - w, eta, theta),
                                                                     SymmetricAttackOp::antisymmetric_pair(w)}),
                                std::vector<PairParams>{{1.0 - w, eta, 0.0, theta}, {w, 0.0, 0.0, 0.0}});
        },
        false);
  };
  return detail::finish(Mode::collision, d_target, detail::run_search(fam, detail::grid_points(fam, cfg.grid_size), cfg));
}

struct ScanReport {
  std::vector<OptResult> rows;
  double max_violation = 0.0;  // max(best - bound, 0)
  double max_gap = 0.0;        // max(bound - best)

  bool bound_held(double tol = 1e-6) const { return max_violation <= tol; }
};

inline ScanReport sharpness_scan(std::span<const double> grid, Mode mode, const SearchConfig& cfg = {},
                                 bool two_pair = false) {
  if (grid.empty()) throw std::invalid_argument("sharpness_scan: empty grid");
  for (double d : grid)
    if (!(d >= 0.0 && d <= 1.0 / 3.0)) throw std::invalid_argument("sharpness_scan: grid must lie within [0, 1/3]");
  ScanReport rep;
  for (double d : grid) {
    OptResult r = two_pair ? max_two_pair_at_disturbance(mode, d, cfg)
                           : (mode == Mode::shannon ? max_information_at_disturbance(d, cfg)
                                                    : max_collision_at_disturbance(d, cfg));
    rep.max_violation = std::max(rep.max_violation, -r.slack);
    rep.max_gap = std::max(rep.max_gap, r.slack);
    rep.rows.push_back(std::move(r));
  }
  return rep;
}

}  // namespace bb84sec::optimizer
