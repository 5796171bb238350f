#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bb84sec::bounds {

namespace detail {
inline void check_unit(double d_m, const char* what) {
  if (!(d_m >= 0.0 && d_m <= 1.0)) throw std::domain_error(std::string(what) + ": d_m must lie in [0,1]");
}

// (1 - 2 sqrt2 sqrt((1-2D)D)) / (1 - 4D) multiplied through by its
// conjugate: the numerator and denominator share the factor that vanishes
// at D = 1/4.
inline double eta_bar_rationalized(double d_m) {
  return (1.0 - 4.0 * d_m) / (1.0 + std::sqrt(8.0 * d_m * (1.0 - 2.0 * d_m)));
}

inline double log2_or_zero(double x) { return x > 0.0 ? std::log2(x) : 0.0; }
}  // namespace detail

// Lower bound on eta implied by a measured disturbance, Shannon branch.
inline double eta_bar_shannon(double d_m) {
  detail::check_unit(d_m, "eta_bar_shannon");
  if (d_m >= 0.25) return 0.0;
  return detail::eta_bar_rationalized(d_m);
}

// Same inversion, extended to negative eta for the collision analysis.
inline double eta_bar_collision(double d_m) {
  detail::check_unit(d_m, "eta_bar_collision");
  if (d_m >= 0.5) return -1.0;
  return detail::eta_bar_rationalized(d_m);
}

// (1/2)(1 - log(1+eta^2) + eta^2/(1+eta^2) log eta^2)
inline double shannon_at_eta(double eta) {
  const double e2 = eta * eta;
  return 0.5 * (1.0 - std::log2(1.0 + e2) + (e2 > 0.0 ? e2 / (1.0 + e2) * std::log2(e2) : 0.0));
}

inline double shannon_sharp_bound(double d_m) { return shannon_at_eta(eta_bar_shannon(d_m)); }

inline double shannon_linear_bound(double d_m) {
  if (!(d_m >= 0.0)) throw std::domain_error("shannon_linear_bound: d_m must be >= 0");
  return 2.0 / std::numbers::ln2 * d_m;
}

inline double disturbance_floor(double eta) { return 0.25 * (1.0 - eta) * (1.0 - eta) / (1.0 + eta * eta); }

// Weighted floor over several operators, weights (a_k + b_k)/2.
inline double disturbance_floor(std::span<const double> etas, std::span<const double> weights) {
  if (etas.size() != weights.size()) throw std::invalid_argument("disturbance_floor: size mismatch");
  double d = 0.0;
  for (std::size_t k = 0; k < etas.size(); ++k) {
    if (!(etas[k] >= 0.0 && etas[k] <= 1.0)) throw std::domain_error("disturbance_floor: eta outside [0,1]");
    d += weights[k] * disturbance_floor(etas[k]);
  }
  return d;
}

// Per-bit collision probability bound for a single characteristic parameter.
inline double collision_bound(double eta) {
  if (!(eta >= -1.0 && eta <= 1.0)) throw std::domain_error("collision_bound: eta outside [-1,1]");
  const double e2 = eta * eta;
  const double num = 17.0 + 12.0 * eta + 6.0 * e2 + 12.0 * e2 * eta + 17.0 * e2 * e2;
  const double den = 3.0 + 2.0 * eta + 3.0 * e2;
  return 0.5 * num / (den * den);
}

inline double tau1_bound(double d_m) {
  detail::check_unit(d_m, "tau1_bound");
  if (d_m >= 1.0 / 3.0) return 1.0;
  return std::clamp(std::log2(2.0 * collision_bound(eta_bar_collision(d_m))), 0.0, 1.0);
}

inline double delayed_shannon_bound(double d_m) { return std::min(1.0, 2.0 * shannon_sharp_bound(d_m)); }

// Crude bound allowing delayed readout; no security at or beyond 25% error.
inline double delayed_tau1_bound(double d_m) {
  detail::check_unit(d_m, "delayed_tau1_bound");
  if (d_m >= 0.25) return 1.0;
  const double e2 = std::pow(eta_bar_collision(d_m), 2);
  return std::clamp(1.0 + std::log2((1.0 + e2 * e2) / ((1.0 + e2) * (1.0 + e2))), 0.0, 1.0);
}

struct BoundReport {
  double d_m;
  double eta_bar_shannon;
  double eta_bar_collision;
  double shannon_sharp;
  double shannon_linear;
  double tau1;
  double shannon_delayed;
  double tau1_delayed;
};

inline BoundReport evaluate(double d_m) {
  return {d_m,
          eta_bar_shannon(d_m),
          eta_bar_collision(d_m),
          shannon_sharp_bound(d_m),
          shannon_linear_bound(d_m),
          tau1_bound(d_m),
          delayed_shannon_bound(d_m),
          delayed_tau1_bound(d_m)};
}

enum class Curve { shannon_sharp, shannon_linear, tau1, delayed_tau1, tau1_nondelayed };

inline Curve curve_from_string(std::string_view s) {
  if (s == "shannon_sharp") return Curve::shannon_sharp;
  if (s == "shannon_linear") return Curve::shannon_linear;
  if (s == "tau1") return Curve::tau1;
  if (s == "delayed_tau1") return Curve::delayed_tau1;
  if (s == "tau1_nondelayed") return Curve::tau1_nondelayed;
  throw std::invalid_argument("unknown curve '" + std::string(s) + "'");
}

inline double curve_value(Curve c, double d_m) {
  switch (c) {
    case Curve::shannon_sharp: return shannon_sharp_bound(d_m);
    case Curve::shannon_linear: return shannon_linear_bound(d_m);
    case Curve::tau1:
    case Curve::tau1_nondelayed: return tau1_bound(d_m);
    case Curve::delayed_tau1: return delayed_tau1_bound(d_m);
  }
  return 0.0;
}

inline std::vector<std::pair<double, double>> tabulate_curve(Curve c, double d_min, double d_max, int steps) {
  if (!(d_min >= 0.0 && d_min < d_max && d_max <= 1.0)) throw std::invalid_argument("tabulate_curve: invalid range");
  if (steps < 2) throw std::invalid_argument("tabulate_curve: need at least 2 steps");
  std::vector<std::pair<double, double>> rows;
  rows.reserve(static_cast<std::size_t>(steps));
  const double h = (d_max - d_min) / (steps - 1);
  for (int i = 0; i < steps; ++i) {
    const double d = i == steps - 1 ? d_max : d_min + i * h;
    rows.emplace_back(d, curve_value(c, d));
  }
  return rows;
}

}  // namespace bb84sec::bounds
