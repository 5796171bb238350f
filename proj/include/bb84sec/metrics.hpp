#pragma once

#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "bb84sec/attacks.hpp"
#include "bb84sec/matrix.hpp"
#include "bb84sec/quantum.hpp"

namespace bb84sec {

// x log2 x with the continuous extension 0 at x = 0.
inline double xlog2x(double x) { return x > 0.0 ? x * std::log2(x) : 0.0; }
// h(x) = -x log2 x
inline double entropy_term(double x) { return -xlog2x(x); }

// Eve's joint distribution p(psi, k_alpha) over key bit, revealed basis and
// her outcome, with uniform priors p(psi) = p(alpha) = 1/2.
struct JointDistribution {
  // entries[k][basis][bit]
  std::vector<std::array<std::array<double, 2>, 2>> entries;

  std::size_t outcome_count() const { return entries.size(); }

  double at(std::size_t k, Basis basis, Bit bit) const {
    return entries.at(k)[basis == Basis::linear ? 0 : 1][to_int(bit)];
  }

  double outcome_marginal(std::size_t k, Basis basis) const {
    const auto& e = entries.at(k)[basis == Basis::linear ? 0 : 1];
    return e[0] + e[1];
  }

  double bit_marginal(Bit bit) const {
    double s = 0.0;
    for (const auto& e : entries) s += e[0][to_int(bit)] + e[1][to_int(bit)];
    return s;
  }

  double total() const {
    double s = 0.0;
    for (const auto& e : entries) s += e[0][0] + e[0][1] + e[1][0] + e[1][1];
    return s;
  }
};

inline JointDistribution eve_joint_distribution(const KrausSet& set) {
  JointDistribution j;
  j.entries.resize(set.outcome_count());
  for (std::size_t k = 0; k < set.outcome_count(); ++k) {
    for (const auto& s : signal_states()) {
      j.entries[k][s.basis == Basis::linear ? 0 : 1][to_int(s.bit)] =
          0.25 * cell_image(set, s.matrix.matrix(), k).trace();
    }
  }
  return j;
}

// I = sum_psi h[p(psi)] + sum_{alpha,k} h[p(k_alpha)] - sum h[p(psi,k_alpha)].
inline double shannon_information(const JointDistribution& j) {
  double info = entropy_term(j.bit_marginal(Bit::zero)) + entropy_term(j.bit_marginal(Bit::one));
  for (const auto& e : j.entries) {
    for (const auto& cell : e) {
      info += entropy_term(cell[0] + cell[1]);
      info -= entropy_term(cell[0]) + entropy_term(cell[1]);
    }
  }
  return std::max(info, 0.0);
}

inline double shannon_information(const KrausSet& set) { return shannon_information(eve_joint_distribution(set)); }

struct Overlaps {
  double c;  // Tr(rho_1 P)
  double d;  // Tr(rho_3 P)
};

inline Overlaps overlaps(double projector_angle) {
  const Mat2 p = Mat2::projector(projector_angle);
  return {trace_product(signal_states()[0].matrix.matrix(), p), trace_product(signal_states()[2].matrix.matrix(), p)};
}

// One operator's contribution to the closed-form Shannon information.
struct ClosedFormTerm {
  double weight;  // (a_k + b_k) / 2
  double eta;
  double c;
  double d;
};

inline double shannon_closed_form(std::span<const ClosedFormTerm> terms) {
  double wsum = 0.0;
  auto in_unit = [](double x) { return x >= -kAlgebraicTol && x <= 1.0 + kAlgebraicTol; };
  for (const auto& t : terms) {
    if (!(t.weight >= 0.0)) throw std::domain_error("closed form: negative weight");
    if (!(t.eta >= 0.0 && t.eta <= 1.0)) throw std::domain_error("closed form: eta outside [0,1]");
    if (!(in_unit(t.c) && in_unit(t.d))) throw std::domain_error("closed form: overlaps outside [0,1]");
    const double r = (t.c - 0.5) * (t.c - 0.5) + (t.d - 0.5) * (t.d - 0.5);
    if (r > 0.25 + kAlgebraicTol) throw std::domain_error("closed form: overlaps outside the circle");
    wsum += t.weight;
  }
  if (std::abs(wsum - 1.0) > 1e-9) throw std::domain_error("closed form: weights do not sum to 1");

  double info = 0.0;
  for (const auto& t : terms) {
    const double e2 = t.eta * t.eta;
    const double c = std::clamp(t.c, 0.0, 1.0), d = std::clamp(t.d, 0.0, 1.0);
    const double braces = xlog2x(e2 + c - e2 * c) + xlog2x(1.0 - c + e2 * c) +
                          xlog2x(e2 + d - e2 * d) + xlog2x(1.0 - d + e2 * d);
    info += t.weight * (1.0 - std::log2(1.0 + e2) + braces / (2.0 * (1.0 + e2)));
  }
  return std::max(info, 0.0);
}

// Closed-form inputs read off the attack parameters alone (no Kraus matrices).
// The partner of each pair uses the complementary projector: (1-c, 1-d).
inline std::vector<ClosedFormTerm> closed_form_terms(const AttackStrategy& s) {
  if (s.kind != StrategyKind::shannon_canonical)
    throw std::invalid_argument("closed form applies to canonical strategies only");
  std::vector<ClosedFormTerm> terms;
  for (const auto& op : s.canonical) {
    const auto [c, d] = overlaps(op.projector_angle);
    const double w = 0.5 * op.weight();
    terms.push_back({w, op.eta(), c, d});
    terms.push_back({w, op.eta(), 1.0 - c, 1.0 - d});
  }
  return terms;
}

struct DisturbanceReport {
  double d_fid;
  std::array<double, 4> per_signal_overlaps;  // Tr(rho_i rho~_i)
};

inline DisturbanceReport disturbance_fid(const KrausSet& set) {
  DisturbanceReport r{};
  double mean = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const Mat2& rho = signal_states()[i].matrix.matrix();
    Mat2 out = Mat2::zero();
    for (const auto& a : set.operators()) out += sandwich(a, rho);
    r.per_signal_overlaps[i] = trace_product(rho, out);
    mean += 0.25 * r.per_signal_overlaps[i];
  }
  r.d_fid = 1.0 - mean;
  return r;
}

// D_fid written out per operator in terms of (a, b, O, P), with E_i = rho_i.
// Independent of the materialized Kraus matrices.
inline double disturbance_expanded(std::span<const CanonicalAttackOp> ops) {
  double d = 0.0;
  for (const auto& s : signal_states()) {
    const Mat2& rho = s.matrix.matrix();
    d += 0.25 * trace_product(rho, rho);
    for (const auto& op : ops) {
      const Mat2 o = Mat2::rotation(op.rotation_angle);
      const Mat2 p = Mat2::projector(op.projector_angle);
      const Mat2 p_bar = Mat2::identity() - p;
      const double gap2 = std::pow(std::sqrt(op.b) - std::sqrt(op.a), 2);
      const double rotated = trace_product(sandwich(o, rho), rho);
      // Both members of the pair: the partner swaps P and 1-P, which leaves
      // the symmetric projector sum unchanged.
      const double dephased = trace_product(sandwich(o * p, rho), rho) + trace_product(sandwich(o * p_bar, rho), rho);
      d -= 2.0 * (0.25 * std::sqrt(op.a * op.b) * rotated + 0.25 * 0.5 * gap2 * dephased);
    }
  }
  return d;
}

struct CollisionReport {
  double per_bit_collision;
  double tau1;
  double normalization;  // C, the probability a signal is received correctly
};

// Collision probability of the corrected key: only correctly received
// transmissions enter, p(psi,k_alpha) ~ Tr(A rho A^T rho).
inline CollisionReport collision_corrected(const KrausSet& set) {
  std::vector<std::array<std::array<double, 2>, 2>> table(set.outcome_count());
  double total = 0.0;
  for (std::size_t k = 0; k < set.outcome_count(); ++k) {
    for (const auto& s : signal_states()) {
      const Mat2& rho = s.matrix.matrix();
      const double v = trace_product(cell_image(set, rho, k), rho);
      table[k][s.basis == Basis::linear ? 0 : 1][to_int(s.bit)] = v;
      total += v;
    }
  }
  if (!(total > 1e-15)) throw std::domain_error("no signal is ever received correctly");
  double collision = 0.0;
  for (const auto& e : table) {
    for (const auto& cell : e) {
      const double p0 = cell[0] / total, p1 = cell[1] / total;
      const double pk = p0 + p1;
      if (pk > 0.0) collision += (p0 * p0 + p1 * p1) / pk;
    }
  }
  return {collision, 1.0 + std::log2(collision), 0.25 * total};
}

inline DisturbanceReport disturbance_fid(const AttackStrategy& s) { return disturbance_fid(strategy_to_kraus(s)); }
inline double shannon_information(const AttackStrategy& s) { return shannon_information(strategy_to_kraus(s)); }
inline CollisionReport collision_corrected(const AttackStrategy& s) { return collision_corrected(strategy_to_kraus(s)); }

}  // namespace bb84sec
