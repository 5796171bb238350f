#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bb84sec/matrix.hpp"
#include "bb84sec/quantum.hpp"

namespace bb84sec {

namespace detail {
inline void check_weights(double a, double b) {
  if (!(a >= 0.0)) throw std::invalid_argument("attack operator needs a >= 0");
  if (!(b >= a)) throw std::invalid_argument("attack operator needs b >= a");
  if (!(b > 0.0)) throw std::invalid_argument("attack operator needs b > 0");
}
}  // namespace detail

// A_k = sqrt(a) O + (sqrt(b) - sqrt(a)) O P, with O a rotation by
// `rotation_angle` and P the rank-1 projector at `projector_angle`.
// Its partner uses the complement 1 - P.
struct CanonicalAttackOp {
  double a = 0.0;
  double b = 1.0;
  double rotation_angle = 0.0;
  double projector_angle = 0.0;

  // Pair with total weight a + b = `weight` and characteristic parameter eta.
  static CanonicalAttackOp from_eta(double weight, double eta, double rotation_angle,
                                    double projector_angle) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("canonical eta must lie in [0,1]");
    const double b = weight / (1.0 + eta * eta);
    return {b * eta * eta, b, rotation_angle, projector_angle};
  }

  double eta() const { return std::sqrt(a / b); }
  double weight() const { return a + b; }
};

enum class SymmetricSign { plus, minus, antisymmetric };

// A^(+-) = sqrt(a) 1 - (sqrt(a) +- sqrt(b)) P and its partner with 1 - P.
// Sign `plus` gives eigenvalues of opposite sign (eta < 0), `minus` equal
// sign (eta > 0). Antisymmetric ops materialize as (sqrt(a) J, sqrt(b) J)
// with J the quarter-turn rotation.
struct SymmetricAttackOp {
  double a = 0.0;
  double b = 1.0;
  SymmetricSign sign = SymmetricSign::minus;
  double projector_angle = 0.0;

  // Signed eta in [-1, 1]; negative values select the `plus` branch.
  static SymmetricAttackOp from_eta(double weight, double eta, double projector_angle) {
    if (!(eta >= -1.0 && eta <= 1.0)) throw std::invalid_argument("symmetric eta must lie in [-1,1]");
    const double b = weight / (1.0 + eta * eta);
    return {b * eta * eta, b, eta < 0.0 ? SymmetricSign::plus : SymmetricSign::minus, projector_angle};
  }

  static SymmetricAttackOp antisymmetric_pair(double weight) {
    return {0.5 * weight, 0.5 * weight, SymmetricSign::antisymmetric, 0.0};
  }

  double eta() const {
    if (sign == SymmetricSign::antisymmetric)
      throw std::logic_error("antisymmetric operators have no characteristic parameter");
    const double m = std::sqrt(a / b);
    return sign == SymmetricSign::plus ? -m : m;
  }
  double weight() const { return a + b; }
};

inline std::pair<Mat2, Mat2> materialize_canonical(const CanonicalAttackOp& op) {
  detail::check_weights(op.a, op.b);
  const Mat2 o = Mat2::rotation(op.rotation_angle);
  const Mat2 p = Mat2::projector(op.projector_angle);
  const Mat2 p_bar = Mat2::identity() - p;
  const double sa = std::sqrt(op.a), sb = std::sqrt(op.b);
  return {sa * o + (sb - sa) * (o * p), sa * o + (sb - sa) * (o * p_bar)};
}

inline std::pair<Mat2, Mat2> materialize_symmetric(const SymmetricAttackOp& op) {
  detail::check_weights(op.a, op.b);
  const double sa = std::sqrt(op.a), sb = std::sqrt(op.b);
  if (op.sign == SymmetricSign::antisymmetric) {
    const Mat2 j{0.0, 1.0, -1.0, 0.0};
    return {sa * j, sb * j};
  }
  const Mat2 p = Mat2::projector(op.projector_angle);
  const Mat2 p_bar = Mat2::identity() - p;
  const double shift = op.sign == SymmetricSign::plus ? sa + sb : sa - sb;
  return {sa * Mat2::identity() - shift * p, sa * Mat2::identity() - shift * p_bar};
}

enum class StrategyKind { shannon_canonical, collision_symmetric, raw_kraus };

inline std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::shannon_canonical: return "shannon-canonical";
    case StrategyKind::collision_symmetric: return "collision-symmetric";
    case StrategyKind::raw_kraus: return "raw-kraus";
  }
  return "unknown";
}

// An eavesdropping strategy. Canonical and symmetric ops each stand for a
// pair (A_k, partner); `raw` holds an arbitrary measurement.
struct AttackStrategy {
  StrategyKind kind = StrategyKind::shannon_canonical;
  std::vector<CanonicalAttackOp> canonical;
  std::vector<SymmetricAttackOp> symmetric;
  std::optional<KrausSet> raw;

  static AttackStrategy shannon_canonical(std::vector<CanonicalAttackOp> ops) {
    return {StrategyKind::shannon_canonical, std::move(ops), {}, std::nullopt};
  }
  static AttackStrategy collision_symmetric(std::vector<SymmetricAttackOp> ops) {
    return {StrategyKind::collision_symmetric, {}, std::move(ops), std::nullopt};
  }
  static AttackStrategy raw_kraus(KrausSet set) {
    return {StrategyKind::raw_kraus, {}, {}, std::move(set)};
  }

  // Sum of (a_k + b_k)/2 over every materialized operator.
  double total_weight() const {
    double w = 0.0;
    for (const auto& op : canonical) w += op.weight();
    for (const auto& op : symmetric) w += op.weight();
    return w;
  }
};

inline KrausSet strategy_to_kraus(const AttackStrategy& s) {
  if (s.kind == StrategyKind::raw_kraus) {
    if (!s.raw) throw std::invalid_argument("raw-kraus strategy without operators");
    const double defect = completeness_defect(*s.raw);
    if (defect > kAlgebraicTol) {
      std::ostringstream msg;
      msg << "raw Kraus set is not complete (defect " << defect << ")";
      throw std::invalid_argument(msg.str());
    }
    return *s.raw;
  }
  const double defect = std::abs(s.total_weight() - 1.0);
  if (defect > kAlgebraicTol) {
    std::ostringstream msg;
    msg << "strategy weights do not sum to 1 (defect " << defect << ")";
    throw std::invalid_argument(msg.str());
  }
  std::vector<Mat2> ops;
  auto push = [&ops](const std::pair<Mat2, Mat2>& pr) {
    ops.push_back(pr.first);
    ops.push_back(pr.second);
  };
  if (s.kind == StrategyKind::shannon_canonical) {
    if (s.canonical.empty() || !s.symmetric.empty())
      throw std::invalid_argument("shannon-canonical strategy needs canonical ops only");
    for (const auto& op : s.canonical) push(materialize_canonical(op));
  } else {
    if (s.symmetric.empty() || !s.canonical.empty())
      throw std::invalid_argument("collision-symmetric strategy needs symmetric ops only");
    for (const auto& op : s.symmetric) push(materialize_symmetric(op));
  }
  KrausSet set(std::move(ops));
  const double completeness = completeness_defect(set);
  if (completeness > kAlgebraicTol) {
    std::ostringstream msg;
    msg << "materialized strategy is not complete (defect " << completeness << ")";
    throw std::invalid_argument(msg.str());
  }
  return set;
}

// Projector angle that measures in the given signal basis.
constexpr double basis_angle(Basis basis) { return basis == Basis::linear ? 0.0 : 0.78539816339744830962; }
// Halfway between the two signal bases.
inline constexpr double kBreidbartAngle = 0.39269908169872415481;

inline AttackStrategy intercept_resend(Basis basis) {
  return AttackStrategy::shannon_canonical({CanonicalAttackOp{0.0, 1.0, 0.0, basis_angle(basis)}});
}

inline AttackStrategy breidbart_attack() {
  return AttackStrategy::shannon_canonical({CanonicalAttackOp{0.0, 1.0, 0.0, kBreidbartAngle}});
}

// Two alternative descriptions of the same channel: {A_k} read out for
// linear signals, {B_l} for circular ones.
struct DelayedAttack {
  KrausSet linear_strategy;
  KrausSet circular_strategy;
  std::vector<std::vector<double>> coefficients;
};

// B_l = sum_k c_lk A_k. The coefficient matrix must be orthogonal.
inline DelayedAttack build_delayed(const KrausSet& base, const std::vector<std::vector<double>>& coefficients) {
  const std::size_t n = base.operator_count();
  if (coefficients.size() != n) throw std::invalid_argument("coefficient matrix must be square over the operators");
  for (const auto& row : coefficients)
    if (row.size() != n) throw std::invalid_argument("coefficient matrix must be square over the operators");
  for (std::size_t l = 0; l < n; ++l) {
    for (std::size_t m = 0; m < n; ++m) {
      double dot = 0.0;
      for (std::size_t k = 0; k < n; ++k) dot += coefficients[l][k] * coefficients[m][k];
      if (std::abs(dot - (l == m ? 1.0 : 0.0)) > kAlgebraicTol)
        throw std::invalid_argument("coefficient matrix is not orthogonal");
    }
  }
  std::vector<Mat2> b_ops(n, Mat2::zero());
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t k = 0; k < n; ++k) b_ops[l] += coefficients[l][k] * base.operators()[k];
  return {base, KrausSet(std::move(b_ops)), coefficients};
}

// Max over the matrix units E_ij of |sum A E A^T - sum B E B^T|. The units
// span every 2x2 matrix, so by linearity a zero defect means the two
// strategies realize the same channel on all density matrices.
inline double verify_delayed(const DelayedAttack& d) {
  const std::array<Mat2, 4> units{Mat2{1, 0, 0, 0}, Mat2{0, 1, 0, 0}, Mat2{0, 0, 1, 0}, Mat2{0, 0, 0, 1}};
  double worst = 0.0;
  for (const auto& e : units) {
    Mat2 diff = Mat2::zero();
    for (const auto& a : d.linear_strategy.operators()) diff += sandwich(a, e);
    for (const auto& b : d.circular_strategy.operators()) diff -= sandwich(b, e);
    worst = std::max(worst, diff.max_abs());
  }
  return worst;
}

}  // namespace bb84sec
