#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bb84sec/matrix.hpp"

namespace bb84sec {

// Tolerance for algebraic identities (completeness, symmetry, trace).
inline constexpr double kAlgebraicTol = 1e-12;
// Below this an outcome probability is treated as zero.
inline constexpr double kProbabilityFloor = 1e-9;

enum class Basis { linear, circular };
enum class Bit { zero, one };

constexpr std::string_view to_string(Basis b) { return b == Basis::linear ? "linear" : "circular"; }
constexpr int to_int(Bit b) { return b == Bit::zero ? 0 : 1; }
constexpr Bit bit_from(int v) { return v == 0 ? Bit::zero : Bit::one; }

inline Basis basis_from_string(std::string_view s) {
  if (s == "linear") return Basis::linear;
  if (s == "circular") return Basis::circular;
  throw std::invalid_argument("unknown basis '" + std::string(s) + "'");
}

class DensityMatrix {
 public:
  // Validates symmetry, unit trace and positivity.
  static DensityMatrix from(const Mat2& m) {
    if (std::abs(m.m01 - m.m10) > kAlgebraicTol)
      throw std::invalid_argument("density matrix is not symmetric");
    if (std::abs(m.trace() - 1.0) > kAlgebraicTol)
      throw std::invalid_argument("density matrix trace is not 1");
    const auto [lo, hi] = eigenvalues(m);
    (void)hi;
    if (lo < -kAlgebraicTol) throw std::invalid_argument("density matrix is not positive semidefinite");
    return DensityMatrix(m);
  }

  // Smallest and largest eigenvalue of the symmetric part of m.
  static std::array<double, 2> eigenvalues(const Mat2& m) {
    const double off = 0.5 * (m.m01 + m.m10);
    const double mean = 0.5 * (m.m00 + m.m11);
    const double half_gap = 0.5 * (m.m00 - m.m11);
    const double r = std::hypot(half_gap, off);
    return {mean - r, mean + r};
  }

  const Mat2& matrix() const { return m_; }
  double purity() const { return trace_product(m_, m_); }

  friend bool operator==(const DensityMatrix&, const DensityMatrix&) = default;

 private:
  explicit DensityMatrix(const Mat2& m) : m_(m) {}
  Mat2 m_;
};

struct SignalState {
  Basis basis;
  Bit bit;
  DensityMatrix matrix;
};

// Real representation: linear = {(1,0),(0,1)}, circular = {(1,1)/sqrt2, (1,-1)/sqrt2}.
inline SignalState signal_state(Basis basis, Bit bit) {
  if (basis == Basis::linear) {
    return {basis, bit,
            DensityMatrix::from(bit == Bit::zero ? Mat2{1.0, 0.0, 0.0, 0.0} : Mat2{0.0, 0.0, 0.0, 1.0})};
  }
  const double s = bit == Bit::zero ? 0.5 : -0.5;
  return {basis, bit, DensityMatrix::from(Mat2{0.5, s, s, 0.5})};
}

// The four signal states in the fixed order rho_1..rho_4:
// (linear,0), (linear,1), (circular,0), (circular,1).
inline const std::array<SignalState, 4>& signal_states() {
  static const std::array<SignalState, 4> states{
      signal_state(Basis::linear, Bit::zero), signal_state(Basis::linear, Bit::one),
      signal_state(Basis::circular, Bit::zero), signal_state(Basis::circular, Bit::one)};
  return states;
}

constexpr std::size_t signal_index(Basis basis, Bit bit) {
  return (basis == Basis::linear ? 0u : 2u) + static_cast<std::size_t>(to_int(bit));
}

// Receiver's analyser effect. In the one-photon space it equals the signal projector.
struct AnalyserEffect {
  Basis basis;
  Bit bit;
  DensityMatrix projector;
};

inline AnalyserEffect analyser_effect(Basis basis, Bit bit) {
  return {basis, bit, signal_state(basis, bit).matrix};
}

// A generalized measurement: operators A_l and a partition of their indices
// into outcome cells K_k. Completeness is a property checked separately.
class KrausSet {
 public:
  using Partition = std::vector<std::vector<std::size_t>>;

  // One outcome per operator.
  explicit KrausSet(std::vector<Mat2> operators) : ops_(std::move(operators)) {
    if (ops_.empty()) throw std::invalid_argument("Kraus set needs at least one operator");
    partition_.reserve(ops_.size());
    for (std::size_t l = 0; l < ops_.size(); ++l) partition_.push_back({l});
  }

  KrausSet(std::vector<Mat2> operators, Partition partition)
      : ops_(std::move(operators)), partition_(std::move(partition)) {
    if (ops_.empty()) throw std::invalid_argument("Kraus set needs at least one operator");
    std::vector<bool> seen(ops_.size(), false);
    for (const auto& cell : partition_) {
      if (cell.empty()) throw std::invalid_argument("empty outcome cell in partition");
      for (std::size_t l : cell) {
        if (l >= ops_.size()) throw std::invalid_argument("partition index out of range");
        if (seen[l]) throw std::invalid_argument("partition cells are not disjoint");
        seen[l] = true;
      }
    }
    for (bool s : seen)
      if (!s) throw std::invalid_argument("partition does not cover every operator");
  }

  std::span<const Mat2> operators() const { return ops_; }
  const Partition& partition() const { return partition_; }
  std::size_t outcome_count() const { return partition_.size(); }
  std::size_t operator_count() const { return ops_.size(); }

  const std::vector<std::size_t>& cell(std::size_t k) const {
    if (k >= partition_.size()) throw std::out_of_range("outcome index out of range");
    return partition_[k];
  }

 private:
  std::vector<Mat2> ops_;
  Partition partition_;
};

// Projective measurement {P, 1-P} with P the rank-1 projector at `angle`.
inline KrausSet projective_measurement(double angle) {
  const Mat2 p = Mat2::projector(angle);
  return KrausSet({p, Mat2::identity() - p});
}

inline KrausSet identity_measurement() { return KrausSet({Mat2::identity()}); }

// Max-entry norm of sum A^T A - 1.
inline double completeness_defect(const KrausSet& set) {
  Mat2 sum = Mat2::zero();
  for (const auto& a : set.operators()) sum += a.transposed() * a;
  return (sum - Mat2::identity()).max_abs();
}

// Sum over the cell of A rho A^T, before normalisation.
inline Mat2 cell_image(const KrausSet& set, const Mat2& rho, std::size_t k) {
  Mat2 out = Mat2::zero();
  for (std::size_t l : set.cell(k)) out += sandwich(set.operators()[l], rho);
  return out;
}

inline double outcome_probability(const KrausSet& set, const DensityMatrix& rho, std::size_t k) {
  return cell_image(set, rho.matrix(), k).trace();
}

inline std::vector<double> outcome_probabilities(const KrausSet& set, const DensityMatrix& rho) {
  std::vector<double> p(set.outcome_count());
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = outcome_probability(set, rho, k);
  return p;
}

namespace detail {
inline Mat2 symmetrized(Mat2 m) {
  const double off = 0.5 * (m.m01 + m.m10);
  m.m01 = m.m10 = off;
  return m;
}
}  // namespace detail

// Selective post-measurement state for outcome k. Throws std::domain_error
// when the outcome cannot occur.
inline DensityMatrix post_state_selective(const KrausSet& set, const DensityMatrix& rho, std::size_t k) {
  const Mat2 image = cell_image(set, rho.matrix(), k);
  const double p = image.trace();
  if (!(p > 1e-15)) throw std::domain_error("post-selected outcome has zero probability");
  return DensityMatrix::from(detail::symmetrized(image * (1.0 / p)));
}

inline DensityMatrix post_state_nonselective(const KrausSet& set, const DensityMatrix& rho) {
  Mat2 out = Mat2::zero();
  for (const auto& a : set.operators()) out += sandwich(a, rho.matrix());
  return DensityMatrix::from(detail::symmetrized(out));
}

}  // namespace bb84sec
