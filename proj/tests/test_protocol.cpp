#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "bb84sec/bounds.hpp"
#include "bb84sec/protocol.hpp"
#include "oracles.hpp"

using namespace bb84sec;
using namespace bb84sec::protocol;

namespace {

Bits random_bits(StreamEngine& rng, std::size_t n) {
  Bits b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng() & 1);
  return b;
}

SiftedKey with_errors(StreamEngine& rng, std::size_t n, double rate) {
  SiftedKey k;
  k.sender = random_bits(rng, n);
  k.receiver = k.sender;
  for (std::size_t i = 0; i < n; ++i) {
    k.index.push_back(i);
    if (rng.uniform() < rate) k.receiver[i] ^= 1;
  }
  return k;
}

ProtocolConfig base_config(std::uint64_t seed, std::uint64_t n = 100000) {
  ProtocolConfig cfg;
  cfg.seed = seed;
  cfg.n_signals = n;
  return cfg;
}

double binomial_sigma(double p, double n) { return std::sqrt(p * (1 - p) / n); }

}  // namespace

TEST(Sift, Examples) {
  const std::vector<Basis> same(4, Basis::linear);
  const Bits bob{1, 0, 1, 1}, alice{1, 0, 0, 1};
  const auto all = sift(same, same, bob, alice);
  EXPECT_EQ(all.size(), 4u);
  EXPECT_EQ(all.receiver, bob);

  const std::vector<Basis> a{Basis::linear, Basis::circular, Basis::linear, Basis::circular};
  const std::vector<Basis> b{Basis::linear, Basis::linear, Basis::linear, Basis::linear};
  const auto half = sift(a, b, bob, alice);
  EXPECT_EQ(half.index, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(half.sender, (Bits{1, 0}));
  EXPECT_EQ(half.receiver, (Bits{1, 1}));

  EXPECT_THROW(sift(a, b, Bits{1}, alice), std::invalid_argument);
}

TEST(Sift, KeptFractionIsHalf) {
  StreamEngine rng(3, 9);
  const std::size_t n = 100000;
  std::vector<Basis> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rng() & 1 ? Basis::linear : Basis::circular;
    b[i] = rng() & 1 ? Basis::linear : Basis::circular;
  }
  const Bits zeros(n, 0);
  const double kept = static_cast<double>(sift(a, b, zeros, zeros).size()) / n;
  EXPECT_NEAR(kept, 0.5, 3 * binomial_sigma(0.5, n));
}

TEST(EstimateError, Examples) {
  StreamEngine rng(5, 2);
  const auto clean = with_errors(rng, 1000, 0.0);
  const auto e0 = estimate_error(clean, 0.1, rng);
  EXPECT_EQ(e0.error_rate, 0.0);
  EXPECT_EQ(e0.sample_size, 100u);
  EXPECT_EQ(e0.remaining.size(), 900u);

  auto flipped = clean;
  for (auto& x : flipped.receiver) x ^= 1;
  EXPECT_EQ(estimate_error(flipped, 0.1, rng).error_rate, 1.0);

  const auto noisy = with_errors(rng, 100000, 0.25);
  const auto e = estimate_error(noisy, 0.1, rng);
  EXPECT_EQ(e.sample_size, 10000u);
  EXPECT_NEAR(e.error_rate, 0.25, 3 * binomial_sigma(0.25, 1e4));
}

TEST(EstimateError, SampleIsDisjointFromRemainder) {
  StreamEngine rng(6, 2);
  const auto key = with_errors(rng, 500, 0.1);
  const auto e = estimate_error(key, 0.3, rng);
  EXPECT_EQ(e.sample_size + e.remaining.size(), key.size());
  for (std::size_t i = 1; i < e.remaining.index.size(); ++i) EXPECT_LT(e.remaining.index[i - 1], e.remaining.index[i]);
}

TEST(EstimateError, DegenerateSamples) {
  StreamEngine rng(7, 2);
  const auto key = with_errors(rng, 5, 0.0);
  EXPECT_THROW(estimate_error(key, 0.1, rng), std::invalid_argument);
  EXPECT_THROW(estimate_error(key, 0.0, rng), std::invalid_argument);
  EXPECT_THROW(estimate_error(key, 1.0, rng), std::invalid_argument);
}

TEST(CorrectErrors, ErrorFreeInputUnchanged) {
  StreamEngine rng(8, 3);
  const auto key = with_errors(rng, 200, 0.0);
  for (EcMode m : {EcMode::oracle, EcMode::block_parity}) {
    StreamEngine r(8, 3);
    const auto c = correct_errors(key, m, r);
    EXPECT_EQ(c.sender_key, key.sender);
    EXPECT_EQ(c.receiver_key, key.sender);
    EXPECT_EQ(c.bisection_steps, 0u);
    EXPECT_EQ(c.residual_errors, 0u);
  }
  StreamEngine r(8, 3);
  EXPECT_EQ(correct_errors(key, EcMode::oracle, r).consumed_secret_bits, 0u);
}

TEST(CorrectErrors, SingleErrorFoundByBisection) {
  StreamEngine rng(9, 3);
  auto key = with_errors(rng, 16, 0.0);
  key.receiver[11] ^= 1;
  const auto c = correct_errors(key, EcMode::block_parity, rng);
  EXPECT_EQ(c.bisection_steps, 4u);
  EXPECT_EQ(c.receiver_key, key.sender);
  EXPECT_EQ(c.residual_errors, 0u);
  // 1 block parity + 4 bisection parities, then a clean confirming round
  EXPECT_EQ(c.consumed_secret_bits, 6u);
}

TEST(CorrectErrors, OracleAtFivePercent) {
  StreamEngine rng(10, 3);
  const std::size_t n = 10000;
  const auto key = with_errors(rng, n, 0.05);
  const auto c = correct_errors(key, EcMode::oracle, rng);
  EXPECT_EQ(c.sender_key, c.receiver_key);
  EXPECT_NEAR(static_cast<double>(c.sender_key.size()) / n, 0.95, 3 * binomial_sigma(0.05, n));
}

TEST(CorrectErrors, BlockParityReducesErrors) {
  StreamEngine rng(11, 3);
  const auto key = with_errors(rng, 5000, 0.01);
  std::size_t before = 0;
  for (std::size_t i = 0; i < key.size(); ++i) before += key.sender[i] != key.receiver[i];
  const auto c = correct_errors(key, EcMode::block_parity, rng);
  EXPECT_LT(c.residual_errors * 5, before);
  EXPECT_GT(c.consumed_secret_bits, 0u);
}

TEST(PrivacyAmplification, Lengths) {
  StreamEngine rng(12, 4);
  const Bits key = random_bits(rng, 1000);
  EXPECT_EQ(privacy_amplify(key, 0.0, 0, rng).size(), 1000u);
  EXPECT_TRUE(privacy_amplify(key, 1.0, 0, rng).empty());
  EXPECT_EQ(privacy_amplify(key, 0.2624, 30, rng).size(), 707u);
  EXPECT_TRUE(privacy_amplify(key, 0.9, 200, rng).empty());
  EXPECT_THROW(privacy_amplify(Bits{}, 0.1, 0, rng), std::invalid_argument);
  EXPECT_EQ(amplified_length(1000, 0.2624, 30), 707u);
}

TEST(PrivacyAmplification, ToeplitzMatchesDefinition) {
  StreamEngine rng(13, 4);
  for (const auto& [n, m] : {std::pair<std::size_t, std::size_t>{1, 1}, {5, 3}, {64, 64}, {65, 7}, {300, 129}, {1000, 707}}) {
    const Bits key = random_bits(rng, n);
    std::vector<std::uint64_t> words((m + n - 1 + 63) / 64 + 1);
    for (auto& w : words) w = rng();
    Bits seed_bits(words.size() * 64);
    for (std::size_t i = 0; i < seed_bits.size(); ++i) seed_bits[i] = (words[i / 64] >> (i % 64)) & 1;
    EXPECT_EQ(toeplitz_hash(key, m, words), oracle::toeplitz(key, m, seed_bits)) << n << "x" << m;
  }
}

TEST(PrivacyAmplification, IdenticalForBothParties) {
  StreamEngine gen(14, 4);
  const Bits key = random_bits(gen, 2000);
  StreamEngine a(99, kHashStream), b(99, kHashStream);
  EXPECT_EQ(privacy_amplify(key, 0.3, 10, a), privacy_amplify(key, 0.3, 10, b));
}

// 10^4 two-bit compressions of random 16-bit inputs with fresh matrices:
// chi-square with 3 degrees of freedom, 99% critical value 11.345.
TEST(PrivacyAmplification, OutputIsUniform) {
  StreamEngine rng(15, 4);
  std::array<double, 4> counts{};
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    const Bits key = random_bits(rng, 16);
    const auto out = privacy_amplify(key, 1.0 - 2.0 / 16, 0, rng);
    ASSERT_EQ(out.size(), 2u);
    counts[out[0] * 2 + out[1]] += 1;
  }
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - trials / 4.0) * (c - trials / 4.0) / (trials / 4.0);
  EXPECT_LT(chi2, 11.345);
}

// Two fixed distinct inputs collide with probability 2^-m over the matrix choice.
TEST(PrivacyAmplification, UniversalCollisionRate) {
  StreamEngine rng(16, 4);
  const Bits x = random_bits(rng, 32);
  Bits y = x;
  y[5] ^= 1;
  y[20] ^= 1;
  const int trials = 20000;
  int same = 0;
  for (int t = 0; t < trials; ++t) {
    std::vector<std::uint64_t> words(3);
    for (auto& w : words) w = rng();
    same += toeplitz_hash(x, 2, words) == toeplitz_hash(y, 2, words);
  }
  EXPECT_NEAR(same / static_cast<double>(trials), 0.25, 3 * binomial_sigma(0.25, trials));
}

TEST(Session, NoAttackIsErrorFree) {
  auto cfg = base_config(21);
  cfg.security_param = 30;
  const auto r = run_session(cfg);
  EXPECT_EQ(r.status, SessionStatus::ok);
  EXPECT_EQ(r.measured_error_rate, 0.0);
  EXPECT_EQ(r.tau1_applied, 0.0);
  EXPECT_EQ(r.corrected_key.size(), r.sifted_length - r.sample_size);
  EXPECT_EQ(r.final_key_length, r.corrected_key.size() - 30);
  EXPECT_EQ(r.final_key, r.receiver_final_key);
  EXPECT_NEAR(static_cast<double>(r.sifted_length) / 1e5, 0.5, 3 * binomial_sigma(0.5, 1e5));
  EXPECT_TRUE(r.eve_outcome_log.empty());
}

TEST(Session, InterceptResendErrorRate) {
  auto cfg = base_config(22);
  cfg.attack = intercept_resend(Basis::linear);
  const auto r = run_session(cfg);
  EXPECT_NEAR(r.measured_error_rate, 0.25, 3 * binomial_sigma(0.25, static_cast<double>(r.sample_size)));
  EXPECT_EQ(r.status, SessionStatus::ok);
  EXPECT_EQ(r.tau1_applied, bounds::tau1_bound(r.measured_error_rate));
  EXPECT_LT(r.tau1_applied, 1.0);
  EXPECT_EQ(r.final_key_length, amplified_length(r.corrected_key.size(), r.tau1_applied, 0));
  EXPECT_EQ(r.final_key, r.receiver_final_key);
}

TEST(Session, CanonicalPairAtHalf) {
  auto cfg = base_config(23);
  cfg.attack = AttackStrategy::shannon_canonical({CanonicalAttackOp::from_eta(1.0, 0.5, 0.0, 0.0)});
  const auto r = run_session(cfg);
  EXPECT_NEAR(r.measured_error_rate, 0.05, 3 * binomial_sigma(0.05, static_cast<double>(r.sample_size)));
}

TEST(Session, HeavyLossConditioning) {
  const double n = 1e5;
  auto cfg = base_config(24);
  cfg.loss_prob = 0.9;
  const auto r = run_session(cfg);
  EXPECT_EQ(r.measured_error_rate, 0.0);
  EXPECT_NEAR(r.sifted_length, 0.05 * n, 3 * std::sqrt(n * 0.05 * 0.95));
  EXPECT_NEAR(r.detected_count, 0.1 * n, 3 * std::sqrt(n * 0.1 * 0.9));
}

TEST(Session, InsecureChannel) {
  auto cfg = base_config(25, 20000);
  cfg.attack = AttackStrategy::shannon_canonical({{0.5, 0.5, std::numbers::pi / 4, 0.0}});
  const auto r = run_session(cfg);
  EXPECT_GE(r.measured_error_rate, 1.0 / 3.0);
  EXPECT_EQ(r.status, SessionStatus::insecure_channel);
  EXPECT_EQ(r.final_key_length, 0u);
  EXPECT_TRUE(r.final_key.empty());
}

TEST(Session, DelayedTau1Source) {
  auto cfg = base_config(26, 40000);
  cfg.attack = AttackStrategy::shannon_canonical({CanonicalAttackOp::from_eta(1.0, 0.5, 0.0, 0.0)});
  cfg.tau1_source = Tau1Source::delayed;
  const auto r = run_session(cfg);
  EXPECT_EQ(r.tau1_applied, bounds::delayed_tau1_bound(r.measured_error_rate));
}

TEST(Session, Deterministic) {
  auto cfg = base_config(27, 20000);
  cfg.attack = breidbart_attack();
  cfg.ec_mode = EcMode::block_parity;
  cfg.record_transcript = true;
  const auto a = run_session(cfg), b = run_session(cfg);
  EXPECT_EQ(a.final_key, b.final_key);
  EXPECT_EQ(a.corrected_key, b.corrected_key);
  EXPECT_EQ(a.measured_error_rate, b.measured_error_rate);
  ASSERT_EQ(a.transcript.size(), b.transcript.size());
  for (std::size_t i = 0; i < a.transcript.size(); ++i) ASSERT_EQ(a.transcript[i].receiver_bit, b.transcript[i].receiver_bit);
  cfg.seed = 28;
  EXPECT_NE(run_session(cfg).sifted_key, a.sifted_key);
}

TEST(Session, EmptyConfigIsRejected) {
  auto cfg = base_config(29, 0);
  EXPECT_THROW(run_session(cfg), std::invalid_argument);
}

TEST(EveAccounting, NoAttack) {
  const auto r = run_session(base_config(30, 10000));
  const auto acc = eve_accounting(r, std::nullopt);
  EXPECT_EQ(acc.empirical_information, 0.0);
  EXPECT_EQ(acc.analytic_information, 0.0);
}

TEST(EveAccounting, BuiltInAttacksAtMillion) {
  for (const auto& attack : {intercept_resend(Basis::linear), breidbart_attack()}) {
    auto cfg = base_config(31, 1000000);
    cfg.attack = attack;
    const auto r = run_session(cfg);
    const auto acc = eve_accounting(r, attack);
    EXPECT_NEAR(acc.empirical_information, acc.analytic_information, 0.01);
    EXPECT_LE(acc.empirical_information, bounds::shannon_sharp_bound(r.measured_error_rate) + 0.01);
  }
}
