#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bb84sec/attacks.hpp"
#include "bb84sec/bounds.hpp"
#include "bb84sec/metrics.hpp"
#include "bb84sec/quantum.hpp"
#include "bb84sec/rng.hpp"

namespace bb84sec::protocol {

using Bits = std::vector<std::uint8_t>;

inline std::string to_text(std::span<const std::uint8_t> bits) {
  std::string s(bits.size(), '0');
  for (std::size_t i = 0; i < bits.size(); ++i) s[i] = bits[i] ? '1' : '0';
  return s;
}

enum class EcMode { oracle, block_parity };
enum class Tau1Source { nondelayed, delayed };
enum class SessionStatus { ok, insecure_channel };

inline std::string to_string(EcMode m) { return m == EcMode::oracle ? "oracle" : "block-parity"; }
inline std::string to_string(Tau1Source t) { return t == Tau1Source::nondelayed ? "nondelayed" : "delayed"; }
inline std::string to_string(SessionStatus s) { return s == SessionStatus::ok ? "ok" : "insecure_channel"; }

// RNG streams, one per protocol stage.
inline constexpr std::uint64_t kSignalStream = 1;
inline constexpr std::uint64_t kSampleStream = 2;
inline constexpr std::uint64_t kReconcileStream = 3;
inline constexpr std::uint64_t kHashStream = 4;

struct ProtocolConfig {
  std::uint64_t n_signals = 100000;
  std::optional<AttackStrategy> attack;
  std::uint64_t seed = 1;
  double sample_fraction = 0.1;
  EcMode ec_mode = EcMode::oracle;
  std::uint64_t security_param = 0;
  double loss_prob = 0.0;
  Tau1Source tau1_source = Tau1Source::nondelayed;
  bool record_transcript = false;
};

struct RoundRecord {
  std::uint64_t index;
  Basis sender_basis;
  std::uint8_t sender_bit;
  bool detected;
  int eve_outcome;  // -1 without attack or when lost
  Basis receiver_basis;
  std::uint8_t receiver_bit;
  bool sifted;
};

struct EveRecord {
  int outcome;
  Basis basis;
  friend bool operator==(const EveRecord&, const EveRecord&) = default;
};

struct SessionResult {
  SessionStatus status = SessionStatus::ok;
  std::uint64_t n_signals = 0;
  std::uint64_t detected_count = 0;
  std::uint64_t sifted_length = 0;
  std::uint64_t sample_size = 0;
  std::uint64_t sample_errors = 0;
  double measured_error_rate = 0.0;
  double error_rate_stddev = 0.0;  // binomial standard error of the estimate
  EcMode ec_mode = EcMode::oracle;
  Bits corrected_key;
  std::uint64_t ec_consumed_secret_bits = 0;
  std::uint64_t ec_residual_errors = 0;
  Tau1Source tau1_source = Tau1Source::nondelayed;
  double tau1_applied = 0.0;
  std::uint64_t security_param = 0;
  std::uint64_t final_key_length = 0;
  Bits final_key;
  Bits receiver_final_key;
  Bits sifted_key;                   // sender's bits of the sifted rounds
  std::vector<EveRecord> eve_outcome_log;  // aligned with sifted_key
  std::vector<RoundRecord> transcript;     // only with record_transcript
};

struct SiftedKey {
  std::vector<std::size_t> index;
  Bits sender;
  Bits receiver;

  std::size_t size() const { return sender.size(); }
};

// Keeps exactly the rounds whose bases match.
inline SiftedKey sift(std::span<const Basis> sender_bases, std::span<const Basis> receiver_bases,
                      std::span<const std::uint8_t> receiver_bits, std::span<const std::uint8_t> sender_bits) {
  const std::size_t n = sender_bases.size();
  if (receiver_bases.size() != n || receiver_bits.size() != n || sender_bits.size() != n)
    throw std::invalid_argument("sift: sequences differ in length");
  SiftedKey out;
  for (std::size_t i = 0; i < n; ++i) {
    if (sender_bases[i] != receiver_bases[i]) continue;
    out.index.push_back(i);
    out.sender.push_back(sender_bits[i]);
    out.receiver.push_back(receiver_bits[i]);
  }
  return out;
}

struct ErrorEstimate {
  double error_rate;
  std::size_t sample_size;
  std::size_t errors;
  SiftedKey remaining;
};

// Publicly compares a uniformly drawn floor(fraction * n) subset and removes it.
inline ErrorEstimate estimate_error(const SiftedKey& key, double sample_fraction, StreamEngine& rng) {
  if (!(sample_fraction > 0.0 && sample_fraction < 1.0))
    throw std::invalid_argument("estimate_error: sample fraction must lie in (0,1)");
  const std::size_t n = key.size();
  const auto m = static_cast<std::size_t>(std::floor(sample_fraction * static_cast<double>(n)));
  if (m == 0 || m >= n) throw std::invalid_argument("estimate_error: degenerate sample");

  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = 0; i < m; ++i) std::swap(perm[i], perm[i + rng.below(n - i)]);

  std::vector<bool> sampled(n, false);
  std::size_t errors = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sampled[perm[i]] = true;
    if (key.sender[perm[i]] != key.receiver[perm[i]]) ++errors;
  }
  ErrorEstimate est{static_cast<double>(errors) / static_cast<double>(m), m, errors, {}};
  for (std::size_t i = 0; i < n; ++i) {
    if (sampled[i]) continue;
    est.remaining.index.push_back(key.index[i]);
    est.remaining.sender.push_back(key.sender[i]);
    est.remaining.receiver.push_back(key.receiver[i]);
  }
  return est;
}

struct CorrectionResult {
  Bits sender_key;
  Bits receiver_key;
  std::size_t consumed_secret_bits = 0;  // parity bits, paid from the shared secret
  std::size_t bisection_steps = 0;
  std::size_t rounds = 0;
  std::size_t residual_errors = 0;       // against ground truth, diagnostic only
};

inline constexpr std::size_t kParityBlock = 16;
inline constexpr std::size_t kMaxParityRounds = 8;

inline CorrectionResult correct_errors(const SiftedKey& key, EcMode mode, StreamEngine& rng) {
  CorrectionResult out;
  if (mode == EcMode::oracle) {
    for (std::size_t i = 0; i < key.size(); ++i) {
      if (key.sender[i] != key.receiver[i]) continue;
      out.sender_key.push_back(key.sender[i]);
      out.receiver_key.push_back(key.receiver[i]);
    }
    return out;
  }

  out.sender_key = key.sender;
  out.receiver_key = key.receiver;
  const std::size_t n = key.size();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;

  auto parity = [&](const Bits& bits, std::size_t lo, std::size_t hi) {
    std::uint8_t p = 0;
    for (std::size_t i = lo; i < hi; ++i) p ^= bits[perm[i]];
    return p;
  };
  auto compare = [&](std::size_t lo, std::size_t hi) {
    ++out.consumed_secret_bits;
    return parity(out.sender_key, lo, hi) != parity(out.receiver_key, lo, hi);
  };

  for (std::size_t round = 0; round < kMaxParityRounds && n > 0; ++round) {
    if (round > 0)
      for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    ++out.rounds;
    std::size_t mismatches = 0;
    for (std::size_t lo = 0; lo < n; lo += kParityBlock) {
      std::size_t hi = std::min(n, lo + kParityBlock);
      if (!compare(lo, hi)) continue;
      ++mismatches;
      while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        ++out.bisection_steps;
        if (compare(lo, mid)) hi = mid; else lo = mid;
      }
      out.receiver_key[perm[lo]] ^= 1;
    }
    if (mismatches == 0) break;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (out.sender_key[i] != out.receiver_key[i]) ++out.residual_errors;
  return out;
}

// Toeplitz hash: out_i = XOR_j T(i,j) key_j with T(i,j) = seed[j - i + m - 1].
// `seed_words` holds at least m + n - 1 bits, plus one spare word.
inline Bits toeplitz_hash(std::span<const std::uint8_t> key, std::size_t out_len,
                          std::span<const std::uint64_t> seed_words) {
  const std::size_t n = key.size();
  if (out_len == 0 || n == 0) return {};
  const std::size_t seed_bits = out_len + n - 1;
  if (seed_words.size() * 64 < seed_bits + 64) throw std::invalid_argument("toeplitz_hash: seed too short");

  const std::size_t words = (n + 63) / 64;
  std::vector<std::uint64_t> packed(words, 0);
  for (std::size_t j = 0; j < n; ++j)
    if (key[j]) packed[j / 64] |= std::uint64_t{1} << (j % 64);

  auto window_word = [&](std::size_t offset) {
    const std::size_t q = offset / 64, r = offset % 64;
    if (r == 0) return seed_words[q];
    return (seed_words[q] >> r) | (seed_words[q + 1] << (64 - r));
  };

  Bits out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    const std::size_t start = out_len - 1 - i;
    std::uint64_t acc = 0;
    for (std::size_t w = 0; w < words; ++w) acc ^= window_word(start + 64 * w) & packed[w];
    out[i] = static_cast<std::uint8_t>(std::popcount(acc) & 1);
  }
  return out;
}

inline std::size_t amplified_length(std::size_t len, double tau1, std::uint64_t s) {
  const double kept = std::floor(static_cast<double>(len) * (1.0 - std::clamp(tau1, 0.0, 1.0)));
  return kept > static_cast<double>(s) ? static_cast<std::size_t>(kept) - static_cast<std::size_t>(s) : 0;
}

// Shortens the key to floor(len (1 - tau1)) - s bits with a Toeplitz matrix
// drawn from rng. Both parties draw the same matrix from the same stream.
inline Bits privacy_amplify(std::span<const std::uint8_t> key, double tau1, std::uint64_t s, StreamEngine& rng) {
  if (key.empty()) throw std::invalid_argument("privacy_amplify: empty key");
  const std::size_t m = amplified_length(key.size(), tau1, s);
  if (m == 0) return {};
  std::vector<std::uint64_t> seed((m + key.size() - 1 + 63) / 64 + 1);
  for (auto& w : seed) w = rng();
  return toeplitz_hash(key, m, seed);
}

inline SessionResult run_session(const ProtocolConfig& cfg) {
  if (cfg.n_signals < 1) throw std::invalid_argument("run_session: need at least one signal");
  if (!(cfg.loss_prob >= 0.0 && cfg.loss_prob < 1.0)) throw std::invalid_argument("run_session: loss_prob must lie in [0,1)");
  if (!(cfg.sample_fraction > 0.0 && cfg.sample_fraction < 1.0))
    throw std::invalid_argument("run_session: sample_fraction must lie in (0,1)");

  std::optional<KrausSet> eve;
  if (cfg.attack) eve = strategy_to_kraus(*cfg.attack);

  SessionResult res;
  res.n_signals = cfg.n_signals;
  res.ec_mode = cfg.ec_mode;
  res.tau1_source = cfg.tau1_source;
  res.security_param = cfg.security_param;

  const CounterRng rng(cfg.seed, kSignalStream);
  std::vector<Basis> sender_bases, receiver_bases;
  Bits sender_bits, receiver_bits;
  std::vector<int> eve_outcomes;
  std::vector<double> probs;

  for (std::uint64_t i = 0; i < cfg.n_signals; ++i) {
    const Basis a_basis = rng.uniform(i, 0) < 0.5 ? Basis::linear : Basis::circular;
    const Bit a_bit = rng.uniform(i, 1) < 0.5 ? Bit::zero : Bit::one;
    const bool detected = !(rng.uniform(i, 2) < cfg.loss_prob);
    RoundRecord rec{i, a_basis, static_cast<std::uint8_t>(to_int(a_bit)), detected, -1, Basis::linear, 0, false};
    if (detected) {
      DensityMatrix state = signal_state(a_basis, a_bit).matrix;
      if (eve) {
        probs = outcome_probabilities(*eve, state);
        const double u = rng.uniform(i, 3);
        std::size_t k = 0;
        double acc = 0.0;
        std::size_t last_possible = 0;
        for (; k < probs.size(); ++k) {
          if (probs[k] > 0.0) last_possible = k;
          acc += probs[k];
          if (u < acc && probs[k] > 0.0) break;
        }
        if (k == probs.size()) k = last_possible;
        state = post_state_selective(*eve, state, k);
        rec.eve_outcome = static_cast<int>(k);
      }
      rec.receiver_basis = rng.uniform(i, 4) < 0.5 ? Basis::linear : Basis::circular;
      const double p0 = trace_product(state.matrix(), analyser_effect(rec.receiver_basis, Bit::zero).projector.matrix());
      rec.receiver_bit = rng.uniform(i, 5) < p0 ? 0 : 1;
      rec.sifted = rec.receiver_basis == a_basis;

      sender_bases.push_back(a_basis);
      receiver_bases.push_back(rec.receiver_basis);
      sender_bits.push_back(rec.sender_bit);
      receiver_bits.push_back(rec.receiver_bit);
      eve_outcomes.push_back(rec.eve_outcome);
      ++res.detected_count;
    }
    if (cfg.record_transcript) res.transcript.push_back(rec);
  }

  const SiftedKey sifted = sift(sender_bases, receiver_bases, receiver_bits, sender_bits);
  if (sifted.size() == 0) throw std::runtime_error("run_session: sifted key is empty");
  res.sifted_length = sifted.size();
  res.sifted_key = sifted.sender;
  if (eve) {
    res.eve_outcome_log.reserve(sifted.size());
    for (std::size_t idx : sifted.index) res.eve_outcome_log.push_back({eve_outcomes[idx], sender_bases[idx]});
  }

  StreamEngine sample_rng(cfg.seed, kSampleStream);
  const ErrorEstimate est = estimate_error(sifted, cfg.sample_fraction, sample_rng);
  res.sample_size = est.sample_size;
  res.sample_errors = est.errors;
  res.measured_error_rate = est.error_rate;
  res.error_rate_stddev =
      std::sqrt(est.error_rate * (1.0 - est.error_rate) / static_cast<double>(est.sample_size));

  StreamEngine reconcile_rng(cfg.seed, kReconcileStream);
  CorrectionResult corr = correct_errors(est.remaining, cfg.ec_mode, reconcile_rng);
  res.ec_consumed_secret_bits = corr.consumed_secret_bits;
  res.ec_residual_errors = corr.residual_errors;
  res.corrected_key = corr.sender_key;

  if (res.measured_error_rate >= 1.0 / 3.0) {
    res.tau1_applied = 1.0;
  } else {
    res.tau1_applied = cfg.tau1_source == Tau1Source::nondelayed ? bounds::tau1_bound(res.measured_error_rate)
                                                                 : bounds::delayed_tau1_bound(res.measured_error_rate);
  }
  if (res.tau1_applied >= 1.0) res.status = SessionStatus::insecure_channel;

  if (!corr.sender_key.empty() && res.status == SessionStatus::ok) {
    StreamEngine sender_hash(cfg.seed, kHashStream), receiver_hash(cfg.seed, kHashStream);
    res.final_key = privacy_amplify(corr.sender_key, res.tau1_applied, cfg.security_param, sender_hash);
    res.receiver_final_key = privacy_amplify(corr.receiver_key, res.tau1_applied, cfg.security_param, receiver_hash);
  }
  res.final_key_length = res.final_key.size();
  return res;
}

struct EveAccounting {
  double empirical_information = 0.0;  // bits per sifted signal
  double analytic_information = 0.0;   // shannon_information of the attack
  std::size_t rounds = 0;
};

// Plug-in mutual information between Eve's (outcome, revealed basis) and the
// sifted key bit, from counts.
inline EveAccounting eve_accounting(const SessionResult& s, const std::optional<AttackStrategy>& attack) {
  EveAccounting acc;
  if (attack) acc.analytic_information = shannon_information(*attack);
  if (s.eve_outcome_log.empty()) return acc;
  if (s.eve_outcome_log.size() != s.sifted_key.size())
    throw std::invalid_argument("eve_accounting: log and sifted key differ in length");

  std::map<std::pair<int, int>, std::array<double, 2>> counts;
  std::array<double, 2> bit_counts{0.0, 0.0};
  const auto n = static_cast<double>(s.sifted_key.size());
  for (std::size_t i = 0; i < s.sifted_key.size(); ++i) {
    const auto& e = s.eve_outcome_log[i];
    counts[{e.outcome, e.basis == Basis::linear ? 0 : 1}][s.sifted_key[i]] += 1.0;
    bit_counts[s.sifted_key[i]] += 1.0;
  }
  double info = entropy_term(bit_counts[0] / n) + entropy_term(bit_counts[1] / n);
  for (const auto& [key, c] : counts) {
    info += entropy_term((c[0] + c[1]) / n);
    info -= entropy_term(c[0] / n) + entropy_term(c[1] / n);
  }
  acc.empirical_information = std::max(info, 0.0);
  acc.rounds = s.sifted_key.size();
  return acc;
}

}  // namespace bb84sec::protocol
