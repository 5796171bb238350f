#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bb84sec/attacks.hpp"
#include "bb84sec/bounds.hpp"
#include "bb84sec/optimizer.hpp"
#include "bb84sec/protocol.hpp"

namespace bb84sec::io {

using nlohmann::json;

// Configuration problem, message carries the offending key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CurveConfig {
  bounds::Curve curve = bounds::Curve::tau1;
  double d_min = 0.0;
  double d_max = 0.4;
  int steps = 41;
};

struct VerifyConfig {
  optimizer::Mode mode = optimizer::Mode::shannon;
  std::vector<double> grid{0.01, 0.02, 0.05, 0.10, 0.20, 0.30};
  bool two_pair = false;
  optimizer::SearchConfig search;
};

struct ExperimentConfig {
  std::optional<protocol::ProtocolConfig> simulate;
  std::optional<VerifyConfig> optimizer;
  std::optional<CurveConfig> curves;
};

namespace detail {

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(path + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError(path + "." + it.key() + ": unknown key");
  }
}

template <class T>
T get(const json& obj, const std::string& path, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + "." + key + ": " + e.what());
  }
}

inline CanonicalAttackOp parse_canonical(const json& j, const std::string& path) {
  reject_unknown(j, path, {"a", "b", "phi", "theta"});
  return {get(j, path, "a", 0.0), get(j, path, "b", 1.0), get(j, path, "phi", 0.0), get(j, path, "theta", 0.0)};
}

inline SymmetricAttackOp parse_symmetric(const json& j, const std::string& path) {
  reject_unknown(j, path, {"a", "b", "sign", "theta"});
  const auto sign = get<std::string>(j, path, "sign", "minus");
  SymmetricSign s;
  if (sign == "plus") s = SymmetricSign::plus;
  else if (sign == "minus") s = SymmetricSign::minus;
  else if (sign == "antisymmetric") s = SymmetricSign::antisymmetric;
  else throw ConfigError(path + ".sign: expected plus, minus or antisymmetric");
  return {get(j, path, "a", 0.0), get(j, path, "b", 1.0), s, get(j, path, "theta", 0.0)};
}

}  // namespace detail

// Attack section: {"kind": ..., ...}. Returns nullopt for kind "none".
inline std::optional<AttackStrategy> parse_attack(const json& j, const std::string& path = "attack") {
  using detail::get;
  detail::reject_unknown(j, path, {"kind", "basis", "ops", "operators", "partition"});
  const auto kind = get<std::string>(j, path, "kind", "none");
  try {
    if (kind == "none") return std::nullopt;
    if (kind == "intercept-resend") return intercept_resend(basis_from_string(get<std::string>(j, path, "basis", "linear")));
    if (kind == "breidbart") return breidbart_attack();
    if (kind == "shannon-canonical" || kind == "collision-symmetric") {
      if (!j.contains("ops") || !j.at("ops").is_array() || j.at("ops").empty())
        throw ConfigError(path + ".ops: expected a nonempty array");
      AttackStrategy s;
      for (std::size_t i = 0; i < j.at("ops").size(); ++i) {
        const std::string p = path + ".ops[" + std::to_string(i) + "]";
        if (kind == "shannon-canonical") s.canonical.push_back(detail::parse_canonical(j.at("ops")[i], p));
        else s.symmetric.push_back(detail::parse_symmetric(j.at("ops")[i], p));
      }
      s.kind = kind == "shannon-canonical" ? StrategyKind::shannon_canonical : StrategyKind::collision_symmetric;
      strategy_to_kraus(s);
      return s;
    }
    if (kind == "raw-kraus") {
      const auto mats = get<std::vector<std::vector<double>>>(j, path, "operators", {});
      std::vector<Mat2> ops;
      for (std::size_t i = 0; i < mats.size(); ++i) {
        if (mats[i].size() != 4) throw ConfigError(path + ".operators[" + std::to_string(i) + "]: expected 4 numbers");
        ops.push_back({mats[i][0], mats[i][1], mats[i][2], mats[i][3]});
      }
      AttackStrategy s = j.contains("partition")
                             ? AttackStrategy::raw_kraus(KrausSet(
                                   ops, get<std::vector<std::vector<std::size_t>>>(j, path, "partition", {})))
                             : AttackStrategy::raw_kraus(KrausSet(ops));
      strategy_to_kraus(s);
      return s;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  throw ConfigError(path + ".kind: unknown attack kind '" + kind + "'");
}

inline protocol::ProtocolConfig parse_protocol(const json& j, const std::string& path = "simulate") {
  using detail::get;
  detail::reject_unknown(j, path, {"n_signals", "seed", "sample_fraction", "ec_mode", "security_param", "loss_prob",
                                   "tau1_source", "record_transcript", "attack"});
  protocol::ProtocolConfig c;
  c.n_signals = get<std::uint64_t>(j, path, "n_signals", c.n_signals);
  if (!j.contains("seed")) throw ConfigError(path + ".seed: required");
  c.seed = get<std::uint64_t>(j, path, "seed", c.seed);
  c.sample_fraction = get(j, path, "sample_fraction", c.sample_fraction);
  c.security_param = get<std::uint64_t>(j, path, "security_param", c.security_param);
  c.loss_prob = get(j, path, "loss_prob", c.loss_prob);
  c.record_transcript = get(j, path, "record_transcript", c.record_transcript);
  const auto ec = get<std::string>(j, path, "ec_mode", "oracle");
  if (ec == "oracle") c.ec_mode = protocol::EcMode::oracle;
  else if (ec == "block-parity") c.ec_mode = protocol::EcMode::block_parity;
  else throw ConfigError(path + ".ec_mode: expected oracle or block-parity");
  const auto tau = get<std::string>(j, path, "tau1_source", "nondelayed");
  if (tau == "nondelayed") c.tau1_source = protocol::Tau1Source::nondelayed;
  else if (tau == "delayed") c.tau1_source = protocol::Tau1Source::delayed;
  else throw ConfigError(path + ".tau1_source: expected nondelayed or delayed");
  if (c.n_signals < 1) throw ConfigError(path + ".n_signals: must be >= 1");
  if (!(c.sample_fraction > 0.0 && c.sample_fraction < 1.0)) throw ConfigError(path + ".sample_fraction: must lie in (0,1)");
  if (!(c.loss_prob >= 0.0 && c.loss_prob < 1.0)) throw ConfigError(path + ".loss_prob: must lie in [0,1)");
  if (j.contains("attack")) c.attack = parse_attack(j.at("attack"), path + ".attack");
  return c;
}

inline VerifyConfig parse_verify(const json& j, const std::string& path = "optimizer") {
  using detail::get;
  detail::reject_unknown(j, path, {"mode", "grid", "two_pair", "grid_size", "refine_starts", "random_screen",
                                   "param_tol", "value_tol", "max_evals", "disturbance_tol", "seed", "workers"});
  VerifyConfig v;
  try {
    v.mode = optimizer::mode_from_string(get<std::string>(j, path, "mode", "shannon"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ".mode: " + e.what());
  }
  v.grid = get(j, path, "grid", v.grid);
  v.two_pair = get(j, path, "two_pair", v.two_pair);
  auto& s = v.search;
  s.grid_size = get(j, path, "grid_size", s.grid_size);
  s.refine_starts = get(j, path, "refine_starts", s.refine_starts);
  s.random_screen = get(j, path, "random_screen", s.random_screen);
  s.param_tol = get(j, path, "param_tol", s.param_tol);
  s.value_tol = get(j, path, "value_tol", s.value_tol);
  s.max_evals = get(j, path, "max_evals", s.max_evals);
  s.disturbance_tol = get(j, path, "disturbance_tol", s.disturbance_tol);
  s.seed = get(j, path, "seed", s.seed);
  s.workers = get(j, path, "workers", s.workers);
  if (s.grid_size < 2) throw ConfigError(path + ".grid_size: must be >= 2");
  return v;
}

inline CurveConfig parse_curves(const json& j, const std::string& path = "curves") {
  using detail::get;
  detail::reject_unknown(j, path, {"curve", "d_min", "d_max", "steps"});
  CurveConfig c;
  try {
    c.curve = bounds::curve_from_string(get<std::string>(j, path, "curve", "tau1"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ".curve: " + e.what());
  }
  c.d_min = get(j, path, "d_min", c.d_min);
  c.d_max = get(j, path, "d_max", c.d_max);
  c.steps = get(j, path, "steps", c.steps);
  return c;
}

inline ExperimentConfig parse_experiment(const json& j) {
  detail::reject_unknown(j, "config", {"simulate", "optimizer", "curves"});
  ExperimentConfig c;
  if (j.contains("simulate")) c.simulate = parse_protocol(j.at("simulate"), "simulate");
  if (j.contains("optimizer")) c.optimizer = parse_verify(j.at("optimizer"), "optimizer");
  if (j.contains("curves")) c.curves = parse_curves(j.at("curves"), "curves");
  return c;
}

inline ExperimentConfig parse_experiment_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_experiment(j);
}

inline ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_experiment_text(text);
}

inline json to_json(const protocol::SessionResult& r) {
  json log = json::array();
  for (const auto& e : r.eve_outcome_log) log.push_back(json::array({e.outcome, std::string(to_string(e.basis))}));
  return json{
      {"status", protocol::to_string(r.status)},
      {"n_signals", r.n_signals},
      {"detected_count", r.detected_count},
      {"sifted_length", r.sifted_length},
      {"sample_size", r.sample_size},
      {"sample_errors", r.sample_errors},
      {"measured_error_rate", r.measured_error_rate},
      {"error_rate_stddev", r.error_rate_stddev},
      {"ec_mode", protocol::to_string(r.ec_mode)},
      {"corrected_length", r.corrected_key.size()},
      {"corrected_key", protocol::to_text(r.corrected_key)},
      {"ec_consumed_secret_bits", r.ec_consumed_secret_bits},
      {"ec_residual_errors", r.ec_residual_errors},
      {"tau1_source", protocol::to_string(r.tau1_source)},
      {"tau1_applied", r.tau1_applied},
      {"security_param", r.security_param},
      {"final_key_length", r.final_key_length},
      {"final_key", protocol::to_text(r.final_key)},
      {"receiver_final_key", protocol::to_text(r.receiver_final_key)},
      {"sifted_key", protocol::to_text(r.sifted_key)},
      {"eve_outcome_log", std::move(log)},
  };
}

inline json to_json(const bounds::BoundReport& b) {
  return json{{"d_m", b.d_m},
              {"eta_bar_shannon", b.eta_bar_shannon},
              {"eta_bar_collision", b.eta_bar_collision},
              {"shannon_sharp", b.shannon_sharp},
              {"shannon_linear", b.shannon_linear},
              {"tau1", b.tau1},
              {"shannon_delayed", b.shannon_delayed},
              {"tau1_delayed", b.tau1_delayed}};
}

// Fixed-format number: 12 significant digits.
inline std::string fmt12(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

inline std::string bound_report_csv(const bounds::BoundReport& b) {
  std::ostringstream os;
  os << "d_m,eta_bar_shannon,eta_bar_collision,shannon_sharp,shannon_linear,tau1,shannon_delayed,tau1_delayed\n";
  os << fmt12(b.d_m) << ',' << fmt12(b.eta_bar_shannon) << ',' << fmt12(b.eta_bar_collision) << ','
     << fmt12(b.shannon_sharp) << ',' << fmt12(b.shannon_linear) << ',' << fmt12(b.tau1) << ','
     << fmt12(b.shannon_delayed) << ',' << fmt12(b.tau1_delayed) << '\n';
  return os.str();
}

inline std::string curve_csv(const std::vector<std::pair<double, double>>& rows) {
  std::ostringstream os;
  os << "d_m,value\n";
  for (const auto& [d, v] : rows) os << fmt12(d) << ',' << fmt12(v) << '\n';
  return os.str();
}

inline constexpr const char* kScanHeader = "d_m,mode,best_value,bound_value,slack,eta,phi,theta";

inline std::string scan_row_csv(const optimizer::OptResult& r) {
  const auto& p = r.best_params.front();
  std::ostringstream os;
  os << fmt12(r.target_d) << ',' << optimizer::to_string(r.mode) << ',' << fmt12(r.best_value) << ','
     << fmt12(r.bound_value) << ',' << fmt12(r.slack) << ',' << fmt12(p.eta) << ',' << fmt12(p.phi) << ','
     << fmt12(p.theta);
  return os.str();
}

inline std::string transcript_csv(const protocol::SessionResult& r) {
  std::ostringstream os;
  os << "index,sender_basis,sender_bit,detected,eve_outcome,receiver_basis,receiver_bit,sifted\n";
  for (const auto& t : r.transcript) {
    os << t.index << ',' << to_string(t.sender_basis) << ',' << int(t.sender_bit) << ',' << int(t.detected) << ','
       << t.eve_outcome << ',';
    if (t.detected) os << to_string(t.receiver_basis) << ',' << int(t.receiver_bit);
    else os << ',';
    os << ',' << int(t.sifted) << '\n';
  }
  return os.str();
}

}  // namespace bb84sec::io
