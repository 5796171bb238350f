#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "bb84sec/io.hpp"

using namespace bb84sec;
using namespace bb84sec::io;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_experiment_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, MinimalSimulateUsesDefaults) {
  const auto c = parse_experiment_text(R"({"simulate": {"seed": 7}})");
  ASSERT_TRUE(c.simulate);
  EXPECT_EQ(c.simulate->seed, 7u);
  EXPECT_EQ(c.simulate->n_signals, 100000u);
  EXPECT_EQ(c.simulate->sample_fraction, 0.1);
  EXPECT_EQ(c.simulate->ec_mode, protocol::EcMode::oracle);
  EXPECT_FALSE(c.simulate->attack);
  EXPECT_FALSE(c.optimizer);
}

TEST(Config, FullSimulateSection) {
  const auto c = parse_experiment_text(R"({"simulate": {
      "seed": 3, "n_signals": 5000, "sample_fraction": 0.2, "ec_mode": "block-parity",
      "security_param": 30, "loss_prob": 0.5, "tau1_source": "delayed", "record_transcript": true,
      "attack": {"kind": "shannon-canonical", "ops": [{"a": 0.2, "b": 0.8, "phi": 0.0, "theta": 0.0}]}}})");
  const auto& s = *c.simulate;
  EXPECT_EQ(s.n_signals, 5000u);
  EXPECT_EQ(s.ec_mode, protocol::EcMode::block_parity);
  EXPECT_EQ(s.tau1_source, protocol::Tau1Source::delayed);
  EXPECT_EQ(s.security_param, 30u);
  EXPECT_TRUE(s.record_transcript);
  ASSERT_TRUE(s.attack);
  EXPECT_EQ(s.attack->kind, StrategyKind::shannon_canonical);
  EXPECT_NEAR(s.attack->canonical.at(0).eta(), 0.5, 1e-15);
}

TEST(Config, AttackKinds) {
  for (const char* attack :
       {R"({"kind": "intercept-resend", "basis": "circular"})", R"({"kind": "breidbart"})",
        R"({"kind": "collision-symmetric", "ops": [{"a": 0.2, "b": 0.8, "sign": "plus", "theta": 0.3}]})",
        R"({"kind": "raw-kraus", "operators": [[1,0,0,0],[0,0,0,1]], "partition": [[0,1]]})"}) {
    const auto c = parse_experiment_text(std::string(R"({"simulate": {"seed": 1, "attack": )") + attack + "}}");
    EXPECT_TRUE(c.simulate->attack) << attack;
  }
  const auto none = parse_experiment_text(R"({"simulate": {"seed": 1, "attack": {"kind": "none"}}})");
  EXPECT_FALSE(none.simulate->attack);
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_NE(error_of(R"({"simulate": {"seed": 1, "n_signal": 5}})").find("simulate.n_signal"), std::string::npos);
  EXPECT_NE(error_of(R"({"simulat": {}})").find("config.simulat"), std::string::npos);
  EXPECT_NE(error_of(R"({"simulate": {"n_signals": 5}})").find("simulate.seed"), std::string::npos);
  EXPECT_NE(error_of(R"({"simulate": {"seed": "x"}})").find("simulate.seed"), std::string::npos);
  EXPECT_NE(error_of(R"({"simulate": {"seed": 1, "attack": {"kind": "laser"}}})").find("simulate.attack.kind"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"simulate": {"seed": 1, "attack": {"kind": "shannon-canonical",
      "ops": [{"a": 0.2, "b": 0.8, "eta": 1}]}}})")
                .find("simulate.attack.ops[0].eta"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"optimizer": {"mode": "entropy"}})").find("optimizer.mode"), std::string::npos);
  EXPECT_NE(error_of(R"({"simulate": {"seed": 1, "loss_prob": 1.0}})").find("loss_prob"), std::string::npos);
}

TEST(Config, IncompleteAttackRejected) {
  EXPECT_NE(error_of(R"({"simulate": {"seed": 1, "attack": {"kind": "shannon-canonical",
      "ops": [{"a": 0.2, "b": 0.7}]}}})"),
            "");
  EXPECT_NE(error_of(R"({"simulate": {"seed": 1, "attack": {"kind": "raw-kraus", "operators": [[1,0,0,0]]}}})"), "");
}

TEST(Config, SyntaxErrorReportsPosition) {
  const std::string e = error_of("{\"simulate\": {\n\"seed\": 1,,\n}}");
  EXPECT_NE(e.find("parse error"), std::string::npos);
  EXPECT_NE(e.find("line 2"), std::string::npos);
}

TEST(Config, OptimizerAndCurves) {
  const auto c = parse_experiment_text(
      R"({"optimizer": {"mode": "collision", "grid": [0.05], "workers": 2, "grid_size": 8},
          "curves": {"curve": "delayed_tau1", "d_min": 0.0, "d_max": 0.3, "steps": 31}})");
  ASSERT_TRUE(c.optimizer);
  EXPECT_EQ(c.optimizer->mode, optimizer::Mode::collision);
  EXPECT_EQ(c.optimizer->grid, std::vector<double>{0.05});
  EXPECT_EQ(c.optimizer->search.workers, 2u);
  EXPECT_EQ(c.optimizer->search.grid_size, 8);
  ASSERT_TRUE(c.curves);
  EXPECT_EQ(c.curves->curve, bounds::Curve::delayed_tau1);
  EXPECT_EQ(c.curves->steps, 31);
}

TEST(Config, LoadFromFile) {
  const std::string path = ::testing::TempDir() + "bb84sec_io_test.json";
  std::ofstream(path) << R"({"simulate": {"seed": 11, "n_signals": 100}})";
  EXPECT_EQ(load_experiment(path).simulate->seed, 11u);
  std::remove(path.c_str());
  EXPECT_THROW(load_experiment(path), ConfigError);
}

TEST(Output, SessionJson) {
  protocol::ProtocolConfig cfg;
  cfg.seed = 5;
  cfg.n_signals = 2000;
  cfg.attack = intercept_resend(Basis::linear);
  const auto r = protocol::run_session(cfg);
  const json j = to_json(r);
  EXPECT_EQ(j.at("status"), "ok");
  EXPECT_EQ(j.at("sifted_length").get<std::uint64_t>(), r.sifted_length);
  EXPECT_EQ(j.at("final_key").get<std::string>().size(), r.final_key_length);
  EXPECT_EQ(j.at("final_key"), protocol::to_text(r.final_key));
  EXPECT_EQ(j.at("eve_outcome_log").size(), r.sifted_length);
  EXPECT_EQ(j.at("eve_outcome_log")[0][1].get<std::string>(), to_string(r.eve_outcome_log[0].basis));
  EXPECT_EQ(j.dump(), to_json(protocol::run_session(cfg)).dump());
  // round trip through text
  EXPECT_EQ(json::parse(j.dump()), j);
}

TEST(Output, Csv) {
  EXPECT_EQ(curve_csv({{0.0, 0.0}, {0.25, 0.5}}), "d_m,value\n0,0\n0.25,0.5\n");
  const std::string row = bound_report_csv(bounds::evaluate(0.04));
  EXPECT_EQ(row.rfind("d_m,", 0), 0u);
  EXPECT_NE(row.find("0.112124927007"), std::string::npos);
  EXPECT_EQ(fmt12(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(std::string(kScanHeader).rfind("d_m,", 0), 0u);
}
