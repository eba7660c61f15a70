#include <gtest/gtest.h>

#include <random>
#include <sstream>
#include <string>

#include "eespec/harness/config.hpp"
#include "eespec/harness/report.hpp"
#include "eespec/harness/run.hpp"
#include "eespec/harness/sweep.hpp"

using namespace eespec;
using namespace eespec::harness;

namespace {

ExperimentConfig bernoulli_ppsd(double alpha, std::int64_t horizon = 10000) {
  ExperimentConfig cfg;
  cfg.alpha = alpha;
  cfg.horizon = horizon;
  return cfg;
}

std::string field_of(const ExperimentConfig& cfg) {
  try {
    validate(cfg);
  } catch (const config_error& e) {
    return e.field();
  }
  return {};
}

std::string report_value(const std::string& report, const std::string& name) {
  std::istringstream in(report);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(name + " ", 0) == 0) return line.substr(line.find_last_of(' ') + 1);
  }
  return {};
}

ExperimentConfig random_config(std::mt19937_64& gen) {
  ExperimentConfig cfg;
  const int e = 1 + static_cast<int>(gen() % 16);
  cfg.exit_depth = e;
  cfg.n_layers = e * (2 + static_cast<int>(gen() % 6)) + static_cast<int>(gen() % e);
  cfg.regime = static_cast<Regime>(gen() % 3);
  if (cfg.regime == Regime::eesd) cfg.gamma = 1 + static_cast<int>(gen() % 20);
  cfg.oracle = static_cast<OracleKind>(gen() % 3);
  if (!cfg.uses_toylm()) {
    cfg.alpha = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
  } else {
    cfg.force_reject = gen() % 2;
    cfg.beta = std::uniform_real_distribution<double>(0.0, 8.0)(gen);
    cfg.vocab = 2 + static_cast<int>(gen() % 100);
    for (int i = 0, n = static_cast<int>(gen() % 5); i < n; ++i) {
      cfg.prompt.push_back(static_cast<Token>(gen() % static_cast<unsigned>(cfg.vocab)));
    }
  }
  cfg.lm_seed = gen();
  cfg.seed = gen();
  cfg.horizon = 1 + static_cast<std::int64_t>(gen() % 1000000);
  cfg.hop_latency = static_cast<int>(gen() % 4);
  cfg.steady_state = cfg.horizon >= 2 && gen() % 2;
  cfg.cache_reuse = cfg.regime == Regime::eesd && gen() % 2;
  if (gen() % 2) cfg.results_path = "out/r" + std::to_string(gen() % 100) + ".csv";
  if (gen() % 2) cfg.trace_path = "trace.csv";
  return cfg;
}

}  // namespace

TEST(Config, DefaultsAndParsing) {
  const ExperimentConfig cfg = parse_config(
      "# comment\n"
      "regime = eesd   # trailing comment\n"
      "gamma=5\n"
      "alpha = 0.6\n"
      "\n"
      "prompt = 1, 2,3\n"
      "cache_reuse = true\n");
  EXPECT_EQ(cfg.regime, Regime::eesd);
  EXPECT_EQ(cfg.gamma, 5);
  EXPECT_EQ(cfg.alpha, 0.6);
  EXPECT_EQ(cfg.prompt, (std::vector<Token>{1, 2, 3}));
  EXPECT_TRUE(cfg.cache_reuse);
  EXPECT_EQ(cfg.n_layers, 32);
  EXPECT_NO_THROW(validate(cfg));
}

TEST(Config, ParseErrorsNameTheField) {
  try {
    parse_config("horizon = ten\n");
    FAIL();
  } catch (const config_error& e) {
    EXPECT_EQ(e.field(), "horizon");
    EXPECT_NE(std::string(e.what()).find("horizon"), std::string::npos);
  }
  EXPECT_THROW(parse_config("colour = blue\n"), config_error);
  EXPECT_THROW(parse_config("steady_state = maybe\n"), config_error);
  EXPECT_THROW(parse_config("just some words\n"), config_error);
  EXPECT_THROW(parse_config("alpha = nan\n"), config_error);
}

TEST(Config, RoundTrip) {
  std::mt19937_64 gen(2718);
  for (int i = 0; i < 500; ++i) {
    const ExperimentConfig cfg = random_config(gen);
    ASSERT_NO_THROW(validate(cfg)) << to_config_text(cfg);
    const std::string text = to_config_text(cfg);
    EXPECT_EQ(parse_config(text), cfg) << text;
    EXPECT_EQ(to_config_text(parse_config(text)), text);
  }
}

TEST(Config, ValidationNamesOffendingField) {
  auto cfg = bernoulli_ppsd(0.5);
  EXPECT_EQ(field_of(cfg), "");

  cfg = bernoulli_ppsd(0.5);
  cfg.exit_depth = 40;
  EXPECT_EQ(field_of(cfg), "exit_depth");
  cfg.exit_depth = 32;
  EXPECT_EQ(field_of(cfg), "exit_depth");  // single stage cannot pipeline

  cfg = bernoulli_ppsd(1.5);
  EXPECT_EQ(field_of(cfg), "alpha");
  cfg.alpha.reset();
  EXPECT_EQ(field_of(cfg), "alpha");

  cfg = bernoulli_ppsd(0.5);
  cfg.gamma = 3;
  EXPECT_EQ(field_of(cfg), "gamma");
  cfg.regime = Regime::eesd;
  cfg.gamma = 0;
  EXPECT_EQ(field_of(cfg), "gamma");
  cfg.gamma.reset();
  EXPECT_EQ(field_of(cfg), "gamma");

  cfg = bernoulli_ppsd(0.5);
  cfg.horizon = 0;
  EXPECT_EQ(field_of(cfg), "horizon");
  cfg.horizon = kMaxHorizon + 1;
  EXPECT_EQ(field_of(cfg), "horizon");

  cfg = bernoulli_ppsd(0.5);
  cfg.exit_stage = 4;
  EXPECT_EQ(field_of(cfg), "exit_stage");

  cfg = bernoulli_ppsd(0.5);
  cfg.oracle = OracleKind::toylm_greedy;
  EXPECT_EQ(field_of(cfg), "alpha");
  cfg.alpha.reset();
  cfg.prompt = {32};
  EXPECT_EQ(field_of(cfg), "prompt");
  cfg.prompt = {1};
  cfg.beta = -1.0;
  EXPECT_EQ(field_of(cfg), "beta");

  cfg = bernoulli_ppsd(0.5);
  cfg.force_reject = true;
  EXPECT_EQ(field_of(cfg), "force_reject");
  cfg = bernoulli_ppsd(0.5);
  cfg.cache_reuse = true;
  EXPECT_EQ(field_of(cfg), "cache_reuse");
  cfg = bernoulli_ppsd(0.5);
  cfg.hop_latency = -1;
  EXPECT_EQ(field_of(cfg), "hop_latency");
}

TEST(Run, Examples) {
  EXPECT_NEAR(execute(bernoulli_ppsd(1.0)).metrics.speedup_vs_ar, 4.0, 0.01);

  ExperimentConfig eesd = bernoulli_ppsd(0.3, 100000);
  eesd.regime = Regime::eesd;
  eesd.gamma = 10;
  EXPECT_LT(execute(eesd).metrics.speedup_vs_ar, 1.0);

  ExperimentConfig ar;
  ar.regime = Regime::autoregressive;
  ar.horizon = 100;
  EXPECT_EQ(execute(ar).metrics.ticks, 400);
}

TEST(Run, ToyLmPromptDerivedFromSeed) {
  ExperimentConfig cfg;
  cfg.oracle = OracleKind::toylm_greedy;
  cfg.horizon = 50;
  cfg.seed = 4;
  const auto a = execute(cfg);
  EXPECT_EQ(a.tokens.size(), 50u);
  EXPECT_EQ(resolve_prompt(cfg).size(), static_cast<std::size_t>(kAlphaPrefixLength));
  cfg.regime = Regime::autoregressive;
  EXPECT_EQ(execute(cfg).tokens, a.tokens);
}

TEST(ResultCsv, HeaderAndRow) {
  EXPECT_EQ(kResultHeader,
            "regime,n_layers,exit_depth,gamma,alpha,beta,seed,horizon,committed,ticks,accepts,"
            "rejects,alpha_all,throughput,speedup,analytic_speedup");
  ExperimentConfig cfg = bernoulli_ppsd(1.0, 1000);
  const RunMetrics m = execute(cfg).metrics;
  EXPECT_EQ(result_row(cfg, m),
            "ppsd,32,8,,1,,0,1000,1000,1003,1000,0,1.000000,0.997009,3.988036,4.000000");

  ExperimentConfig toy;
  toy.oracle = OracleKind::toylm_greedy;
  toy.horizon = 10;
  const std::string row = result_row(toy, execute(toy).metrics);
  EXPECT_EQ(row.rfind("ppsd,32,8,,,1,0,10,10,", 0), 0u) << row;
  EXPECT_EQ(row.back(), ',');  // no closed form for the toy LM
}

TEST(ResultCsv, RepeatedRunsAreByteIdentical) {
  ExperimentConfig cfg = bernoulli_ppsd(0.55, 20000);
  cfg.seed = 9;
  EXPECT_EQ(result_row(cfg, execute(cfg).metrics), result_row(cfg, execute(cfg).metrics));
  std::ostringstream a, b;
  execute(cfg, true).trace.write_csv(a);
  execute(cfg, true).trace.write_csv(b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().rfind("tick,stage,kind,position,token,verdict\n0,0,ACTIVATION,0,,\n", 0), 0u);
}

TEST(Sweep, ParseAxis) {
  EXPECT_EQ(parse_axis("alpha=0.1, 0.2,0.3"), (SweepAxis{"alpha", {"0.1", "0.2", "0.3"}}));
  EXPECT_EQ(parse_axis("gamma=1:4"), (SweepAxis{"gamma", {"1", "2", "3", "4"}}));
  EXPECT_EQ(parse_axis("alpha=0:1:0.25"), (SweepAxis{"alpha", {"0", "0.25", "0.5", "0.75", "1"}}));
  EXPECT_EQ(parse_axis("alpha=0:1:0.1").values.size(), 11u);
  EXPECT_THROW(parse_axis("alpha"), config_error);
  EXPECT_THROW(parse_axis("alpha="), config_error);
  EXPECT_THROW(parse_axis("alpha=1:0"), config_error);
  EXPECT_THROW(parse_axis("alpha=0:1:0"), config_error);
  EXPECT_THROW(parse_axis("alpha=1,,2"), config_error);
}

TEST(Sweep, ExpansionOrderAndLimits) {
  SweepSpec spec{bernoulli_ppsd(0.5, 100), {parse_axis("alpha=0.1,0.9"), parse_axis("seed=1,2,3")}};
  const auto cells = expand(spec);
  ASSERT_EQ(cells.size(), 6u);
  EXPECT_EQ(cells[0].alpha, 0.1);
  EXPECT_EQ(cells[0].seed, 1u);
  EXPECT_EQ(cells[2].seed, 3u);
  EXPECT_EQ(cells[3].alpha, 0.9);

  EXPECT_THROW(expand({bernoulli_ppsd(0.5), {}}), config_error);
  EXPECT_THROW(expand({bernoulli_ppsd(0.5), {parse_axis("seed=1"), parse_axis("seed=2")}}),
               config_error);
  EXPECT_THROW(expand({bernoulli_ppsd(0.5),
                       {parse_axis("seed=0:100"), parse_axis("horizon=1:100")}}),
               config_error);
  EXPECT_THROW(expand({bernoulli_ppsd(0.5), {parse_axis("alpha=0.5,2")}}), config_error);
  EXPECT_THROW(expand({bernoulli_ppsd(0.5), {parse_axis("colour=1,2")}}), config_error);
}

TEST(Sweep, ThreadedRowsMatchSerialOrder) {
  SweepSpec spec{bernoulli_ppsd(0.5, 2000), {parse_axis("alpha=0:1:0.1"), parse_axis("seed=1,2")}};
  std::ostringstream serial, threaded;
  write_sweep_csv(serial, run_sweep(spec, 1));
  write_sweep_csv(threaded, run_sweep(spec, 4));
  EXPECT_EQ(serial.str(), threaded.str());
  EXPECT_EQ(serial.str().rfind(std::string(kResultHeader) + ",analytic_alpha_all\n", 0), 0u);
}

TEST(Sweep, OverallAcceptanceFallsWithGamma) {
  ExperimentConfig base = bernoulli_ppsd(0.7, 20000);
  base.regime = Regime::eesd;
  base.gamma = 1;
  const auto result = run_sweep({base, {parse_axis("gamma=1:32")}}, 2);
  for (std::size_t i = 1; i < result.cells.size(); ++i) {
    EXPECT_LT(*analytic_alpha_all(result.cells[i]), *analytic_alpha_all(result.cells[i - 1]));
    EXPECT_LT(*result.metrics[i].alpha_all, *result.metrics[i - 1].alpha_all + 0.01);
  }
}

TEST(Sweep, PpsdSpeedupRisesWithAlpha) {
  const auto result = run_sweep({bernoulli_ppsd(0.5, 50000), {parse_axis("alpha=0:1:0.1")}}, 2);
  for (std::size_t i = 1; i < result.cells.size(); ++i) {
    EXPECT_GE(result.metrics[i].speedup_vs_ar, result.metrics[i - 1].speedup_vs_ar);
  }
}

TEST(Report, Rows) {
  const std::string r = analytic_report({0.3226, 5, 32, 8}, default_cost({0.3226, 5, 32, 8}));
  EXPECT_EQ(report_value(r, "ppsd_speedup"), "1.3192");
  const std::string zero = analytic_report({0.0, 5, 32, 8}, default_cost({0.0, 5, 32, 8}));
  EXPECT_EQ(report_value(zero, "eesd_speedup"), "0.4444");
  EXPECT_EQ(report_value(zero, "ppsd_speedup"), "1.0000");
  EXPECT_EQ(report_value(zero, "expected_accept_len"), "0.0000");
  const std::string half = analytic_report({1.0, 5, 32, 16}, default_cost({1.0, 5, 32, 16}));
  EXPECT_EQ(report_value(half, "ppsd_speedup"), "2.0000");
  EXPECT_EQ(report_value(half, "overall_acceptance"), "1.0000");
  EXPECT_THROW(analytic_report({1.5, 5, 32, 8}, {}), std::invalid_argument);
}
