#pragma once

// Dispatch of one experiment to the simulator and its CSV result row.

#include <optional>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "eespec/analytic.hpp"
#include "eespec/harness/config.hpp"
#include "eespec/pipesim.hpp"

namespace eespec::harness {

inline constexpr std::string_view kResultHeader =
    "regime,n_layers,exit_depth,gamma,alpha,beta,seed,horizon,committed,ticks,accepts,rejects,"
    "alpha_all,throughput,speedup,analytic_speedup";

inline SimResult execute(const ExperimentConfig& cfg, bool record_trace = false) {
  validate(cfg);
  const PipelineConfig pipeline = make_pipeline(cfg);
  SimOptions opt;
  opt.hop_latency = cfg.hop_latency;
  opt.steady_state = cfg.steady_state;
  opt.cache_reuse = cfg.cache_reuse;
  opt.record_trace = record_trace;
  const RngStream rng(cfg.seed);

  switch (cfg.regime) {
    case Regime::autoregressive:
      if (!cfg.uses_toylm()) return simulate_autoregressive(pipeline, cfg.horizon, opt);
      return decode_autoregressive_timed(make_lm(cfg), pipeline, resolve_prompt(cfg),
                                         cfg.horizon, decode_mode(cfg), rng, opt);
    case Regime::eesd: {
      SimResult result = simulate_eesd(pipeline, *cfg.gamma, make_oracle(cfg), cfg.horizon, rng, opt);
      if (cfg.uses_toylm()) result.tokens.resize(static_cast<std::size_t>(cfg.horizon));
      return result;
    }
    case Regime::ppsd:
      return simulate_ppsd(pipeline, make_oracle(cfg), cfg.horizon, rng, opt);
  }
  throw config_error("regime", "unhandled regime");
}

// Closed-form speedup for the configuration; empty for toy-LM runs.
inline std::optional<double> analytic_speedup(const ExperimentConfig& cfg) {
  if (cfg.regime == Regime::autoregressive) return 1.0;
  if (cfg.uses_toylm() || !cfg.alpha) return std::nullopt;
  const double alpha = *cfg.alpha;
  if (cfg.regime == Regime::ppsd) {
    if (cfg.exit_stage == 1) return analytic::ppsd_speedup(alpha, cfg.n_layers, cfg.exit_depth);
    return analytic::ppsd_speedup_at_exit_stage(alpha, cfg.n_layers, cfg.exit_depth,
                                                cfg.exit_stage);
  }
  if (cfg.exit_stage != 1) return std::nullopt;
  return analytic::eesd_speedup({alpha, *cfg.gamma, cfg.n_layers, cfg.exit_depth},
                                cfg.cache_reuse);
}

// Expected accepted / drafted ratio; empty where it is not defined.
inline std::optional<double> analytic_alpha_all(const ExperimentConfig& cfg) {
  if (cfg.regime == Regime::autoregressive || cfg.uses_toylm() || !cfg.alpha) {
    return std::nullopt;
  }
  if (cfg.regime == Regime::ppsd) return *cfg.alpha;
  return analytic::overall_acceptance(*cfg.alpha, *cfg.gamma);
}

inline std::string format_real(std::optional<double> value) {
  return value ? fmt::format("{:.6f}", *value) : std::string();
}

inline std::string result_row(const ExperimentConfig& cfg, const RunMetrics& m) {
  return fmt::format(
      "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", to_string(cfg.regime), cfg.n_layers,
      cfg.exit_depth, cfg.gamma ? std::to_string(*cfg.gamma) : std::string(),
      (!cfg.uses_toylm() && cfg.alpha) ? fmt::format("{}", *cfg.alpha) : std::string(),
      cfg.uses_toylm() ? fmt::format("{}", cfg.beta) : std::string(), cfg.seed, cfg.horizon,
      m.committed_tokens, m.ticks, m.accepts, m.rejects, format_real(m.alpha_all),
      format_real(m.throughput), format_real(m.speedup_vs_ar),
      format_real(analytic_speedup(cfg)));
}

}  // namespace eespec::harness
