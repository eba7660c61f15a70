#pragma once

#include <string>

#include <fmt/format.h>

#include "eespec/analytic.hpp"

namespace eespec::harness {

// Fixed-width table of the six closed-form quantities, 4 decimals each.
inline std::string analytic_report(const analytic::SpeedupParams& params,
                                   const analytic::CostModel& cost, bool cache_reuse = false) {
  params.validate();
  std::string out = fmt::format("alpha={} gamma={} n_layers={} exit_depth={} n_stages={}\n",
                                params.alpha, params.gamma, params.n_layers, params.exit_depth,
                                params.n_stages());
  auto row = [&](std::string_view name, double value) {
    out += fmt::format("{:<24}{:.4f}\n", name, value);
  };
  row("expected_accept_len", analytic::expected_accept_len(params.alpha, params.gamma));
  row("overall_acceptance", analytic::overall_acceptance(params.alpha, params.gamma));
  row("sd_gain", analytic::sd_gain(cost, params.alpha, params.gamma));
  row("eesd_speedup", analytic::eesd_speedup(params, cache_reuse));
  row("ppsd_speedup", analytic::ppsd_speedup(params.alpha, params.n_layers, params.exit_depth));
  row("ppsd_over_eesd_lambda", analytic::ppsd_over_eesd_lambda(params));
  return out;
}

// Draft cost defaults to the exit fraction E/N of a full forward.
inline analytic::CostModel default_cost(const analytic::SpeedupParams& params) {
  return {1.0, static_cast<double>(params.exit_depth) / static_cast<double>(params.n_layers)};
}

}  // namespace eespec::harness
