#pragma once

// Closed-form throughput model for early-exit self-speculative decoding.
//
// Three regimes are covered: plain speculative decoding with separate
// draft/target cost (sd_gain), draft-then-verify early-exit decoding
// (eesd_speedup) and pipeline-parallel verify-while-draft decoding
// (ppsd_speedup). All functions are total on the closed interval
// alpha in [0, 1]; the alpha = 1 endpoints use the analytic limits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace eespec::analytic {

inline void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
}

inline void check_gamma(std::int64_t gamma) {
  if (gamma < 1) {
    throw std::invalid_argument("gamma must be >= 1, got " + std::to_string(gamma));
  }
}

inline void check_layers(std::int64_t n_layers, std::int64_t exit_depth) {
  if (n_layers < 1) {
    throw std::invalid_argument("n_layers must be >= 1, got " + std::to_string(n_layers));
  }
  if (exit_depth < 1 || exit_depth > n_layers) {
    throw std::invalid_argument("exit_depth must lie in [1, n_layers], got " +
                                std::to_string(exit_depth));
  }
}

/// ceil(N / E): number of pipeline stages when each stage holds E layers.
inline std::int64_t stage_count(std::int64_t n_layers, std::int64_t exit_depth) {
  check_layers(n_layers, exit_depth);
  return (n_layers + exit_depth - 1) / exit_depth;
}

/// Forward-pass costs of the target and the draft model for a single token.
/// Verification of a batch of drafts is assumed to cost the same as one
/// target forward, so there is no batch-size dependence here.
struct CostModel {
  double t_target = 1.0;
  double t_draft = 1.0;

  void validate() const {
    if (!(t_target > 0.0) || !std::isfinite(t_target)) {
      throw std::invalid_argument("t_target must be > 0");
    }
    // t_draft = 0 models free drafting and is allowed.
    if (!(t_draft >= 0.0) || !std::isfinite(t_draft)) {
      throw std::invalid_argument("t_draft must be >= 0");
    }
  }
};

struct SpeedupParams {
  double alpha = 0.0;
  std::int64_t gamma = 1;
  std::int64_t n_layers = 1;
  std::int64_t exit_depth = 1;

  void validate() const {
    check_alpha(alpha);
    check_gamma(gamma);
    check_layers(n_layers, exit_depth);
  }

  std::int64_t n_stages() const { return stage_count(n_layers, exit_depth); }
};

/// Expected number of accepted drafts out of gamma when each draft is
/// accepted independently with probability alpha and the chain stops at the
/// first rejection: alpha (1 - alpha^gamma) / (1 - alpha), with limit gamma
/// at alpha = 1.
inline double expected_accept_len(double alpha, std::int64_t gamma) {
  check_alpha(alpha);
  check_gamma(gamma);
  if (alpha == 1.0) return static_cast<double>(gamma);
  return alpha * (1.0 - std::pow(alpha, static_cast<double>(gamma))) / (1.0 - alpha);
}

/// Accepted drafts divided by drafted tokens.
inline double overall_acceptance(double alpha, std::int64_t gamma) {
  return expected_accept_len(alpha, gamma) / static_cast<double>(gamma);
}

/// Speculative-decoding gain T_T / (gamma T_D + T_T) * (E(gamma) + 1).
inline double sd_gain(const CostModel& cost, double alpha, std::int64_t gamma) {
  cost.validate();
  const double tokens_per_round = expected_accept_len(alpha, gamma) + 1.0;
  return cost.t_target / (static_cast<double>(gamma) * cost.t_draft + cost.t_target) *
         tokens_per_round;
}

/// Draft-then-verify early-exit speedup
///   (1 - alpha^(gamma+1)) N / ((1 - alpha)(gamma E + N)).
/// With cache_reuse the verification forward is charged N - E layers
/// instead of N (drafted layers are not recomputed).
inline double eesd_speedup(const SpeedupParams& p, bool cache_reuse = false) {
  p.validate();
  // (1 - a^(g+1)) / (1 - a) == 1 + E(g), which stays finite at a = 1.
  const double tokens_per_round = 1.0 + expected_accept_len(p.alpha, p.gamma);
  const double n = static_cast<double>(p.n_layers);
  const double e = static_cast<double>(p.exit_depth);
  const double verify_layers = cache_reuse ? n - e : n;
  return tokens_per_round * n / (static_cast<double>(p.gamma) * e + verify_layers);
}

/// Pipeline-parallel verify-while-draft speedup
///   N / (alpha E + (1 - alpha) ceil(N/E) E),
/// with the draft leaving the pipeline after the first stage.
inline double ppsd_speedup(double alpha, std::int64_t n_layers, std::int64_t exit_depth) {
  check_alpha(alpha);
  const double s = static_cast<double>(stage_count(n_layers, exit_depth));
  const double e = static_cast<double>(exit_depth);
  return static_cast<double>(n_layers) / (alpha * e + (1.0 - alpha) * s * e);
}

/// Reference formula for a draft taken after `exit_stage` stages instead of
/// one: N / (alpha k E + (1 - alpha) ceil(N/E) E). Derived from the same
/// tick model as ppsd_speedup; it reduces to ppsd_speedup at k = 1.
inline double ppsd_speedup_at_exit_stage(double alpha, std::int64_t n_layers,
                                         std::int64_t exit_depth, std::int64_t exit_stage) {
  check_alpha(alpha);
  const std::int64_t stages = stage_count(n_layers, exit_depth);
  if (exit_stage < 1 || exit_stage > std::max<std::int64_t>(1, stages - 1)) {
    throw std::invalid_argument("exit_stage must lie in [1, n_stages - 1]");
  }
  const double e = static_cast<double>(exit_depth);
  const double k = static_cast<double>(exit_stage);
  return static_cast<double>(n_layers) /
         (alpha * k * e + (1.0 - alpha) * static_cast<double>(stages) * e);
}

/// Ratio of the pipelined speedup over draft-then-verify speedup on the
/// same parameters. At alpha = 1 this is the limit (gamma + N/E)/(gamma + 1).
inline double ppsd_over_eesd_lambda(const SpeedupParams& p) {
  p.validate();
  const double n = static_cast<double>(p.n_layers);
  const double e = static_cast<double>(p.exit_depth);
  const double s = static_cast<double>(p.n_stages());
  const double g = static_cast<double>(p.gamma);
  const double tokens_per_round = 1.0 + expected_accept_len(p.alpha, p.gamma);
  return (g * e + n) / ((p.alpha * e + (1.0 - p.alpha) * s * e) * tokens_per_round);
}

}  // namespace eespec::analytic
