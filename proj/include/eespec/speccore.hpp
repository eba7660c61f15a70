#pragma once

// Speculative-sampling primitives: probability vectors, inverse-CDF
// sampling, the stochastic draft acceptance rule, residual resampling and a
// deterministic greedy verification mode.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eespec/rng.hpp"

namespace eespec {

using Token = std::int32_t;
inline constexpr Token kNoToken = -1;

inline constexpr double kProbSumTolerance = 1e-9;
inline constexpr double kResidualMassFloor = 1e-12;

class invalid_distribution : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class degenerate_residual : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A normalized distribution over token ids [0, size()). Construction
// validates; renormalization only happens through normalized().
class ProbVec {
 public:
  explicit ProbVec(std::vector<double> probs) : probs_(std::move(probs)) { validate(); }

  static ProbVec normalized(std::vector<double> weights) {
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw invalid_distribution("weights must be finite and non-negative");
      }
      total += w;
    }
    if (!(total > 0.0)) throw invalid_distribution("weights sum to zero");
    for (double& w : weights) w /= total;
    return ProbVec(std::move(weights));
  }

  static ProbVec point_mass(std::size_t vocab, Token token) {
    std::vector<double> probs(vocab, 0.0);
    if (token < 0 || static_cast<std::size_t>(token) >= vocab) {
      throw invalid_distribution("point mass token out of range");
    }
    probs[static_cast<std::size_t>(token)] = 1.0;
    return ProbVec(std::move(probs));
  }

  static ProbVec uniform(std::size_t vocab) {
    return ProbVec(std::vector<double>(vocab, 1.0 / static_cast<double>(vocab)));
  }

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](Token token) const { return probs_.at(static_cast<std::size_t>(token)); }
  std::span<const double> probs() const noexcept { return probs_; }

  friend bool operator==(const ProbVec&, const ProbVec&) = default;

 private:
  void validate() const {
    if (probs_.size() < 2) throw invalid_distribution("distribution needs at least 2 entries");
    double total = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw invalid_distribution("probabilities must be finite and non-negative");
      }
      total += p;
    }
    if (std::abs(total - 1.0) > kProbSumTolerance) {
      throw invalid_distribution("probabilities sum to " + std::to_string(total));
    }
  }

  std::vector<double> probs_;
};

inline ProbVec softmax(std::span<const double> logits) {
  if (logits.empty()) throw invalid_distribution("softmax of empty logits");
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> weights(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) weights[i] = std::exp(logits[i] - top);
  return ProbVec::normalized(std::move(weights));
}

// Lowest token id among the maxima.
inline Token argmax(const ProbVec& dist) {
  const auto probs = dist.probs();
  return static_cast<Token>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

inline double total_variation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
  return 0.5 * total;
}

// Sum_i min(p_i, q_i): the probability that a draft from p passes the
// acceptance test against q. Evaluated as 1 - TV(p, q) so that p == q gives
// exactly 1.
inline double overlap(const ProbVec& p, const ProbVec& q) {
  if (p.size() != q.size()) throw invalid_distribution("dimension mismatch");
  return std::clamp(1.0 - total_variation(p.probs(), q.probs()), 0.0, 1.0);
}

// Inverse CDF by index order: first token i with u <= cdf(i), u in (0, 1].
inline Token sample_token_at(const ProbVec& dist, double u) {
  const auto probs = dist.probs();
  double cdf = 0.0;
  Token last_positive = kNoToken;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cdf += probs[i];
    last_positive = static_cast<Token>(i);
    if (u <= cdf) return last_positive;
  }
  // cdf may end a few ulps below 1.
  return last_positive;
}

inline Token sample_token(const ProbVec& dist, RngStream& rng) {
  return sample_token_at(dist, rng.uniform());
}

inline void check_accept_args(double p_at_token, double q_at_token) {
  if (!(p_at_token > 0.0 && p_at_token <= 1.0)) {
    throw std::invalid_argument("draft probability must lie in (0, 1]");
  }
  if (!(q_at_token >= 0.0 && q_at_token <= 1.0)) {
    throw std::invalid_argument("target probability must lie in [0, 1]");
  }
}

// Accept iff r <= min(1, q/p).
inline bool accept_draft_at(double p_at_token, double q_at_token, double r) {
  check_accept_args(p_at_token, q_at_token);
  return r <= std::min(1.0, q_at_token / p_at_token);
}

inline bool accept_draft(double p_at_token, double q_at_token, RngStream& rng) {
  check_accept_args(p_at_token, q_at_token);
  return accept_draft_at(p_at_token, q_at_token, rng.uniform());
}

// normalize(max(0, q - p)). Throws degenerate_residual when q is dominated
// by p everywhere (then rejection has probability zero).
inline ProbVec residual_distribution(const ProbVec& p, const ProbVec& q) {
  if (p.size() != q.size()) throw invalid_distribution("dimension mismatch");
  std::vector<double> residual(q.size());
  double mass = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    residual[i] = std::max(0.0, q.probs()[i] - p.probs()[i]);
    mass += residual[i];
  }
  if (mass < kResidualMassFloor) {
    throw degenerate_residual("residual distribution is empty: q is dominated by p");
  }
  return ProbVec::normalized(std::move(residual));
}

struct Verdict {
  bool accepted = false;
  // The token committed for this position: the draft on accept, the
  // replacement on reject.
  Token token = kNoToken;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

inline Verdict greedy_match(const ProbVec& p, const ProbVec& q) {
  if (p.size() != q.size()) throw invalid_distribution("dimension mismatch");
  const Token target = argmax(q);
  return {argmax(p) == target, target};
}

// Full lossless verification of `draft` (sampled from p) against q: one
// uniform for the acceptance test and, on rejection, one more for the
// residual sample.
inline Verdict verify_sampled(const ProbVec& p, const ProbVec& q, Token draft, RngStream& rng) {
  if (accept_draft(p[draft], q[draft], rng)) return {true, draft};
  try {
    return {false, sample_token(residual_distribution(p, q), rng)};
  } catch (const degenerate_residual&) {
    // Rejection had probability below the residual floor; q itself is the
    // only meaningful fallback.
    return {false, sample_token(q, rng)};
  }
}

}  // namespace eespec
