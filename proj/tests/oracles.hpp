#pragma once

// Independent reference computations for the tests. Nothing here calls into
// the closed-form analytic module.

#include <cstdint>
#include <random>
#include <vector>

#include "eespec/speccore.hpp"

namespace eespec::oracle {

// Exact E[accepted drafts] by enumerating all 2^gamma accept/reject patterns
// and truncating each at its first rejection.
inline double enumerate_accept_len(double alpha, int gamma) {
  double expected = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << gamma); ++mask) {
    double prob = 1.0;
    int accepted = 0;
    bool stopped = false;
    for (int h = 0; h < gamma; ++h) {
      const bool ok = (mask >> h) & 1u;
      prob *= ok ? alpha : 1.0 - alpha;
      if (!ok) stopped = true;
      if (!stopped) ++accepted;
    }
    expected += prob * accepted;
  }
  return expected;
}

// Monte-Carlo mean accepted length with std::mt19937_64 (a generator
// unrelated to the library's RngStream).
inline double monte_carlo_accept_len(double alpha, int gamma, std::int64_t trials,
                                     std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::bernoulli_distribution accept(alpha);
  std::int64_t total = 0;
  for (std::int64_t n = 0; n < trials; ++n) {
    int h = 0;
    while (h < gamma && accept(gen)) ++h;
    total += h;
  }
  return static_cast<double>(total) / static_cast<double>(trials);
}

// Speedup by direct substitution into the printed formulas (no limits).
inline double eesd_direct(double alpha, int gamma, int n, int e) {
  double pw = 1.0;
  for (int i = 0; i <= gamma; ++i) pw *= alpha;
  return (1.0 - pw) * n / ((1.0 - alpha) * (gamma * e + n));
}

inline double ppsd_direct(double alpha, int n, int e) {
  const int s = (n + e - 1) / e;
  return n / (alpha * e + (1.0 - alpha) * s * e);
}

inline std::vector<double> histogram(const std::vector<Token>& tokens, std::size_t vocab) {
  std::vector<double> freq(vocab, 0.0);
  for (Token t : tokens) freq[static_cast<std::size_t>(t)] += 1.0;
  for (double& f : freq) f /= static_cast<double>(tokens.size());
  return freq;
}

// Random distribution with a few exact zeros, from std::mt19937_64.
inline ProbVec random_dist(std::mt19937_64& gen, std::size_t vocab) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(vocab);
  for (double& x : w) x = u(gen) < 0.2 ? 0.0 : u(gen);
  w[gen() % vocab] += 0.5;
  return ProbVec::normalized(std::move(w));
}

}  // namespace eespec::oracle
