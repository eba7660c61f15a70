#pragma once

// Deterministic layered pseudo language model.
//
// The "activation" after layer k for a prefix is a 64-bit digest obtained by
// folding the seed and prefix tokens (layer 0) and then mixing in each layer
// index in turn. Target logits are derived from the layer-N digest; the
// early-exit head adds misalignment * N(0,1) noise keyed by the digest at
// the exit layer. Everything is a pure function of its inputs.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "eespec/rng.hpp"
#include "eespec/speccore.hpp"

namespace eespec {

struct PrefixState {
  std::uint64_t digest = 0;
  int layer = 0;

  friend bool operator==(const PrefixState&, const PrefixState&) = default;
};

class ToyLM {
 public:
  // Spread of the target logits (standard deviation).
  static constexpr double kLogitScale = 2.0;

  ToyLM(int n_layers, int vocab, std::uint64_t seed, double misalignment)
      : n_layers_(n_layers), vocab_(vocab), seed_(seed), misalignment_(misalignment) {
    if (n_layers < 1) throw std::invalid_argument("n_layers must be >= 1");
    if (vocab < 2) throw std::invalid_argument("vocab must be >= 2");
    if (!(misalignment >= 0.0) || !std::isfinite(misalignment)) {
      throw std::invalid_argument("misalignment must be finite and >= 0");
    }
  }

  int n_layers() const noexcept { return n_layers_; }
  int vocab() const noexcept { return vocab_; }
  std::uint64_t seed() const noexcept { return seed_; }
  double misalignment() const noexcept { return misalignment_; }

  friend bool operator==(const ToyLM&, const ToyLM&) = default;

 private:
  int n_layers_;
  int vocab_;
  std::uint64_t seed_;
  double misalignment_;
};

namespace toylm_detail {

inline constexpr std::uint64_t kEmbedSalt = 0x243f6a8885a308d3ULL;
inline constexpr std::uint64_t kLayerSalt = 0x13198a2e03707344ULL;
inline constexpr std::uint64_t kLogitSalt = 0xa4093822299f31d0ULL;
inline constexpr std::uint64_t kNoiseSalt = 0x082efa98ec4e6c89ULL;

// Standard normal from a 64-bit key (Box-Muller on two derived uniforms).
inline double gaussian(std::uint64_t key) {
  const std::uint64_t a = mix64(key);
  const std::uint64_t b = mix64(a ^ kGoldenGamma);
  const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline std::vector<double> target_logits(const ToyLM& lm, const PrefixState& final_state) {
  std::vector<double> logits(static_cast<std::size_t>(lm.vocab()));
  const std::uint64_t base = hash_combine(final_state.digest, kLogitSalt);
  for (int i = 0; i < lm.vocab(); ++i) {
    logits[static_cast<std::size_t>(i)] =
        ToyLM::kLogitScale * gaussian(hash_combine(base, static_cast<std::uint64_t>(i)));
  }
  return logits;
}

}  // namespace toylm_detail

inline void check_prefix(const ToyLM& lm, std::span<const Token> prefix) {
  for (Token t : prefix) {
    if (t < 0 || t >= lm.vocab()) {
      throw std::invalid_argument("prefix token " + std::to_string(t) + " outside vocabulary");
    }
  }
}

// Layer-0 state: digest of (seed, prefix).
inline PrefixState embed(const ToyLM& lm, std::span<const Token> prefix) {
  check_prefix(lm, prefix);
  std::uint64_t h = hash_combine(lm.seed(), toylm_detail::kEmbedSalt);
  h = hash_combine(h, prefix.size());
  for (Token t : prefix) h = hash_combine(h, static_cast<std::uint64_t>(t));
  return {h, 0};
}

// Applies layers state.layer + 1 .. to_layer.
inline PrefixState advance(const ToyLM& lm, PrefixState state, int to_layer) {
  if (to_layer < state.layer || to_layer > lm.n_layers()) {
    throw std::out_of_range("cannot advance from layer " + std::to_string(state.layer) +
                            " to layer " + std::to_string(to_layer));
  }
  for (int k = state.layer + 1; k <= to_layer; ++k) {
    state.digest = hash_combine(state.digest ^ toylm_detail::kLayerSalt,
                                static_cast<std::uint64_t>(k));
  }
  state.layer = to_layer;
  return state;
}

inline PrefixState layer_state(const ToyLM& lm, std::span<const Token> prefix, int layer) {
  if (layer < 1 || layer > lm.n_layers()) {
    throw std::out_of_range("layer " + std::to_string(layer) + " outside [1, n_layers]");
  }
  return advance(lm, embed(lm, prefix), layer);
}

inline ProbVec target_dist_from_state(const ToyLM& lm, const PrefixState& final_state) {
  if (final_state.layer != lm.n_layers()) {
    throw std::invalid_argument("target head needs the layer-N state");
  }
  return softmax(toylm_detail::target_logits(lm, final_state));
}

inline ProbVec target_dist(const ToyLM& lm, std::span<const Token> prefix) {
  if (prefix.empty()) throw std::invalid_argument("target_dist needs a non-empty prefix");
  return target_dist_from_state(lm, layer_state(lm, prefix, lm.n_layers()));
}

// Early-exit head at `exit_depth`: target logits plus misalignment-scaled
// zero-mean noise. misalignment == 0 reproduces target_dist bit for bit.
inline ProbVec exit_dist(const ToyLM& lm, std::span<const Token> prefix, int exit_depth) {
  if (prefix.empty()) throw std::invalid_argument("exit_dist needs a non-empty prefix");
  if (exit_depth < 1 || exit_depth > lm.n_layers()) {
    throw std::out_of_range("exit_depth " + std::to_string(exit_depth) +
                            " outside [1, n_layers]");
  }
  const PrefixState exit_state = layer_state(lm, prefix, exit_depth);
  const PrefixState final_state = advance(lm, exit_state, lm.n_layers());
  std::vector<double> logits = toylm_detail::target_logits(lm, final_state);
  const std::uint64_t base = hash_combine(exit_state.digest, toylm_detail::kNoiseSalt);
  for (int i = 0; i < lm.vocab(); ++i) {
    logits[static_cast<std::size_t>(i)] +=
        lm.misalignment() *
        toylm_detail::gaussian(hash_combine(base, static_cast<std::uint64_t>(i)));
  }
  return softmax(logits);
}

inline constexpr int kAlphaPrefixLength = 8;

// Random gold prefix of kAlphaPrefixLength tokens.
inline std::vector<Token> random_prefix(const ToyLM& lm, RngStream& rng,
                                        int length = kAlphaPrefixLength) {
  std::vector<Token> prefix(static_cast<std::size_t>(length));
  for (Token& t : prefix) t = static_cast<Token>(rng.below(static_cast<std::uint32_t>(lm.vocab())));
  return prefix;
}

// Mean exact acceptance probability sum_i min(p_i, q_i) over random gold
// prefixes generated from eval_seed.
inline double empirical_alpha(const ToyLM& lm, int exit_depth, int n_prefixes,
                              std::uint64_t eval_seed) {
  if (n_prefixes < 1) throw std::invalid_argument("n_prefixes must be >= 1");
  RngStream rng(eval_seed);
  double total = 0.0;
  for (int n = 0; n < n_prefixes; ++n) {
    const std::vector<Token> prefix = random_prefix(lm, rng);
    total += overlap(exit_dist(lm, prefix, exit_depth), target_dist(lm, prefix));
  }
  return std::min(1.0, total / static_cast<double>(n_prefixes));
}

inline double empirical_alpha(const ToyLM& lm, int exit_depth, int n_prefixes) {
  return empirical_alpha(lm, exit_depth, n_prefixes, lm.seed());
}

}  // namespace eespec
