#pragma once

// Tick-accurate simulation of autoregressive, draft-then-verify (EESD) and
// pipelined verify-while-draft (PPSD) decoding.
//
// Time model: one tick is one stage forward, i.e. E/N of a full forward.
// A stage executes at most one forward per tick. A message sent from stage
// a to stage b != a at the end of tick t is usable at tick t + 1 + hop.
// Autoregressive throughput is therefore 1/S tokens per tick at hop 0.
//
// Acceptance comes either from a Bernoulli(alpha) oracle (one uniform per
// verified draft, no tokens) or from a ToyLM (real draft/target
// distributions, greedy or lossless sampling verification).

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eespec/pipeline.hpp"
#include "eespec/rng.hpp"
#include "eespec/speccore.hpp"
#include "eespec/toylm.hpp"

namespace eespec {

enum class DecodeMode { greedy, sampling };

class AcceptanceOracle {
 public:
  enum class Mode { bernoulli, toylm_sampling, toylm_greedy };

  static AcceptanceOracle bernoulli(double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
      throw std::invalid_argument("bernoulli alpha must lie in [0, 1]");
    }
    AcceptanceOracle oracle(Mode::bernoulli);
    oracle.alpha_ = alpha;
    return oracle;
  }

  // Rejects every draft. Each position then commits a full-model token.
  static AcceptanceOracle always_reject() { return bernoulli(0.0); }

  // `force_reject` rejects every draft and commits the target token instead,
  // the functional counterpart of always_reject().
  static AcceptanceOracle toylm(ToyLM lm, std::vector<Token> prompt, DecodeMode mode,
                                bool force_reject = false) {
    if (prompt.empty()) throw std::invalid_argument("toy-LM decoding needs a non-empty prompt");
    check_prefix(lm, prompt);
    AcceptanceOracle oracle(mode == DecodeMode::greedy ? Mode::toylm_greedy
                                                       : Mode::toylm_sampling);
    oracle.lm_ = lm;
    oracle.prompt_ = std::move(prompt);
    oracle.force_reject_ = force_reject;
    return oracle;
  }

  Mode mode() const noexcept { return mode_; }
  bool is_bernoulli() const noexcept { return mode_ == Mode::bernoulli; }
  double alpha() const noexcept { return alpha_; }
  const ToyLM& lm() const { return lm_.value(); }
  const std::vector<Token>& prompt() const noexcept { return prompt_; }
  bool force_reject() const noexcept { return force_reject_; }
  DecodeMode decode_mode() const noexcept {
    return mode_ == Mode::toylm_greedy ? DecodeMode::greedy : DecodeMode::sampling;
  }

 private:
  explicit AcceptanceOracle(Mode mode) : mode_(mode) {}

  Mode mode_;
  double alpha_ = 0.0;
  std::optional<ToyLM> lm_;
  std::vector<Token> prompt_;
  bool force_reject_ = false;
};

struct SimOptions {
  int hop_latency = 0;
  // Measure throughput after the first commit (drops the pipeline fill).
  bool steady_state = false;
  // EESD only: verification skips the stages already run while drafting.
  bool cache_reuse = false;
  bool record_trace = false;
};

struct RunMetrics {
  std::int64_t committed_tokens = 0;
  std::int64_t ticks = 0;
  std::int64_t accepts = 0;
  std::int64_t rejects = 0;
  // Full-model tokens committed without a draft (autoregressive tokens and
  // EESD all-accepted bonus tokens):
  // committed_tokens == accepts + rejects + target_tokens.
  std::int64_t target_tokens = 0;
  std::int64_t drafted = 0;
  std::int64_t first_commit_tick = -1;
  // accepts / drafted (EESD) or accepts / verified (PPSD); empty for AR.
  std::optional<double> alpha_all;
  double throughput = 0.0;
  double speedup_vs_ar = 0.0;

  friend bool operator==(const RunMetrics&, const RunMetrics&) = default;
};

struct SimResult {
  RunMetrics metrics;
  // Committed tokens (toy-LM oracles only; empty for Bernoulli runs).
  std::vector<Token> tokens;
  EventTrace trace;
};

// Ticks per token of the autoregressive baseline under the same hop model.
inline double ar_ticks_per_token(const PipelineConfig& cfg, int hop_latency) {
  const int s = cfg.n_stages();
  return s > 1 ? static_cast<double>(s) * (1.0 + hop_latency) : 1.0;
}

namespace sim_detail {

struct Draft {
  Token token = kNoToken;
  std::optional<ProbVec> dist;
};

class BernoulliBackend {
 public:
  static constexpr bool kEmitsTokens = false;

  explicit BernoulliBackend(double alpha) : alpha_(alpha) {}

  PrefixState enter(std::span<const Token>, int layer) const { return {0, layer}; }
  PrefixState advance(PrefixState state, int layer) const {
    state.layer = layer;
    return state;
  }
  Draft draft(std::span<const Token>, const PrefixState&, RngStream&) const { return {}; }
  Verdict verify(std::span<const Token>, const PrefixState&, const Draft&,
                 RngStream& rng) const {
    return {rng.uniform() <= alpha_, kNoToken};
  }
  Token produce(std::span<const Token>, const PrefixState&, RngStream&) const {
    return kNoToken;
  }

 private:
  double alpha_;
};

class ToyLmBackend {
 public:
  static constexpr bool kEmitsTokens = true;

  ToyLmBackend(ToyLM lm, DecodeMode mode, bool force_reject)
      : lm_(lm), mode_(mode), force_reject_(force_reject) {}

  PrefixState enter(std::span<const Token> context, int layer) const {
    return layer_state(lm_, context, layer);
  }
  PrefixState advance(const PrefixState& state, int layer) const {
    return eespec::advance(lm_, state, layer);
  }
  Draft draft(std::span<const Token> context, const PrefixState& exit_state,
              RngStream& rng) const {
    ProbVec p = exit_dist(lm_, context, exit_state.layer);
    const Token token = pick(p, rng);
    return {token, std::move(p)};
  }
  // The target distribution comes from the state propagated through the
  // stages, not from a fresh forward over the context.
  Verdict verify(std::span<const Token>, const PrefixState& final_state, const Draft& draft,
                 RngStream& rng) const {
    const ProbVec q = target_dist_from_state(lm_, final_state);
    if (force_reject_) return {false, pick(q, rng)};
    if (mode_ == DecodeMode::greedy) return greedy_match(draft.dist.value(), q);
    return verify_sampled(draft.dist.value(), q, draft.token, rng);
  }
  Token produce(std::span<const Token>, const PrefixState& final_state, RngStream& rng) const {
    return pick(target_dist_from_state(lm_, final_state), rng);
  }

 private:
  Token pick(const ProbVec& dist, RngStream& rng) const {
    return mode_ == DecodeMode::greedy ? argmax(dist) : sample_token(dist, rng);
  }

  ToyLM lm_;
  DecodeMode mode_;
  bool force_reject_;
};

inline void check_horizon(std::int64_t horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
}

inline void check_options(const SimOptions& opt) {
  if (opt.hop_latency < 0) throw std::invalid_argument("hop_latency must be >= 0");
}

inline void finalize(RunMetrics& m, const PipelineConfig& cfg, const SimOptions& opt) {
  double tokens = static_cast<double>(m.committed_tokens);
  double ticks = static_cast<double>(m.ticks);
  if (opt.steady_state) {
    tokens -= 1.0;
    ticks -= static_cast<double>(m.first_commit_tick + 1);
    if (tokens < 1.0 || ticks <= 0.0) {
      throw std::invalid_argument("steady-state measurement needs at least two commits");
    }
  }
  m.throughput = tokens / ticks;
  m.speedup_vs_ar = m.throughput * ar_ticks_per_token(cfg, opt.hop_latency);
}

// Tracks which stage currently holds the data so that stage changes pay the
// hop latency.
struct Clock {
  std::int64_t tick = 0;
  int at_stage = 0;
  int hop = 0;

  void move_to(int stage) {
    if (stage != at_stage) {
      tick += hop;
      at_stage = stage;
    }
  }
};

template <class Backend>
SimResult run_autoregressive(const PipelineConfig& cfg, const Backend& backend,
                             std::span<const Token> prompt, std::int64_t horizon,
                             const RngStream& rng, const SimOptions& opt) {
  check_horizon(horizon);
  check_options(opt);
  const int stages = cfg.n_stages();
  RngStream target_rng = rng.split(streams::kTarget);
  std::vector<Token> seq(prompt.begin(), prompt.end());
  const std::size_t base = prompt.size();
  SimResult result;
  RunMetrics& m = result.metrics;
  Clock clock{0, 0, opt.hop_latency};

  for (std::int64_t p = 0; p < horizon; ++p) {
    const std::span<const Token> context(seq.data(), base + static_cast<std::size_t>(p));
    StageMessage msg{MessageKind::activation, p, kNoToken, {}};
    for (int j = 0; j < stages; ++j) {
      clock.move_to(j);
      const int layer_end = cfg.layers_through(j + 1);
      msg.payload = j == 0 ? backend.enter(context, layer_end)
                           : backend.advance(msg.payload, layer_end);
      if (opt.record_trace) result.trace.record(clock.tick, j, msg);
      if (j == stages - 1) {
        const Token token = backend.produce(context, msg.payload, target_rng);
        if (opt.record_trace) {
          result.trace.record(clock.tick, j, {MessageKind::final_token, p, token, {}});
        }
        if (m.first_commit_tick < 0) m.first_commit_tick = clock.tick;
        seq.push_back(token);
      }
      ++clock.tick;
    }
    ++m.committed_tokens;
    ++m.target_tokens;
  }
  m.ticks = clock.tick;
  finalize(m, cfg, opt);
  if constexpr (Backend::kEmitsTokens) {
    result.tokens.assign(seq.begin() + static_cast<std::ptrdiff_t>(base), seq.end());
  }
  return result;
}

template <class Backend>
SimResult run_eesd(const PipelineConfig& cfg, const Backend& backend,
                   std::span<const Token> prompt, std::int64_t gamma, std::int64_t horizon,
                   const RngStream& rng, const SimOptions& opt) {
  check_horizon(horizon);
  check_options(opt);
  if (gamma < 1) throw std::invalid_argument("gamma must be >= 1");
  const int stages = cfg.n_stages();
  const int exit_stages = cfg.exit_stage();
  const int verify_from = opt.cache_reuse ? std::min(exit_stages, stages - 1) : 0;
  RngStream draft_rng = rng.split(streams::kDraft);
  RngStream verify_rng = rng.split(streams::kVerify);

  std::vector<Token> seq(prompt.begin(), prompt.end());
  const std::size_t base = prompt.size();
  auto context = [&](std::int64_t p) {
    return std::span<const Token>(seq.data(), base + static_cast<std::size_t>(p));
  };
  SimResult result;
  RunMetrics& m = result.metrics;
  EventTrace& trace = result.trace;
  Clock clock{0, 0, opt.hop_latency};
  std::vector<Draft> drafts;
  std::vector<PrefixState> states;

  while (m.committed_tokens < horizon) {
    const std::int64_t round_start = m.committed_tokens;
    drafts.clear();

    // Draft phase: gamma sequential passes through the exit stages.
    for (std::int64_t h = 0; h < gamma; ++h) {
      const std::int64_t p = round_start + h;
      StageMessage msg{MessageKind::activation, p, kNoToken, {}};
      for (int j = 0; j < exit_stages; ++j) {
        clock.move_to(j);
        const int layer_end = cfg.layers_through(j + 1);
        msg.payload = j == 0 ? backend.enter(context(p), layer_end)
                             : backend.advance(msg.payload, layer_end);
        if (opt.record_trace) trace.record(clock.tick, j, msg);
        if (j == exit_stages - 1) {
          Draft draft = backend.draft(context(p), msg.payload, draft_rng);
          if (opt.record_trace) {
            trace.record(clock.tick, j, {MessageKind::draft_token, p, draft.token, {}});
          }
          seq.push_back(draft.token);
          drafts.push_back(std::move(draft));
        }
        ++clock.tick;
      }
    }
    m.drafted += gamma;

    // Verification phase: one batched full forward over the gamma drafts
    // plus the bonus position.
    states.assign(static_cast<std::size_t>(gamma + 1), PrefixState{});
    for (int j = verify_from; j < stages; ++j) {
      clock.move_to(j);
      const int layer_end = cfg.layers_through(j + 1);
      for (std::int64_t i = 0; i <= gamma; ++i) {
        PrefixState& state = states[static_cast<std::size_t>(i)];
        if (j == verify_from) {
          state = verify_from == 0
                      ? backend.enter(context(round_start + i), layer_end)
                      : backend.advance(backend.enter(context(round_start + i),
                                                      cfg.layers_through(verify_from)),
                                        layer_end);
        } else {
          state = backend.advance(state, layer_end);
        }
      }
      if (opt.record_trace) {
        trace.record(clock.tick, j, {MessageKind::activation, round_start, kNoToken, {}});
      }
      ++clock.tick;
    }
    const std::int64_t verdict_tick = clock.tick - 1;
    if (m.first_commit_tick < 0) m.first_commit_tick = verdict_tick;

    bool all_accepted = true;
    for (std::int64_t i = 0; i < gamma; ++i) {
      const std::int64_t p = round_start + i;
      const Verdict v = backend.verify(context(p), states[static_cast<std::size_t>(i)],
                                       drafts[static_cast<std::size_t>(i)], verify_rng);
      if (opt.record_trace) {
        trace.record(verdict_tick, stages - 1, {MessageKind::check_token, p, v.token, {}},
                     v.accepted ? TraceVerdict::accept : TraceVerdict::reject);
      }
      if (v.accepted) {
        ++m.accepts;
        continue;
      }
      ++m.rejects;
      seq[base + static_cast<std::size_t>(p)] = v.token;
      seq.resize(base + static_cast<std::size_t>(p) + 1);
      m.committed_tokens = p + 1;
      all_accepted = false;
      break;
    }
    if (all_accepted) {
      const std::int64_t p = round_start + gamma;
      const Token bonus =
          backend.produce(context(p), states[static_cast<std::size_t>(gamma)], verify_rng);
      if (opt.record_trace) {
        trace.record(verdict_tick, stages - 1, {MessageKind::final_token, p, bonus, {}});
      }
      seq.push_back(bonus);
      ++m.target_tokens;
      m.committed_tokens = p + 1;
    }
  }
  m.ticks = clock.tick;
  m.alpha_all = static_cast<double>(m.accepts) / static_cast<double>(m.drafted);
  finalize(m, cfg, opt);
  if constexpr (Backend::kEmitsTokens) {
    result.tokens.assign(seq.begin() + static_cast<std::ptrdiff_t>(base), seq.end());
  }
  return result;
}

// Verify-while-draft schedule. Each tick the first stage launches the next
// position on top of the newest (possibly unverified) draft, middle stages
// carry earlier positions forward, and the last stage checks one position.
// A rejection at position y commits the corrected token, flushes every
// in-flight position > y and restarts the first stage at y + 1.
template <class Backend>
SimResult run_ppsd(const PipelineConfig& cfg, const Backend& backend,
                   std::span<const Token> prompt, std::int64_t horizon, const RngStream& rng,
                   const SimOptions& opt) {
  check_horizon(horizon);
  check_options(opt);
  const int stages = cfg.n_stages();
  if (stages < 2) {
    throw std::invalid_argument("pipelined decoding needs at least two stages (exit_depth < n_layers)");
  }
  const int exit_index = cfg.exit_stage() - 1;
  const int last = stages - 1;
  const std::int64_t hop = opt.hop_latency;
  RngStream draft_rng = rng.split(streams::kDraft);
  RngStream verify_rng = rng.split(streams::kVerify);

  struct InFlight {
    StageMessage msg;
    std::int64_t ready = 0;
    Draft draft;
  };
  std::vector<std::deque<InFlight>> inbox(static_cast<std::size_t>(stages));

  // Prompt followed by committed tokens and then unverified drafts.
  std::vector<Token> seq(prompt.begin(), prompt.end());
  const std::size_t base = prompt.size();
  auto context = [&](std::int64_t p) {
    return std::span<const Token>(seq.data(), base + static_cast<std::size_t>(p));
  };
  // First tick at which the first stage may build on the token at position p.
  std::vector<std::int64_t> usable_at;
  std::int64_t next_launch = 0;

  SimResult result;
  RunMetrics& m = result.metrics;
  EventTrace& trace = result.trace;
  const std::int64_t tick_limit = (horizon + 2) * (stages + 1) * (hop + 1) * 4;

  std::int64_t t = 0;
  for (; m.committed_tokens < horizon; ++t) {
    if (t > tick_limit) throw std::logic_error("pipeline stopped making progress");
    std::optional<std::int64_t> rejected;

    for (int j = 0; j < stages; ++j) {
      InFlight item;
      if (j == 0) {
        if (next_launch >= horizon) continue;
        if (next_launch > 0 &&
            (static_cast<std::int64_t>(usable_at.size()) < next_launch ||
             usable_at[static_cast<std::size_t>(next_launch - 1)] > t)) {
          continue;
        }
        item.msg.position = next_launch++;
      } else {
        auto& queue = inbox[static_cast<std::size_t>(j)];
        if (queue.empty() || queue.front().ready > t) continue;
        item = std::move(queue.front());
        queue.pop_front();
      }

      const std::int64_t p = item.msg.position;
      const int layer_end = cfg.layers_through(j + 1);
      item.msg.kind = MessageKind::activation;
      item.msg.payload = j == 0 ? backend.enter(context(p), layer_end)
                                : backend.advance(item.msg.payload, layer_end);
      if (opt.record_trace) trace.record(t, j, item.msg);

      if (j == exit_index) {
        if (seq.size() != base + static_cast<std::size_t>(p)) {
          throw std::logic_error("draft emitted out of order");
        }
        item.draft = backend.draft(context(p), item.msg.payload, draft_rng);
        if (opt.record_trace) {
          trace.record(t, j, {MessageKind::draft_token, p, item.draft.token, {}});
        }
        seq.push_back(item.draft.token);
        usable_at.push_back(t + 1 + (exit_index == 0 ? 0 : hop));
        ++m.drafted;
      }

      if (j == last) {
        if (p != m.committed_tokens) throw std::logic_error("verification out of order");
        const Verdict v = backend.verify(context(p), item.msg.payload, item.draft, verify_rng);
        if (opt.record_trace) {
          trace.record(t, j, {MessageKind::check_token, p, v.token, {}},
                       v.accepted ? TraceVerdict::accept : TraceVerdict::reject);
        }
        if (v.accepted) {
          ++m.accepts;
        } else {
          ++m.rejects;
          seq[base + static_cast<std::size_t>(p)] = v.token;
          rejected = p;
        }
        ++m.committed_tokens;
        if (m.first_commit_tick < 0) m.first_commit_tick = t;
      } else {
        item.ready = t + 1 + hop;
        inbox[static_cast<std::size_t>(j + 1)].push_back(std::move(item));
      }
    }

    if (rejected) {
      const std::int64_t y = *rejected;
      seq.resize(base + static_cast<std::size_t>(y) + 1);
      usable_at.resize(static_cast<std::size_t>(y) + 1);
      // The check token travels back to the first stage.
      usable_at.back() = t + 1 + hop;
      for (auto& queue : inbox) {
        std::erase_if(queue, [y](const InFlight& f) { return f.msg.position > y; });
      }
      next_launch = y + 1;
    }
  }

  m.ticks = t;
  const std::int64_t verified = m.accepts + m.rejects;
  m.alpha_all = static_cast<double>(m.accepts) / static_cast<double>(verified);
  finalize(m, cfg, opt);
  if constexpr (Backend::kEmitsTokens) {
    result.tokens.assign(seq.begin() + static_cast<std::ptrdiff_t>(base),
                         seq.begin() + static_cast<std::ptrdiff_t>(base + m.committed_tokens));
  }
  return result;
}

inline void check_lm_matches(const PipelineConfig& cfg, const ToyLM& lm) {
  if (cfg.n_layers() != lm.n_layers()) {
    throw std::invalid_argument("pipeline n_layers (" + std::to_string(cfg.n_layers()) +
                                ") does not match the toy LM (" +
                                std::to_string(lm.n_layers()) + ")");
  }
}

template <class Fn>
SimResult with_backend(const PipelineConfig& cfg, const AcceptanceOracle& oracle, Fn&& fn) {
  if (oracle.is_bernoulli()) {
    return fn(BernoulliBackend(oracle.alpha()), std::span<const Token>{});
  }
  check_lm_matches(cfg, oracle.lm());
  return fn(ToyLmBackend(oracle.lm(), oracle.decode_mode(), oracle.force_reject()),
            std::span<const Token>(oracle.prompt()));
}

}  // namespace sim_detail

inline SimResult simulate_autoregressive(const PipelineConfig& cfg, std::int64_t horizon,
                                         const SimOptions& opt = {}) {
  return sim_detail::run_autoregressive(cfg, sim_detail::BernoulliBackend(1.0), {}, horizon,
                                        RngStream{}, opt);
}

inline SimResult simulate_eesd(const PipelineConfig& cfg, std::int64_t gamma,
                               const AcceptanceOracle& oracle, std::int64_t horizon,
                               const RngStream& rng, const SimOptions& opt = {}) {
  return sim_detail::with_backend(cfg, oracle, [&](const auto& backend, auto prompt) {
    return sim_detail::run_eesd(cfg, backend, prompt, gamma, horizon, rng, opt);
  });
}

inline SimResult simulate_ppsd(const PipelineConfig& cfg, const AcceptanceOracle& oracle,
                               std::int64_t horizon, const RngStream& rng,
                               const SimOptions& opt = {}) {
  return sim_detail::with_backend(cfg, oracle, [&](const auto& backend, auto prompt) {
    return sim_detail::run_ppsd(cfg, backend, prompt, horizon, rng, opt);
  });
}

// Reference decoder: token i+1 is the argmax of (or a sample from) the
// target distribution over the committed prefix.
inline std::vector<Token> decode_autoregressive(const ToyLM& lm, std::span<const Token> prompt,
                                                std::int64_t max_tokens, DecodeMode mode,
                                                const RngStream& rng) {
  if (max_tokens < 0) throw std::invalid_argument("max_tokens must be >= 0");
  if (prompt.empty()) throw std::invalid_argument("decoding needs a non-empty prompt");
  RngStream target_rng = rng.split(streams::kTarget);
  std::vector<Token> seq(prompt.begin(), prompt.end());
  for (std::int64_t i = 0; i < max_tokens; ++i) {
    const ProbVec q = target_dist(lm, seq);
    seq.push_back(mode == DecodeMode::greedy ? argmax(q) : sample_token(q, target_rng));
  }
  return {seq.begin() + static_cast<std::ptrdiff_t>(prompt.size()), seq.end()};
}

inline SimResult decode_ppsd(const ToyLM& lm, const PipelineConfig& cfg,
                             std::span<const Token> prompt, std::int64_t max_tokens,
                             DecodeMode mode, const RngStream& rng, const SimOptions& opt = {},
                             bool force_reject = false) {
  sim_detail::check_lm_matches(cfg, lm);
  if (max_tokens < 0) throw std::invalid_argument("max_tokens must be >= 0");
  if (max_tokens == 0) return {};
  const auto oracle = AcceptanceOracle::toylm(lm, {prompt.begin(), prompt.end()}, mode,
                                              force_reject);
  return simulate_ppsd(cfg, oracle, max_tokens, rng, opt);
}

// Draft-then-verify decoding; the output is truncated to max_tokens.
inline SimResult decode_eesd(const ToyLM& lm, const PipelineConfig& cfg,
                             std::span<const Token> prompt, std::int64_t gamma,
                             std::int64_t max_tokens, DecodeMode mode, const RngStream& rng,
                             const SimOptions& opt = {}, bool force_reject = false) {
  sim_detail::check_lm_matches(cfg, lm);
  if (max_tokens < 0) throw std::invalid_argument("max_tokens must be >= 0");
  if (max_tokens == 0) return {};
  const auto oracle = AcceptanceOracle::toylm(lm, {prompt.begin(), prompt.end()}, mode,
                                              force_reject);
  SimResult result = simulate_eesd(cfg, gamma, oracle, max_tokens, rng, opt);
  result.tokens.resize(static_cast<std::size_t>(max_tokens));
  return result;
}

// Autoregressive decoding through the pipeline timing model (tokens match
// decode_autoregressive in greedy mode).
inline SimResult decode_autoregressive_timed(const ToyLM& lm, const PipelineConfig& cfg,
                                             std::span<const Token> prompt,
                                             std::int64_t max_tokens, DecodeMode mode,
                                             const RngStream& rng, const SimOptions& opt = {}) {
  sim_detail::check_lm_matches(cfg, lm);
  if (prompt.empty()) throw std::invalid_argument("decoding needs a non-empty prompt");
  if (max_tokens < 0) throw std::invalid_argument("max_tokens must be >= 0");
  if (max_tokens == 0) return {};
  SimResult result = sim_detail::run_autoregressive(
      cfg, sim_detail::ToyLmBackend(lm, mode, false), prompt, max_tokens, rng, opt);
  return result;
}

}  // namespace eespec
