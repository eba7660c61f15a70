#pragma once

// Experiment configuration: a flat key = value text format whose keys are
// the ExperimentConfig field names. CLI flags use the same keys in
// --kebab-case and are applied through apply_setting().

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "eespec/pipesim.hpp"
#include "eespec/rng.hpp"
#include "eespec/speccore.hpp"
#include "eespec/toylm.hpp"

namespace eespec::harness {

enum class Regime { autoregressive, eesd, ppsd };
enum class OracleKind { bernoulli, toylm_greedy, toylm_sampling };

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::autoregressive: return "autoregressive";
    case Regime::eesd: return "eesd";
    case Regime::ppsd: return "ppsd";
  }
  return "?";
}

inline std::string_view to_string(OracleKind o) {
  switch (o) {
    case OracleKind::bernoulli: return "bernoulli";
    case OracleKind::toylm_greedy: return "toylm_greedy";
    case OracleKind::toylm_sampling: return "toylm_sampling";
  }
  return "?";
}

class config_error : public std::invalid_argument {
 public:
  config_error(std::string field, const std::string& message)
      : std::invalid_argument("invalid config field '" + field + "': " + message),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct ExperimentConfig {
  Regime regime = Regime::ppsd;
  int n_layers = 32;
  int exit_depth = 8;
  int exit_stage = 1;
  std::optional<int> gamma;  // eesd only
  OracleKind oracle = OracleKind::bernoulli;
  std::optional<double> alpha;  // bernoulli only
  std::uint64_t lm_seed = 0;
  double beta = 1.0;
  int vocab = 32;
  std::vector<Token> prompt;  // toy LM; empty means "derive from seed"
  std::int64_t horizon = 10000;
  std::uint64_t seed = 0;
  int hop_latency = 0;
  bool steady_state = false;
  bool cache_reuse = false;
  bool force_reject = false;
  std::string results_path;
  std::string trace_path;

  bool uses_toylm() const noexcept { return oracle != OracleKind::bernoulli; }

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

inline constexpr std::int64_t kMaxHorizon = 1'000'000'000;

// Keys in serialization order.
inline const std::vector<std::string_view>& config_keys() {
  static const std::vector<std::string_view> keys = {
      "regime",  "n_layers", "exit_depth", "exit_stage",   "gamma",       "oracle",
      "alpha",   "lm_seed",  "beta",       "vocab",        "prompt",      "horizon",
      "seed",    "hop_latency", "steady_state", "cache_reuse", "force_reject",
      "results_path", "trace_path"};
  return keys;
}

namespace config_detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  text = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw config_error(std::string(key), "cannot parse '" + std::string(text) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw config_error(std::string(key), "must be finite");
  }
  return value;
}

inline bool parse_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw config_error(std::string(key), "expected true/false, got '" + std::string(text) + "'");
}

inline std::vector<Token> parse_tokens(std::string_view key, std::string_view text) {
  std::vector<Token> tokens;
  text = trim(text);
  while (!text.empty()) {
    const auto comma = text.find(',');
    tokens.push_back(parse_number<Token>(key, text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return tokens;
}

}  // namespace config_detail

// Sets one field from its text form. Empty text clears optional fields.
inline void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  using namespace config_detail;
  const std::string k(key);
  value = trim(value);
  if (key == "regime") {
    if (value == "autoregressive") cfg.regime = Regime::autoregressive;
    else if (value == "eesd") cfg.regime = Regime::eesd;
    else if (value == "ppsd") cfg.regime = Regime::ppsd;
    else throw config_error(k, "expected autoregressive|eesd|ppsd, got '" + std::string(value) + "'");
  } else if (key == "oracle") {
    if (value == "bernoulli") cfg.oracle = OracleKind::bernoulli;
    else if (value == "toylm_greedy") cfg.oracle = OracleKind::toylm_greedy;
    else if (value == "toylm_sampling") cfg.oracle = OracleKind::toylm_sampling;
    else throw config_error(k, "expected bernoulli|toylm_greedy|toylm_sampling, got '" + std::string(value) + "'");
  } else if (key == "n_layers") {
    cfg.n_layers = parse_number<int>(key, value);
  } else if (key == "exit_depth") {
    cfg.exit_depth = parse_number<int>(key, value);
  } else if (key == "exit_stage") {
    cfg.exit_stage = parse_number<int>(key, value);
  } else if (key == "gamma") {
    cfg.gamma = value.empty() ? std::nullopt : std::optional<int>(parse_number<int>(key, value));
  } else if (key == "alpha") {
    cfg.alpha = value.empty() ? std::nullopt
                              : std::optional<double>(parse_number<double>(key, value));
  } else if (key == "lm_seed") {
    cfg.lm_seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "beta") {
    cfg.beta = parse_number<double>(key, value);
  } else if (key == "vocab") {
    cfg.vocab = parse_number<int>(key, value);
  } else if (key == "prompt") {
    cfg.prompt = parse_tokens(key, value);
  } else if (key == "horizon") {
    cfg.horizon = parse_number<std::int64_t>(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "hop_latency") {
    cfg.hop_latency = parse_number<int>(key, value);
  } else if (key == "steady_state") {
    cfg.steady_state = parse_bool(key, value);
  } else if (key == "cache_reuse") {
    cfg.cache_reuse = parse_bool(key, value);
  } else if (key == "force_reject") {
    cfg.force_reject = parse_bool(key, value);
  } else if (key == "results_path") {
    cfg.results_path = std::string(value);
  } else if (key == "trace_path") {
    cfg.trace_path = std::string(value);
  } else {
    throw config_error(k, "unknown key");
  }
}

inline void validate(const ExperimentConfig& cfg) {
  if (cfg.n_layers < 1) throw config_error("n_layers", "must be >= 1");
  if (cfg.exit_depth < 1 || cfg.exit_depth > cfg.n_layers) {
    throw config_error("exit_depth", "must lie in [1, n_layers]");
  }
  const int stages = (cfg.n_layers + cfg.exit_depth - 1) / cfg.exit_depth;
  if (cfg.exit_stage < 1 || cfg.exit_stage > std::max(1, stages - 1)) {
    throw config_error("exit_stage", "must lie in [1, n_stages - 1]");
  }
  if (cfg.regime == Regime::ppsd && stages < 2) {
    throw config_error("exit_depth", "ppsd needs exit_depth < n_layers (at least two stages)");
  }
  if (cfg.regime == Regime::eesd) {
    if (!cfg.gamma) throw config_error("gamma", "required for regime eesd");
    if (*cfg.gamma < 1) throw config_error("gamma", "must be >= 1");
  } else if (cfg.gamma) {
    throw config_error("gamma", "only valid for regime eesd");
  }
  if (cfg.oracle == OracleKind::bernoulli) {
    if (cfg.regime != Regime::autoregressive && !cfg.alpha) {
      throw config_error("alpha", "required for the bernoulli oracle");
    }
    if (cfg.alpha && !(*cfg.alpha >= 0.0 && *cfg.alpha <= 1.0)) {
      throw config_error("alpha", "must lie in [0, 1]");
    }
    if (cfg.force_reject) {
      throw config_error("force_reject", "only valid with a toy-LM oracle (use alpha = 0)");
    }
  } else if (cfg.alpha) {
    throw config_error("alpha", "only valid with the bernoulli oracle");
  }
  if (cfg.vocab < 2) throw config_error("vocab", "must be >= 2");
  if (!(cfg.beta >= 0.0)) throw config_error("beta", "must be >= 0");
  for (Token t : cfg.prompt) {
    if (t < 0 || t >= cfg.vocab) throw config_error("prompt", "token outside [0, vocab)");
  }
  if (cfg.horizon < 1 || cfg.horizon > kMaxHorizon) {
    throw config_error("horizon", "must lie in [1, 1e9]");
  }
  if (cfg.steady_state && cfg.horizon < 2) {
    throw config_error("steady_state", "needs horizon >= 2");
  }
  if (cfg.hop_latency < 0) throw config_error("hop_latency", "must be >= 0");
  if (cfg.cache_reuse && cfg.regime != Regime::eesd) {
    throw config_error("cache_reuse", "only valid for regime eesd");
  }
}

inline std::string format_tokens(const std::vector<Token>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(tokens[i]);
  }
  return out;
}

// One `key = value` line per set field. Unset optionals and empty strings
// are omitted so that reading the output back reproduces the config.
inline void write_config(std::ostream& out, const ExperimentConfig& cfg) {
  auto line = [&](std::string_view key, const std::string& value) {
    out << key << " = " << value << '\n';
  };
  auto boolean = [](bool b) { return std::string(b ? "true" : "false"); };
  line("regime", std::string(to_string(cfg.regime)));
  line("n_layers", std::to_string(cfg.n_layers));
  line("exit_depth", std::to_string(cfg.exit_depth));
  line("exit_stage", std::to_string(cfg.exit_stage));
  if (cfg.gamma) line("gamma", std::to_string(*cfg.gamma));
  line("oracle", std::string(to_string(cfg.oracle)));
  if (cfg.alpha) line("alpha", fmt::format("{}", *cfg.alpha));
  line("lm_seed", std::to_string(cfg.lm_seed));
  line("beta", fmt::format("{}", cfg.beta));
  line("vocab", std::to_string(cfg.vocab));
  if (!cfg.prompt.empty()) line("prompt", format_tokens(cfg.prompt));
  line("horizon", std::to_string(cfg.horizon));
  line("seed", std::to_string(cfg.seed));
  line("hop_latency", std::to_string(cfg.hop_latency));
  line("steady_state", boolean(cfg.steady_state));
  line("cache_reuse", boolean(cfg.cache_reuse));
  line("force_reject", boolean(cfg.force_reject));
  if (!cfg.results_path.empty()) line("results_path", cfg.results_path);
  if (!cfg.trace_path.empty()) line("trace_path", cfg.trace_path);
}

inline std::string to_config_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  write_config(out, cfg);
  return out.str();
}

// Parses key = value lines on top of `base`; '#' starts a comment.
inline ExperimentConfig read_config(std::istream& in, ExperimentConfig base = {}) {
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = config_detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw config_error("line " + std::to_string(line_no), "expected key = value");
    }
    apply_setting(base, config_detail::trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

inline ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {}) {
  std::istringstream in{std::string(text)};
  return read_config(in, std::move(base));
}

inline ToyLM make_lm(const ExperimentConfig& cfg) {
  return ToyLM(cfg.n_layers, cfg.vocab, cfg.lm_seed, cfg.beta);
}

inline PipelineConfig make_pipeline(const ExperimentConfig& cfg) {
  return PipelineConfig(cfg.n_layers, cfg.exit_depth, cfg.exit_stage);
}

// The configured prompt, or kAlphaPrefixLength tokens derived from the seed.
inline std::vector<Token> resolve_prompt(const ExperimentConfig& cfg) {
  if (!cfg.prompt.empty()) return cfg.prompt;
  RngStream rng = RngStream(cfg.seed).split(streams::kPrompt);
  return random_prefix(make_lm(cfg), rng);
}

inline DecodeMode decode_mode(const ExperimentConfig& cfg) {
  return cfg.oracle == OracleKind::toylm_greedy ? DecodeMode::greedy : DecodeMode::sampling;
}

inline AcceptanceOracle make_oracle(const ExperimentConfig& cfg) {
  if (cfg.oracle == OracleKind::bernoulli) return AcceptanceOracle::bernoulli(cfg.alpha.value_or(1.0));
  return AcceptanceOracle::toylm(make_lm(cfg), resolve_prompt(cfg), decode_mode(cfg),
                                 cfg.force_reject);
}

}  // namespace eespec::harness
