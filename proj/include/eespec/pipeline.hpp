#pragma once

// Stage layout, inter-stage messages and the event trace of the pipeline
// simulator.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "eespec/speccore.hpp"
#include "eespec/toylm.hpp"

namespace eespec {

// N layers split into S = ceil(N/E) stages of E layers; the last stage takes
// the remainder (and the output head). The draft leaves the pipeline at the
// end of stage `exit_stage` (1-based).
class PipelineConfig {
 public:
  PipelineConfig(int n_layers, int exit_depth, int exit_stage = 1)
      : n_layers_(n_layers), exit_depth_(exit_depth), exit_stage_(exit_stage) {
    if (n_layers < 1) throw std::invalid_argument("n_layers must be >= 1");
    if (exit_depth < 1 || exit_depth > n_layers) {
      throw std::invalid_argument("exit_depth must lie in [1, n_layers]");
    }
    n_stages_ = (n_layers + exit_depth - 1) / exit_depth;
    if (exit_stage < 1 || exit_stage > std::max(1, n_stages_ - 1)) {
      throw std::invalid_argument("exit_stage must lie in [1, n_stages - 1]");
    }
    stage_layers_.assign(static_cast<std::size_t>(n_stages_), exit_depth);
    stage_layers_.back() = n_layers - (n_stages_ - 1) * exit_depth;
  }

  int n_layers() const noexcept { return n_layers_; }
  int exit_depth() const noexcept { return exit_depth_; }
  int n_stages() const noexcept { return n_stages_; }
  int exit_stage() const noexcept { return exit_stage_; }
  const std::vector<int>& stage_layers() const noexcept { return stage_layers_; }

  // Layers covered by the first `stages` stages.
  int layers_through(int stages) const {
    if (stages < 0 || stages > n_stages_) throw std::out_of_range("stage count out of range");
    return std::accumulate(stage_layers_.begin(), stage_layers_.begin() + stages, 0);
  }

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;

 private:
  int n_layers_;
  int exit_depth_;
  int exit_stage_;
  int n_stages_ = 1;
  std::vector<int> stage_layers_;
};

enum class MessageKind { activation, draft_token, final_token, check_token };

inline std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::activation: return "ACTIVATION";
    case MessageKind::draft_token: return "DRAFT_TOKEN";
    case MessageKind::final_token: return "FINAL_TOKEN";
    case MessageKind::check_token: return "CHECK_TOKEN";
  }
  return "?";
}

struct StageMessage {
  MessageKind kind = MessageKind::activation;
  std::int64_t position = 0;
  Token token = kNoToken;  // unused for ACTIVATION
  PrefixState payload{};   // ACTIVATION only

  friend bool operator==(const StageMessage&, const StageMessage&) = default;
};

enum class TraceVerdict { none, accept, reject };

inline std::string_view to_string(TraceVerdict verdict) {
  switch (verdict) {
    case TraceVerdict::none: return "";
    case TraceVerdict::accept: return "accept";
    case TraceVerdict::reject: return "reject";
  }
  return "?";
}

struct TraceRecord {
  std::int64_t tick = 0;
  int stage = 0;  // 0-based
  MessageKind kind = MessageKind::activation;
  std::int64_t position = 0;
  Token token = kNoToken;
  TraceVerdict verdict = TraceVerdict::none;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

// Ordered event log. ACTIVATION records are stage forwards; the other kinds
// are tokens emitted by a stage during its forward.
class EventTrace {
 public:
  static constexpr std::string_view kCsvHeader = "tick,stage,kind,position,token,verdict";

  void record(std::int64_t tick, int stage, const StageMessage& message,
              TraceVerdict verdict = TraceVerdict::none) {
    records_.push_back({tick, stage, message.kind, message.position, message.token, verdict});
  }

  const std::vector<TraceRecord>& records() const noexcept { return records_; }
  bool empty() const noexcept { return records_.empty(); }

  void write_csv(std::ostream& out) const {
    out << kCsvHeader << '\n';
    for (const TraceRecord& r : records_) {
      out << r.tick << ',' << r.stage << ',' << to_string(r.kind) << ',' << r.position << ',';
      if (r.token != kNoToken) out << r.token;
      out << ',' << to_string(r.verdict) << '\n';
    }
  }

  friend bool operator==(const EventTrace&, const EventTrace&) = default;

 private:
  std::vector<TraceRecord> records_;
};

}  // namespace eespec
