#pragma once

// Parameter sweeps over one or two config keys. Cells run concurrently;
// rows come back in cell-index order (first axis outermost).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "eespec/harness/config.hpp"
#include "eespec/harness/run.hpp"

namespace eespec::harness {

inline constexpr std::size_t kMaxSweepCells = 10'000;
inline constexpr std::size_t kMaxSweepAxes = 2;

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;

  friend bool operator==(const SweepAxis&, const SweepAxis&) = default;
};

struct SweepSpec {
  ExperimentConfig base;
  std::vector<SweepAxis> axes;
};

struct SweepResult {
  std::vector<ExperimentConfig> cells;
  std::vector<RunMetrics> metrics;
};

// "key=v1,v2,..." or "key=lo:hi[:step]" (inclusive numeric range).
inline SweepAxis parse_axis(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) {
    throw config_error("sweep", "expected key=values, got '" + std::string(text) + "'");
  }
  SweepAxis axis{std::string(config_detail::trim(text.substr(0, eq))), {}};
  std::string_view values = config_detail::trim(text.substr(eq + 1));
  if (values.empty()) throw config_error(axis.key, "sweep value list is empty");

  if (values.find(':') != std::string_view::npos && values.find(',') == std::string_view::npos) {
    std::vector<double> parts;
    while (true) {
      const auto colon = values.find(':');
      parts.push_back(config_detail::parse_number<double>(axis.key, values.substr(0, colon)));
      if (colon == std::string_view::npos) break;
      values.remove_prefix(colon + 1);
    }
    if (parts.size() < 2 || parts.size() > 3) {
      throw config_error(axis.key, "range must be lo:hi or lo:hi:step");
    }
    const double lo = parts[0];
    const double hi = parts[1];
    const double step = parts.size() == 3 ? parts[2] : 1.0;
    if (!(step > 0.0) || hi < lo) throw config_error(axis.key, "empty or invalid range");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    if (count > kMaxSweepCells) throw config_error(axis.key, "range has too many values");
    for (std::size_t i = 0; i < count; ++i) {
      axis.values.push_back(fmt::format("{:.12g}", lo + static_cast<double>(i) * step));
    }
    return axis;
  }

  while (true) {
    const auto comma = values.find(',');
    const auto item = config_detail::trim(values.substr(0, comma));
    if (item.empty()) throw config_error(axis.key, "empty value in sweep list");
    axis.values.emplace_back(item);
    if (comma == std::string_view::npos) break;
    values.remove_prefix(comma + 1);
  }
  return axis;
}

inline std::vector<ExperimentConfig> expand(const SweepSpec& spec) {
  if (spec.axes.empty() || spec.axes.size() > kMaxSweepAxes) {
    throw config_error("sweep", "need one or two swept parameters");
  }
  std::size_t cells = 1;
  std::set<std::string> seen;
  for (const SweepAxis& axis : spec.axes) {
    if (axis.values.empty()) throw config_error(axis.key, "sweep value list is empty");
    if (!seen.insert(axis.key).second) throw config_error(axis.key, "swept twice");
    cells *= axis.values.size();
    if (cells > kMaxSweepCells) {
      throw config_error("sweep", fmt::format("more than {} cells", kMaxSweepCells));
    }
  }

  std::vector<ExperimentConfig> out;
  out.reserve(cells);
  const SweepAxis& outer = spec.axes[0];
  for (const std::string& v0 : outer.values) {
    ExperimentConfig cfg = spec.base;
    apply_setting(cfg, outer.key, v0);
    if (spec.axes.size() == 1) {
      validate(cfg);
      out.push_back(std::move(cfg));
      continue;
    }
    for (const std::string& v1 : spec.axes[1].values) {
      ExperimentConfig inner = cfg;
      apply_setting(inner, spec.axes[1].key, v1);
      validate(inner);
      out.push_back(std::move(inner));
    }
  }
  return out;
}

inline SweepResult run_sweep(const SweepSpec& spec, unsigned threads = 0) {
  SweepResult result;
  result.cells = expand(spec);
  const std::size_t n = result.cells.size();
  result.metrics.resize(n);
  std::vector<std::exception_ptr> errors(n);

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        result.metrics[i] = execute(result.cells[i]).metrics;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return result;
}

inline constexpr std::string_view kSweepExtraColumns = "analytic_alpha_all";

inline void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << kResultHeader << ',' << kSweepExtraColumns << '\n';
  for (std::size_t i = 0; i < result.cells.size(); ++i) {
    out << result_row(result.cells[i], result.metrics[i]) << ','
        << format_real(analytic_alpha_all(result.cells[i])) << '\n';
  }
}

}  // namespace eespec::harness
