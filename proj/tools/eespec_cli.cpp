// eespec: analytic calculator, simulator runs, sweeps, toy-LM decoding and
// event traces.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "eespec/analytic.hpp"
#include "eespec/harness/config.hpp"
#include "eespec/harness/report.hpp"
#include "eespec/harness/run.hpp"
#include "eespec/harness/sweep.hpp"

namespace fs = std::filesystem;
using namespace eespec;
using namespace eespec::harness;

namespace {

constexpr const char* kOutputDirEnv = "EESPEC_OUTPUT_DIR";

bool is_flag_key(std::string_view key) {
  return key == "steady_state" || key == "cache_reuse" || key == "force_reject";
}

std::string kebab(std::string_view key) {
  std::string out(key);
  for (char& c : out) {
    if (c == '_') c = '-';
  }
  return out;
}

// Config file plus per-field flag overrides shared by run/sweep/decode/trace.
struct ConfigOptions {
  std::string config_file;
  std::string output_dir;
  bool print_config = false;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_file, "key = value config file")->check(CLI::ExistingFile);
    app->add_option("--output-dir", output_dir,
                    fmt::format("directory for relative output paths (default ${})", kOutputDirEnv));
    app->add_flag("--print-config", print_config, "print the effective config and exit");
    for (std::string_view key : config_keys()) {
      const std::string name = "--" + kebab(key);
      if (is_flag_key(key)) {
        flags[std::string(key)] = false;
        app->add_flag(name, flags[std::string(key)], fmt::format("set {} = true", key));
      } else {
        values[std::string(key)];
        app->add_option(name, values[std::string(key)], fmt::format("override {}", key));
      }
    }
  }

  ExperimentConfig build(CLI::App* app) const {
    ExperimentConfig cfg;
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      cfg = read_config(in);
    }
    for (std::string_view key : config_keys()) {
      const std::string name = "--" + kebab(key);
      if (app->count(name) == 0) continue;
      if (is_flag_key(key)) {
        apply_setting(cfg, key, "true");
      } else {
        apply_setting(cfg, key, values.at(std::string(key)));
      }
    }
    return cfg;
  }

  fs::path directory() const {
    if (!output_dir.empty()) return output_dir;
    if (const char* env = std::getenv(kOutputDirEnv)) return env;
    return {};
  }

  // Empty result means stdout.
  fs::path resolve(const std::string& path, std::string_view default_name) const {
    const fs::path dir = directory();
    if (path.empty()) return dir.empty() ? fs::path() : dir / default_name;
    const fs::path p(path);
    return (p.is_relative() && !dir.empty()) ? dir / p : p;
  }
};

template <class Fn>
void write_output(const fs::path& path, Fn&& fn) {
  if (path.empty()) {
    fn(std::cout);
    return;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  fn(out);
}

void write_result(const fs::path& path, const ExperimentConfig& cfg, const RunMetrics& m) {
  write_output(path, [&](std::ostream& out) {
    out << kResultHeader << '\n' << result_row(cfg, m) << '\n';
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Early-exit speculative decoding: analytic model and pipeline simulator"};
  app.require_subcommand(1);

  // analytic
  auto* analytic_cmd = app.add_subcommand("analytic", "print the closed-form quantities");
  analytic::SpeedupParams params{0.5, 5, 32, 8};
  std::optional<double> t_target, t_draft;
  bool analytic_cache_reuse = false;
  analytic_cmd->add_option("--alpha", params.alpha, "single-token acceptance rate")->required();
  analytic_cmd->add_option("--gamma", params.gamma, "draft length")->capture_default_str();
  analytic_cmd->add_option("--n-layers", params.n_layers, "total layers N")->capture_default_str();
  analytic_cmd->add_option("--exit-depth", params.exit_depth, "exit layer E")->capture_default_str();
  analytic_cmd->add_option("--t-target", t_target, "target forward cost (default 1)");
  analytic_cmd->add_option("--t-draft", t_draft, "draft forward cost (default E/N)");
  analytic_cmd->add_flag("--cache-reuse", analytic_cache_reuse,
                         "charge N - E layers for verification");

  ConfigOptions run_opts, sweep_opts, decode_opts, trace_opts;
  auto* run_cmd = app.add_subcommand("run", "simulate one configuration and write a result row");
  run_opts.attach(run_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "simulate a one- or two-parameter grid");
  sweep_opts.attach(sweep_cmd);
  std::vector<std::string> vary;
  std::string sweep_out;
  unsigned threads = 0;
  sweep_cmd->add_option("--vary", vary, "key=v1,v2,... or key=lo:hi[:step]")->required();
  sweep_cmd->add_option("-o,--out", sweep_out, "sweep CSV path (default stdout)");
  sweep_cmd->add_option("--threads", threads, "worker threads (0 = hardware)");

  auto* decode_cmd = app.add_subcommand("decode", "decode with the toy LM and print the tokens");
  decode_opts.attach(decode_cmd);

  auto* trace_cmd = app.add_subcommand("trace", "write the event trace CSV of one run");
  trace_opts.attach(trace_cmd);
  std::string trace_out;
  trace_cmd->add_option("-o,--out", trace_out, "trace CSV path (default trace_path or stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (analytic_cmd->parsed()) {
      analytic::CostModel cost = default_cost(params);
      if (t_target) cost.t_target = *t_target;
      if (t_draft) cost.t_draft = *t_draft;
      std::cout << analytic_report(params, cost, analytic_cache_reuse);
      return 0;
    }

    if (run_cmd->parsed()) {
      const ExperimentConfig cfg = run_opts.build(run_cmd);
      if (run_opts.print_config) {
        write_config(std::cout, cfg);
        return 0;
      }
      const bool want_trace = !cfg.trace_path.empty();
      const SimResult result = execute(cfg, want_trace);
      write_result(run_opts.resolve(cfg.results_path, "results.csv"), cfg, result.metrics);
      if (want_trace) {
        write_output(run_opts.resolve(cfg.trace_path, "trace.csv"),
                     [&](std::ostream& out) { result.trace.write_csv(out); });
      }
      return 0;
    }

    if (sweep_cmd->parsed()) {
      SweepSpec spec{sweep_opts.build(sweep_cmd), {}};
      if (sweep_opts.print_config) {
        write_config(std::cout, spec.base);
        return 0;
      }
      for (const std::string& v : vary) spec.axes.push_back(parse_axis(v));
      const SweepResult result = run_sweep(spec, threads);
      write_output(sweep_opts.resolve(sweep_out, "sweep.csv"),
                   [&](std::ostream& out) { write_sweep_csv(out, result); });
      return 0;
    }

    if (decode_cmd->parsed()) {
      ExperimentConfig cfg = decode_opts.build(decode_cmd);
      if (decode_opts.print_config) {
        write_config(std::cout, cfg);
        return 0;
      }
      if (!cfg.uses_toylm()) {
        throw config_error("oracle", "decode needs toylm_greedy or toylm_sampling");
      }
      if (cfg.prompt.empty()) cfg.prompt = resolve_prompt(cfg);
      const SimResult result = execute(cfg, false);
      std::cout << "prompt: " << format_tokens(cfg.prompt) << '\n';
      std::cout << "tokens: " << format_tokens(result.tokens) << '\n';
      write_result(decode_opts.resolve(cfg.results_path, "results.csv"), cfg, result.metrics);
      return 0;
    }

    if (trace_cmd->parsed()) {
      const ExperimentConfig cfg = trace_opts.build(trace_cmd);
      if (trace_opts.print_config) {
        write_config(std::cout, cfg);
        return 0;
      }
      const SimResult result = execute(cfg, true);
      const std::string& path = trace_out.empty() ? cfg.trace_path : trace_out;
      write_output(trace_opts.resolve(path, "trace.csv"),
                   [&](std::ostream& out) { result.trace.write_csv(out); });
      return 0;
    }
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
