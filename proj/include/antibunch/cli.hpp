#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "antibunch/io.hpp"
#include "antibunch/scenarios.hpp"
#include "antibunch/sweep.hpp"
#include "antibunch/types.hpp"

namespace antibunch::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitValidation = 2,
  kExitNumerical = 3,
  kExitInfeasible = 4,
};

inline constexpr int kConfigSchemaVersion = 1;

enum class OutputFormat { csv, json };

struct TauGrid {
  double start = 0.0;
  double stop = kDefaultTauMax;
  double step = kDefaultTauStep;
};

struct MapConfig {
  std::string quantity = "g2_zero";  // or "g2" (detuning x delay)
  std::vector<Axis> axes;
};

/// Parsed and validated run configuration.
struct RunConfig {
  Scenario scenario = single_atom();
  bool has_detuning = false;
  TauGrid tau;
  double threshold = 0.5;
  PersistenceOptions persistence;
  std::optional<MapConfig> map;
  std::optional<OptimizeOptions> optimize;
  nlohmann::json resolved;  // config with any scenario_file inlined; digested for provenance

  std::vector<double> tau_grid() const { return uniform_grid(tau.start, tau.stop, tau.step); }
  std::string digest() const { return sha256_hex(resolved.dump()); }
};

namespace detail {

// Reads fields of one JSON object, remembers which were consumed and rejects
// the rest. Field paths feed the diagnostics.
class Fields {
 public:
  Fields(const nlohmann::json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ValidationError(fmt::format("{}: expected an object", where()));
  }

  std::string name(const std::string& key) const {
    return path_.empty() ? key : fmt::format("{}.{}", path_, key);
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return doc_.contains(key);
  }

  const nlohmann::json& raw(const std::string& key) {
    if (!has(key)) throw ValidationError(fmt::format("{}: required field is missing", name(key)));
    return doc_.at(key);
  }

  double number(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number()) throw ValidationError(fmt::format("{}: expected a number", name(key)));
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ValidationError(fmt::format("{}: must be finite", name(key)));
    return x;
  }

  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  long long integer(const std::string& key, long long fallback) {
    if (!has(key)) return fallback;
    const auto& v = doc_.at(key);
    if (!v.is_number_integer())
      throw ValidationError(fmt::format("{}: expected an integer", name(key)));
    return v.get<long long>();
  }

  std::string string(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_string()) throw ValidationError(fmt::format("{}: expected a string", name(key)));
    return v.get<std::string>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : fallback;
  }

  void finish() const {
    for (const auto& [key, _] : doc_.items())
      if (!seen_.count(key)) throw ValidationError(fmt::format("{}: unknown key", name(key)));
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  const nlohmann::json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

inline double unit_scale(Fields& f) {
  const auto unit = f.string("unit", "1");
  if (unit == "1") return 1.0;
  if (unit == "pi") return kPi;
  throw ValidationError(fmt::format("{}: expected \"1\" or \"pi\"", f.name("unit")));
}

// {"name", "start", "stop", "step"} | {"name", "start", "step", "count"} |
// {"name", "values"}; optional "unit": "pi" scales every number.
inline Axis parse_axis(const nlohmann::json& doc, const std::string& path) {
  Fields f(doc, path);
  Axis axis;
  axis.name = f.string("name");
  const double scale = unit_scale(f);
  if (f.has("values")) {
    const auto& values = f.raw("values");
    if (!values.is_array() || values.empty())
      throw ValidationError(fmt::format("{}: expected a non-empty array", f.name("values")));
    for (const auto& v : values) {
      if (!v.is_number()) throw ValidationError(fmt::format("{}: expected numbers", f.name("values")));
      axis.values.push_back(scale * v.get<double>());
    }
    if (f.has("start") || f.has("stop") || f.has("step") || f.has("count"))
      throw ValidationError(fmt::format("{}: give either values or a range", path));
  } else {
    const double start = f.number("start");
    const double step = f.number("step");
    if (!(step > 0.0)) throw ValidationError(fmt::format("{}: must be positive", f.name("step")));
    if (f.has("count")) {
      if (f.has("stop")) throw ValidationError(fmt::format("{}: give stop or count, not both", path));
      const auto count = f.integer("count", 0);
      if (count < 1) throw ValidationError(fmt::format("{}: must be at least 1", f.name("count")));
      for (long long k = 0; k < count; ++k)
        axis.values.push_back(scale * (start + static_cast<double>(k) * step));
    } else {
      const double stop = f.number("stop");
      if (stop < start) throw ValidationError(fmt::format("{}: precedes start", f.name("stop")));
      for (double v : uniform_grid(start, stop, step)) axis.values.push_back(scale * v);
    }
  }
  f.finish();
  return axis;
}

inline nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace detail

/// Parses a run configuration. Relative scenario_file paths resolve against `base_dir`.
inline RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  detail::Fields top(doc, "");
  RunConfig cfg;
  if (top.integer("schema_version", -1) != kConfigSchemaVersion)
    throw ValidationError(fmt::format("schema_version: expected {}", kConfigSchemaVersion));
  cfg.resolved = doc;

  nlohmann::json scenario_doc;
  const bool inline_scenario = top.has("scenario");
  const bool file_scenario = top.has("scenario_file");
  if (inline_scenario == file_scenario)
    throw ValidationError("scenario: give exactly one of scenario or scenario_file");
  if (inline_scenario) {
    scenario_doc = top.raw("scenario");
  } else {
    std::filesystem::path file = top.string("scenario_file");
    if (file.is_relative()) file = base_dir / file;
    scenario_doc = detail::load_json_file(file);
    cfg.resolved.erase("scenario_file");
    cfg.resolved["scenario"] = scenario_doc;
  }
  if (!scenario_doc.is_object()) throw ValidationError("scenario: expected an object");

  // The detuning may sit at the top level or among the scenario parameters.
  nlohmann::json params = scenario_doc.value("parameters", nlohmann::json::object());
  if (top.has("detuning")) {
    if (params.is_object() && params.contains("detuning"))
      throw ValidationError("detuning: given both at the top level and in scenario.parameters");
    params["detuning"] = top.number("detuning");
  }
  cfg.has_detuning = params.is_object() && params.contains("detuning");
  if (!cfg.has_detuning && params.is_object()) params["detuning"] = 0.0;
  scenario_doc["parameters"] = params;
  cfg.scenario = scenario_from_json(scenario_doc);

  if (top.has("tau")) {
    detail::Fields f(top.raw("tau"), "tau");
    cfg.tau.start = f.number("start", cfg.tau.start);
    cfg.tau.stop = f.number("stop", cfg.tau.stop);
    cfg.tau.step = f.number("step", cfg.tau.step);
    f.finish();
    if (cfg.tau.start < 0.0) throw ValidationError("tau.start: must be non-negative");
    if (!(cfg.tau.step > 0.0)) throw ValidationError("tau.step: must be positive");
    if (cfg.tau.stop < cfg.tau.start) throw ValidationError("tau.stop: precedes tau.start");
  }

  if (top.has("persistence")) {
    detail::Fields f(top.raw("persistence"), "persistence");
    cfg.threshold = f.number("threshold", cfg.threshold);
    cfg.persistence.window_end = f.number("window_end", cfg.persistence.window_end);
    cfg.persistence.debounce_margin = f.number("debounce_margin", cfg.persistence.debounce_margin);
    cfg.persistence.debounce_duration =
        f.number("debounce_duration", cfg.persistence.debounce_duration);
    f.finish();
  }
  if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0))
    throw ValidationError("persistence.threshold: must lie in (0, 1)");

  if (top.has("map")) {
    detail::Fields f(top.raw("map"), "map");
    MapConfig map;
    map.quantity = f.string("quantity", map.quantity);
    if (map.quantity != "g2_zero" && map.quantity != "g2")
      throw ValidationError("map.quantity: expected \"g2_zero\" or \"g2\"");
    const auto& axes = f.raw("axes");
    const std::size_t most = map.quantity == "g2" ? 1 : 2;
    if (!axes.is_array() || axes.empty() || axes.size() > most)
      throw ValidationError(fmt::format("map.axes: expected 1 to {} axes", most));
    for (std::size_t k = 0; k < axes.size(); ++k) {
      map.axes.push_back(detail::parse_axis(axes[k], fmt::format("map.axes[{}]", k)));
      (void)cfg.scenario.spec_for(map.axes.back().name);
    }
    if (map.quantity == "g2" && map.axes[0].name != "detuning")
      throw ValidationError("map.axes[0].name: a g2 map runs over detuning");
    f.finish();
    cfg.map = std::move(map);
  }

  if (top.has("optimize")) {
    detail::Fields f(top.raw("optimize"), "optimize");
    OptimizeOptions opt;
    opt.objective = objective_from_string(f.string("objective", to_string(opt.objective)));
    opt.budget = static_cast<int>(f.integer("budget", opt.budget));
    if (f.has("cap")) opt.cap = f.number("cap");
    opt.threshold = cfg.threshold;
    opt.seed = static_cast<std::uint64_t>(f.integer("seed", 0));
    opt.restarts = static_cast<int>(f.integer("restarts", 0));
    opt.tolerance = f.number("tolerance", opt.tolerance);
    const auto& bounds = f.raw("bounds");
    if (!bounds.is_array() || bounds.empty())
      throw ValidationError("optimize.bounds: expected a non-empty array");
    for (std::size_t k = 0; k < bounds.size(); ++k) {
      detail::Fields b(bounds[k], fmt::format("optimize.bounds[{}]", k));
      Bound bound;
      bound.name = b.string("name");
      const double scale = detail::unit_scale(b);
      bound.lower = scale * b.number("lower");
      bound.upper = scale * b.number("upper");
      bound.coarse_points = static_cast<int>(b.integer("coarse_points", bound.coarse_points));
      b.finish();
      opt.bounds.push_back(bound);
    }
    if (opt.restarts < 0) throw ValidationError("optimize.restarts: must be non-negative");
    f.finish();
    cfg.optimize = std::move(opt);
  }
  top.finish();
  cfg.tau_grid();  // validates the delay grid early
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(detail::load_json_file(path), path.parent_path());
}

// ---------------------------------------------------------------------------
// Commands

struct CommandContext {
  RunConfig config;
  std::filesystem::path out_dir;
  int threads = 1;
  OutputFormat format = OutputFormat::csv;
  std::ostream* out = &std::cout;
};

namespace detail {

inline Provenance provenance_for(const CommandContext& ctx) {
  return {ctx.config.digest(), to_json(ctx.config.scenario)};
}

inline std::filesystem::path emit_table(const CommandContext& ctx, const std::string& stem,
                                        const Table& table) {
  const auto prov = provenance_for(ctx);
  if (ctx.format == OutputFormat::csv) {
    auto path = ctx.out_dir / (stem + ".csv");
    write_csv(path, table, prov);
    return path;
  }
  auto path = ctx.out_dir / (stem + ".json");
  write_json(path, table_to_json(table, prov));
  return path;
}

inline void require_detuning(const RunConfig& cfg) {
  if (!cfg.has_detuning) throw ValidationError("detuning: required field is missing");
}

inline std::string format_optional(const std::optional<double>& v) {
  return v ? fmt::format("{:.6g}", *v) : std::string("none");
}

}  // namespace detail

inline int cmd_spectrum(const CommandContext& ctx) {
  detail::require_detuning(ctx.config);
  const auto analysis = analyze(ctx.config.scenario);
  const auto path =
      detail::emit_table(ctx, "spectrum", spectrum_table(analysis.spectrum, analysis.constants));
  auto& out = *ctx.out;
  out << fmt::format("{} states at detuning {}\n", analysis.spectrum.size(), analysis.detuning);
  out << fmt::format("{:>5} {:>12} {:>12} {:>12} {:>10}\n", "index", "re_e", "decay_rate", "abs_c",
                     "arg_c/pi");
  for (Eigen::Index nu = 0; nu < analysis.spectrum.size(); ++nu)
    out << fmt::format("{:>5} {:>12.6f} {:>12.6f} {:>12.6g} {:>10.5f}\n", nu,
                       analysis.spectrum.eigenvalues(nu).real(), analysis.spectrum.decay_rate(nu),
                       std::abs(analysis.constants(nu)), std::arg(analysis.constants(nu)) / kPi);
  out << fmt::format("wrote {}\n", path.string());
  return kExitOk;
}

inline int cmd_g2(const CommandContext& ctx) {
  detail::require_detuning(ctx.config);
  const auto analysis = analyze(ctx.config.scenario);
  const auto trace = analysis.trace(ctx.config.tau_grid());
  const auto metric = persistence(trace, ctx.config.threshold, ctx.config.persistence);
  const auto trace_path = detail::emit_table(ctx, "trace", trace_table(trace));
  const auto constants_path = detail::emit_table(ctx, "constants", constants_table(trace));
  *ctx.out << fmt::format("g2(0) = {:.6g}  tau_half({}) = {}  window_max[0,{}] = {:.6g}\n",
                          metric.g2_zero, ctx.config.threshold,
                          detail::format_optional(metric.tau_half),
                          ctx.config.persistence.window_end, metric.window_max);
  *ctx.out << fmt::format("wrote {} and {}\n", trace_path.string(), constants_path.string());
  return kExitOk;
}

inline int cmd_map(const CommandContext& ctx) {
  if (!ctx.config.map) throw ValidationError("map: required section is missing");
  const auto& map_cfg = *ctx.config.map;
  const bool varies_detuning = std::any_of(map_cfg.axes.begin(), map_cfg.axes.end(),
                                           [](const Axis& a) { return a.name == "detuning"; });
  if (!varies_detuning) detail::require_detuning(ctx.config);
  const auto result =
      map_cfg.quantity == "g2"
          ? map_g2_tau(ctx.config.scenario, map_cfg.axes[0].values, ctx.config.tau_grid(),
                       ctx.threads)
          : map_g2_zero(ctx.config.scenario, map_cfg.axes, ctx.threads);
  const auto path = detail::emit_table(ctx, "map", map_table(result));
  const auto sidecar = ctx.out_dir / "map.meta.json";
  write_json(sidecar, map_sidecar(result, detail::provenance_for(ctx)));
  auto& out = *ctx.out;
  out << fmt::format("{} x {} cells, {} flagged\n", result.rows(), result.cols(),
                     result.flagged_count());
  if (auto best = result.argmin()) {
    out << fmt::format("min {} = {:.6g} at {} = {:.6g}", result.quantity,
                       result.value(best->first, best->second), result.axes[0].name,
                       result.axes[0].values[best->first]);
    if (result.axes.size() > 1)
      out << fmt::format(", {} = {:.6g}", result.axes[1].name, result.axes[1].values[best->second]);
    out << '\n';
  }
  out << fmt::format("wrote {} and {}\n", path.string(), sidecar.string());
  return kExitOk;
}

inline int cmd_optimize(const CommandContext& ctx) {
  if (!ctx.config.optimize) throw ValidationError("optimize: required section is missing");
  auto options = *ctx.config.optimize;
  const bool varies_detuning = std::any_of(options.bounds.begin(), options.bounds.end(),
                                           [](const Bound& b) { return b.name == "detuning"; });
  if (!varies_detuning) detail::require_detuning(ctx.config);
  if (options.objective != Objective::min_g2_zero) options.tau_grid = ctx.config.tau_grid();

  const auto result = optimize(ctx.config.scenario, options);
  const auto prov = detail::provenance_for(ctx);
  const auto audit_path = detail::emit_table(ctx, "audit", audit_table(result, options.bounds));
  const auto best_path = ctx.out_dir / "best.json";
  write_json(best_path, best_point_json(result, options.objective, prov));

  auto& out = *ctx.out;
  out << fmt::format("status: {} after {} evaluations\n", to_string(result.status),
                     result.audit.size());
  if (result.status != OptimizeStatus::infeasible) {
    for (const auto& [k, v] : result.best) out << fmt::format("  {} = {:.6g}\n", k, v);
    out << fmt::format("  {} = {:.6g}  (g2(0) = {:.6g})\n", to_string(options.objective),
                       result.metric, result.g2_zero);
  }
  out << fmt::format("wrote {} and {}\n", best_path.string(), audit_path.string());
  return result.status == OptimizeStatus::infeasible ? kExitInfeasible : kExitOk;
}

/// Entry point shared by the executable and the tests.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Persistent photon antibunching in collective emitter arrays", "antibunch"};
  app.footer("Exit codes: 0 ok, 1 I/O or other error, 2 invalid input, 3 numerical failure, "
             "4 optimization infeasible.");
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  int threads = 1;
  std::string format = "csv";
  for (const char* name : {"spectrum", "g2", "map", "optimize"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads for maps")
        ->check(CLI::Range(1, 1024));
    sub->add_option("--format", format, "table format")
        ->check(CLI::IsMember({"csv", "json"}));
  }
  app.get_subcommand("spectrum")->description("eigenvalues, decay rates and C constants");
  app.get_subcommand("g2")->description("g2(tau) trace and persistence summary");
  app.get_subcommand("map")->description("g2(0) or g2(tau) over a parameter grid");
  app.get_subcommand("optimize")->description("coarse scan plus simplex refinement");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    CommandContext ctx{load_config(config_path), out_dir, threads,
                       format == "json" ? OutputFormat::json : OutputFormat::csv, &out};
    std::error_code ec;
    std::filesystem::create_directories(ctx.out_dir, ec);
    if (ec) throw IoError(fmt::format("cannot create {}: {}", out_dir, ec.message()));
    const auto* sub = app.get_subcommands().front();
    if (sub->get_name() == "spectrum") return cmd_spectrum(ctx);
    if (sub->get_name() == "g2") return cmd_g2(ctx);
    if (sub->get_name() == "map") return cmd_map(ctx);
    return cmd_optimize(ctx);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitOther;
  }
}

inline int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace antibunch::cli
