#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "antibunch/kernel.hpp"
#include "antibunch/scattering.hpp"
#include "antibunch/scenarios.hpp"
#include "antibunch/spectral.hpp"
#include "antibunch/types.hpp"

namespace antibunch {

/// Full single-point evaluation of a scenario at its configured detuning.
struct PointAnalysis {
  Model model;
  SpectralData spectrum;
  CVector constants;
  double detuning = 0.0;

  double g2_zero() const { return std::norm(1.0 - constants.sum()); }

  CorrelationTrace trace(std::vector<double> tau_grid) const {
    return g2_trace(constants, spectrum, detuning, std::move(tau_grid));
  }
};

inline PointAnalysis analyze(const Scenario& scenario) {
  PointAnalysis out;
  out.model = scenario.build();
  out.detuning = scenario.detuning();
  out.spectrum = eigendecompose(out.model.hamiltonian);
  out.constants =
      c_constants(out.spectrum, eigen_kernel(out.spectrum), out.model.couplings, out.detuning);
  return out;
}

// Defaults: delays in units of the rate unit's lifetime.
inline constexpr double kDefaultDetuningStep = 0.05;
inline constexpr double kDefaultTauStep = 0.02;
inline constexpr double kDefaultTauMax = 60.0;

inline std::vector<double> default_tau_grid() {
  return uniform_grid(0.0, kDefaultTauMax, kDefaultTauStep);
}

// ---------------------------------------------------------------------------
// Persistence

struct PersistenceOptions {
  double debounce_margin = 0.05;    // must stay above threshold - margin ...
  double debounce_duration = 1.0;   // ... for this long after the crossing
  double window_end = 5.0;          // window_max covers [0, window_end]
  double max_step = 0.05;           // coarsest admissible delay step
};

struct PersistenceMetric {
  double g2_zero = 0.0;
  std::optional<double> tau_half;  // empty when the trace never settles above threshold
  double window_max = 0.0;
};

inline PersistenceMetric persistence(const CorrelationTrace& trace, double threshold,
                                     const PersistenceOptions& options = {}) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ValidationError("persistence threshold must lie in (0, 1)");
  const auto& tau = trace.tau;
  const auto& g2 = trace.g2;
  if (tau.size() < 2) throw GridTooCoarseError("persistence needs at least two delays");
  for (std::size_t k = 1; k < tau.size(); ++k)
    if (tau[k] - tau[k - 1] > options.max_step * (1.0 + 1e-9))
      throw GridTooCoarseError(fmt::format(
          "delay step {} exceeds {} lifetimes", tau[k] - tau[k - 1], options.max_step));

  PersistenceMetric m;
  m.g2_zero = g2_at(trace.constants, trace.exponents, 0.0);
  m.window_max = 0.0;
  for (std::size_t k = 0; k < tau.size() && tau[k] <= options.window_end + 1e-12; ++k)
    m.window_max = std::max(m.window_max, g2[k]);

  if (m.g2_zero >= threshold) {
    m.tau_half = 0.0;
    return m;
  }
  const double floor = threshold - options.debounce_margin;
  for (std::size_t k = 1; k < tau.size(); ++k) {
    if (!(g2[k] >= threshold && g2[k - 1] < threshold)) continue;
    const double frac = (threshold - g2[k - 1]) / (g2[k] - g2[k - 1]);
    const double crossing = tau[k - 1] + frac * (tau[k] - tau[k - 1]);
    bool settled = true;
    for (std::size_t j = k; j < tau.size() && tau[j] <= crossing + options.debounce_duration; ++j)
      if (g2[j] < floor) {
        settled = false;
        break;
      }
    if (settled) {
      m.tau_half = crossing;
      return m;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Maps

struct Axis {
  std::string name;
  std::vector<double> values;
};

enum class CellFlag : std::uint8_t { ok = 0, linear_amplitude_zero = 1, numerical_failure = 2 };

inline const char* to_string(CellFlag f) {
  switch (f) {
    case CellFlag::ok: return "ok";
    case CellFlag::linear_amplitude_zero: return "linear_amplitude_zero";
    case CellFlag::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

/// Flagged cells hold this placeholder so the map stays finite.
inline constexpr double kFlaggedCellValue = 1.0;

/// Dense map over one or two axes, row-major with axes[0] as the slow index.
struct SweepResult {
  std::vector<Axis> axes;
  std::vector<double> values;
  std::vector<CellFlag> flags;
  std::string quantity;
  Scenario scenario = single_atom();

  std::size_t rows() const { return axes.at(0).values.size(); }
  std::size_t cols() const { return axes.size() > 1 ? axes[1].values.size() : 1; }
  double value(std::size_t i, std::size_t j = 0) const { return values[i * cols() + j]; }
  CellFlag flag(std::size_t i, std::size_t j = 0) const { return flags[i * cols() + j]; }

  std::size_t flagged_count() const {
    return static_cast<std::size_t>(
        std::count_if(flags.begin(), flags.end(), [](CellFlag f) { return f != CellFlag::ok; }));
  }

  /// Index of the smallest unflagged value; ties go to the first cell.
  std::optional<std::pair<std::size_t, std::size_t>> argmin() const {
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < values.size(); ++k)
      if (flags[k] == CellFlag::ok && (!best || values[k] < values[*best])) best = k;
    if (!best) return std::nullopt;
    return std::pair{*best / cols(), *best % cols()};
  }
};

/// Runs body(k) for k in [0, count) on `threads` workers with static striding.
/// Each index is written by exactly one worker, so results do not depend on
/// the thread count.
inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count < 2) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = w; k < count; k += workers) body(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace detail {

inline void check_axis(const Scenario& scenario, const Axis& axis) {
  if (axis.values.empty()) throw ValidationError(fmt::format("axis '{}' is empty", axis.name));
  const auto spec = scenario.spec_for(axis.name);
  for (double v : axis.values)
    if (!spec.contains(v))
      throw ValidationError(fmt::format("axis '{}' value {} is outside the parameter bounds",
                                        axis.name, v));
}

}  // namespace detail

/// g2(0) over one or two scenario parameters.
inline SweepResult map_g2_zero(const Scenario& scenario, const std::vector<Axis>& axes,
                               int threads = 1) {
  if (axes.empty() || axes.size() > 2) throw ValidationError("a map takes one or two axes");
  for (const auto& a : axes) detail::check_axis(scenario, a);
  if (axes.size() == 2 && axes[0].name == axes[1].name)
    throw ValidationError("map axes must differ");

  SweepResult result;
  result.axes = axes;
  result.quantity = "g2_zero";
  result.scenario = scenario;
  const std::size_t cols = result.cols();
  const std::size_t cells = result.rows() * cols;
  result.values.assign(cells, kFlaggedCellValue);
  result.flags.assign(cells, CellFlag::ok);

  parallel_for(cells, threads, [&](std::size_t k) {
    Scenario point = scenario.with(axes[0].name, axes[0].values[k / cols]);
    if (axes.size() == 2) point = point.with(axes[1].name, axes[1].values[k % cols]);
    try {
      result.values[k] = analyze(point).g2_zero();
    } catch (const LinearAmplitudeZeroError&) {
      result.flags[k] = CellFlag::linear_amplitude_zero;
    } catch (const NumericalError&) {
      result.flags[k] = CellFlag::numerical_failure;
    }
  });
  return result;
}

inline SweepResult map_g2_zero(const Scenario& scenario, const Axis& axis1, const Axis& axis2,
                               int threads = 1) {
  return map_g2_zero(scenario, std::vector<Axis>{axis1, axis2}, threads);
}

/// g2 over detuning x delay. Rows share their C constants.
inline SweepResult map_g2_tau(const Scenario& scenario, const std::vector<double>& detuning_grid,
                              const std::vector<double>& tau_grid, int threads = 1) {
  const Axis detuning{"detuning", detuning_grid};
  detail::check_axis(scenario, detuning);
  if (tau_grid.empty()) throw ValidationError("axis 'tau' is empty");

  SweepResult result;
  result.axes = {detuning, Axis{"tau", tau_grid}};
  result.quantity = "g2";
  result.scenario = scenario;
  const std::size_t cols = tau_grid.size();
  result.values.assign(detuning_grid.size() * cols, kFlaggedCellValue);
  result.flags.assign(detuning_grid.size() * cols, CellFlag::ok);

  parallel_for(detuning_grid.size(), threads, [&](std::size_t i) {
    CellFlag flag = CellFlag::ok;
    try {
      const auto trace = analyze(scenario.with("detuning", detuning_grid[i])).trace(tau_grid);
      std::copy(trace.g2.begin(), trace.g2.end(), result.values.begin() + i * cols);
    } catch (const LinearAmplitudeZeroError&) {
      flag = CellFlag::linear_amplitude_zero;
    } catch (const NumericalError&) {
      flag = CellFlag::numerical_failure;
    }
    if (flag != CellFlag::ok) std::fill_n(result.flags.begin() + i * cols, cols, flag);
  });
  return result;
}

// ---------------------------------------------------------------------------
// Optimization

enum class Objective { min_g2_zero, max_tau_half, max_window };

inline const char* to_string(Objective o) {
  switch (o) {
    case Objective::min_g2_zero: return "min_g2_zero";
    case Objective::max_tau_half: return "max_tau_half";
    case Objective::max_window: return "max_window";
  }
  return "unknown";
}

inline Objective objective_from_string(const std::string& s) {
  if (s == "min_g2_zero") return Objective::min_g2_zero;
  if (s == "max_tau_half") return Objective::max_tau_half;
  if (s == "max_window") return Objective::max_window;
  throw ValidationError(fmt::format("unknown objective '{}'", s));
}

struct Bound {
  std::string name;
  double lower;
  double upper;
  int coarse_points = 5;
};

struct OptimizeOptions {
  Objective objective = Objective::min_g2_zero;
  std::vector<Bound> bounds;
  int budget = 200;
  double cap = std::numeric_limits<double>::infinity();  // feasibility: g2(0) < cap
  double threshold = 0.5;   // level for tau_half and for the antibunching window
  std::vector<double> tau_grid = default_tau_grid();
  std::uint64_t seed = 0;
  int restarts = 0;
  double tolerance = 1e-6;
};

struct AuditEntry {
  std::string stage;
  std::map<std::string, double> point;
  double metric = 0.0;    // objective in its natural sense (g2(0), tau_half, window)
  double g2_zero = 0.0;
  bool feasible = false;
  std::string note;
};

enum class OptimizeStatus { converged, budget_exhausted, infeasible };

inline const char* to_string(OptimizeStatus s) {
  switch (s) {
    case OptimizeStatus::converged: return "converged";
    case OptimizeStatus::budget_exhausted: return "budget_exhausted";
    case OptimizeStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

struct OptimizeResult {
  OptimizeStatus status = OptimizeStatus::infeasible;
  std::map<std::string, double> best;
  double metric = 0.0;
  double g2_zero = 0.0;
  std::size_t best_index = 0;  // into audit
  std::vector<AuditEntry> audit;
};

namespace detail {

inline std::vector<double> linspace(double lo, double hi, int count) {
  if (count == 1) return {0.5 * (lo + hi)};
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k)
    out[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (count - 1);
  return out;
}

// Delay of the first upward crossing of `level`, interpolated; grid end if none.
inline double first_crossing(const CorrelationTrace& trace, double level) {
  if (trace.g2.front() >= level) return 0.0;
  for (std::size_t k = 1; k < trace.g2.size(); ++k)
    if (trace.g2[k] >= level) {
      const double frac = (level - trace.g2[k - 1]) / (trace.g2[k] - trace.g2[k - 1]);
      return trace.tau[k - 1] + frac * (trace.tau[k] - trace.tau[k - 1]);
    }
  return trace.tau.back();
}

class Optimizer {
 public:
  Optimizer(const Scenario& scenario, const OptimizeOptions& options)
      : scenario_(scenario), options_(options) {}

  OptimizeResult run() {
    validate();
    std::size_t coarse = 1;
    for (const auto& b : options_.bounds) coarse *= static_cast<std::size_t>(b.coarse_points);
    if (static_cast<std::size_t>(options_.budget) < coarse)
      throw ValidationError(fmt::format("budget {} is smaller than the coarse grid ({} cells)",
                                        options_.budget, coarse));

    coarse_stage();
    if (!best_feasible_) {
      result_.status = OptimizeStatus::infeasible;
      finalize();
      return result_;
    }
    std::vector<double> start = to_unit(result_.audit[*best_feasible_].point);
    bool converged = nelder_mead(start, best_score_, "refine");
    std::mt19937_64 rng(options_.seed);
    for (int r = 0; r < options_.restarts && remaining() > 0; ++r) {
      std::uniform_real_distribution<double> jitter(-0.5, 0.5);
      auto point = to_unit(result_.audit[*best_feasible_].point);
      for (std::size_t d = 0; d < point.size(); ++d)
        point[d] = std::clamp(point[d] + jitter(rng) * cell_width(d), 0.0, 1.0);
      converged = nelder_mead(point, std::nullopt, fmt::format("restart{}", r + 1)) && converged;
    }
    result_.status = converged ? OptimizeStatus::converged : OptimizeStatus::budget_exhausted;
    finalize();
    return result_;
  }

 private:
  void validate() const {
    if (options_.bounds.empty()) throw ValidationError("optimize: no parameters to vary");
    if (options_.budget < 1) throw ValidationError("optimize: budget must be positive");
    for (const auto& b : options_.bounds) {
      const auto spec = scenario_.spec_for(b.name);
      if (!(b.lower <= b.upper) || !spec.contains(b.lower) || !spec.contains(b.upper))
        throw ValidationError(
            fmt::format("optimize: bounds for '{}' are outside the parameter range", b.name));
      if (b.coarse_points < 1)
        throw ValidationError(fmt::format("optimize: '{}' needs at least one coarse point", b.name));
    }
  }

  int remaining() const { return options_.budget - static_cast<int>(result_.audit.size()); }

  double cell_width(std::size_t d) const {
    const int points = options_.bounds[d].coarse_points;
    return points > 1 ? 1.0 / (points - 1) : 0.5;
  }

  std::vector<double> to_unit(const std::map<std::string, double>& point) const {
    std::vector<double> u;
    for (const auto& b : options_.bounds)
      u.push_back(b.upper > b.lower ? (point.at(b.name) - b.lower) / (b.upper - b.lower) : 0.5);
    return u;
  }

  std::map<std::string, double> from_unit(const std::vector<double>& u) const {
    std::map<std::string, double> point;
    for (std::size_t d = 0; d < u.size(); ++d) {
      const auto& b = options_.bounds[d];
      point[b.name] = b.lower + std::clamp(u[d], 0.0, 1.0) * (b.upper - b.lower);
    }
    return point;
  }

  // Returns the value to minimize; +inf for infeasible points.
  double evaluate(const std::map<std::string, double>& point, const std::string& stage) {
    AuditEntry entry;
    entry.stage = stage;
    entry.point = point;
    Scenario s = scenario_;
    for (const auto& [k, v] : point) s = s.with(k, v);
    try {
      const auto analysis = analyze(s);
      entry.g2_zero = analysis.g2_zero();
      entry.feasible = entry.g2_zero < options_.cap;
      switch (options_.objective) {
        case Objective::min_g2_zero:
          entry.metric = entry.g2_zero;
          break;
        case Objective::max_tau_half: {
          const auto m = persistence(analysis.trace(options_.tau_grid), options_.threshold);
          entry.metric = m.tau_half.value_or(options_.tau_grid.back());
          break;
        }
        case Objective::max_window:
          entry.metric = first_crossing(analysis.trace(options_.tau_grid), options_.threshold);
          break;
      }
    } catch (const NumericalError& e) {
      entry.feasible = false;
      entry.note = e.what();
      entry.metric = std::numeric_limits<double>::quiet_NaN();
    }
    const double score = !entry.feasible ? std::numeric_limits<double>::infinity()
                         : options_.objective == Objective::min_g2_zero ? entry.metric
                                                                         : -entry.metric;
    result_.audit.push_back(std::move(entry));
    if (std::isfinite(score) && (!best_feasible_ || score < best_score_)) {
      best_feasible_ = result_.audit.size() - 1;
      best_score_ = score;
    }
    return score;
  }

  void coarse_stage() {
    std::vector<std::vector<double>> grids;
    for (const auto& b : options_.bounds) grids.push_back(linspace(b.lower, b.upper, b.coarse_points));
    std::vector<std::size_t> idx(grids.size(), 0);
    while (true) {
      std::map<std::string, double> point;
      for (std::size_t d = 0; d < grids.size(); ++d) point[options_.bounds[d].name] = grids[d][idx[d]];
      evaluate(point, "coarse");
      // Odometer increment, last axis fastest.
      std::size_t d = grids.size();
      while (true) {
        --d;
        if (++idx[d] < grids[d].size()) break;
        idx[d] = 0;
        if (d == 0) return;
      }
    }
  }

  // Bounded Nelder-Mead on the unit cube. Returns true on convergence,
  // false when the budget ran out first.
  bool nelder_mead(std::vector<double> start, std::optional<double> start_value,
                   const std::string& stage) {
    const std::size_t dim = start.size();
    struct Vertex {
      std::vector<double> x;
      double f;
    };
    auto eval = [&](std::vector<double> x) {
      for (auto& c : x) c = std::clamp(c, 0.0, 1.0);
      const double f = evaluate(from_unit(x), stage);
      return Vertex{std::move(x), f};
    };
    if (remaining() <= 0) return false;
    std::vector<Vertex> simplex;
    simplex.push_back(start_value ? Vertex{start, *start_value} : eval(start));
    for (std::size_t d = 0; d < dim; ++d) {
      if (remaining() <= 0) return false;
      auto x = start;
      const double step = cell_width(d);
      x[d] = x[d] + step <= 1.0 ? x[d] + step : x[d] - step;
      simplex.push_back(eval(x));
    }
    auto by_value = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };
    while (true) {
      std::stable_sort(simplex.begin(), simplex.end(), by_value);
      double size = 0.0;
      for (std::size_t k = 1; k <= dim; ++k)
        for (std::size_t d = 0; d < dim; ++d)
          size = std::max(size, std::abs(simplex[k].x[d] - simplex[0].x[d]));
      const double spread = simplex[dim].f - simplex[0].f;
      if (size < 1e-6 || (std::isfinite(spread) && spread <= options_.tolerance && size < 1e-3))
        return true;
      if (remaining() <= 0) return false;

      std::vector<double> centroid(dim, 0.0);
      for (std::size_t k = 0; k < dim; ++k)
        for (std::size_t d = 0; d < dim; ++d) centroid[d] += simplex[k].x[d] / static_cast<double>(dim);
      auto along = [&](double t) {
        std::vector<double> x(dim);
        for (std::size_t d = 0; d < dim; ++d) x[d] = centroid[d] + t * (simplex[dim].x[d] - centroid[d]);
        return x;
      };
      Vertex reflected = eval(along(-1.0));
      if (reflected.f < simplex[0].f) {
        if (remaining() <= 0) {
          simplex[dim] = reflected;
          return false;
        }
        Vertex expanded = eval(along(-2.0));
        simplex[dim] = expanded.f < reflected.f ? expanded : reflected;
        continue;
      }
      if (reflected.f < simplex[dim - 1].f) {
        simplex[dim] = reflected;
        continue;
      }
      if (remaining() <= 0) return false;
      const bool outside = reflected.f < simplex[dim].f;
      Vertex contracted = eval(along(outside ? -0.5 : 0.5));
      if (contracted.f < std::min(reflected.f, simplex[dim].f)) {
        simplex[dim] = contracted;
        continue;
      }
      for (std::size_t k = 1; k <= dim; ++k) {
        if (remaining() <= 0) return false;
        std::vector<double> x(dim);
        for (std::size_t d = 0; d < dim; ++d)
          x[d] = simplex[0].x[d] + 0.5 * (simplex[k].x[d] - simplex[0].x[d]);
        simplex[k] = eval(x);
      }
    }
  }

  void finalize() {
    if (best_feasible_) {
      const auto& e = result_.audit[*best_feasible_];
      result_.best_index = *best_feasible_;
      result_.best = e.point;
      result_.metric = e.metric;
      result_.g2_zero = e.g2_zero;
    }
  }

  Scenario scenario_;
  OptimizeOptions options_;
  OptimizeResult result_;
  std::optional<std::size_t> best_feasible_;
  double best_score_ = std::numeric_limits<double>::infinity();
};

}  // namespace detail

/// Coarse grid scan followed by bounded Nelder-Mead refinement from the best
/// feasible cell. Every evaluation lands in the audit trail; the returned
/// point is the best audited one, so refinement never makes things worse.
inline OptimizeResult optimize(const Scenario& scenario, const OptimizeOptions& options) {
  return detail::Optimizer(scenario, options).run();
}

}  // namespace antibunch
