#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "antibunch/scattering.hpp"
#include "antibunch/scenarios.hpp"
#include "antibunch/spectral.hpp"
#include "antibunch/sweep.hpp"
#include "antibunch/types.hpp"

namespace antibunch {

inline constexpr const char* kToolName = "antibunch";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kFileFormatVersion = 1;

class IoError : public Error {
 public:
  using Error::Error;
};

inline std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw IoError("SHA-256 digest failed");
  std::string hex;
  for (unsigned int k = 0; k < length; ++k) hex += fmt::format("{:02x}", digest[k]);
  return hex;
}

/// Identifies the producing tool and the exact configuration behind an output.
struct Provenance {
  std::string config_digest;
  nlohmann::json scenario;

  nlohmann::json to_json() const {
    return {{"tool", kToolName},
            {"version", kToolVersion},
            {"config_sha256", config_digest},
            {"scenario", scenario}};
  }
};

/// Column-oriented table written either as CSV (with '#' provenance header
/// lines) or as a JSON document with the same columns.
struct Table {
  using Cell = std::variant<double, long long, std::string>;
  std::string format;  // e.g. "spectrum"
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

namespace detail {

inline std::string csv_cell(const Table::Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) return fmt::format("{:.17g}", *d);
  if (const auto* i = std::get_if<long long>(&cell)) return fmt::format("{}", *i);
  const auto& s = std::get<std::string>(cell);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
  return quoted + "\"";
}

inline nlohmann::json json_cell(const Table::Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) return *d;
  if (const auto* i = std::get_if<long long>(&cell)) return *i;
  return std::get<std::string>(cell);
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  return out;
}

}  // namespace detail

inline void write_csv(const std::filesystem::path& path, const Table& table,
                      const Provenance& provenance) {
  auto out = detail::open_output(path);
  out << fmt::format("# {} {}\n", kToolName, kToolVersion);
  out << fmt::format("# format: {} v{}\n", table.format, kFileFormatVersion);
  out << fmt::format("# config_sha256: {}\n", provenance.config_digest);
  out << fmt::format("# scenario: {}\n", provenance.scenario.dump());
  for (std::size_t c = 0; c < table.columns.size(); ++c)
    out << (c ? "," : "") << table.columns[c];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << detail::csv_cell(row[c]);
    out << '\n';
  }
}

inline nlohmann::json table_to_json(const Table& table, const Provenance& provenance) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& cell : row) r.push_back(detail::json_cell(cell));
    rows.push_back(std::move(r));
  }
  return {{"format", table.format},
          {"format_version", kFileFormatVersion},
          {"columns", table.columns},
          {"rows", rows},
          {"provenance", provenance.to_json()}};
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  auto out = detail::open_output(path);
  out << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Tables for each artifact

/// index, Re E, Im E, decay rate -2 Im E, |C|, arg C (radians).
inline Table spectrum_table(const SpectralData& spec, const CVector& constants) {
  Table t{"spectrum", {"index", "re_e", "im_e", "decay_rate", "abs_c", "arg_c"}, {}};
  for (Eigen::Index nu = 0; nu < spec.size(); ++nu)
    t.rows.push_back({static_cast<long long>(nu), spec.eigenvalues(nu).real(),
                      spec.eigenvalues(nu).imag(), spec.decay_rate(nu), std::abs(constants(nu)),
                      std::arg(constants(nu))});
  return t;
}

inline Table constants_table(const CorrelationTrace& trace) {
  Table t{"constants", {"state", "re_e", "im_e", "abs_c", "arg_c"}, {}};
  for (Eigen::Index nu = 0; nu < trace.constants.size(); ++nu) {
    const Complex e = trace.exponents(nu) + trace.detuning;
    t.rows.push_back({static_cast<long long>(nu), e.real(), e.imag(),
                      std::abs(trace.constants(nu)), std::arg(trace.constants(nu))});
  }
  return t;
}

/// tau, g2, then Re/Im of each C^(nu) exp(-i (E_nu - omega) tau).
inline Table trace_table(const CorrelationTrace& trace) {
  Table t{"trace", {"tau", "g2"}, {}};
  for (Eigen::Index nu = 0; nu < trace.constants.size(); ++nu) {
    t.columns.push_back(fmt::format("re_c{}", nu));
    t.columns.push_back(fmt::format("im_c{}", nu));
  }
  for (std::size_t k = 0; k < trace.tau.size(); ++k) {
    std::vector<Table::Cell> row = {trace.tau[k], trace.g2[k]};
    for (Eigen::Index nu = 0; nu < trace.constants.size(); ++nu) {
      const Complex c = trace.contribution(nu, trace.tau[k]);
      row.emplace_back(c.real());
      row.emplace_back(c.imag());
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Long format: axis1, axis2, value, flag (no axis2 column for 1-D maps).
inline Table map_table(const SweepResult& map) {
  Table t{"map", {}, {}};
  for (const auto& a : map.axes) t.columns.push_back(a.name);
  t.columns.insert(t.columns.end(), {"value", "flag"});
  for (std::size_t i = 0; i < map.rows(); ++i)
    for (std::size_t j = 0; j < map.cols(); ++j) {
      std::vector<Table::Cell> row = {map.axes[0].values[i]};
      if (map.axes.size() > 1) row.emplace_back(map.axes[1].values[j]);
      row.emplace_back(map.value(i, j));
      row.emplace_back(std::string(to_string(map.flag(i, j))));
      t.rows.push_back(std::move(row));
    }
  return t;
}

inline nlohmann::json map_sidecar(const SweepResult& map, const Provenance& provenance) {
  nlohmann::json axes = nlohmann::json::array();
  for (const auto& a : map.axes)
    axes.push_back({{"name", a.name},
                    {"count", a.values.size()},
                    {"start", a.values.front()},
                    {"stop", a.values.back()}});
  nlohmann::json flagged = nlohmann::json::array();
  for (std::size_t i = 0; i < map.rows(); ++i)
    for (std::size_t j = 0; j < map.cols(); ++j)
      if (map.flag(i, j) != CellFlag::ok)
        flagged.push_back({{"i", i}, {"j", j}, {"flag", to_string(map.flag(i, j))}});
  nlohmann::json doc = {{"format", "map-sidecar"},
                        {"format_version", kFileFormatVersion},
                        {"quantity", map.quantity},
                        {"axes", axes},
                        {"flagged_cells", flagged},
                        {"provenance", provenance.to_json()}};
  if (auto best = map.argmin()) {
    nlohmann::json at = {{map.axes[0].name, map.axes[0].values[best->first]},
                         {"value", map.value(best->first, best->second)}};
    if (map.axes.size() > 1) at[map.axes[1].name] = map.axes[1].values[best->second];
    doc["argmin"] = at;
  }
  return doc;
}

inline Table audit_table(const OptimizeResult& result, const std::vector<Bound>& bounds) {
  Table t{"audit", {"evaluation", "stage"}, {}};
  for (const auto& b : bounds) t.columns.push_back(b.name);
  for (const char* c : {"metric", "g2_zero", "feasible", "note"}) t.columns.emplace_back(c);
  for (std::size_t k = 0; k < result.audit.size(); ++k) {
    const auto& e = result.audit[k];
    std::vector<Table::Cell> row = {static_cast<long long>(k), e.stage};
    for (const auto& b : bounds) row.emplace_back(e.point.at(b.name));
    row.emplace_back(e.metric);
    row.emplace_back(e.g2_zero);
    row.emplace_back(static_cast<long long>(e.feasible));
    row.emplace_back(e.note);
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline nlohmann::json best_point_json(const OptimizeResult& result, Objective objective,
                                      const Provenance& provenance) {
  nlohmann::json doc = {{"format", "optimize-best"},
                        {"format_version", kFileFormatVersion},
                        {"status", to_string(result.status)},
                        {"objective", to_string(objective)},
                        {"evaluations", result.audit.size()},
                        {"provenance", provenance.to_json()}};
  if (result.status != OptimizeStatus::infeasible) {
    doc["best"] = result.best;
    doc["metric"] = result.metric;
    doc["g2_zero"] = result.g2_zero;
    doc["best_evaluation"] = result.best_index;
  }
  return doc;
}

}  // namespace antibunch
