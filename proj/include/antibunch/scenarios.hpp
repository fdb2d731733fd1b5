#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "antibunch/environment.hpp"
#include "antibunch/scattering.hpp"
#include "antibunch/types.hpp"

namespace antibunch {

enum class ScenarioKind { square_array, chiral_chain, single_atom };

inline const char* to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::square_array: return "square_array";
    case ScenarioKind::chiral_chain: return "chiral_chain";
    case ScenarioKind::single_atom: return "single_atom";
  }
  return "unknown";
}

inline ScenarioKind scenario_kind_from_string(const std::string& name) {
  if (name == "square_array") return ScenarioKind::square_array;
  if (name == "chiral_chain") return ScenarioKind::chiral_chain;
  if (name == "single_atom") return ScenarioKind::single_atom;
  throw ValidationError(fmt::format("unknown scenario kind '{}'", name));
}

/// A sweepable parameter: closed interval [lower, upper], or half-open when
/// `upper_open` is set (polarization angles live in [0, pi)).
struct ParameterSpec {
  std::string name;
  double lower;
  double upper;
  bool upper_open = false;
  bool integer = false;

  bool contains(double v) const {
    if (!std::isfinite(v) || v < lower) return false;
    if (upper_open ? v >= upper : v > upper) return false;
    return !integer || v == std::round(v);
  }
};

/// Everything downstream modules need for one parameter point.
struct Model {
  std::variant<AtomArray, WaveguideParams> environment;
  EffectiveHamiltonian hamiltonian;
  ScatteringSetup setup;
  Couplings couplings;
};

/// Named preset plus its parameter values. The detuning of the twin
/// photons (from omega0, in rate units) is one of the parameters.
class Scenario {
 public:
  Scenario(ScenarioKind kind, std::map<std::string, double> parameters)
      : kind_(kind), parameters_(std::move(parameters)) {
    validate();
  }

  ScenarioKind kind() const { return kind_; }
  std::string name() const { return to_string(kind_); }
  const std::map<std::string, double>& parameters() const { return parameters_; }
  double detuning() const { return parameters_.at("detuning"); }

  double parameter(const std::string& key) const {
    auto it = parameters_.find(key);
    if (it == parameters_.end())
      throw ValidationError(fmt::format("scenario {} has no parameter '{}'", name(), key));
    return it->second;
  }

  static std::vector<ParameterSpec> schema(ScenarioKind kind) {
    const ParameterSpec detuning{"detuning", -1e3, 1e3};
    switch (kind) {
      case ScenarioKind::square_array:
        return {{"a", 1e-6, 10.0}, {"theta", 0.0, kPi, true}, detuning};
      case ScenarioKind::chiral_chain:
        return {{"n_atoms", 1.0, 64.0, false, true},
                {"a", 1e-6, 10.0},
                {"xi", 0.0, 1.0},
                {"gamma_r", 0.0, 100.0},
                detuning};
      case ScenarioKind::single_atom:
        return {detuning};
    }
    return {};
  }

  std::vector<ParameterSpec> parameter_schema() const { return schema(kind_); }

  ParameterSpec spec_for(const std::string& key) const {
    const auto schema = parameter_schema();
    auto it = std::find_if(schema.begin(), schema.end(),
                           [&](const ParameterSpec& p) { return p.name == key; });
    if (it == schema.end())
      throw ValidationError(fmt::format("scenario {} has no parameter '{}'", name(), key));
    return *it;
  }

  Scenario with(const std::string& key, double value) const {
    auto params = parameters_;
    if (!params.count(key))
      throw ValidationError(fmt::format("scenario {} has no parameter '{}'", name(), key));
    params[key] = value;
    return Scenario(kind_, std::move(params));
  }

  Model build() const;

  friend bool operator==(const Scenario& a, const Scenario& b) {
    return a.kind_ == b.kind_ && a.parameters_ == b.parameters_;
  }

 private:
  void validate() const {
    const auto schema = parameter_schema();
    for (const auto& [key, value] : parameters_) {
      if (std::none_of(schema.begin(), schema.end(),
                       [&](const ParameterSpec& p) { return p.name == key; }))
        throw ValidationError(fmt::format("scenario {} has no parameter '{}'", name(), key));
    }
    for (const auto& p : schema) {
      auto it = parameters_.find(p.name);
      if (it == parameters_.end())
        throw ValidationError(fmt::format("scenario {} is missing parameter '{}'", name(), p.name));
      if (!p.contains(it->second))
        throw ValidationError(fmt::format("parameter '{}' = {} outside [{}, {}{}", p.name,
                                          it->second, p.lower, p.upper, p.upper_open ? ")" : "]"));
    }
  }

  ScenarioKind kind_;
  std::map<std::string, double> parameters_;
};

/// Four atoms on a square of side `a` (units of lambda_0) in the xy-plane,
/// centered at the origin with edges along x and y. In-plane dipoles at angle
/// `theta` from x. Photons arrive along +z polarized along the dipoles and
/// are detected backscattered along -z with the same polarization.
inline Scenario square_array(double a, double theta, double detuning = 0.0) {
  return Scenario(ScenarioKind::square_array, {{"a", a}, {"theta", theta}, {"detuning", detuning}});
}

/// Equally spaced chain with spacing `a` (units of lambda_wg) and Gamma_wg = 1:
/// Gamma_f = 1/(1+xi), Gamma_b = xi/(1+xi). Forward incidence, backward detection.
inline Scenario chiral_chain(int n_atoms, double a, double xi, double gamma_r,
                             double detuning = 0.0) {
  return Scenario(ScenarioKind::chiral_chain, {{"n_atoms", static_cast<double>(n_atoms)},
                                               {"a", a},
                                               {"xi", xi},
                                               {"gamma_r", gamma_r},
                                               {"detuning", detuning}});
}

/// One atom in free space with Gamma = 1, backscattering geometry.
inline Scenario single_atom(double detuning = 0.0) {
  return Scenario(ScenarioKind::single_atom, {{"detuning", detuning}});
}

inline Model Scenario::build() const {
  Model model;
  switch (kind_) {
    case ScenarioKind::square_array:
    case ScenarioKind::single_atom: {
      AtomArray array;
      array.gamma0 = 1.0;
      FreeSpaceMode incident;
      incident.direction = Vec3::UnitZ();
      if (kind_ == ScenarioKind::square_array) {
        const double a = parameter("a");
        const double theta = parameter("theta");
        const CVec3 dipole(std::cos(theta), std::sin(theta), 0.0);
        for (const auto& [sx, sy] : {std::pair{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}) {
          array.positions.emplace_back(0.5 * a * sx, 0.5 * a * sy, 0.0);
          array.dipoles.push_back(dipole);
        }
        incident.polarization = dipole;
      } else {
        array.positions.emplace_back(0.0, 0.0, 0.0);
        array.dipoles.emplace_back(1.0, 0.0, 0.0);
        incident.polarization = CVec3(1.0, 0.0, 0.0);
      }
      FreeSpaceMode detected = incident;
      detected.direction = -Vec3::UnitZ();
      model.setup = {incident, detected};
      model.hamiltonian = build_heff_free_space(array);
      model.couplings = {coupling_free_space(array, incident), coupling_free_space(array, detected)};
      model.environment = std::move(array);
      break;
    }
    case ScenarioKind::chiral_chain: {
      const int n = static_cast<int>(parameter("n_atoms"));
      const double a = parameter("a");
      const double xi = parameter("xi");
      WaveguideParams params;
      params.gamma_f = 1.0 / (1.0 + xi);
      params.gamma_b = xi / (1.0 + xi);
      params.gamma_r = parameter("gamma_r");
      params.kz = 2.0 * kPi;
      for (int i = 0; i < n; ++i) params.z_positions.push_back(a * i);
      model.setup = {GuidedDirection::forward, GuidedDirection::backward};
      model.hamiltonian = build_heff_waveguide(params);
      model.couplings = {coupling_waveguide(params, GuidedDirection::forward),
                         coupling_waveguide(params, GuidedDirection::backward)};
      model.environment = std::move(params);
      break;
    }
  }
  model.setup.validate();
  return model;
}

// Scenario documents: {"schema_version": 1, "kind": ..., "parameters": {...}}.
inline constexpr int kScenarioSchemaVersion = 1;

inline nlohmann::json to_json(const Scenario& scenario) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [key, value] : scenario.parameters()) params[key] = value;
  return {{"schema_version", kScenarioSchemaVersion},
          {"kind", scenario.name()},
          {"parameters", params}};
}

inline Scenario scenario_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ValidationError("scenario: expected an object");
  for (const auto& [key, _] : doc.items())
    if (key != "schema_version" && key != "kind" && key != "parameters")
      throw ValidationError(fmt::format("scenario: unknown key '{}'", key));
  if (!doc.contains("schema_version") || doc["schema_version"] != kScenarioSchemaVersion)
    throw ValidationError(
        fmt::format("scenario.schema_version: expected {}", kScenarioSchemaVersion));
  if (!doc.contains("kind") || !doc["kind"].is_string())
    throw ValidationError("scenario.kind: missing or not a string");
  const auto kind = scenario_kind_from_string(doc["kind"].get<std::string>());
  std::map<std::string, double> params;
  if (doc.contains("parameters")) {
    if (!doc["parameters"].is_object())
      throw ValidationError("scenario.parameters: expected an object");
    for (const auto& [key, value] : doc["parameters"].items()) {
      if (!value.is_number())
        throw ValidationError(fmt::format("scenario.parameters.{}: expected a number", key));
      params[key] = value.get<double>();
    }
  }
  return Scenario(kind, std::move(params));
}

}  // namespace antibunch
