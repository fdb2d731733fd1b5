#include <gtest/gtest.h>

#include "antibunch/scenarios.hpp"

using namespace antibunch;

TEST(Scenarios, SquareGeometry) {
  const auto m = square_array(0.2, 0.3).build();
  const auto& array = std::get<AtomArray>(m.environment);
  ASSERT_EQ(array.size(), 4u);
  EXPECT_TRUE(array.positions[0].isApprox(Vec3(-0.1, -0.1, 0.0)));
  EXPECT_TRUE(array.positions[2].isApprox(Vec3(0.1, 0.1, 0.0)));
  for (const auto& d : array.dipoles) EXPECT_TRUE(d.isApprox(CVec3(std::cos(0.3), std::sin(0.3), 0)));
  const auto& in = std::get<FreeSpaceMode>(m.setup.incident);
  const auto& out = std::get<FreeSpaceMode>(m.setup.detected);
  EXPECT_EQ(in.direction, Vec3::UnitZ());
  EXPECT_EQ(out.direction, -Vec3::UnitZ());
  EXPECT_EQ(m.hamiltonian.size(), 4);
}

TEST(Scenarios, ChainRates) {
  const auto m = chiral_chain(5, 0.22, 0.25, 0.1).build();
  const auto& p = std::get<WaveguideParams>(m.environment);
  EXPECT_DOUBLE_EQ(p.gamma_wg(), 1.0);
  EXPECT_DOUBLE_EQ(p.asymmetry(), 0.25);
  EXPECT_DOUBLE_EQ(p.z_positions[4], 0.88);
  EXPECT_DOUBLE_EQ(m.hamiltonian.total_onsite_decay, 1.1);
  EXPECT_EQ(std::get<GuidedDirection>(m.setup.incident), GuidedDirection::forward);
  EXPECT_EQ(std::get<GuidedDirection>(m.setup.detected), GuidedDirection::backward);
}

TEST(Scenarios, ParameterBounds) {
  EXPECT_THROW(square_array(0.1, kPi), ValidationError);
  EXPECT_NO_THROW(square_array(0.1, 0.0));
  EXPECT_THROW(square_array(0.0, 0.5), ValidationError);
  EXPECT_THROW(chiral_chain(0, 0.2, 0.1, 0.1), ValidationError);
  EXPECT_THROW(chiral_chain(3, 0.2, 1.5, 0.1), ValidationError);
  EXPECT_THROW(chiral_chain(3, 0.2, 0.5, -0.1), ValidationError);
  EXPECT_THROW(single_atom(std::nan("")), ValidationError);
  EXPECT_THROW(chiral_chain(3, 0.2, 0.1, 0.1).with("n_atoms", 2.5), ValidationError);
  EXPECT_THROW(Scenario(ScenarioKind::single_atom, {}), ValidationError);
  EXPECT_THROW(Scenario(ScenarioKind::single_atom, {{"detuning", 0.0}, {"a", 1.0}}),
               ValidationError);
}

TEST(Scenarios, SchemaAndOverrides) {
  const auto s = square_array(0.1, 0.25 * kPi, 3.9);
  EXPECT_EQ(s.parameter_schema().size(), 3u);
  EXPECT_TRUE(s.spec_for("theta").upper_open);
  EXPECT_THROW(s.spec_for("xi"), ValidationError);
  EXPECT_THROW(s.parameter("xi"), ValidationError);
  const auto t = s.with("detuning", -1.0);
  EXPECT_DOUBLE_EQ(t.detuning(), -1.0);
  EXPECT_DOUBLE_EQ(s.detuning(), 3.9);
  EXPECT_THROW(s.with("xi", 0.1), ValidationError);
  EXPECT_FALSE(s == t);
  EXPECT_TRUE(s == s.with("detuning", 3.9));
}

TEST(Scenarios, KindNames) {
  for (auto kind : {ScenarioKind::square_array, ScenarioKind::chiral_chain, ScenarioKind::single_atom})
    EXPECT_EQ(scenario_kind_from_string(to_string(kind)), kind);
  EXPECT_THROW(scenario_kind_from_string("hexagon"), ValidationError);
}

TEST(Scenarios, JsonRoundTrip) {
  const auto s = chiral_chain(4, 0.3, 0.01, 0.05, 0.2);
  const auto doc = to_json(s);
  EXPECT_EQ(doc["schema_version"], 1);
  EXPECT_EQ(doc["kind"], "chiral_chain");
  EXPECT_TRUE(scenario_from_json(doc) == s);
  EXPECT_TRUE(scenario_from_json(nlohmann::json::parse(doc.dump())) == s);
}

TEST(Scenarios, JsonRejections) {
  auto doc = to_json(single_atom(0.1));
  auto extra = doc;
  extra["comment"] = "x";
  EXPECT_THROW(scenario_from_json(extra), ValidationError);
  auto version = doc;
  version["schema_version"] = 2;
  EXPECT_THROW(scenario_from_json(version), ValidationError);
  auto kind = doc;
  kind.erase("kind");
  EXPECT_THROW(scenario_from_json(kind), ValidationError);
  auto text = doc;
  text["parameters"]["detuning"] = "0.1";
  EXPECT_THROW(scenario_from_json(text), ValidationError);
  EXPECT_THROW(scenario_from_json(nlohmann::json::array()), ValidationError);
}
