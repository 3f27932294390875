#include <doctest.h>

#include <filesystem>

#include "opinion_nav/experiments.hpp"
#include "opinion_nav/scenario_io.hpp"

using namespace opinion_nav;

namespace {

const std::filesystem::path kScenarios = OPINION_NAV_SCENARIO_DIR;

std::string first_diagnostic(const std::string& text) {
  try {
    parse_scenario(text, "case.json");
  } catch (const ScenarioLoadError& e) {
    return e.diagnostics().front();
  }
  return "";
}

}  // namespace

TEST_CASE("minimal document takes the defaults") {
  const Scenario s = parse_scenario(R"({
    "robot": {"start": {"x": 0, "y": 0, "theta": 1.5707963267948966}, "goal": {"x": 0, "y": 6.1}}
  })");
  CHECK(s.dt == 0.01);
  CHECK(s.detection_range == 20);
  CHECK(s.fov_half_angle == doctest::Approx(kPi<double> / 3));
  CHECK(s.goal_tolerance == 0.2);
  CHECK(s.z_noise_std == 1e-3);
  CHECK(s.humans.empty());
  CHECK_FALSE(s.robot.params.uses_hill());
}

TEST_CASE("round trip through json") {
  Scenario s = head_on_scenario();
  s.seed = 42;
  s.robot.params.attention = HillAttentionLaw{0.1, 2.0, 6, 5};
  HumanSpec reactive;
  reactive.start = Pose{{1, 8}, -2.0};
  reactive.policy = ReactivePolicy{s.robot.params};
  HumanSpec external;
  external.start = Pose{{-1, 8}, -1.0};
  external.policy = ExternalPolicy{};
  HumanSpec bearing;
  bearing.start = Pose{{3, 8}, -1.0};
  bearing.policy = ScriptedPolicy{Prompt::BearRight, 0.3};
  s.humans.push_back(reactive);
  s.humans.push_back(external);
  s.humans.push_back(bearing);

  const nlohmann::json doc = to_json(s);
  const Scenario back = scenario_from_json(doc);
  CHECK(to_json(back) == doc);
  CHECK(back.humans.size() == 4);
  CHECK(std::holds_alternative<ExternalPolicy>(back.humans[2].policy));
  CHECK(std::get<ScriptedPolicy>(back.humans[3].policy).prompt == Prompt::BearRight);
  CHECK(back.seed == 42);
}

TEST_CASE("diagnostics carry source and line") {
  SUBCASE("syntax error") {
    const std::string msg = first_diagnostic("{\n  \"dt\": 0.01,\n  \"robot\": {\n}\n,,\n");
    CHECK(msg.rfind("case.json:5:", 0) == 0);
    CHECK(msg.find("syntax error") != std::string::npos);
  }
  SUBCASE("unknown field") {
    const std::string msg = first_diagnostic(R"({
  "robot": {
    "start": {"x": 0, "y": 0, "theta": 0},
    "goal": {"x": 1, "y": 0},
    "sped": 0.5
  }
})");
    CHECK(msg == "case.json:5: /robot/sped: unknown field");
  }
  SUBCASE("wrong type") {
    const std::string msg = first_diagnostic(R"({
  "robot": {"start": {"x": 0, "y": 0, "theta": 0}, "goal": {"x": 1, "y": 0}},
  "dt": "fast"
})");
    CHECK(msg == "case.json:3: /dt: expected a number");
  }
  SUBCASE("missing field points at the parent") {
    const std::string msg = first_diagnostic(R"({
  "robot": {
    "start": {"x": 0, "y": 0, "theta": 0}
  }
})");
    CHECK(msg == "case.json:2: /robot/goal: required field missing");
  }
  SUBCASE("invariant violation") {
    const std::string msg = first_diagnostic(R"({
  "robot": {"start": {"x": 0, "y": 0, "theta": 0}, "goal": {"x": 1, "y": 0},
            "params": {"d": -1}},
  "humans": [
    {"start": {"x": 4, "y": 0, "theta": 3.14}, "goal": {"x": -1, "y": 0},
     "policy": {"type": "scripted", "prompt": "sideways"}}
  ]
})");
    CHECK(msg == "case.json:6: /humans/0/policy/prompt: expected straight, bear_left or bear_right");
  }
  SUBCASE("every problem is reported") {
    try {
      parse_scenario(R"({"robot": {"start": {"x": 0, "y": 0, "theta": 0}, "goal": {"x": 1, "y": 0}},
                        "dt": 0, "max_time": -1})");
      FAIL("expected a load error");
    } catch (const ScenarioLoadError& e) {
      CHECK(e.diagnostics().size() == 2);
    }
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_scenario(kScenarios / "does_not_exist.json"), ScenarioLoadError);
  }
}

TEST_CASE("pointer locator") {
  const std::string text = "{\n \"a\": [1,\n  {\"b\": \"x\\\"y\"}],\n \"c\": {}\n}";
  CHECK(locate_json_pointer(text, "") == 1);
  CHECK(locate_json_pointer(text, "/a") == 2);
  CHECK(locate_json_pointer(text, "/a/1/b") == 3);
  CHECK(locate_json_pointer(text, "/c") == 4);
  CHECK(locate_json_pointer(text, "/c/missing") == 4);
}

TEST_CASE("bundled scenarios load and validate") {
  std::size_t count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(kScenarios)) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    const Scenario s = load_scenario(entry.path());
    CHECK(s.name == entry.path().stem().string());
    CHECK(s.violations().empty());
    ++count;
  }
  CHECK(count >= 5);
  CHECK(load_scenario(kScenarios / "interactive_headon.json").count_external() == 1);

  // The head-on file matches the built-in experiment base exactly.
  CHECK(to_json(load_scenario(kScenarios / "uu.json")) == to_json(head_on_scenario()));
}
