#include "opinion_nav/scenario_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace opinion_nav {

using nlohmann::json;

namespace {

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += (out.empty() ? "" : "\n") + l;
  return out;
}

// Collects type problems while reading optional/required fields.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& problems) : problems_(problems) {}

  void allowed(const json& obj, const std::string& ptr, std::initializer_list<const char*> keys) {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& item : obj.items()) {
      if (!ok.count(item.key())) problems_.push_back(ptr + "/" + item.key() + ": unknown field");
    }
  }

  bool object(const json& parent, const char* key, const std::string& ptr, bool required) {
    if (!parent.contains(key)) {
      if (required) problems_.push_back(ptr + "/" + key + ": required field missing");
      return false;
    }
    if (!parent.at(key).is_object()) {
      problems_.push_back(ptr + "/" + key + ": expected an object");
      return false;
    }
    return true;
  }

  double number(const json& obj, const char* key, const std::string& ptr, double fallback, bool required = false) {
    if (!obj.contains(key)) {
      if (required) problems_.push_back(ptr + "/" + key + ": required field missing");
      return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
      problems_.push_back(ptr + "/" + key + ": expected a number");
      return fallback;
    }
    return v.get<double>();
  }

  std::string text(const json& obj, const char* key, const std::string& ptr, const std::string& fallback,
                   bool required = false) {
    if (!obj.contains(key)) {
      if (required) problems_.push_back(ptr + "/" + key + ": required field missing");
      return fallback;
    }
    if (!obj.at(key).is_string()) {
      problems_.push_back(ptr + "/" + key + ": expected a string");
      return fallback;
    }
    return obj.at(key).get<std::string>();
  }

  bool boolean(const json& obj, const char* key, const std::string& ptr, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_boolean()) {
      problems_.push_back(ptr + "/" + key + ": expected true or false");
      return fallback;
    }
    return obj.at(key).get<bool>();
  }

  std::uint64_t unsigned_integer(const json& obj, const char* key, const std::string& ptr, std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_number_unsigned()) {
      problems_.push_back(ptr + "/" + key + ": expected a non-negative integer");
      return fallback;
    }
    return obj.at(key).get<std::uint64_t>();
  }

  void fail(const std::string& message) { problems_.push_back(message); }

 private:
  std::vector<std::string>& problems_;
};

Eigen::Vector2d read_point(Reader& r, const json& parent, const char* key, const std::string& ptr,
                           const Eigen::Vector2d& fallback, bool required) {
  if (!r.object(parent, key, ptr, required)) return fallback;
  const json& p = parent.at(key);
  const std::string here = ptr + "/" + key;
  r.allowed(p, here, {"x", "y"});
  return {r.number(p, "x", here, fallback.x(), true), r.number(p, "y", here, fallback.y(), true)};
}

Pose read_pose(Reader& r, const json& parent, const char* key, const std::string& ptr, const Pose& fallback,
               bool required) {
  if (!r.object(parent, key, ptr, required)) return fallback;
  const json& p = parent.at(key);
  const std::string here = ptr + "/" + key;
  r.allowed(p, here, {"x", "y", "theta"});
  return {{r.number(p, "x", here, fallback.position.x(), true), r.number(p, "y", here, fallback.position.y(), true)},
          r.number(p, "theta", here, fallback.heading, true)};
}

OpinionParams read_params(Reader& r, const json& p, const std::string& here) {
  OpinionParams out;
  r.allowed(p, here, {"d", "alpha", "gamma", "b", "beta", "k", "proxy_cap", "attention"});
  out.d = r.number(p, "d", here, out.d);
  out.alpha = r.number(p, "alpha", here, out.alpha);
  out.gamma = r.number(p, "gamma", here, out.gamma);
  out.b = r.number(p, "b", here, out.b);
  out.beta = r.number(p, "beta", here, out.beta);
  out.k = r.number(p, "k", here, out.k);
  out.proxy_cap = r.number(p, "proxy_cap", here, out.proxy_cap);
  if (r.object(p, "attention", here, false)) {
    const json& a = p.at("attention");
    const std::string ah = here + "/attention";
    const std::string law = r.text(a, "law", ah, "ode", true);
    if (law == "hill") {
      r.allowed(a, ah, {"law", "u_lo", "u_hi", "R", "n"});
      HillAttentionLaw hill;
      hill.u_lo = r.number(a, "u_lo", ah, hill.u_lo);
      hill.u_hi = r.number(a, "u_hi", ah, hill.u_hi);
      hill.R = r.number(a, "R", ah, hill.R);
      hill.n = r.number(a, "n", ah, hill.n);
      out.attention = hill;
    } else if (law == "ode") {
      r.allowed(a, ah, {"law", "tau_u", "m", "c", "R"});
      OdeAttentionLaw ode;
      ode.tau_u = r.number(a, "tau_u", ah, ode.tau_u);
      ode.m = r.number(a, "m", ah, ode.m);
      ode.c = r.number(a, "c", ah, ode.c);
      ode.R = r.number(a, "R", ah, ode.R);
      out.attention = ode;
    } else {
      r.fail(ah + "/law: expected \"hill\" or \"ode\"");
    }
  }
  return out;
}

HumanPolicy read_policy(Reader& r, const json& parent, const std::string& ptr) {
  if (!r.object(parent, "policy", ptr, false)) return ScriptedPolicy{};
  const json& p = parent.at("policy");
  const std::string here = ptr + "/policy";
  const std::string type = r.text(p, "type", here, "scripted", true);
  if (type == "scripted") {
    r.allowed(p, here, {"type", "prompt", "bear_offset"});
    ScriptedPolicy scripted;
    const std::string prompt = r.text(p, "prompt", here, "straight");
    if (auto parsed = prompt_from_string(prompt)) {
      scripted.prompt = *parsed;
    } else {
      r.fail(here + "/prompt: expected straight, bear_left or bear_right");
    }
    scripted.bear_offset = r.number(p, "bear_offset", here, scripted.bear_offset);
    return scripted;
  }
  if (type == "reactive") {
    r.allowed(p, here, {"type", "params"});
    ReactivePolicy reactive;
    if (r.object(p, "params", here, false)) reactive.params = read_params(r, p.at("params"), here + "/params");
    return reactive;
  }
  if (type == "external") {
    r.allowed(p, here, {"type"});
    return ExternalPolicy{};
  }
  r.fail(here + "/type: expected scripted, reactive or external");
  return ScriptedPolicy{};
}

json point_json(const Eigen::Vector2d& p) { return {{"x", p.x()}, {"y", p.y()}}; }
json pose_json(const Pose& p) { return {{"x", p.position.x()}, {"y", p.position.y()}, {"theta", p.heading}}; }

// Byte offsets of every value in a syntactically valid JSON text, keyed by pointer.
class PointerScanner {
 public:
  PointerScanner(const std::string& text, std::map<std::string, std::size_t>& out) : t_(text), out_(out) {}

  void run() {
    skip_ws();
    value("");
  }

 private:
  void skip_ws() {
    while (i_ < t_.size() && std::isspace(static_cast<unsigned char>(t_[i_]))) ++i_;
  }

  std::string string_token() {
    std::string s;
    ++i_;  // opening quote
    while (i_ < t_.size() && t_[i_] != '"') {
      if (t_[i_] == '\\' && i_ + 1 < t_.size()) {
        s += t_[i_ + 1];
        i_ += 2;
        continue;
      }
      s += t_[i_++];
    }
    ++i_;
    return s;
  }

  void value(const std::string& ptr) {
    out_[ptr] = i_;
    if (i_ >= t_.size()) return;
    const char c = t_[i_];
    if (c == '{') {
      ++i_;
      skip_ws();
      while (i_ < t_.size() && t_[i_] != '}') {
        const std::string key = string_token();
        skip_ws();
        ++i_;  // colon
        skip_ws();
        value(ptr + "/" + key);
        skip_ws();
        if (i_ < t_.size() && t_[i_] == ',') ++i_;
        skip_ws();
      }
      ++i_;
    } else if (c == '[') {
      ++i_;
      skip_ws();
      std::size_t index = 0;
      while (i_ < t_.size() && t_[i_] != ']') {
        value(ptr + "/" + std::to_string(index++));
        skip_ws();
        if (i_ < t_.size() && t_[i_] == ',') ++i_;
        skip_ws();
      }
      ++i_;
    } else if (c == '"') {
      string_token();
    } else {
      while (i_ < t_.size() && t_[i_] != ',' && t_[i_] != '}' && t_[i_] != ']' &&
             !std::isspace(static_cast<unsigned char>(t_[i_]))) {
        ++i_;
      }
    }
  }

  const std::string& t_;
  std::map<std::string, std::size_t>& out_;
  std::size_t i_ = 0;
};

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

}  // namespace

ScenarioLoadError::ScenarioLoadError(std::vector<std::string> diagnostics)
    : std::runtime_error(join_lines(diagnostics)), diagnostics_(std::move(diagnostics)) {}

json to_json(const OpinionParams& params) {
  json attention;
  if (const auto* hill = std::get_if<HillAttentionLaw>(&params.attention)) {
    attention = {{"law", "hill"}, {"u_lo", hill->u_lo}, {"u_hi", hill->u_hi}, {"R", hill->R}, {"n", hill->n}};
  } else {
    const auto& ode = std::get<OdeAttentionLaw>(params.attention);
    attention = {{"law", "ode"}, {"tau_u", ode.tau_u}, {"m", ode.m}, {"c", ode.c}, {"R", ode.R}};
  }
  return {{"d", params.d},       {"alpha", params.alpha}, {"gamma", params.gamma},         {"b", params.b},
          {"beta", params.beta}, {"k", params.k},         {"proxy_cap", params.proxy_cap}, {"attention", attention}};
}

json to_json(const Scenario& s) {
  json humans = json::array();
  for (const HumanSpec& h : s.humans) {
    json policy;
    if (const auto* scripted = std::get_if<ScriptedPolicy>(&h.policy)) {
      policy = {{"type", "scripted"}, {"prompt", to_string(scripted->prompt)}, {"bear_offset", scripted->bear_offset}};
    } else if (const auto* reactive = std::get_if<ReactivePolicy>(&h.policy)) {
      policy = {{"type", "reactive"}, {"params", to_json(reactive->params)}};
    } else {
      policy = {{"type", "external"}};
    }
    humans.push_back(
        {{"start", pose_json(h.start)}, {"goal", point_json(h.goal)}, {"speed", h.speed}, {"policy", policy}});
  }
  return {{"name", s.name},
          {"robot",
           {{"start", pose_json(s.robot.start)},
            {"goal", point_json(s.robot.goal)},
            {"speed", s.robot.speed},
            {"params", to_json(s.robot.params)}}},
          {"humans", humans},
          {"dt", s.dt},
          {"max_time", s.max_time},
          {"seed", s.seed},
          {"z_noise_std", s.z_noise_std},
          {"mirror_noise", s.mirror_noise},
          {"detection_range", s.detection_range},
          {"fov_half_angle", s.fov_half_angle},
          {"goal_tolerance", s.goal_tolerance},
          {"collision_radius", s.collision_radius},
          {"lane_width", s.lane_width}};
}

Scenario scenario_from_json(const json& doc) {
  std::vector<std::string> problems;
  Reader r(problems);
  Scenario s;
  if (!doc.is_object()) throw ValidationError({": scenario document must be a JSON object"});

  r.allowed(doc, "", {"name", "robot", "humans", "dt", "max_time", "seed", "z_noise_std", "mirror_noise",
                      "detection_range", "fov_half_angle", "goal_tolerance", "collision_radius", "lane_width"});
  s.name = r.text(doc, "name", "", s.name);
  if (r.object(doc, "robot", "", true)) {
    const json& robot = doc.at("robot");
    r.allowed(robot, "/robot", {"start", "goal", "speed", "params"});
    s.robot.start = read_pose(r, robot, "start", "/robot", s.robot.start, true);
    s.robot.goal = read_point(r, robot, "goal", "/robot", s.robot.goal, true);
    s.robot.speed = r.number(robot, "speed", "/robot", s.robot.speed);
    if (r.object(robot, "params", "/robot", false)) s.robot.params = read_params(r, robot.at("params"), "/robot/params");
  }
  if (doc.contains("humans")) {
    if (!doc.at("humans").is_array()) {
      r.fail("/humans: expected an array");
    } else {
      const json& humans = doc.at("humans");
      for (std::size_t j = 0; j < humans.size(); ++j) {
        const std::string here = "/humans/" + std::to_string(j);
        if (!humans[j].is_object()) {
          r.fail(here + ": expected an object");
          continue;
        }
        const json& h = humans[j];
        r.allowed(h, here, {"start", "goal", "speed", "policy"});
        HumanSpec spec;
        spec.start = read_pose(r, h, "start", here, spec.start, true);
        spec.goal = read_point(r, h, "goal", here, spec.goal, true);
        spec.speed = r.number(h, "speed", here, spec.speed);
        spec.policy = read_policy(r, h, here);
        s.humans.push_back(spec);
      }
    }
  }
  s.dt = r.number(doc, "dt", "", s.dt);
  s.max_time = r.number(doc, "max_time", "", s.max_time);
  s.seed = r.unsigned_integer(doc, "seed", "", s.seed);
  s.z_noise_std = r.number(doc, "z_noise_std", "", s.z_noise_std);
  s.mirror_noise = r.boolean(doc, "mirror_noise", "", s.mirror_noise);
  s.detection_range = r.number(doc, "detection_range", "", s.detection_range);
  s.fov_half_angle = r.number(doc, "fov_half_angle", "", s.fov_half_angle);
  s.goal_tolerance = r.number(doc, "goal_tolerance", "", s.goal_tolerance);
  s.collision_radius = r.number(doc, "collision_radius", "", s.collision_radius);
  s.lane_width = r.number(doc, "lane_width", "", s.lane_width);

  if (problems.empty()) problems = s.violations();
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return s;
}

std::size_t locate_json_pointer(const std::string& text, const std::string& pointer) {
  std::map<std::string, std::size_t> offsets;
  PointerScanner(text, offsets).run();
  // Walk up the pointer until an existing prefix is found (missing fields
  // report the line of their parent object).
  std::string p = pointer;
  while (true) {
    if (auto it = offsets.find(p); it != offsets.end()) return line_of_offset(text, it->second);
    if (p.empty()) return 0;
    p.erase(p.rfind('/'));
  }
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t line = line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ScenarioLoadError({source + ":" + std::to_string(line) + ": syntax error: " + e.what()});
  }
  try {
    return scenario_from_json(doc);
  } catch (const ValidationError& e) {
    std::vector<std::string> diagnostics;
    for (const std::string& problem : e.problems()) {
      const std::string pointer = problem.substr(0, problem.find(':'));
      diagnostics.push_back(source + ":" + std::to_string(locate_json_pointer(text, pointer)) + ": " + problem);
    }
    throw ScenarioLoadError(std::move(diagnostics));
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioLoadError({path.string() + ":0: cannot open file"});
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), path.string());
}

}  // namespace opinion_nav
