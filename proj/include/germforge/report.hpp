#pragma once

// Named pass/fail outcomes shared by the verification reports.

#include <string>
#include <vector>

#include <json.hpp>

namespace germforge {

inline constexpr int kSchemaVersion = 1;

struct CheckOutcome {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

inline CheckOutcome check_at_most(std::string name, double value, double tolerance) {
  return {std::move(name), value, tolerance, value <= tolerance};
}

inline CheckOutcome check_flag(std::string name, bool ok) { return {std::move(name), ok ? 0.0 : 1.0, 0.0, ok}; }

inline bool all_passed(const std::vector<CheckOutcome>& checks) {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

inline nlohmann::json to_json(const CheckOutcome& c) {
  return {{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"passed", c.passed}};
}

inline nlohmann::json to_json(const std::vector<CheckOutcome>& cs) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& c : cs) a.push_back(to_json(c));
  return a;
}

}  // namespace germforge
