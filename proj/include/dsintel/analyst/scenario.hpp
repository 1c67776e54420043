#pragma once

// Synthetic multi-target scenarios: each target owns a disjoint set of frame
// elements and moves on a bounded random walk under the speed limit.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "dsintel/ds_core.hpp"
#include <nlohmann/json.hpp>

namespace dsintel::analyst {

struct Kinematics {
  double area_km = 100.0;
  double speed_limit_kmh = 25.0;
  double time_span_s = 36000.0;
};

struct ScenarioConfig {
  std::uint64_t seed = 7;
  std::size_t targets = 3;
  std::size_t reports_per_target = 4;
  std::size_t frame_size = 6;
  double contradiction = 0.3;  // focal mass is 1 - contradiction * noise
  Kinematics kinematics;
  std::size_t r_max = 0;  // prior support; 0 means targets + 2
};

struct GeneratedReport {
  std::string id;
  std::size_t target;
  std::vector<std::string> focal;
  double focal_mass;
  double time_s;
  double x_km;
  double y_km;
};

struct Scenario {
  std::vector<std::string> frame;
  std::vector<GeneratedReport> reports;  // ordered by time
  std::size_t r_max = 1;
};

inline void validate(const ScenarioConfig& cfg) {
  if (cfg.targets < 1 || cfg.reports_per_target < 1 || cfg.frame_size < 1)
    throw ValidationError("scenario counts must be >= 1");
  if (!(cfg.contradiction >= 0.0 && cfg.contradiction <= 1.0))
    throw ValidationError("contradiction level must lie in [0,1]");
  if (cfg.frame_size < cfg.targets)
    throw ValidationError("frame of " + std::to_string(cfg.frame_size) +
                          " elements is too small for " +
                          std::to_string(cfg.targets) + " disjoint target focals");
  if (cfg.frame_size > Frame::kMaxElements)
    throw ValidationError("frame size exceeds 64 elements");
  const auto& k = cfg.kinematics;
  if (!(k.area_km > 0.0 && k.speed_limit_kmh > 0.0 && k.time_span_s > 0.0))
    throw ValidationError("kinematic parameters must be positive");
}

inline Scenario make_scenario(const ScenarioConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& kin = cfg.kinematics;

  Scenario sc;
  for (std::size_t i = 0; i < cfg.frame_size; ++i)
    sc.frame.push_back("h" + std::to_string(i + 1));
  sc.r_max = cfg.r_max ? cfg.r_max : cfg.targets + 2;

  for (std::size_t t = 0; t < cfg.targets; ++t) {
    std::vector<std::string> focal;
    for (std::size_t i = t; i < cfg.frame_size; i += cfg.targets)
      focal.push_back(sc.frame[i]);

    std::vector<double> times(cfg.reports_per_target);
    for (auto& tm : times) tm = std::round(unit(rng) * kin.time_span_s);
    std::sort(times.begin(), times.end());

    double x = unit(rng) * kin.area_km;
    double y = unit(rng) * kin.area_km;
    double prev = times.front();
    for (double tm : times) {
      const double reach = 0.9 * kin.speed_limit_kmh * (tm - prev) / 3600.0;
      const double dist = unit(rng) * reach;
      const double heading = unit(rng) * 2.0 * std::numbers::pi;
      x = std::clamp(x + dist * std::cos(heading), 0.0, kin.area_km);
      y = std::clamp(y + dist * std::sin(heading), 0.0, kin.area_km);
      prev = tm;
      const double mass = 1.0 - cfg.contradiction * unit(rng);
      sc.reports.push_back({"", t, focal, mass, tm, x, y});
    }
  }

  std::stable_sort(sc.reports.begin(), sc.reports.end(),
                   [](const auto& a, const auto& b) { return a.time_s < b.time_s; });
  const std::size_t width = std::to_string(sc.reports.size()).size();
  for (std::size_t i = 0; i < sc.reports.size(); ++i) {
    std::string num = std::to_string(i + 1);
    sc.reports[i].id = "r" + std::string(width - num.size(), '0') + num;
  }
  return sc;
}

inline nlohmann::ordered_json scenario_json(const Scenario& sc) {
  nlohmann::ordered_json doc;
  doc["frame"] = sc.frame;
  nlohmann::ordered_json prior = nlohmann::ordered_json::object();
  for (std::size_t r = 1; r <= sc.r_max; ++r)
    prior[std::to_string(r)] = 1.0 / static_cast<double>(sc.r_max);
  doc["prior"] = prior;
  doc["reports"] = nlohmann::ordered_json::array();
  for (const auto& r : sc.reports) {
    nlohmann::ordered_json rj;
    rj["id"] = r.id;
    nlohmann::ordered_json masses = nlohmann::ordered_json::array();
    if (r.focal.size() == sc.frame.size()) {
      masses.push_back({{"set", sc.frame}, {"mass", 1.0}});
    } else {
      masses.push_back({{"set", r.focal}, {"mass", r.focal_mass}});
      if (r.focal_mass < 1.0)
        masses.push_back({{"set", sc.frame}, {"mass", 1.0 - r.focal_mass}});
    }
    rj["masses"] = masses;
    rj["time"] = r.time_s;
    rj["pos"] = {r.x_km, r.y_km};
    rj["truth"] = r.target;
    doc["reports"].push_back(rj);
  }
  return doc;
}

/// Corpus file content for a scenario; byte-identical for a fixed config.
inline std::string generate_scenario(const ScenarioConfig& cfg) {
  return scenario_json(make_scenario(cfg)).dump(2) + "\n";
}

}  // namespace dsintel::analyst
