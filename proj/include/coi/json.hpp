#pragma once

#include <nlohmann/json.hpp>

#include "coi/diffmap.hpp"
#include "coi/interest.hpp"
#include "coi/registration.hpp"

namespace coi {

inline nlohmann::json to_json(const RegistrationResult& r) {
  return {{"theta_rad", r.transform.theta}, {"scale", r.transform.scale},
          {"tx_px", r.transform.tx},        {"ty_px", r.transform.ty},
          {"reflect", r.transform.reflect}, {"mi_nats", r.score},
          {"iterations", r.iterations}};
}

inline RegistrationResult registration_from_json(const nlohmann::json& j) {
  RegistrationResult r;
  r.transform.theta = j.at("theta_rad").get<double>();
  r.transform.scale = j.at("scale").get<double>();
  r.transform.tx = j.at("tx_px").get<double>();
  r.transform.ty = j.at("ty_px").get<double>();
  r.transform.reflect = j.at("reflect").get<bool>();
  r.score = j.value("mi_nats", 0.0);
  r.iterations = j.value("iterations", 0);
  if (!(r.transform.scale > 0.0)) throw std::invalid_argument("registration JSON: scale must be > 0");
  return r;
}

inline nlohmann::json to_json(const ClassCounts& c) {
  return {{"moving_only", c.moving_only},
          {"reference_only", c.reference_only},
          {"both", c.both},
          {"neither", c.neither}};
}

inline nlohmann::json to_json(const std::vector<InterestBox>& boxes) {
  nlohmann::json arr = nlohmann::json::array();
  for (const InterestBox& b : boxes) {
    arr.push_back({{"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1},
                   {"source_components", b.source_components}});
  }
  return arr;
}

inline std::vector<InterestBox> boxes_from_json(const nlohmann::json& arr) {
  std::vector<InterestBox> out;
  for (const auto& b : arr) {
    out.push_back({b.at("x0").get<int>(), b.at("y0").get<int>(), b.at("x1").get<int>(),
                   b.at("y1").get<int>(), b.at("source_components").get<int>()});
  }
  return out;
}

}  // namespace coi
