#include "patho/detector_config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "patho/error.hpp"

namespace patho {

using nlohmann::json;

DetectorConfig::DetectorConfig()
    : defaults_{
          // generative
          {"s_hi", 0.9},
          {"s_lo", 0.3},
          {"s_indep", 0.55},
          {"mi_lo", 0.05},
          {"f_hi", 0.5},
          {"d_hi", 0.5},
          {"tv_tol", 0.02},
          {"margin", 10.0},
          {"log_cap", 100.0},
          {"same_tol", 1e-9},
          {"alpha", 2.0},
          {"gamma", 0.9},
          {"delta", 0.9},
          {"eps", 1.0},
          {"k", 3.0},
          {"rho", 0.1},
          {"tau_c", 0.5},
          {"window", 5.0},
          {"warming_slope_scale", 0.05},
          {"entropy_slope_scale", 0.5},
          {"entropy_ridge", 1e-3},
          // discriminative
          {"gap_hi", 0.2},
          {"amp_hi", 0.1},
          {"ece_hi", 0.1},
          {"ece_bins", 10.0},
          {"tv_hi", 0.2},
          {"tv_bins", 8.0},
          {"c_hi", 0.9},
          {"frac_hi", 0.2},
          {"flip_hi", 0.1},
          {"margin_hi", 0.5},
          {"eps_adv", 0.1},
          {"tol_t", 2.0},
          {"n_min", 20.0},
          {"positive_label", 1.0},
          {"drift_split", std::numeric_limits<double>::quiet_NaN()},
      } {}

double DetectorConfig::get(PathologyId id, std::string_view key) const {
  if (auto it = overrides_.find(id); it != overrides_.end())
    if (auto kt = it->second.find(key); kt != it->second.end()) return kt->second;
  auto it = defaults_.find(key);
  if (it == defaults_.end()) throw ValidationError("detector config: unknown parameter " + std::string(key));
  return it->second;
}

int DetectorConfig::get_int(PathologyId id, std::string_view key) const {
  return static_cast<int>(std::lround(get(id, key)));
}

void DetectorConfig::set(PathologyId id, std::string_view key, double value) {
  auto keys = parameter_keys(id);
  if (std::find(keys.begin(), keys.end(), key) == keys.end())
    throw ValidationError("detector config: " + std::string(name(id)) + " has no parameter " + std::string(key));
  overrides_[id][std::string(key)] = value;
}

void DetectorConfig::set_default(std::string_view key, double value) {
  auto it = defaults_.find(key);
  if (it == defaults_.end()) throw ValidationError("detector config: unknown parameter " + std::string(key));
  it->second = value;
}

namespace {

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ValidationError("detector config: " + where + " must be a number");
  return v.get<double>();
}

}  // namespace

DetectorConfig DetectorConfig::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("detector config must be a JSON object");
  DetectorConfig cfg;
  for (const auto& [key, section] : j.items()) {
    if (!section.is_object()) throw ValidationError("detector config: section " + key + " must be an object");
    if (key == "defaults") {
      for (const auto& [k, v] : section.items()) cfg.set_default(k, number(v, key + "." + k));
    } else if (key == "mi") {
      for (const auto& [k, v] : section.items()) {
        const double d = number(v, "mi." + k);
        if (k == "num_bins_per_axis")
          cfg.mi.num_bins_per_axis = static_cast<int>(d);
        else if (k == "projection_dims")
          cfg.mi.projection_dims = static_cast<int>(d);
        else if (k == "seed")
          cfg.mi.seed = static_cast<std::uint64_t>(d);
        else
          throw ValidationError("detector config: unknown mi parameter " + k);
      }
      if (cfg.mi.num_bins_per_axis < 2) throw ValidationError("detector config: mi.num_bins_per_axis must be >= 2");
    } else if (auto id = parse_pathology(key)) {
      for (const auto& [k, v] : section.items()) cfg.set(*id, k, number(v, key + "." + k));
    } else {
      throw ValidationError("detector config: unknown section " + key);
    }
  }
  return cfg;
}

json DetectorConfig::to_json() const {
  json j;
  json d = json::object();
  for (const auto& [k, v] : defaults_) d[k] = std::isnan(v) ? json(nullptr) : json(v);
  j["defaults"] = d;
  j["mi"] = {{"num_bins_per_axis", mi.num_bins_per_axis}, {"projection_dims", mi.projection_dims}, {"seed", mi.seed}};
  for (const auto& [id, m] : overrides_) {
    json s = json::object();
    for (const auto& [k, v] : m) s[k] = v;
    j[std::string(name(id))] = s;
  }
  return j;
}

}  // namespace patho
