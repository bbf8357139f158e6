#pragma once

#include <functional>
#include <map>
#include <string>
#include <string_view>

#include "json.hpp"
#include "patho/metrics.hpp"
#include "patho/pathology.hpp"

namespace patho {

/// Thresholds and margins for every detector. A value is looked up in the
/// detector's own section first, then in the shared defaults.
///
/// Shared defaults: s_hi 0.9, s_lo 0.3, s_indep 0.55, mi_lo 0.05 nats, f_hi 0.5,
/// d_hi 0.5, tv_tol 0.02, margin 10, alpha 2, gamma 0.9, delta 0.9, eps 1, k 3,
/// rho 0.1, tau_c 0.5, window 5; discriminative: gap_hi 0.2, amp_hi 0.1,
/// ece_hi 0.1, tv_hi 0.2, c_hi 0.9, frac_hi 0.2, flip_hi 0.1, n_min 20.
class DetectorConfig {
 public:
  DetectorConfig();

  double get(PathologyId id, std::string_view key) const;
  int get_int(PathologyId id, std::string_view key) const;

  /// Override one parameter for one detector. Throws ValidationError for keys
  /// the detector does not read.
  void set(PathologyId id, std::string_view key, double value);
  /// Override a shared default. Throws ValidationError for unknown keys.
  void set_default(std::string_view key, double value);

  MIEstimatorConfig mi;

  /// Accepts {"defaults": {...}, "mi": {...}, "<pathology>": {...}, ...}.
  static DetectorConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

 private:
  std::map<std::string, double, std::less<>> defaults_;
  std::map<PathologyId, std::map<std::string, double, std::less<>>> overrides_;
};

}  // namespace patho
