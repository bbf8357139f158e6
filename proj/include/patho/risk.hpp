#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "patho/pathology.hpp"

namespace patho {

struct ExpectileConfig {
  double tau = 0.9;
  double tol = 1e-10;
  int max_iter = 200;
};

struct ExpectileResult {
  double value = 0.0;
  int iterations = 0;
  /// |tau * sum w (L-r)+ - (1-tau) * sum w (r-L)+| / (sum w * max(1, max|L|)).
  double residual = 0.0;
};

/// tau-expectile of the empirical distribution: the minimizer of
/// E[|tau - 1{L <= r}| (L - r)^2], by the reweighted-mean iteration started at
/// the sample mean. Each step is a Newton step on the piecewise-linear
/// first-order condition, so it stops once the set {L > r} repeats.
///
/// Throws DomainError for empty or non-finite input or tau outside (0,1), and
/// ConvergenceError (carrying the residual) after max_iter steps.
ExpectileResult expectile_detailed(std::span<const double> losses, const ExpectileConfig& cfg = {});
double expectile(std::span<const double> losses, const ExpectileConfig& cfg = {});

/// Weighted version; weights must be >= 0 with a positive sum.
ExpectileResult expectile_detailed(std::span<const double> values, std::span<const double> weights,
                                   const ExpectileConfig& cfg = {});
double expectile(std::span<const double> values, std::span<const double> weights, const ExpectileConfig& cfg = {});

/// Expectile of a Bernoulli(p) indicator.
double bernoulli_expectile(double p, double tau);

/// Index-aligned risks against thresholds. A NaN risk means "no samples" and is
/// left out of the gate.
struct GateViolation {
  std::size_t index = 0;
  double risk = 0.0;
  double eps = 0.0;
  double slack = 0.0;  // risk - eps, > 0
};

struct GateResult {
  bool feasible = true;
  std::vector<GateViolation> violations;  // largest slack first
};

/// Accepts iff risk[i] <= eps[i] for every available i (inclusive).
GateResult deployment_gate(std::span<const double> risk, std::span<const double> eps);

struct RiskEntry {
  PathologyId pathology{};
  std::size_t n = 0;
  bool available = false;
  double value = 0.0;
  double mean = 0.0;
  double fired_rate = 0.0;
  double eps = 0.0;
  bool within = true;
};

struct RiskReport {
  double tau = 0.9;
  std::vector<RiskEntry> entries;  // registry order, all 35 rows
  bool feasible = true;
  std::vector<PathologyId> violations;  // largest slack first

  /// The registry has 35 rows; reheating and warming describe one phenomenon,
  /// so 34 are distinct. Both counts are reported.
  std::size_t pathology_count() const { return kNumPathologies; }
  std::size_t distinct_pathology_count() const { return kNumDistinctPathologies; }

  nlohmann::json to_json() const;
  /// Header: pathology,tau,n,R,eps,feasible
  std::string to_csv() const;
};

/// Per-pathology expectile of the outcome losses. `eps` is indexed by registry
/// order and must have 35 entries (ValidationError otherwise).
RiskReport risk_report(std::span<const DetectorOutcome> outcomes, std::span<const double> eps,
                       const ExpectileConfig& cfg = {});

/// Thresholds from {"default": x, "<pathology>": y, ...} or a 35-element
/// array. Values are numbers or the string "inf".
std::vector<double> eps_from_json(const nlohmann::json& j, double fallback = 1.0);

/// Parses a number or the strings "inf" / "infinity".
double number_or_inf(const nlohmann::json& v, const std::string& where);

struct ParetoResult {
  std::vector<std::size_t> front;  // ascending candidate index
  bool non_aligned = false;        // front has at least two members
};

/// Non-dominated rows of `objectives` (candidates x objectives, all minimized)
/// under componentwise <=. Needs at least two candidates and finite values.
ParetoResult pareto_scan(const Eigen::MatrixXd& objectives);

struct BluffingSweepConfig {
  int candidates = 11;
  int samples = 400;
  int dim = 8;
  int tokens = 12;
  double tau = 0.9;
  std::uint64_t seed = 0;
};

/// Synthetic family indexed by s in [0,1]: output = (1-s) x + s noise, token
/// log-probs ln(0.2 + 0.75 s + 0.05 u). Raising s raises fluency and lowers
/// agreement with the input, so the two expectile risks (1 - fluency and
/// 1 - clamped similarity to the input) move in opposite directions. All
/// candidates share the same random draws.
struct BluffingSweep {
  std::vector<double> s;
  Eigen::MatrixXd objectives;  // columns: fluency risk, truth risk
  ParetoResult pareto;
};

BluffingSweep bluffing_family_sweep(const BluffingSweepConfig& cfg);

struct BinaryExpVarRow {
  double p = 0.0;
  double value = 0.0;
};

struct BinaryExpVarTable {
  double tau = 0.9;
  std::vector<BinaryExpVarRow> rows;  // sorted by p
  bool monotone = true;
  bool zero_at_zero = true;  // vacuous when p = 0 is not in the grid
};

/// Expectile of a Bernoulli(p) failure indicator over a grid of p in [0,1],
/// checking it is non-decreasing in p and 0 at p = 0.
BinaryExpVarTable expvar_binary_monotonicity_check(std::span<const double> p_grid, double tau);

}  // namespace patho
