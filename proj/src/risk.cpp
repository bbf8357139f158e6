#include "patho/risk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "patho/error.hpp"
#include "patho/metrics.hpp"

namespace patho {

namespace {

void check_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("expectile: tau must lie in (0,1)");
}

}  // namespace

ExpectileResult expectile_detailed(std::span<const double> values, std::span<const double> weights,
                                   const ExpectileConfig& cfg) {
  check_tau(cfg.tau);
  if (values.empty()) throw DomainError("expectile: empty input");
  if (values.size() != weights.size()) throw DomainError("expectile: values and weights differ in length");
  if (!(cfg.tol > 0.0) || cfg.max_iter < 1) throw DomainError("expectile: tol must be > 0 and max_iter >= 1");
  double total = 0.0, first = 0.0, scale = 1.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw DomainError("expectile: non-finite loss");
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) throw DomainError("expectile: weights must be >= 0");
    total += weights[i];
    first += weights[i] * values[i];
    scale = std::max(scale, std::abs(values[i]));
  }
  if (!(total > 0.0)) throw DomainError("expectile: weights sum to zero");

  const double tau = cfg.tau;
  auto foc = [&](double r) {
    double up = 0.0, down = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] > r)
        up += weights[i] * (values[i] - r);
      else
        down += weights[i] * (r - values[i]);
    }
    return std::abs(tau * up - (1.0 - tau) * down) / (total * scale);
  };

  ExpectileResult res;
  double r = first / total;
  std::size_t prev_above = std::numeric_limits<std::size_t>::max();
  for (int it = 1; it <= cfg.max_iter; ++it) {
    double num = 0.0, den = 0.0;
    std::size_t above = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double w = values[i] > r ? tau * weights[i] : (1.0 - tau) * weights[i];
      num += w * values[i];
      den += w;
      above += values[i] > r ? 1 : 0;
    }
    const double next = num / den;
    const bool settled = above == prev_above || std::abs(next - r) <= cfg.tol * std::max(1.0, std::abs(r));
    prev_above = above;
    r = next;
    res.iterations = it;
    if (settled) {
      res.value = r;
      res.residual = foc(r);
      return res;
    }
  }
  const double residual = foc(r);
  throw ConvergenceError("expectile: no convergence after " + std::to_string(cfg.max_iter) + " iterations", residual);
}

ExpectileResult expectile_detailed(std::span<const double> losses, const ExpectileConfig& cfg) {
  const std::vector<double> ones(losses.size(), 1.0);
  return expectile_detailed(losses, ones, cfg);
}

double expectile(std::span<const double> losses, const ExpectileConfig& cfg) {
  return expectile_detailed(losses, cfg).value;
}

double expectile(std::span<const double> values, std::span<const double> weights, const ExpectileConfig& cfg) {
  return expectile_detailed(values, weights, cfg).value;
}

double bernoulli_expectile(double p, double tau) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("bernoulli_expectile: p must lie in [0,1]");
  const double values[] = {0.0, 1.0};
  const double weights[] = {1.0 - p, p};
  return expectile(values, weights, {.tau = tau});
}

GateResult deployment_gate(std::span<const double> risk, std::span<const double> eps) {
  if (risk.size() != eps.size()) throw ValidationError("deployment gate: risk and eps differ in length");
  GateResult g;
  for (std::size_t i = 0; i < risk.size(); ++i) {
    if (std::isnan(risk[i])) continue;
    if (risk[i] <= eps[i]) continue;
    g.violations.push_back({i, risk[i], eps[i], risk[i] - eps[i]});
  }
  std::stable_sort(g.violations.begin(), g.violations.end(),
                   [](const GateViolation& a, const GateViolation& b) { return a.slack > b.slack; });
  g.feasible = g.violations.empty();
  return g;
}

RiskReport risk_report(std::span<const DetectorOutcome> outcomes, std::span<const double> eps,
                       const ExpectileConfig& cfg) {
  if (eps.size() != kNumPathologies)
    throw ValidationError("risk report: expected " + std::to_string(kNumPathologies) + " thresholds, got " +
                          std::to_string(eps.size()));
  check_tau(cfg.tau);
  std::vector<std::vector<double>> losses(kNumPathologies);
  std::vector<std::size_t> fired(kNumPathologies, 0);
  for (const auto& o : outcomes) {
    losses[index(o.pathology)].push_back(o.loss);
    fired[index(o.pathology)] += o.fired ? 1 : 0;
  }
  if (std::all_of(losses.begin(), losses.end(), [](const auto& l) { return l.empty(); }))
    throw InsufficientDataError("risk report: no loss samples for any pathology");

  RiskReport rep;
  rep.tau = cfg.tau;
  std::vector<double> risks(kNumPathologies, std::numeric_limits<double>::quiet_NaN());
  for (PathologyId id : all_pathologies()) {
    const std::size_t i = index(id);
    RiskEntry e;
    e.pathology = id;
    e.n = losses[i].size();
    e.eps = eps[i];
    e.available = e.n > 0;
    if (e.available) {
      e.value = expectile(losses[i], cfg);
      e.mean = std::accumulate(losses[i].begin(), losses[i].end(), 0.0) / static_cast<double>(e.n);
      e.fired_rate = static_cast<double>(fired[i]) / static_cast<double>(e.n);
      e.within = e.value <= e.eps;
      risks[i] = e.value;
    }
    rep.entries.push_back(e);
  }
  const auto gate = deployment_gate(risks, eps);
  rep.feasible = gate.feasible;
  for (const auto& v : gate.violations) rep.violations.push_back(all_pathologies()[v.index]);
  return rep;
}

namespace {

nlohmann::json maybe_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

std::string csv_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12f", v);
  return buf;
}

}  // namespace

nlohmann::json RiskReport::to_json() const {
  nlohmann::json j;
  j["tau"] = tau;
  j["feasible"] = feasible;
  j["pathology_count"] = pathology_count();
  j["distinct_pathology_count"] = distinct_pathology_count();
  std::size_t covered = 0;
  auto rows = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json r;
    r["pathology"] = std::string(name(e.pathology));
    r["family"] = std::string(family_name(family(e.pathology)));
    r["available"] = e.available;
    r["n"] = e.n;
    r["eps"] = maybe_inf(e.eps);
    if (e.available) {
      ++covered;
      r["R"] = e.value;
      r["mean"] = e.mean;
      r["fired_rate"] = e.fired_rate;
      r["within"] = e.within;
    }
    rows.push_back(r);
  }
  j["entries"] = rows;
  j["covered_pathologies"] = covered;
  auto v = nlohmann::json::array();
  for (PathologyId id : violations) {
    const auto& e = entries[index(id)];
    v.push_back({{"pathology", std::string(name(id))}, {"R", e.value}, {"eps", maybe_inf(e.eps)},
                 {"slack", e.value - e.eps}});
  }
  j["violations"] = v;
  return j;
}

std::string RiskReport::to_csv() const {
  std::ostringstream os;
  os << "pathology,tau,n,R,eps,feasible\n";
  for (const auto& e : entries) {
    os << name(e.pathology) << ',' << csv_number(tau) << ',' << e.n << ',' << (e.available ? csv_number(e.value) : "")
       << ',' << csv_number(e.eps) << ',' << (e.available ? (e.within ? "true" : "false") : "n/a") << '\n';
  }
  return os.str();
}

double number_or_inf(const nlohmann::json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  }
  throw ValidationError(where + ": expected a number or \"inf\"");
}

std::vector<double> eps_from_json(const nlohmann::json& j, double fallback) {
  if (j.is_array()) {
    if (j.size() != kNumPathologies)
      throw ValidationError("eps: expected " + std::to_string(kNumPathologies) + " thresholds, got " +
                            std::to_string(j.size()));
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number_or_inf(j[i], "eps[" + std::to_string(i) + "]"));
    return out;
  }
  if (!j.is_object()) throw ValidationError("eps: expected an object or an array");
  double def = fallback;
  if (j.contains("default")) def = number_or_inf(j["default"], "eps.default");
  std::vector<double> out(kNumPathologies, def);
  for (const auto& [k, v] : j.items()) {
    if (k == "default") continue;
    auto id = parse_pathology(k);
    if (!id) throw ValidationError("eps: unknown pathology " + k);
    out[index(*id)] = number_or_inf(v, "eps." + k);
  }
  return out;
}

ParetoResult pareto_scan(const Eigen::MatrixXd& objectives) {
  const Eigen::Index n = objectives.rows();
  if (n < 2) throw ValidationError("pareto scan: needs at least two candidates");
  if (objectives.cols() < 1) throw ValidationError("pareto scan: needs at least one objective");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!objectives.row(i).allFinite())
      throw DomainError("pareto scan: objective evaluation failed for candidate " + std::to_string(i));

  // Any dominator of a row precedes it lexicographically, and domination is
  // transitive, so comparing against the front built so far is enough.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index k = 0; k < objectives.cols(); ++k)
      if (objectives(a, k) != objectives(b, k)) return objectives(a, k) < objectives(b, k);
    return false;
  });
  auto dominates = [&](Eigen::Index a, Eigen::Index b) {
    return (objectives.row(a).array() <= objectives.row(b).array()).all() &&
           (objectives.row(a).array() < objectives.row(b).array()).any();
  };
  std::vector<Eigen::Index> front;
  for (Eigen::Index c : order)
    if (std::none_of(front.begin(), front.end(), [&](Eigen::Index f) { return dominates(f, c); })) front.push_back(c);

  ParetoResult res;
  for (Eigen::Index f : front) res.front.push_back(static_cast<std::size_t>(f));
  std::sort(res.front.begin(), res.front.end());
  res.non_aligned = res.front.size() >= 2;
  return res;
}

BluffingSweep bluffing_family_sweep(const BluffingSweepConfig& cfg) {
  if (cfg.candidates < 2 || cfg.samples < 1 || cfg.dim < 1 || cfg.tokens < 1)
    throw ValidationError("bluffing sweep: candidates >= 2, samples, dim and tokens >= 1");
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(cfg.samples);
  Eigen::MatrixXd x(n, cfg.dim), noise(n, cfg.dim), u(n, cfg.tokens);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < cfg.dim; ++k) x(i, k) = normal(rng);
    for (int k = 0; k < cfg.dim; ++k) noise(i, k) = normal(rng);
    for (int k = 0; k < cfg.tokens; ++k) u(i, k) = unif(rng);
  }

  BluffingSweep out;
  out.objectives.resize(cfg.candidates, 2);
  const ExpectileConfig ecfg{.tau = cfg.tau};
  for (int c = 0; c < cfg.candidates; ++c) {
    const double s = static_cast<double>(c) / static_cast<double>(cfg.candidates - 1);
    out.s.push_back(s);
    std::vector<double> fluency_loss, truth_loss;
    for (Eigen::Index i = 0; i < n; ++i) {
      std::vector<double> lp(static_cast<std::size_t>(cfg.tokens));
      for (int k = 0; k < cfg.tokens; ++k) lp[static_cast<std::size_t>(k)] = std::log(0.2 + 0.75 * s + 0.05 * u(i, k));
      fluency_loss.push_back(1.0 - fluency(lp));
      const Eigen::VectorXd y = ((1.0 - s) * x.row(i) + s * noise.row(i)).transpose();
      truth_loss.push_back(1.0 - sim(y, x.row(i).transpose(), {.clamp = true}));
    }
    out.objectives(c, 0) = expectile(fluency_loss, ecfg);
    out.objectives(c, 1) = expectile(truth_loss, ecfg);
  }
  out.pareto = pareto_scan(out.objectives);
  return out;
}

BinaryExpVarTable expvar_binary_monotonicity_check(std::span<const double> p_grid, double tau) {
  BinaryExpVarTable t;
  t.tau = tau;
  for (double p : p_grid) t.rows.push_back({p, bernoulli_expectile(p, tau)});
  std::stable_sort(t.rows.begin(), t.rows.end(), [](const auto& a, const auto& b) { return a.p < b.p; });
  for (std::size_t i = 1; i < t.rows.size(); ++i)
    if (t.rows[i].value < t.rows[i - 1].value) t.monotone = false;
  for (const auto& r : t.rows)
    if (r.p == 0.0 && r.value != 0.0) t.zero_at_zero = false;
  return t;
}

}  // namespace patho
