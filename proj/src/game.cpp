#include "patho/game.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "patho/error.hpp"

namespace patho {

namespace {

Eigen::VectorXd clamp_box(const Eigen::VectorXd& v, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

Eigen::VectorXd project_box_ball(const Eigen::VectorXd& t, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                 double radius) {
  if (t.size() != lo.size() || t.size() != hi.size()) throw ValidationError("projection: dimension mismatch");
  if ((lo.array() > hi.array()).any()) throw ValidationError("projection: box has lo > hi");
  if (!(radius >= 0.0)) throw ValidationError("projection: radius must be >= 0");
  auto x = [&](double nu) { return clamp_box(t / (1.0 + nu), lo, hi); };
  if (x(0.0).norm() <= radius) return x(0.0);
  const Eigen::VectorXd floor = clamp_box(Eigen::VectorXd::Zero(t.size()), lo, hi);
  if (floor.norm() > radius) throw InfeasibleError("projection: box does not meet the budget ball");

  // Box inactive at the radial projection: that point is the answer.
  const Eigen::VectorXd radial = t * (radius / t.norm());
  if (clamp_box(radial, lo, hi) == radial) return radial;

  double a = 0.0, b = 1.0;
  while (x(b).norm() > radius) {
    a = b;
    b *= 2.0;
    if (!std::isfinite(b)) return floor;
  }
  for (int it = 0; it < 200 && b - a > 1e-17 * std::max(1.0, b); ++it) {
    const double m = 0.5 * (a + b);
    (x(m).norm() > radius ? a : b) = m;
  }
  return x(b);
}

DelegatedGame::DelegatedGame(std::vector<AgentSpec> agents, GameConfig cfg)
    : agents_(std::move(agents)), cfg_(std::move(cfg)) {
  if (agents_.empty()) throw ValidationError("game: no agents");
  if (!(cfg_.lambda > 0.0)) throw ValidationError("game: lambda must be > 0");
  if (!(cfg_.kappa > 0.0)) throw ValidationError("game: kappa must be > 0");
  if (!(cfg_.cloud_cap > 0.0)) throw ValidationError("game: cloud_cap must be > 0");
  if (!(cfg_.tau_data >= 0.0 && cfg_.tau_data <= 1.0)) throw ValidationError("game: tau_data must lie in [0,1]");
  if (cfg_.max_rounds < 1) throw ValidationError("game: max_rounds must be >= 1");
  const std::size_t n = agents_.size();
  std::vector<double> w = cfg_.share_weights;
  if (w.empty()) w.assign(n, 1.0);
  if (w.size() != n) throw ValidationError("game: share_weights must have one entry per agent");
  double wsum = 0.0;
  for (double v : w) {
    if (!(v >= 0.0)) throw ValidationError("game: share weights must be >= 0");
    wsum += v;
  }
  if (!(wsum > 0.0)) throw ValidationError("game: share weights sum to zero");

  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = agents_[i];
    const std::string who = "agent " + std::to_string(i) + " (" + std::string(name(a.pathology)) + ")";
    const Eigen::Index d = a.dim();
    if (d < 1 || a.hi.size() != d) throw ValidationError(who + ": box bounds must be nonempty and equal length");
    if (!(a.quality >= 0.0 && a.quality <= 1.0)) throw ValidationError(who + ": quality must lie in [0,1]");
    if (a.quality < cfg_.tau_data)
      throw InfeasibleError(who + ": data quality " + std::to_string(a.quality) + " below tau_data");
    if (cfg_.gamma != 0.0 && d != agents_.front().dim())
      throw ValidationError("game: mean-field coupling needs equal parameter dimensions");
    Eigen::MatrixXd h;
    Eigen::VectorXd b;
    double c;
    if (a.target) {
      if (!a.samples.empty()) throw ValidationError(who + ": give either a target or samples, not both");
      if (a.target->size() != d) throw ValidationError(who + ": target length differs from the box");
      h = Eigen::MatrixXd::Identity(d, d);
      b = *a.target;
      c = a.target->squaredNorm();
    } else {
      if (a.samples.empty()) throw ValidationError(who + ": needs a target or samples");
      h = Eigen::MatrixXd::Zero(d, d);
      b = Eigen::VectorXd::Zero(d);
      c = 0.0;
      for (const auto& s : a.samples) {
        if (s.x.size() != d) throw ValidationError(who + ": sample length differs from the box");
        h += s.x * s.x.transpose();
        b += s.y * s.x;
        c += s.y * s.y;
      }
      const double m = static_cast<double>(a.samples.size());
      h /= m, b /= m, c /= m;
    }
    const Eigen::MatrixXd A = h + cfg_.lambda * cfg_.kappa * Eigen::MatrixXd::Identity(d, d);
    const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    h_.push_back(std::move(h));
    b_.push_back(std::move(b));
    c_.push_back(c);
    step_.push_back(1.0 / (2.0 * top));
    radius_.push_back(std::sqrt(w[i] / wsum * cfg_.cloud_cap / cfg_.kappa));
    const Eigen::VectorXd floor = clamp_box(Eigen::VectorXd::Zero(d), a.lo, a.hi);
    if (floor.norm() > radius_.back()) throw InfeasibleError(who + ": cloud_cap too small for any parameter in the box");
  }
}

namespace {

Eigen::VectorXd others_mean(std::size_t i, const std::vector<Eigen::VectorXd>& theta) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(theta[i].size());
  if (theta.size() < 2) return m;
  for (std::size_t j = 0; j < theta.size(); ++j)
    if (j != i) m += theta[j];
  return m / static_cast<double>(theta.size() - 1);
}

}  // namespace

double DelegatedGame::cost(std::size_t i, const Eigen::VectorXd& th, const std::vector<Eigen::VectorXd>& theta) const {
  const double risk = th.dot(h_[i] * th) - 2.0 * b_[i].dot(th) + c_[i];
  double coupling = 0.0;
  if (cfg_.gamma != 0.0) coupling = cfg_.gamma * th.dot(others_mean(i, theta));
  return risk + cfg_.lambda * (cfg_.kappa * th.squaredNorm() + coupling);
}

Eigen::VectorXd DelegatedGame::best_response(std::size_t i, const std::vector<Eigen::VectorXd>& theta) const {
  const auto& a = agents_[i];
  Eigen::VectorXd e = b_[i];
  if (cfg_.gamma != 0.0) e -= 0.5 * cfg_.lambda * cfg_.gamma * others_mean(i, theta);
  const double lk = cfg_.lambda * cfg_.kappa;
  Eigen::VectorXd th = project_box_ball(theta[i], a.lo, a.hi, radius_[i]);
  for (int it = 0; it < cfg_.inner_max_iter; ++it) {
    const Eigen::VectorXd grad = 2.0 * (h_[i] * th + lk * th - e);
    const Eigen::VectorXd next = project_box_ball(th - step_[i] * grad, a.lo, a.hi, radius_[i]);
    const double moved = (next - th).norm();
    th = next;
    if (moved <= cfg_.inner_tol * std::max(1.0, th.norm())) break;
  }
  return th;
}

double DelegatedGame::nash_residual(const std::vector<Eigen::VectorXd>& theta) const {
  double worst = 0.0;
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    const double gain = cost(i, theta[i], theta) - cost(i, best_response(i, theta), theta);
    worst = std::max(worst, gain);
  }
  return worst;
}

std::vector<Eigen::VectorXd> DelegatedGame::initial_profile() const {
  std::vector<Eigen::VectorXd> theta;
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    const auto& a = agents_[i];
    if (a.theta0) {
      const auto& t0 = *a.theta0;
      if (t0.size() != a.dim() || (t0.array() < a.lo.array()).any() || (t0.array() > a.hi.array()).any() ||
          t0.norm() > radius_[i] * (1.0 + 1e-12))
        throw InfeasibleError("agent " + std::to_string(i) + ": theta0 is outside its box or budget");
      theta.push_back(t0);
    } else {
      theta.push_back(clamp_box(Eigen::VectorXd::Zero(a.dim()), a.lo, a.hi));
    }
  }
  return theta;
}

GameState DelegatedGame::solve() const {
  GameState s;
  s.theta = initial_profile();
  int growing = 0;
  double prev = std::numeric_limits<double>::infinity();
  for (int round = 1; round <= cfg_.max_rounds; ++round) {
    if (cfg_.mode == SweepMode::gauss_seidel) {
      for (std::size_t i = 0; i < agents_.size(); ++i) s.theta[i] = best_response(i, s.theta);
    } else {
      std::vector<Eigen::VectorXd> next(agents_.size());
      for (std::size_t i = 0; i < agents_.size(); ++i) next[i] = best_response(i, s.theta);
      s.theta = std::move(next);
    }
    double used = 0.0;
    for (const auto& t : s.theta) used += cfg_.kappa * t.squaredNorm();
    if (used > cfg_.cloud_cap * (1.0 + 1e-12))
      throw InfeasibleError("game: iterate exceeds cloud_cap in round " + std::to_string(round));

    s.rounds = round;
    s.residual = nash_residual(s.theta);
    s.trajectory.push_back(s.residual);
    if (s.residual <= cfg_.tol) {
      s.status = GameStatus::converged;
      break;
    }
    growing = s.residual > prev ? growing + 1 : 0;
    prev = s.residual;
    if (growing >= cfg_.divergence_window) {
      s.status = GameStatus::diverged;
      break;
    }
  }
  double used = 0.0;
  for (const auto& t : s.theta) {
    s.compute_used.push_back(cfg_.kappa * t.squaredNorm());
    used += s.compute_used.back();
  }
  s.cap_slack = cfg_.cloud_cap - used;
  return s;
}

std::vector<double> DelegatedGame::losses(std::size_t i, const Eigen::VectorXd& th) const {
  const auto& a = agents_[i];
  if (a.target) return {(th - *a.target).squaredNorm()};
  std::vector<double> out;
  out.reserve(a.samples.size());
  for (const auto& s : a.samples) {
    const double r = s.y - th.dot(s.x);
    out.push_back(r * r);
  }
  return out;
}

std::vector<double> DelegatedGame::agent_risks(const std::vector<Eigen::VectorXd>& theta,
                                               const ExpectileConfig& ecfg) const {
  std::vector<double> out;
  for (std::size_t i = 0; i < agents_.size(); ++i) out.push_back(expectile(losses(i, theta[i]), ecfg));
  return out;
}

GameState solve_nash(const DelegatedGame& game) { return game.solve(); }

namespace {

// a <= b componentwise and a != b.
bool strictly_below(const std::vector<double>& a, const std::vector<double>& b) {
  bool differ = false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] > b[k]) return false;
    differ = differ || a[k] != b[k];
  }
  return differ;
}

}  // namespace

StackelbergResult stackelberg_loop(const DelegatedGame& game, const std::vector<std::vector<double>>& schedule,
                                   const ExpectileConfig& ecfg) {
  if (schedule.empty()) throw ValidationError("stackelberg: empty eps schedule");
  StackelbergResult res;
  std::vector<std::size_t> accepted;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    if (schedule[k].size() != game.size())
      throw ValidationError("stackelberg: eps vector " + std::to_string(k) + " needs one entry per agent");
    StackelbergStep step;
    step.eps = schedule[k];
    step.state = game.solve();
    step.risks = game.agent_risks(step.state.theta, ecfg);
    step.gate = deployment_gate(step.risks, step.eps);
    if (step.gate.feasible) accepted.push_back(k);
    res.steps.push_back(std::move(step));
  }
  for (std::size_t k : accepted) {
    const auto& e = schedule[k];
    const bool maximal = std::none_of(accepted.begin(), accepted.end(),
                                      [&](std::size_t j) { return strictly_below(e, schedule[j]); });
    const bool minimal = std::none_of(accepted.begin(), accepted.end(),
                                      [&](std::size_t j) { return strictly_below(schedule[j], e); });
    if (maximal && !res.least_restrictive) res.least_restrictive = k;
    if (minimal && !res.most_restrictive) res.most_restrictive = k;
  }
  res.verdict = accepted.empty() ? "no deployable configuration" : "deployable";
  return res;
}

namespace {

using nlohmann::json;

Eigen::VectorXd vector_from(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ValidationError(where + ": expected a nonempty array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!v[k].is_number()) throw ValidationError(where + ": expected numbers");
    out(static_cast<Eigen::Index>(k)) = v[k].get<double>();
  }
  return out;
}

double number_from(const json& v, const std::string& where) {
  if (!v.is_number()) throw ValidationError(where + ": expected a number");
  return v.get<double>();
}

// A bound is either a scalar (broadcast) or a vector.
Eigen::VectorXd bound_from(const json& v, Eigen::Index dim, const std::string& where) {
  if (v.is_number()) return Eigen::VectorXd::Constant(dim, v.get<double>());
  Eigen::VectorXd b = vector_from(v, where);
  if (b.size() != dim) throw ValidationError(where + ": length differs from the parameter dimension");
  return b;
}

AgentSpec agent_from(const json& j, std::size_t i) {
  const std::string where = "agents[" + std::to_string(i) + "]";
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  static const std::vector<std::string> known{"pathology", "lo", "hi", "target", "samples", "quality", "theta0"};
  for (const auto& [k, v] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw ValidationError(where + ": unknown field " + k);
  AgentSpec a;
  if (!j.contains("pathology") || !j["pathology"].is_string()) throw ValidationError(where + ": needs a pathology");
  auto id = parse_pathology(j["pathology"].get<std::string>());
  if (!id) throw ValidationError(where + ": unknown pathology " + j["pathology"].get<std::string>());
  a.pathology = *id;
  Eigen::Index dim = 0;
  if (j.contains("target")) {
    a.target = vector_from(j["target"], where + ".target");
    dim = a.target->size();
  }
  if (j.contains("samples")) {
    if (!j["samples"].is_array()) throw ValidationError(where + ".samples: expected an array");
    for (std::size_t k = 0; k < j["samples"].size(); ++k) {
      const auto& s = j["samples"][k];
      const std::string sw = where + ".samples[" + std::to_string(k) + "]";
      if (!s.is_object() || !s.contains("x") || !s.contains("y")) throw ValidationError(sw + ": needs x and y");
      a.samples.push_back({vector_from(s["x"], sw + ".x"), number_from(s["y"], sw + ".y")});
    }
    if (!a.samples.empty()) dim = a.samples.front().x.size();
  }
  if (dim == 0) throw ValidationError(where + ": needs a target or samples");
  a.lo = j.contains("lo") ? bound_from(j["lo"], dim, where + ".lo") : Eigen::VectorXd::Constant(dim, -1e300);
  a.hi = j.contains("hi") ? bound_from(j["hi"], dim, where + ".hi") : Eigen::VectorXd::Constant(dim, 1e300);
  if (j.contains("quality")) a.quality = number_from(j["quality"], where + ".quality");
  if (j.contains("theta0")) a.theta0 = vector_from(j["theta0"], where + ".theta0");
  return a;
}

std::vector<double> eps_for_agents(const json& e, const std::vector<AgentSpec>& agents, const std::string& where) {
  std::vector<double> out;
  if (e.is_array()) {
    if (e.size() != agents.size()) throw ValidationError(where + ": needs one threshold per agent");
    for (std::size_t k = 0; k < e.size(); ++k) out.push_back(number_or_inf(e[k], where));
    return out;
  }
  if (!e.is_object()) throw ValidationError(where + ": expected an array or an object");
  const std::vector<double> by_pathology = eps_from_json(e, std::numeric_limits<double>::infinity());
  for (const auto& a : agents) out.push_back(by_pathology[index(a.pathology)]);
  return out;
}

}  // namespace

Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("scenario: expected a JSON object");
  static const std::vector<std::string> known{"agents",     "lambda", "kappa", "gamma",        "cloud_cap",
                                              "tau_data",   "share_weights", "mode", "max_rounds", "tol",
                                              "eps_schedule", "tau"};
  for (const auto& [k, v] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end()) throw ValidationError("scenario: unknown field " + k);
  Scenario s;
  auto& c = s.config;
  if (j.contains("lambda")) c.lambda = number_from(j["lambda"], "lambda");
  if (j.contains("kappa")) c.kappa = number_from(j["kappa"], "kappa");
  if (j.contains("gamma")) c.gamma = number_from(j["gamma"], "gamma");
  if (j.contains("cloud_cap")) c.cloud_cap = number_from(j["cloud_cap"], "cloud_cap");
  if (j.contains("tau_data")) c.tau_data = number_from(j["tau_data"], "tau_data");
  if (j.contains("tol")) c.tol = number_from(j["tol"], "tol");
  if (j.contains("max_rounds")) c.max_rounds = static_cast<int>(number_from(j["max_rounds"], "max_rounds"));
  if (j.contains("tau")) s.expectile.tau = number_from(j["tau"], "tau");
  if (j.contains("share_weights")) {
    const auto w = vector_from(j["share_weights"], "share_weights");
    c.share_weights.assign(w.data(), w.data() + w.size());
  }
  if (j.contains("mode")) {
    const auto m = j["mode"].is_string() ? j["mode"].get<std::string>() : "";
    if (m == "gauss_seidel")
      c.mode = SweepMode::gauss_seidel;
    else if (m == "jacobi")
      c.mode = SweepMode::jacobi;
    else
      throw ValidationError("scenario: mode must be \"gauss_seidel\" or \"jacobi\"");
  }
  if (!j.contains("agents") || !j["agents"].is_array() || j["agents"].empty())
    throw ValidationError("scenario: needs a nonempty agents array");
  for (std::size_t i = 0; i < j["agents"].size(); ++i) s.agents.push_back(agent_from(j["agents"][i], i));
  if (j.contains("eps_schedule")) {
    if (!j["eps_schedule"].is_array()) throw ValidationError("scenario: eps_schedule must be an array");
    for (std::size_t k = 0; k < j["eps_schedule"].size(); ++k)
      s.eps_schedule.push_back(
          eps_for_agents(j["eps_schedule"][k], s.agents, "eps_schedule[" + std::to_string(k) + "]"));
  }
  return s;
}

Scenario random_quadratic_scenario(std::size_t agents, int dim, double cloud_cap, double gamma, std::uint64_t seed) {
  if (agents < 1 || agents > kNumDistinctPathologies)
    throw ValidationError("random scenario: between 1 and " + std::to_string(kNumDistinctPathologies) + " agents");
  if (dim < 1) throw ValidationError("random scenario: dim must be >= 1");
  Scenario s;
  s.config.cloud_cap = cloud_cap;
  s.config.gamma = gamma;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (PathologyId id : all_pathologies()) {
    if (s.agents.size() == agents) break;
    if (id == PathologyId::semantic_warming) continue;  // alias of reheating
    AgentSpec a;
    a.pathology = id;
    a.lo = Eigen::VectorXd::Constant(dim, -1.5);
    a.hi = Eigen::VectorXd::Constant(dim, 1.5);
    Eigen::VectorXd t(dim);
    for (int k = 0; k < dim; ++k) t(k) = u(rng);
    a.target = t;
    s.agents.push_back(std::move(a));
  }
  return s;
}

std::string_view status_name(GameStatus s) {
  switch (s) {
    case GameStatus::converged: return "converged";
    case GameStatus::max_rounds: return "max_rounds";
    case GameStatus::diverged: return "diverged";
  }
  return "unknown";
}

namespace {

json array_of(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

json eps_json(const std::vector<double>& e) {
  json a = json::array();
  for (double v : e) a.push_back(std::isinf(v) ? json("inf") : json(v));
  return a;
}

}  // namespace

json to_json(const GameState& s) {
  json theta = json::array();
  for (const auto& t : s.theta) theta.push_back(array_of(t));
  return {{"theta", theta},
          {"status", std::string(status_name(s.status))},
          {"rounds", s.rounds},
          {"residual", s.residual},
          {"trajectory", s.trajectory},
          {"compute_used", s.compute_used},
          {"cap_slack", s.cap_slack}};
}

json to_json(const StackelbergResult& r, const DelegatedGame& game) {
  json steps = json::array();
  for (const auto& st : r.steps) {
    json viol = json::array();
    for (const auto& v : st.gate.violations)
      viol.push_back({{"agent", v.index},
                      {"pathology", std::string(name(game.agent(v.index).pathology))},
                      {"risk", v.risk},
                      {"eps", v.eps},
                      {"slack", v.slack}});
    steps.push_back({{"eps", eps_json(st.eps)},
                     {"risks", st.risks},
                     {"accepted", st.gate.feasible},
                     {"violations", viol},
                     {"rounds", st.state.rounds},
                     {"residual", st.state.residual}});
  }
  json out{{"steps", steps}, {"verdict", r.verdict}};
  out["least_restrictive"] = r.least_restrictive ? json(*r.least_restrictive) : json(nullptr);
  out["most_restrictive"] = r.most_restrictive ? json(*r.most_restrictive) : json(nullptr);
  return out;
}

}  // namespace patho
