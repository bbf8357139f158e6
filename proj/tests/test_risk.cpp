#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "patho/error.hpp"
#include "patho/risk.hpp"
#include "oracles.hpp"

using namespace patho;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

DetectorOutcome make_outcome(PathologyId id, double loss, bool fired) {
  DetectorOutcome o;
  o.pathology = id;
  o.subject = "s";
  o.severity = o.loss = loss;
  o.fired = fired;
  o.threshold = 0.5;
  return o;
}

}  // namespace

TEST_CASE("expectile matches the grid-search minimizer") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 30; ++trial) {
    const auto v = oracles::random_losses(rng, 10 + 37 * trial, trial);
    for (double tau : {0.1, 0.5, 0.9, 0.99}) {
      const double h = 1e-4;
      const double e = expectile(v, {.tau = tau});
      CHECK(std::abs(e - oracles::grid_expectile(v, tau, h)) <= h);
    }
  }
}

TEST_CASE("expectile examples") {
  const std::vector<double> v{1.0, 2.0, 3.0, 10.0};
  CHECK(expectile(v, {.tau = 0.5}) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(expectile(std::vector<double>{7.0}) == 7.0);
  CHECK(expectile(std::vector<double>{3.0, 3.0, 3.0}) == 3.0);
  CHECK(bernoulli_expectile(0.5, 0.9) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(bernoulli_expectile(0.0, 0.9) == 0.0);
  CHECK(bernoulli_expectile(1.0, 0.9) == 1.0);
  for (double p = 0.05; p < 1.0; p += 0.05)
    for (double tau : {0.2, 0.5, 0.9})
      CHECK(bernoulli_expectile(p, tau) == doctest::Approx(oracles::bernoulli_expectile(p, tau)).epsilon(1e-12));
}

TEST_CASE("expectile properties (property)") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::uniform_real_distribution<double> pos(0.1, 10.0);
  std::uniform_real_distribution<double> tau_dist(0.05, 0.95);
  for (int trial = 0; trial < 200; ++trial) {
    const auto v = oracles::random_losses(rng, 5 + trial % 50, trial);
    const double tau = tau_dist(rng);
    const ExpectileConfig cfg{.tau = tau};
    const double e = expectile(v, cfg);
    const double c = u(rng), a = pos(rng);
    const double scale = std::max(1.0, std::abs(e));

    std::vector<double> shifted = v, scaled = v, bigger = v;
    for (auto& x : shifted) x += c;
    for (auto& x : scaled) x *= a;
    for (std::size_t i = 0; i < bigger.size(); i += 2) bigger[i] += pos(rng);

    CHECK(std::abs(expectile(shifted, cfg) - (e + c)) <= 1e-9 * (scale + std::abs(c)));
    CHECK(std::abs(expectile(scaled, cfg) - a * e) <= 1e-9 * a * scale);
    CHECK(expectile(bigger, cfg) >= e - 1e-12);
    CHECK(e >= *std::min_element(v.begin(), v.end()) - 1e-12);
    CHECK(e <= *std::max_element(v.begin(), v.end()) + 1e-12);
    CHECK(expectile(v, {.tau = std::min(0.999, tau + 0.05)}) >= e - 1e-12);
    CHECK(std::abs(expectile(v, {.tau = 0.5}) - oracles::mean(v)) <= 1e-10 * std::max(1.0, std::abs(oracles::mean(v))));
    const auto d = expectile_detailed(v, cfg);
    CHECK(d.residual <= 1e-10);
    CHECK(d.iterations <= 200);
  }
}

TEST_CASE("weighted expectile equals the repeated-sample expectile") {
  const std::vector<double> values{0.0, 1.0, 4.0};
  const std::vector<double> weights{2.0, 1.0, 3.0};
  const std::vector<double> repeated{0.0, 0.0, 1.0, 4.0, 4.0, 4.0};
  for (double tau : {0.3, 0.7})
    CHECK(expectile(values, weights, {.tau = tau}) == doctest::Approx(expectile(repeated, {.tau = tau})).epsilon(1e-12));
}

TEST_CASE("expectile errors") {
  CHECK_THROWS_AS(expectile(std::vector<double>{}), DomainError);
  CHECK_THROWS_AS(expectile(std::vector<double>{1.0, NAN}), DomainError);
  CHECK_THROWS_AS(expectile(std::vector<double>{1.0}, {.tau = 0.0}), DomainError);
  CHECK_THROWS_AS(expectile(std::vector<double>{1.0}, {.tau = 1.0}), DomainError);
  CHECK_THROWS_AS(expectile(std::vector<double>{1.0, 2.0}, std::vector<double>{0.0, 0.0}), DomainError);
  CHECK_THROWS_AS(expectile(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, -1.0}), DomainError);
  try {
    expectile(std::vector<double>{0.0, 1.0, 2.0, 30.0}, {.tau = 0.9, .tol = 1e-10, .max_iter = 1});
    FAIL("expected a convergence error");
  } catch (const ConvergenceError& e) {
    CHECK(e.residual() > 0.0);
  }
}

TEST_CASE("deployment gate") {
  const std::vector<double> eps{0.1, 0.2, 0.3};
  CHECK(deployment_gate(std::vector<double>{0.0, 0.0, 0.0}, eps).feasible);
  CHECK(deployment_gate(std::vector<double>{0.1, 0.2, 0.3}, eps).feasible);  // inclusive
  const auto g = deployment_gate(std::vector<double>{0.15, 0.2, 0.9}, eps);
  CHECK_FALSE(g.feasible);
  REQUIRE(g.violations.size() == 2);
  CHECK(g.violations[0].index == 2);  // largest slack first
  CHECK(g.violations[1].index == 0);
  CHECK(g.violations[0].slack == doctest::Approx(0.6));
  CHECK(deployment_gate(std::vector<double>{NAN, 0.0, 0.0}, eps).feasible);
  CHECK(deployment_gate(std::vector<double>{5.0}, std::vector<double>{kInf}).feasible);
  CHECK_THROWS_AS(deployment_gate(std::vector<double>{1.0}, eps), ValidationError);
}

TEST_CASE("gate is monotone in eps (property)") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> risk(6), eps(6), looser(6);
    for (int i = 0; i < 6; ++i) {
      risk[i] = u(rng);
      eps[i] = u(rng);
      looser[i] = eps[i] + (u(rng) < 0.5 ? 0.0 : u(rng));
    }
    if (deployment_gate(risk, eps).feasible) CHECK(deployment_gate(risk, looser).feasible);
    // Accepting at a boundary: set eps to the risks themselves.
    CHECK(deployment_gate(risk, risk).feasible);
  }
}

TEST_CASE("risk report aggregates losses per pathology") {
  std::vector<DetectorOutcome> outcomes;
  const std::vector<double> losses{0.0, 0.2, 0.9, 1.0};
  for (double l : losses) outcomes.push_back(make_outcome(PathologyId::delusion, l, l >= 0.5));
  outcomes.push_back(make_outcome(PathologyId::overfitting, 0.05, false));
  std::vector<double> eps(kNumPathologies, 0.5);
  const auto rep = risk_report(outcomes, eps, {.tau = 0.9});
  REQUIRE(rep.entries.size() == kNumPathologies);
  const auto& d = rep.entries[index(PathologyId::delusion)];
  CHECK(d.n == 4);
  CHECK(d.value == doctest::Approx(oracles::grid_expectile(losses, 0.9, 1e-6)).epsilon(1e-5));
  CHECK(d.mean == doctest::Approx(0.525));
  CHECK(d.fired_rate == 0.5);
  CHECK_FALSE(d.within);
  CHECK(rep.entries[index(PathologyId::overfitting)].within);
  CHECK_FALSE(rep.entries[index(PathologyId::illusion)].available);
  CHECK_FALSE(rep.feasible);
  REQUIRE(rep.violations.size() == 1);
  CHECK(rep.violations[0] == PathologyId::delusion);
  CHECK(rep.pathology_count() == 35);
  CHECK(rep.distinct_pathology_count() == 34);

  const auto j = rep.to_json();
  CHECK(j.at("covered_pathologies") == 2);
  CHECK(j.at("entries").size() == 35);
  CHECK(rep.to_csv().rfind("pathology,tau,n,R,eps,feasible\n", 0) == 0);

  const auto half = risk_report(outcomes, eps, {.tau = 0.5});
  CHECK(half.entries[index(PathologyId::delusion)].value == doctest::Approx(0.525).epsilon(1e-12));

  CHECK_THROWS_AS(risk_report(outcomes, std::vector<double>(34, 1.0)), ValidationError);
  CHECK_THROWS_AS(risk_report({}, eps), InsufficientDataError);
}

TEST_CASE("eps thresholds from JSON") {
  using nlohmann::json;
  auto e = eps_from_json(json{{"default", 0.3}, {"delusion", "inf"}});
  CHECK(e.size() == kNumPathologies);
  CHECK(std::isinf(e[index(PathologyId::delusion)]));
  CHECK(e[index(PathologyId::illusion)] == 0.3);
  CHECK(eps_from_json(json::object(), 0.7)[5] == 0.7);
  CHECK_THROWS_AS(eps_from_json(json{{"not_a_pathology", 1.0}}), ValidationError);
  CHECK_THROWS_AS(eps_from_json(json::array({1.0, 2.0})), ValidationError);
  CHECK_THROWS_AS(eps_from_json(json{{"default", "lots"}}), ValidationError);
}

TEST_CASE("pareto scan matches brute force (property)") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> coarse(0, 4);  // coarse values force ties and duplicates
  std::normal_distribution<double> fine(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + trial % 30, m = 1 + trial % 4;
    Eigen::MatrixXd obj(n, m);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < m; ++k) obj(i, k) = trial % 2 ? coarse(rng) : fine(rng);
    const auto res = pareto_scan(obj);
    CHECK(res.front == oracles::brute_force_pareto(obj));
    CHECK(res.non_aligned == (res.front.size() >= 2));
  }
  Eigen::MatrixXd one(1, 2);
  one << 1, 2;
  CHECK_THROWS_AS(pareto_scan(one), ValidationError);
  Eigen::MatrixXd bad(2, 2);
  bad << 1, NAN, 0, 0;
  CHECK_THROWS_AS(pareto_scan(bad), DomainError);
}

TEST_CASE("pareto examples") {
  Eigen::MatrixXd dominated(2, 2);
  dominated << 0.1, 0.1, 0.2, 0.2;
  CHECK(pareto_scan(dominated).front == std::vector<std::size_t>{0});
  CHECK_FALSE(pareto_scan(dominated).non_aligned);
  Eigen::MatrixXd traded(2, 2);
  traded << 0.1, 0.9, 0.9, 0.1;
  CHECK(pareto_scan(traded).front.size() == 2);
}

TEST_CASE("bluffing sweep trades fluency against grounding") {
  const auto sweep = bluffing_family_sweep({.seed = 3});
  REQUIRE(sweep.objectives.rows() == 11);
  for (Eigen::Index c = 1; c < sweep.objectives.rows(); ++c) {
    CHECK(sweep.objectives(c, 0) < sweep.objectives(c - 1, 0));
    CHECK(sweep.objectives(c, 1) > sweep.objectives(c - 1, 1));
  }
  CHECK(sweep.pareto.front.size() == 11);
  CHECK(sweep.pareto.non_aligned);
}

TEST_CASE("binary expectile is monotone in p") {
  std::vector<double> grid;
  for (int k = 0; k <= 100; ++k) grid.push_back(k / 100.0);
  const auto t = expvar_binary_monotonicity_check(grid, 0.9);
  CHECK(t.monotone);
  CHECK(t.zero_at_zero);
  CHECK(t.rows.size() == 101);
  CHECK(t.rows[50].value == doctest::Approx(0.9));
}
