// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "patho/cli.hpp"
#include "patho/game.hpp"
#include "patho/generative.hpp"
#include "patho/holonorm.hpp"
#include "patho/risk.hpp"
#include "oracles.hpp"

using namespace patho;
namespace fs = std::filesystem;

namespace {

// Collects failed conditions; a criterion passes when none were recorded.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Eigen::VectorXd in_ball(std::mt19937_64& rng, int d, double rmax) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd v(d);
  for (int k = 0; k < d; ++k) v(k) = n(rng);
  return v.normalized() * rmax * std::pow(u(rng), 1.0 / d);
}

void expectile_engine(Check& c) {
  std::mt19937_64 rng(2024);
  const std::size_t sizes[] = {10, 1000, 100000};
  const double taus[] = {0.1, 0.5, 0.9, 0.99};
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto losses = oracles::random_losses(rng, sizes[k % 3], k / 3);
    const double tau = taus[k % 4];
    const double r = expectile(losses, {.tau = tau});
    const double g = oracles::grid_expectile(losses, tau, 1e-4);
    worst = std::max(worst, std::abs(r - g));
    const double m = expectile(losses, {.tau = 0.5});
    c.expect(std::abs(m - oracles::mean(losses)) <= 1e-10, "tau=0.5 mean mismatch on vector " + std::to_string(k));
  }
  c.expect(worst <= 1e-4, "grid disagreement " + num(worst));
  c.expect(std::abs(bernoulli_expectile(0.5, 0.9) - 0.9) <= 1e-6, "Bernoulli(1/2) at tau 0.9");
  const std::vector<double> coin{0.0, 1.0};
  c.expect(std::abs(expectile(coin, {.tau = 0.9}) - 0.9) <= 1e-6, "two-point sample at tau 0.9");
}

void density(Check& c) {
  for (int d : {1, 2}) {
    const auto rep = density_transform_check({.dim = d, .samples = 100000, .seed = 7});
    c.expect(rep.passed && rep.mean_abs_rel_error <= 0.1,
             "D=" + std::to_string(d) + " mean relative error " + num(rep.mean_abs_rel_error));
  }
}

void jacobian(Check& c) {
  std::mt19937_64 rng(5);
  double worst_fd = 0.0;
  for (int d : {1, 2, 3, 8})
    for (int k = 0; k < 200; ++k) {
      const Eigen::VectorXd y = in_ball(rng, d, 0.9);
      const double det = det_jacobian_inverse_hn(y);
      const double fd = oracles::dense_determinant(oracles::fd_jacobian_inverse_hn(y, 1e-6));
      worst_fd = std::max(worst_fd, std::abs(det - fd) / std::abs(det));
    }
  c.expect(worst_fd <= 1e-5, "determinant vs finite differences " + num(worst_fd));

  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 50);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst_lemma = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int d = dim(rng);
    const double alpha = (u(rng) < 0 ? -1.0 : 1.0) * (0.5 + 0.75 * (u(rng) + 1.0));
    const double beta = u(rng);
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v(i) = 0.3 * n(rng) / std::sqrt(d);
    const auto lem = matrix_determinant_lemma_check(alpha, beta, v);
    const Eigen::MatrixXd m = alpha * Eigen::MatrixXd::Identity(d, d) + beta * v * v.transpose();
    const double oracle = oracles::dense_determinant(m);
    worst_lemma = std::max(worst_lemma, std::abs(lem.rhs - oracle) / std::abs(oracle));
  }
  c.expect(worst_lemma <= 1e-8, "determinant lemma " + num(worst_lemma));
}

void detectors(Check& c) {
  int cases = 0;
  for (PathologyId id : all_pathologies()) {
    for (bool positive : {true, false}) {
      const auto o = fixtures::evaluate(id, positive ? fixtures::positive_fixture(id) : fixtures::negative_fixture(id));
      c.expect(o.fired == positive, std::string(name(id)) + (positive ? " silent on positive" : " fired on negative"));
      ++cases;
    }
  }
  c.expect(cases == 70, "expected 70 cases, ran " + std::to_string(cases));

  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Eigen::MatrixXd q = fixtures::random_orthogonal(fixtures::kDim, seed);
    const Eigen::MatrixXd qs = fixtures::random_orthogonal(fixtures::kStyleDim, seed + 100);
    for (PathologyId id : all_pathologies()) {
      if (!is_rotation_invariant(id)) continue;
      for (bool positive : {true, false}) {
        const auto f = positive ? fixtures::positive_fixture(id) : fixtures::negative_fixture(id);
        const auto a = fixtures::evaluate(id, f);
        const auto b = fixtures::evaluate(id, fixtures::rotate(f, q, qs));
        worst = std::max(worst, std::abs(a.severity - b.severity));
        c.expect(a.fired == b.fired, std::string(name(id)) + " verdict changed under rotation");
      }
    }
  }
  c.expect(worst <= 1e-9, "rotation invariance " + num(worst));
}

void degeneracy(Check& c) {
  const auto m = HolonormModel<double>::random(2, 8, 2, 16, 7);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Eigen::MatrixXd> probes;
  for (int p = 0; p < 10; ++p) {
    Eigen::MatrixXd z(5, 8);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = n(rng);
    probes.push_back(z);
  }
  const auto rep = constant_param_degeneracy_check(m, probes);
  c.expect(rep.degenerate_max_diff <= 1e-12, "constant q/k/v outputs differ by " + num(rep.degenerate_max_diff));
  c.expect(rep.normal_distinct, "normal mode outputs not distinct");
}

AgentSpec quadratic(PathologyId id, const Eigen::VectorXd& target) {
  AgentSpec a;
  a.pathology = id;
  a.lo = Eigen::VectorXd::Constant(target.size(), -10.0);
  a.hi = Eigen::VectorXd::Constant(target.size(), 10.0);
  a.target = target;
  return a;
}

void game(Check& c) {
  {
    GameConfig cfg;
    cfg.cloud_cap = 100.0;
    std::vector<AgentSpec> agents;
    for (int i = 0; i < 6; ++i) agents.push_back(quadratic(all_pathologies()[i], fixtures::vec({0.2 * i - 0.5, 0.3})));
    const auto s = DelegatedGame(agents, cfg).solve();
    c.expect(s.rounds == 1 && s.status == GameStatus::converged, "decoupled game took " + std::to_string(s.rounds) +
                                                                     " rounds");
    for (int i = 0; i < 6; ++i)
      c.expect((s.theta[i] - *agents[i].target / (1.0 + cfg.lambda * cfg.kappa)).norm() <= 1e-9,
               "decoupled agent " + std::to_string(i) + " off its minimum");
  }
  {
    const auto sc = random_quadratic_scenario(34, 3, 5.0, 0.2, 42);
    const DelegatedGame g(sc.agents, sc.config);
    const auto s = g.solve();
    const double res = g.nash_residual(s.theta);
    c.expect(s.rounds <= 200 && res <= 1e-6, "34-agent residual " + num(res) + " after " + std::to_string(s.rounds));
  }
  {
    const Eigen::VectorXd t = fixtures::vec({1.0, -0.5, 0.25});
    for (double cap : {10.0, 0.1}) {
      GameConfig cfg;
      cfg.gamma = 0.5;
      cfg.cloud_cap = cap;
      cfg.tol = 1e-13;
      const auto s = DelegatedGame({quadratic(PathologyId::delusion, t), quadratic(PathologyId::illusion, t)}, cfg).solve();
      const Eigen::VectorXd k = oracles::symmetric_kkt(t, cfg.lambda, cfg.kappa, cfg.gamma, cap);
      const double err = std::max((s.theta[0] - k).norm(), (s.theta[1] - k).norm());
      c.expect(err <= 1e-6, "KKT mismatch " + num(err) + " at cap " + num(cap));
    }
  }
  {
    const double inf = std::numeric_limits<double>::infinity();
    const double below = std::nextafter(0.3, 0.0);
    const std::vector<double> risk{0.3, 0.1, std::nan("")};
    c.expect(deployment_gate(risk, std::vector<double>{0.3, 0.1, 0.0}).feasible, "R = eps must be accepted");
    c.expect(!deployment_gate(risk, std::vector<double>{below, 0.1, 0.0}).feasible, "R > eps must be rejected");
    c.expect(deployment_gate(risk, std::vector<double>{inf, inf, inf}).feasible, "infinite eps must accept");
    const auto g = deployment_gate(risk, std::vector<double>{0.0, 0.0, 0.0});
    c.expect(!g.feasible && g.violations.size() == 2 && g.violations[0].index == 0, "violation list");
  }
}

void pareto(Check& c) {
  const auto sw = bluffing_family_sweep({.seed = 1});
  c.expect(sw.pareto.front.size() >= 2, "front size " + std::to_string(sw.pareto.front.size()));
  c.expect(sw.pareto.non_aligned, "front not flagged non-aligned");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void reproducibility(Check& c) {
  std::random_device rd;
  const fs::path root = fs::temp_directory_path() / ("patho_accept_" + std::to_string(rd()));
  const fs::path data = PATHO_TEST_DATA;
  const std::string outcomes = (data / "golden/audit_traces.json").string();
  const std::vector<std::vector<std::string>> runs{
      {"audit", "--corpus", (data / "traces.jsonl").string(), "--kb", (data / "kb.json").string(), "--causal",
       (data / "causal.json").string(), "--seed", "3"},
      {"audit", "--kind", "classification", "--corpus", (data / "classifications.jsonl").string()},
      {"risk", "--outcomes", outcomes, "--tau", "0.9"},
      {"holonorm-verify", "--seed", "7", "--samples", "20000"},
      {"game", "--random-agents", "34", "--seed", "42"},
      {"game", "--scenario", (data / "scenario.json").string()},
      {"pareto", "--seed", "1"},
      {"report", "--outcomes", outcomes},
  };
  for (std::size_t k = 0; k < runs.size(); ++k) {
    for (const char* rep : {"a", "b"}) {
      auto args = runs[k];
      args.insert(args.end(), {"--out", (root / (std::to_string(k) + rep)).string()});
      std::ostringstream out, err;
      const int code = cli::run(args, out, err);
      c.expect(code == 0, runs[k][0] + " exited " + std::to_string(code) + ": " + err.str());
    }
    const fs::path a = root / (std::to_string(k) + "a"), b = root / (std::to_string(k) + "b");
    int files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
      const auto f = e.path().filename();
      if (f == "holonorm_timings.json") continue;  // wall-clock, declared volatile in the manifest
      c.expect(slurp(a / f) == slurp(b / f), runs[k][0] + ": " + f.string() + " differs");
      ++files;
    }
    c.expect(files >= 2, runs[k][0] + " wrote no outputs");
  }
  std::error_code ec;
  fs::remove_all(root, ec);
}

}  // namespace

int main() {
  const std::vector<std::tuple<int, std::string, std::function<void(Check&)>, double>> criteria{
      {1, "expectile engine vs grid oracle", expectile_engine, 5.0},
      {2, "holonorm density theorem", density, 30.0},
      {3, "Jacobian determinant and determinant lemma", jacobian, 0.0},
      {4, "detector registry (70 fixtures) and rotation invariance", detectors, 0.0},
      {5, "constant q/k/v degeneracy", degeneracy, 0.0},
      {6, "delegated game and deployment gate", game, 0.0},
      {7, "Pareto non-alignment", pareto, 0.0},
      {8, "CLI reproducibility", reproducibility, 0.0},
  };
  int failed = 0;
  for (const auto& [id, label, fn, budget] : criteria) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget > 0.0 && secs > budget) c.failures.push_back("took " + num(secs) + " s, budget " + num(budget) + " s");
    const bool ok = c.failures.empty();
    failed += ok ? 0 : 1;
    std::printf("[%s] criterion %d: %s (%.2f s)\n", ok ? "PASS" : "FAIL", id, label.c_str(), secs);
    for (const auto& f : c.failures) std::printf("       %s\n", f.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
