#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "patho/pathology.hpp"
#include "patho/risk.hpp"

namespace patho {

struct Sample {
  Eigen::VectorXd x;
  double y = 0.0;
};

/// One follower agent owning a pathology. Its risk surrogate is either the
/// quadratic |theta - target|^2 or the least-squares loss mean (y - theta.x)^2
/// over its samples (the agent's slice of the mean field).
struct AgentSpec {
  PathologyId pathology{};
  Eigen::VectorXd lo, hi;  // box
  std::optional<Eigen::VectorXd> target;
  std::vector<Sample> samples;
  double quality = 1.0;  // annotated Qual(mu_i), checked against tau_data
  std::optional<Eigen::VectorXd> theta0;

  Eigen::Index dim() const { return lo.size(); }
};

enum class SweepMode { gauss_seidel, jacobi };
enum class GameStatus { converged, max_rounds, diverged };

/// Agent i minimizes
///   J_i = R_i(theta_i) + lambda (kappa |theta_i|^2 + gamma theta_i . mean_{j != i} theta_j)
/// subject to its box and kappa |theta_i|^2 <= share_i * cloud_cap, which keeps
/// the joint cap sum_i kappa |theta_i|^2 <= cloud_cap.
struct GameConfig {
  double lambda = 1.0;
  double kappa = 0.1;
  double gamma = 0.0;
  double cloud_cap = 1.0;
  double tau_data = 0.0;
  std::vector<double> share_weights;  // empty: equal shares
  SweepMode mode = SweepMode::gauss_seidel;
  int max_rounds = 200;
  double tol = 1e-9;
  int inner_max_iter = 20000;
  double inner_tol = 1e-14;
  int divergence_window = 10;
};

struct GameState {
  std::vector<Eigen::VectorXd> theta;
  GameStatus status = GameStatus::max_rounds;
  int rounds = 0;
  double residual = 0.0;  // max_i J_i(theta_i) - J_i(best response)
  std::vector<double> trajectory;  // residual after each round
  std::vector<double> compute_used;  // kappa |theta_i|^2
  double cap_slack = 0.0;            // cloud_cap - sum compute_used
};

/// Euclidean projection onto {lo <= x <= hi} intersected with {|x| <= radius}:
/// clamp(t / (1 + nu), lo, hi) with the smallest nu >= 0 meeting the ball,
/// found by bisection. Throws InfeasibleError when the sets do not meet.
Eigen::VectorXd project_box_ball(const Eigen::VectorXd& t, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                 double radius);

class DelegatedGame {
 public:
  /// Validates shapes and checks Qual(mu_i) >= tau_data and that every box
  /// meets its budget ball (InfeasibleError otherwise).
  DelegatedGame(std::vector<AgentSpec> agents, GameConfig cfg);

  std::size_t size() const { return agents_.size(); }
  const AgentSpec& agent(std::size_t i) const { return agents_.at(i); }
  const GameConfig& config() const { return cfg_; }
  /// Budget radius sqrt(share_i * cloud_cap / kappa).
  double radius(std::size_t i) const { return radius_.at(i); }

  double cost(std::size_t i, const Eigen::VectorXd& theta_i, const std::vector<Eigen::VectorXd>& theta) const;
  /// Projected gradient descent on J_i with step 1 / L, others held fixed.
  Eigen::VectorXd best_response(std::size_t i, const std::vector<Eigen::VectorXd>& theta) const;
  double nash_residual(const std::vector<Eigen::VectorXd>& theta) const;
  /// Feasible starting profile: theta0 when given (must be feasible), else the
  /// projection of 0.
  std::vector<Eigen::VectorXd> initial_profile() const;

  /// Cyclic (or Jacobi) best responses until residual <= tol, max_rounds, or
  /// the residual has grown for divergence_window consecutive rounds.
  GameState solve() const;

  /// Per-agent expectile of the surrogate losses at theta.
  std::vector<double> agent_risks(const std::vector<Eigen::VectorXd>& theta, const ExpectileConfig& ecfg) const;

  std::vector<double> losses(std::size_t i, const Eigen::VectorXd& theta_i) const;

 private:
  std::vector<AgentSpec> agents_;
  GameConfig cfg_;
  std::vector<Eigen::MatrixXd> h_;
  std::vector<Eigen::VectorXd> b_;
  std::vector<double> c_;
  std::vector<double> radius_;
  std::vector<double> step_;
};

GameState solve_nash(const DelegatedGame& game);

struct StackelbergStep {
  std::vector<double> eps;
  GameState state;
  std::vector<double> risks;
  GateResult gate;
};

struct StackelbergResult {
  std::vector<StackelbergStep> steps;
  /// Least restrictive accepted eps: maximal under componentwise order,
  /// earliest in the schedule among incomparable maxima.
  std::optional<std::size_t> least_restrictive;
  std::optional<std::size_t> most_restrictive;
  std::string verdict;  // "deployable" or "no deployable configuration"
};

/// Leader loop: for each eps (one entry per agent) the followers' equilibrium
/// is solved and gated. Throws ValidationError on an empty schedule.
StackelbergResult stackelberg_loop(const DelegatedGame& game, const std::vector<std::vector<double>>& schedule,
                                   const ExpectileConfig& ecfg = {});

struct Scenario {
  std::vector<AgentSpec> agents;
  GameConfig config;
  std::vector<std::vector<double>> eps_schedule;
  ExpectileConfig expectile;
};

/// Reads the scenario JSON (agents, boxes, targets or samples, lambda, kappa,
/// gamma, cloud_cap, tau_data, eps schedule).
Scenario scenario_from_json(const nlohmann::json& j);

/// Seeded scenario: one agent per distinct pathology up to `agents`, quadratic
/// targets in [-2, 2]^dim, boxes [-1.5, 1.5]^dim, mean-field coupling gamma.
Scenario random_quadratic_scenario(std::size_t agents, int dim, double cloud_cap, double gamma, std::uint64_t seed);

nlohmann::json to_json(const GameState& s);
nlohmann::json to_json(const StackelbergResult& r, const DelegatedGame& game);
std::string_view status_name(GameStatus s);

}  // namespace patho
