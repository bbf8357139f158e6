#include "patho/metrics.hpp"

#include <numbers>
#include <random>

namespace patho {

double fluency(std::span<const double> token_logprobs) {
  if (token_logprobs.empty()) throw DomainError("fluency: empty token sequence");
  double sum = 0.0;
  for (double lp : token_logprobs) {
    if (!(lp <= 0.0)) throw DomainError("fluency: log-probabilities must be <= 0");
    sum += lp;
  }
  return std::exp(sum / static_cast<double>(token_logprobs.size()));
}

Eigen::MatrixXd stack_rows(std::span<const Eigen::VectorXd> rows) {
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) throw DomainError("stack_rows: vectors differ in length");
    m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
  return m;
}

namespace {

// Cell index of each row after projecting onto `dims` seeded Gaussian directions
// and binning every projected coordinate into `bins` equal-width bins.
std::vector<std::size_t> project_and_bin(const Eigen::MatrixXd& samples, int dims, int bins, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd proj(samples.cols(), dims);
  for (Eigen::Index j = 0; j < proj.cols(); ++j)
    for (Eigen::Index i = 0; i < proj.rows(); ++i) proj(i, j) = normal(rng);
  const Eigen::MatrixXd z = samples * proj;

  std::vector<std::size_t> cell(static_cast<std::size_t>(z.rows()), 0);
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double lo = z.col(j).minCoeff();
    const double hi = z.col(j).maxCoeff();
    const double width = (hi - lo) / bins;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      std::size_t b = 0;
      if (width > 0.0) {
        b = static_cast<std::size_t>((z(i, j) - lo) / width);
        b = std::min<std::size_t>(b, static_cast<std::size_t>(bins - 1));
      }
      auto& c = cell[static_cast<std::size_t>(i)];
      c = c * static_cast<std::size_t>(bins) + b;
    }
  }
  return cell;
}

}  // namespace

double mutual_information(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys, const MIEstimatorConfig& cfg) {
  if (cfg.num_bins_per_axis < 2) throw DomainError("mutual_information: need at least 2 bins per axis");
  if (cfg.projection_dims < 1) throw DomainError("mutual_information: projection_dims must be positive");
  if (xs.rows() != ys.rows()) throw DomainError("mutual_information: unpaired samples");
  const double cells_per_side = std::pow(static_cast<double>(cfg.num_bins_per_axis), cfg.projection_dims);
  if (cells_per_side > 1e6) throw DomainError("mutual_information: too many bins");
  const double min_samples = 4.0 * cells_per_side * cells_per_side;
  const auto n = static_cast<std::size_t>(xs.rows());
  if (static_cast<double>(n) < min_samples)
    throw InsufficientDataError("mutual_information: " + std::to_string(n) + " samples, need at least " +
                                std::to_string(static_cast<long long>(min_samples)));

  const auto cx = project_and_bin(xs, cfg.projection_dims, cfg.num_bins_per_axis, cfg.seed);
  const auto cy = project_and_bin(ys, cfg.projection_dims, cfg.num_bins_per_axis, cfg.seed);
  const auto side = static_cast<std::size_t>(cells_per_side);
  std::vector<double> joint(side * side, 0.0), px(side, 0.0), py(side, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    joint[cx[i] * side + cy[i]] += 1.0;
    px[cx[i]] += 1.0;
    py[cy[i]] += 1.0;
  }
  const double nn = static_cast<double>(n);
  double mi = 0.0;
  for (std::size_t a = 0; a < side; ++a)
    for (std::size_t b = 0; b < side; ++b) {
      const double c = joint[a * side + b];
      if (c > 0.0) mi += c / nn * std::log(c * nn / (px[a] * py[b]));
    }
  return std::max(0.0, mi);
}

double mutual_information(std::span<const Eigen::VectorXd> xs, std::span<const Eigen::VectorXd> ys,
                          const MIEstimatorConfig& cfg) {
  return mutual_information(stack_rows(xs), stack_rows(ys), cfg);
}

double coherence(std::span<const Eigen::VectorXd> claims, const KnowledgeBase& kb, SimilarityConfig cfg) {
  if (kb.entries.empty()) throw DomainError("coherence: empty knowledge base");
  if (claims.empty()) throw DomainError("coherence: no claims");
  double total = 0.0;
  for (const auto& c : claims) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& e : kb.entries) best = std::max(best, sim(c, e.embedding, cfg));
    total += best;
  }
  return total / static_cast<double>(claims.size());
}

double avg_pairwise_similarity(std::span<const Eigen::VectorXd> outputs, SimilarityConfig cfg) {
  const std::size_t t = outputs.size();
  if (t < 2) throw DomainError("avg_pairwise_similarity: need at least two embeddings");
  double total = 0.0;
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = i + 1; j < t; ++j) total += sim(outputs[i], outputs[j], cfg);
  return 2.0 * total / (static_cast<double>(t) * static_cast<double>(t - 1));
}

double semantic_entropy(const Eigen::MatrixXd& samples, double ridge) {
  if (ridge < 0.0) throw DomainError("semantic_entropy: ridge must be >= 0");
  const Eigen::Index n = samples.rows();
  const Eigen::Index d = samples.cols();
  if (n == 0 || d == 0) throw DomainError("semantic_entropy: no samples");
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  if (n >= 2) {
    const Eigen::RowVectorXd mean = samples.colwise().mean();
    const Eigen::MatrixXd centered = samples.rowwise() - mean;
    cov = centered.transpose() * centered / static_cast<double>(n - 1);
  }
  cov.diagonal().array() += ridge;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw DomainError("semantic_entropy: singular covariance (use ridge > 0)");
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  if (!std::isfinite(logdet)) throw DomainError("semantic_entropy: singular covariance (use ridge > 0)");
  constexpr double two_pi_e = 2.0 * std::numbers::pi * std::numbers::e;
  return 0.5 * (static_cast<double>(d) * std::log(two_pi_e) + logdet);
}

double semantic_entropy(std::span<const Eigen::VectorXd> samples, double ridge) {
  return semantic_entropy(stack_rows(samples), ridge);
}

double least_squares_slope(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) throw InsufficientDataError("least_squares_slope: need at least two points");
  const double xbar = static_cast<double>(n - 1) / 2.0;
  double ybar = 0.0;
  for (double v : values) ybar += v;
  ybar /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = static_cast<double>(i) - xbar;
    sxy += dx * (values[i] - ybar);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

double windowed_slope(std::span<const double> values, int window) {
  if (window < 2) throw DomainError("windowed_slope: window must be >= 2");
  const std::size_t w = std::min(values.size(), static_cast<std::size_t>(window));
  return least_squares_slope(values.last(w));
}

}  // namespace patho
