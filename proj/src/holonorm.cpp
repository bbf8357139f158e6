#include "patho/holonorm.hpp"

#include <Eigen/Eigenvalues>
#include <numbers>

namespace patho {

DeterminantLemmaCheck matrix_determinant_lemma_check(double alpha, double beta, const Eigen::VectorXd& u) {
  if (alpha == 0.0) throw DomainError("determinant lemma: alpha must be nonzero");
  const Eigen::Index d = u.size();
  const Eigen::MatrixXd m = alpha * Eigen::MatrixXd::Identity(d, d) + beta * u * u.transpose();
  DeterminantLemmaCheck c;
  c.lhs = m.partialPivLu().determinant();
  c.rhs = std::pow(alpha, static_cast<double>(d - 1)) * (alpha + beta * u.squaredNorm());
  c.abs_error = std::abs(c.lhs - c.rhs);
  c.rel_error = c.rhs != 0.0 ? c.abs_error / std::abs(c.rhs) : c.abs_error;
  return c;
}

Eigen::MatrixXd finite_difference_jacobian_inverse_hn(const Eigen::VectorXd& y, double h) {
  const Eigen::Index d = y.size();
  Eigen::MatrixXd j(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    Eigen::VectorXd hi = y, lo = y;
    hi(k) += h;
    lo(k) -= h;
    j.col(k) = (inverse_hn(hi) - inverse_hn(lo)) / (2.0 * h);
  }
  return j;
}

nlohmann::json DegeneracyReport::to_json() const {
  return {{"probes", probes},
          {"degenerate_max_diff", degenerate_max_diff},
          {"degenerate_constant", degenerate_constant},
          {"normal_min_pair_diff", normal_min_pair_diff},
          {"normal_distinct", normal_distinct},
          {"residual_path_max_diff", residual_path_max_diff},
          {"feedforward_pointwise", feedforward_pointwise}};
}

nlohmann::json DensityCheckReport::to_json() const {
  return {{"dim", dim},
          {"samples", samples},
          {"bins_per_axis", bins_per_axis},
          {"widened", widened},
          {"note", note},
          {"qualifying_bins", qualifying_bins},
          {"mean_abs_rel_error", mean_abs_rel_error},
          {"max_abs_rel_error", max_abs_rel_error},
          {"tolerance", tolerance},
          {"passed", passed},
          {"mass_inside_ball", mass_inside_ball},
          {"origin_density_empirical", origin_density_empirical},
          {"origin_density_formula", origin_density_formula}};
}

double holonorm_normal_density(std::span<const double> y) {
  double r2 = 0.0;
  for (double v : y) r2 += v * v;
  const double r = std::sqrt(r2);
  if (r >= 1.0) return 0.0;
  const double d = static_cast<double>(y.size());
  const double x2 = r2 / ((1.0 - r) * (1.0 - r));
  const double px = std::exp(-0.5 * x2) / std::pow(2.0 * std::numbers::pi, 0.5 * d);
  return px * std::pow(1.0 - r, -(d + 1.0));
}

namespace {

// Golub-Welsch: nodes and weights of n-point Gauss-Legendre on [-1, 1].
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int n) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    t(k, k - 1) = t(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  const Eigen::VectorXd w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
  return {es.eigenvalues(), w};
}

constexpr long kChunk = 1 << 14;

// Y = hn(X) samples, row-major, D values per sample. Chunk c draws from its own
// stream seeded by (seed, c), so results do not depend on how chunks are run.
std::vector<double> draw_holonorm_samples(int dim, long n, std::uint64_t seed) {
  std::vector<double> ys(static_cast<std::size_t>(n) * static_cast<std::size_t>(dim));
  std::vector<double> x(static_cast<std::size_t>(dim));
  for (long start = 0, chunk = 0; start < n; start += kChunk, ++chunk) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(chunk)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (long i = start; i < std::min(n, start + kChunk); ++i) {
      double r2 = 0.0;
      for (auto& v : x) {
        v = normal(rng);
        r2 += v * v;
      }
      const double s = 1.0 / (1.0 + std::sqrt(r2));
      for (int k = 0; k < dim; ++k) ys[static_cast<std::size_t>(i * dim + k)] = x[static_cast<std::size_t>(k)] * s;
    }
  }
  return ys;
}

}  // namespace

DensityCheckReport density_transform_check(const DensityCheckConfig& cfg) {
  if (cfg.dim != 1 && cfg.dim != 2) throw ValidationError("density check: dimension must be 1 or 2");
  if (cfg.samples < 1) throw ValidationError("density check: samples must be positive");
  const int dim = cfg.dim;
  const long n = cfg.samples;
  int bins = cfg.bins_per_axis > 0 ? cfg.bins_per_axis : (dim == 1 ? 50 : 20);

  DensityCheckReport rep;
  rep.dim = dim;
  rep.samples = n;
  rep.tolerance = cfg.tolerance;
  rep.origin_density_formula = std::pow(2.0 * std::numbers::pi, -0.5 * dim);

  const auto ys = draw_holonorm_samples(dim, n, cfg.seed);
  long inside = 0, near_origin = 0;
  const double origin_half = dim == 1 ? 0.01 : 0.025;
  for (long i = 0; i < n; ++i) {
    double r2 = 0.0;
    bool near = true;
    for (int k = 0; k < dim; ++k) {
      const double v = ys[static_cast<std::size_t>(i * dim + k)];
      r2 += v * v;
      near = near && std::abs(v) < origin_half;
    }
    inside += r2 < 1.0 ? 1 : 0;
    near_origin += near ? 1 : 0;
  }
  rep.mass_inside_ball = static_cast<double>(inside) / static_cast<double>(n);
  rep.origin_density_empirical =
      static_cast<double>(near_origin) / (static_cast<double>(n) * std::pow(2.0 * origin_half, dim));

  const auto [nodes, weights] = gauss_legendre(8);
  for (;;) {
    const double width = 2.0 / bins;
    const auto cells = static_cast<std::size_t>(dim == 1 ? bins : bins * bins);
    std::vector<long> counts(cells, 0);
    for (long i = 0; i < n; ++i) {
      std::size_t cell = 0;
      for (int k = 0; k < dim; ++k) {
        const double v = ys[static_cast<std::size_t>(i * dim + k)];
        const auto b = std::clamp(static_cast<int>(std::floor((v + 1.0) / width)), 0, bins - 1);
        cell = cell * static_cast<std::size_t>(bins) + static_cast<std::size_t>(b);
      }
      ++counts[cell];
    }

    const double cell_volume = std::pow(width, dim);
    double total_err = 0.0, max_err = 0.0;
    std::size_t qualifying = 0;
    for (std::size_t c = 0; c < cells; ++c) {
      if (counts[c] < cfg.min_bin_count) continue;
      const int bx = dim == 1 ? static_cast<int>(c) : static_cast<int>(c) / bins;
      const int by = dim == 1 ? 0 : static_cast<int>(c) % bins;
      const double x0 = -1.0 + bx * width, y0 = -1.0 + by * width;
      double mass = 0.0;
      for (Eigen::Index a = 0; a < nodes.size(); ++a) {
        const double xa = x0 + 0.5 * width * (nodes(a) + 1.0);
        if (dim == 1) {
          const double p[] = {xa};
          mass += weights(a) * holonorm_normal_density(p);
        } else {
          for (Eigen::Index b = 0; b < nodes.size(); ++b) {
            const double p[] = {xa, y0 + 0.5 * width * (nodes(b) + 1.0)};
            mass += weights(a) * weights(b) * holonorm_normal_density(p);
          }
        }
      }
      mass *= std::pow(0.5 * width, dim);
      const double expected = mass / cell_volume;
      const double empirical = static_cast<double>(counts[c]) / (static_cast<double>(n) * cell_volume);
      const double err = std::abs(empirical - expected) / expected;
      total_err += err;
      max_err = std::max(max_err, err);
      ++qualifying;
    }

    if (qualifying < static_cast<std::size_t>(cfg.min_qualifying_bins) && bins > 2) {
      bins /= 2;
      rep.widened = true;
      rep.note = "too few bins held " + std::to_string(cfg.min_bin_count) + " samples; widened to " +
                 std::to_string(bins) + " bins per axis";
      continue;
    }
    rep.bins_per_axis = bins;
    rep.qualifying_bins = qualifying;
    rep.mean_abs_rel_error = qualifying ? total_err / static_cast<double>(qualifying) : 0.0;
    rep.max_abs_rel_error = max_err;
    rep.passed = qualifying > 0 && rep.mean_abs_rel_error <= cfg.tolerance;
    if (qualifying == 0) rep.note = "no bin held enough samples";
    return rep;
  }
}

}  // namespace patho
