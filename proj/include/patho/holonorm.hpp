#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "patho/error.hpp"

namespace patho {

/// hn(x) = x / (1 + |x|), a bijection of R^D onto the open unit ball.
template <class Derived>
typename Derived::PlainObject hn(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return x / (Scalar(1) + x.norm());
}

/// hn applied to each row of a tokens-by-D matrix.
template <class Derived>
typename Derived::PlainObject hn_rows(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  typename Derived::PlainObject out = z;
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) /= Scalar(1) + out.row(i).norm();
  return out;
}

inline constexpr double kBallGuard = 1e-12;

/// hn^{-1}(y) = y / (1 - |y|). Throws DomainError unless |y| < 1 - eta.
template <class Derived>
typename Derived::PlainObject inverse_hn(const Eigen::MatrixBase<Derived>& y, double eta = kBallGuard) {
  using Scalar = typename Derived::Scalar;
  const Scalar r = y.norm();
  if (!(r < Scalar(1) - Scalar(eta))) throw DomainError("inverse_hn: |y| must be < 1 - eta");
  return y / (Scalar(1) - r);
}

/// Analytic Jacobian of hn^{-1}: I/(1-r) + y y^T / (r (1-r)^2).
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> jacobian_inverse_hn(
    const Eigen::MatrixBase<Derived>& y, double eta = kBallGuard) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Scalar r = y.norm();
  if (!(r < Scalar(1) - Scalar(eta))) throw DomainError("jacobian_inverse_hn: |y| must be < 1 - eta");
  Mat j = Mat::Identity(y.size(), y.size()) / (Scalar(1) - r);
  if (r > Scalar(0)) j += y * y.transpose() / (r * (Scalar(1) - r) * (Scalar(1) - r));
  return j;
}

/// det J_{hn^{-1}}(y) = (1 - |y|)^{-(D+1)}.
template <class Derived>
typename Derived::Scalar det_jacobian_inverse_hn(const Eigen::MatrixBase<Derived>& y, double eta = kBallGuard) {
  using Scalar = typename Derived::Scalar;
  const Scalar r = y.norm();
  if (!(r < Scalar(1) - Scalar(eta))) throw DomainError("det_jacobian_inverse_hn: |y| must be < 1 - eta");
  return std::pow(Scalar(1) - r, -static_cast<Scalar>(y.size() + 1));
}

struct DeterminantLemmaCheck {
  double lhs = 0.0;  // dense LU determinant of alpha I + beta u u^T
  double rhs = 0.0;  // alpha^{D-1} (alpha + beta |u|^2)
  double abs_error = 0.0;
  double rel_error = 0.0;
};

/// Throws DomainError for alpha == 0.
DeterminantLemmaCheck matrix_determinant_lemma_check(double alpha, double beta, const Eigen::VectorXd& u);

/// Central-difference Jacobian of hn^{-1}.
Eigen::MatrixXd finite_difference_jacobian_inverse_hn(const Eigen::VectorXd& y, double h = 1e-6);

/// Transformer block parameters. Weights act on column vectors (W x); token
/// sequences are stored as rows of a tokens-by-D matrix.
template <class Scalar>
struct HolonormLayer {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Mat wq, wk, wv, wo;  // D x D
  Mat w1;              // d_ff x D
  Vec b1;              // d_ff
  Mat w2;              // D x d_ff
  Vec b2;              // D
};

template <class Scalar>
class HolonormModel {
 public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Layer = HolonormLayer<Scalar>;

  HolonormModel(int layers, int dim, int heads, int ff_dim) : dim_(dim), heads_(heads), ff_dim_(ff_dim) {
    if (layers < 0 || dim < 1 || heads < 1 || ff_dim < 1) throw ValidationError("holonorm model: bad shape");
    if (dim % heads != 0) throw ValidationError("holonorm model: heads must divide the model dimension");
    layers_.resize(static_cast<std::size_t>(layers));
    for (auto& l : layers_) {
      l.wq = l.wk = l.wv = l.wo = Mat::Zero(dim, dim);
      l.w1 = Mat::Zero(ff_dim, dim);
      l.b1 = Vec::Zero(ff_dim);
      l.w2 = Mat::Zero(dim, ff_dim);
      l.b2 = Vec::Zero(dim);
    }
  }

  /// Entries drawn from uniform(-1/sqrt(D), 1/sqrt(D)) with a seeded mt19937_64.
  static HolonormModel random(int layers, int dim, int heads, int ff_dim, std::uint64_t seed) {
    HolonormModel m(layers, dim, heads, ff_dim);
    m.seed_ = seed;
    std::mt19937_64 rng(seed);
    const double a = 1.0 / std::sqrt(static_cast<double>(dim));
    std::uniform_real_distribution<double> u(-a, a);
    auto fill = [&](auto& x) {
      for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = static_cast<Scalar>(u(rng));
    };
    for (auto& l : m.layers_) {
      fill(l.wq), fill(l.wk), fill(l.wv), fill(l.wo);
      fill(l.w1), fill(l.b1), fill(l.w2), fill(l.b2);
    }
    m.const_q_ = Vec(dim), m.const_k_ = Vec(dim), m.const_v_ = Vec(dim);
    fill(m.const_q_), fill(m.const_k_), fill(m.const_v_);
    return m;
  }

  int num_layers() const { return static_cast<int>(layers_.size()); }
  int dim() const { return dim_; }
  int heads() const { return heads_; }
  int ff_dim() const { return ff_dim_; }
  std::uint64_t seed() const { return seed_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  /// Degenerate mode: every token's query, key and value are the fixed vectors
  /// below instead of projections of the token.
  bool constant_qkv = false;
  void set_constant_qkv(const Vec& q, const Vec& k, const Vec& v) {
    if (q.size() != dim_ || k.size() != dim_ || v.size() != dim_)
      throw ValidationError("holonorm model: constant q/k/v must have length D");
    const_q_ = q, const_k_ = k, const_v_ = v;
  }

  /// Scaled dot-product multi-head attention with output projection; no mask,
  /// no positional encoding.
  Mat attention(const Layer& l, const Mat& x) const {
    check_tokens(x);
    const Eigen::Index n = x.rows();
    Mat q(n, dim_), k(n, dim_), v(n, dim_);
    for (Eigen::Index t = 0; t < n; ++t) {
      if (constant_qkv) {
        q.row(t) = const_q_.transpose(), k.row(t) = const_k_.transpose(), v.row(t) = const_v_.transpose();
      } else {
        const Vec xt = x.row(t).transpose();
        q.row(t) = (l.wq * xt).transpose(), k.row(t) = (l.wk * xt).transpose(), v.row(t) = (l.wv * xt).transpose();
      }
    }
    const int dh = dim_ / heads_;
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
    Mat heads_out(n, dim_);
    for (int h = 0; h < heads_; ++h) {
      const auto qh = q.middleCols(h * dh, dh);
      const auto kh = k.middleCols(h * dh, dh);
      const auto vh = v.middleCols(h * dh, dh);
      for (Eigen::Index t = 0; t < n; ++t) {
        Vec s(n);
        for (Eigen::Index j = 0; j < n; ++j) s(j) = qh.row(t).dot(kh.row(j)) * scale;
        const Scalar top = s.maxCoeff();
        s = (s.array() - top).exp().matrix();
        s /= s.sum();
        Vec o = Vec::Zero(dh);
        for (Eigen::Index j = 0; j < n; ++j) o += s(j) * vh.row(j).transpose();
        heads_out.block(t, h * dh, 1, dh) = o.transpose();
      }
    }
    Mat out(n, dim_);
    for (Eigen::Index t = 0; t < n; ++t) out.row(t) = (l.wo * heads_out.row(t).transpose()).transpose();
    return out;
  }

  /// f(x) = W2 hn(W1 x + b1) + b2, applied token by token.
  Mat feedforward(const Layer& l, const Mat& x) const {
    check_tokens(x);
    Mat out(x.rows(), dim_);
    for (Eigen::Index t = 0; t < x.rows(); ++t) {
      const Vec h = l.w1 * x.row(t).transpose() + l.b1;
      out.row(t) = (l.w2 * hn(h) + l.b2).transpose();
    }
    return out;
  }

  /// The attention sublayer MHA(hn(z)) of layer `i`.
  Mat attention_sublayer(int i, const Mat& z) const { return attention(layers_.at(static_cast<std::size_t>(i)), hn_rows(z)); }

  /// z <- z + MHA(hn(z)); z <- z + f(hn(z)) for every layer.
  Mat forward(const Mat& tokens) const {
    check_tokens(tokens);
    Mat z = tokens;
    for (const auto& l : layers_) {
      z += attention(l, hn_rows(z));
      z += feedforward(l, hn_rows(z));
    }
    return z;
  }

 private:
  void check_tokens(const Mat& x) const {
    if (x.rows() < 1) throw ValidationError("holonorm forward: empty token sequence");
    if (x.cols() != dim_) throw ValidationError("holonorm forward: token width differs from model dimension");
  }

  int dim_;
  int heads_;
  int ff_dim_;
  std::uint64_t seed_ = 0;
  std::vector<Layer> layers_;
  Vec const_q_, const_k_, const_v_;
};

struct DegeneracyReport {
  std::size_t probes = 0;
  double degenerate_max_diff = 0.0;       // attention sublayer, constant q/k/v
  bool degenerate_constant = false;       // <= 1e-12
  double normal_min_pair_diff = 0.0;      // smallest max-abs difference over probe pairs
  bool normal_distinct = false;
  double residual_path_max_diff = 0.0;    // full forward, constant q/k/v
  bool feedforward_pointwise = false;     // f(a) unchanged by reproducing or shuffling context
  nlohmann::json to_json() const;
};

/// Compares the first layer's attention sublayer over the probes with constant
/// and with projected q/k/v, and checks that the feed-forward map is pointwise.
/// Probes must be at least two token matrices of the same shape.
template <class Scalar>
DegeneracyReport constant_param_degeneracy_check(const HolonormModel<Scalar>& model,
                                                 const std::vector<typename HolonormModel<Scalar>::Mat>& probes) {
  using Mat = typename HolonormModel<Scalar>::Mat;
  if (probes.size() < 2) throw ValidationError("degeneracy check: needs at least two probes");
  if (model.num_layers() < 1) throw ValidationError("degeneracy check: model has no layers");
  for (const auto& p : probes)
    if (p.rows() != probes.front().rows() || p.cols() != probes.front().cols())
      throw ValidationError("degeneracy check: probes differ in length");

  auto max_diff = [](const Mat& a, const Mat& b) { return static_cast<double>((a - b).cwiseAbs().maxCoeff()); };
  DegeneracyReport rep;
  rep.probes = probes.size();

  HolonormModel<Scalar> degenerate = model;
  degenerate.constant_qkv = true;
  HolonormModel<Scalar> normal = model;
  normal.constant_qkv = false;

  const Mat d0 = degenerate.attention_sublayer(0, probes.front());
  const Mat f0 = degenerate.forward(probes.front());
  rep.normal_min_pair_diff = std::numeric_limits<double>::infinity();
  std::vector<Mat> normal_out;
  for (const auto& p : probes) {
    rep.degenerate_max_diff = std::max(rep.degenerate_max_diff, max_diff(degenerate.attention_sublayer(0, p), d0));
    rep.residual_path_max_diff = std::max(rep.residual_path_max_diff, max_diff(degenerate.forward(p), f0));
    normal_out.push_back(normal.attention_sublayer(0, p));
  }
  for (std::size_t i = 0; i < normal_out.size(); ++i)
    for (std::size_t j = i + 1; j < normal_out.size(); ++j)
      rep.normal_min_pair_diff = std::min(rep.normal_min_pair_diff, max_diff(normal_out[i], normal_out[j]));
  rep.degenerate_constant = rep.degenerate_max_diff <= 1e-12;
  rep.normal_distinct = rep.normal_min_pair_diff > 1e-12;

  // The feed-forward map sees one token at a time: token 0's output must not
  // depend on the other tokens or their order.
  const auto& layer = model.layers().front();
  const Mat& p0 = probes.front();
  const Mat base = model.feedforward(layer, hn_rows(p0));
  Mat shuffled = p0;
  for (Eigen::Index t = 1; t < shuffled.rows(); ++t) shuffled.row(t) = probes[1].row(shuffled.rows() - t);
  const Mat again = model.feedforward(layer, hn_rows(p0));
  const Mat ctx = model.feedforward(layer, hn_rows(shuffled));
  rep.feedforward_pointwise = base == again && base.row(0) == ctx.row(0);
  return rep;
}

struct DensityCheckConfig {
  int dim = 2;
  long samples = 100000;
  int bins_per_axis = 0;  // 0: 50 for D = 1, 20 for D = 2
  std::uint64_t seed = 0;
  double tolerance = 0.1;
  long min_bin_count = 50;
  int min_qualifying_bins = 10;
};

struct DensityCheckReport {
  int dim = 0;
  long samples = 0;
  int bins_per_axis = 0;
  bool widened = false;
  std::string note;
  std::size_t qualifying_bins = 0;
  double mean_abs_rel_error = 0.0;
  double max_abs_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  double mass_inside_ball = 0.0;
  double origin_density_empirical = 0.0;  // samples within a small cube around 0
  double origin_density_formula = 0.0;    // (2 pi)^{-D/2}
  nlohmann::json to_json() const;
};

/// Density of Y = hn(X) for X ~ N(0, I_D): p_X(y/(1-|y|)) (1-|y|)^{-(D+1)}, 0 outside the ball.
double holonorm_normal_density(std::span<const double> y);

/// Draws Y = hn(X), X ~ N(0, I_D), in fixed-size seeded chunks and compares
/// the histogram of Y on [-1,1]^D with the density integrated over each bin
/// (Gauss-Legendre). Supports D = 1 and D = 2. When fewer than
/// min_qualifying_bins bins hold min_bin_count samples, the bins are widened
/// (halved per axis) and the report says so.
DensityCheckReport density_transform_check(const DensityCheckConfig& cfg);

}  // namespace patho
