#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "patho/error.hpp"
#include "patho/trace_model.hpp"

namespace patho {

struct SimilarityConfig {
  /// Map cosine to [0,1] via (1 + cos) / 2.
  bool clamp = false;
};

struct MIEstimatorConfig {
  int num_bins_per_axis = 4;
  int projection_dims = 1;
  std::uint64_t seed = 0;
};

/// Cosine similarity. Symmetric, sim(a, a) == 1 for nonzero a.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar sim(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                              SimilarityConfig cfg = {}) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) throw DomainError("sim: length mismatch");
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (!(na > Scalar(0)) || !(nb > Scalar(0))) throw DomainError("sim: similarity undefined for zero vector");
  Scalar c = a.dot(b) / (na * nb);
  c = std::clamp(c, Scalar(-1), Scalar(1));
  return cfg.clamp ? (Scalar(1) + c) / Scalar(2) : c;
}

/// Euclidean distance between two context vectors.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar contextual_distance(const Eigen::MatrixBase<DerivedA>& a,
                                              const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) throw DomainError("contextual_distance: length mismatch");
  return (a - b).norm();
}

/// Geometric-mean token probability exp(mean log p).
double fluency(std::span<const double> token_logprobs);

/// Plug-in mutual information (nats) on equal-width bins of seeded Gaussian
/// random projections. Rows of xs / ys are paired samples; both sides draw
/// from the same seed, so equal-width inputs share one projection.
double mutual_information(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& ys, const MIEstimatorConfig& cfg);
double mutual_information(std::span<const Eigen::VectorXd> xs, std::span<const Eigen::VectorXd> ys,
                          const MIEstimatorConfig& cfg);

/// Mean over claims of the best clamped similarity to any knowledge-base entry.
double coherence(std::span<const Eigen::VectorXd> claims, const KnowledgeBase& kb,
                 SimilarityConfig cfg = {.clamp = true});

/// Mean similarity over all unordered pairs; needs at least two embeddings.
double avg_pairwise_similarity(std::span<const Eigen::VectorXd> outputs, SimilarityConfig cfg = {});

/// Gaussian differential entropy 0.5 * log((2 pi e)^d det(S + ridge I)) where S is
/// the unbiased sample covariance of the rows of `samples`.
double semantic_entropy(const Eigen::MatrixXd& samples, double ridge);
double semantic_entropy(std::span<const Eigen::VectorXd> samples, double ridge);

/// Least-squares slope of values against 0, 1, ..., n-1.
double least_squares_slope(std::span<const double> values);

/// Slope over the last `window` values (all of them if fewer). Needs >= 2 values.
double windowed_slope(std::span<const double> values, int window);

/// Stack equal-length vectors as the rows of a matrix.
Eigen::MatrixXd stack_rows(std::span<const Eigen::VectorXd> rows);

}  // namespace patho
