#pragma once

// Hand-built positive/negative fixtures for every detector, plus helpers shared
// by the unit, property and acceptance tests.

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "patho/detector_config.hpp"
#include "patho/pathology.hpp"
#include "patho/trace_model.hpp"

namespace fixtures {

using patho::ClassificationRecord;
using patho::KnowledgeBase;
using patho::PathologyId;
using patho::TraceRecord;

struct PathologyFixture {
  std::vector<TraceRecord> traces;
  std::vector<ClassificationRecord> records;
  std::optional<KnowledgeBase> kb;
  std::vector<patho::CausalFixture> causal;
};

/// Built so the detector's predicate holds (positive) or fails (negative) with
/// clear slack; the expected severities are worked out in fixtures.cpp.
PathologyFixture positive_fixture(PathologyId id);
PathologyFixture negative_fixture(PathologyId id);

/// Dispatches to the record-level, sequence, causal or corpus scorer.
patho::DetectorOutcome evaluate(PathologyId id, const PathologyFixture& f, const patho::DetectorConfig& cfg = {});

/// Applies `q` to every content embedding (and the knowledge base) and `q_style`
/// to style embeddings and expert centroids.
PathologyFixture rotate(const PathologyFixture& f, const Eigen::MatrixXd& q, const Eigen::MatrixXd& q_style);

/// Haar-ish orthogonal matrix from the QR of a seeded Gaussian matrix.
Eigen::MatrixXd random_orthogonal(int d, unsigned long long seed);

Eigen::VectorXd vec(std::initializer_list<double> v);
Eigen::VectorXd unit(int d, int k);

/// Binary-class record with predicted-class probability `conf` (>= 0.5).
ClassificationRecord binary(const std::string& id, int pred, int truth, double conf = 0.8,
                            Eigen::VectorXd features = Eigen::VectorXd::Zero(2));

inline constexpr int kDim = 4;       // content embedding length in trace fixtures
inline constexpr int kStyleDim = 3;  // style embedding length

}  // namespace fixtures
