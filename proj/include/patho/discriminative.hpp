#pragma once

#include <span>
#include <string>

#include "patho/detector_config.hpp"
#include "patho/generative.hpp"
#include "patho/pathology.hpp"
#include "patho/trace_model.hpp"

namespace patho {

/// Scores one discriminative detector over a whole corpus (subject "corpus").
///
/// Records lacking the detector's fields are not eligible. Rate detectors need
/// at least n_min eligible records (InsufficientDataError) and pair detectors
/// use only pair ids shared by exactly two records. Records are folded in id
/// order, so the result does not depend on corpus order.
DetectorOutcome score_discriminative(PathologyId id, std::span<const ClassificationRecord> corpus,
                                     const DetectorConfig& cfg);

/// Runs every discriminative detector; the ones that cannot run are skipped
/// with the reason.
AuditResult audit_discriminative(std::span<const ClassificationRecord> corpus, const DetectorConfig& cfg);

/// Expected calibration error with `bins` equal-width confidence bins.
double expected_calibration_error(std::span<const ClassificationRecord> records, int bins);

/// Sum in fixed pairwise order, so the rounding does not depend on how the
/// caller chunks the data.
double pairwise_sum(std::span<const double> values);

}  // namespace patho
