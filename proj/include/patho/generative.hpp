#pragma once

#include <span>
#include <string>
#include <vector>

#include "patho/detector_config.hpp"
#include "patho/pathology.hpp"
#include "patho/trace_model.hpp"

namespace patho {

/// Outcomes and skips of one audit run, outcomes sorted by (pathology, subject).
struct AuditResult {
  std::vector<DetectorOutcome> outcomes;
  std::vector<SkippedDetector> skipped;
};

/// Scores a record-level generative detector. `kb` is required by the
/// knowledge-base detectors (confabulation, simulated authority, referential
/// hallucination, semiotic Frankenstein).
///
/// Throws UnavailableError when a required field is missing and ArityError
/// when `id` is a corpus-level detector.
DetectorOutcome score(PathologyId id, const TraceRecord& record, const DetectorConfig& cfg,
                      const KnowledgeBase* kb = nullptr);

/// Scores a corpus-level generative detector over an ordered record sequence.
/// Throws ArityError for fewer than two records or a record-level `id`.
DetectorOutcome score(PathologyId id, std::span<const TraceRecord> records, const DetectorConfig& cfg,
                      const KnowledgeBase* kb = nullptr, std::string subject = "corpus");

/// Causal inference failure on a probability-table fixture.
DetectorOutcome score_causal(const CausalFixture& fixture, const DetectorConfig& cfg);

/// Runs every generative detector that has its inputs. Record-level detectors
/// run per record, corpus-level ones per session (records sharing the
/// "session" annotation, ordered by the integer "turn" annotation when every
/// record carries it, else by corpus order), the causal detector per fixture.
AuditResult audit_generative(std::span<const TraceRecord> corpus, const KnowledgeBase* kb,
                             std::span<const CausalFixture> fixtures, const DetectorConfig& cfg);

/// Sort key used for reports: registry order, then subject.
void sort_outcomes(std::vector<DetectorOutcome>& outcomes);

namespace detail {

/// Monotone map of [0,1] onto [0,1] sending `threshold` to 0.5, used to put a
/// conjunction of conditions on a common scale (severity = min of the grades).
double graded(double x, double threshold);

/// Smallest double above t: turns a strict predicate "x > t" into "x >= threshold".
double strictly_above(double t);

std::string format_number(double v);

}  // namespace detail

}  // namespace patho
