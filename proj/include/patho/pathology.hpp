#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace patho {

enum class Family : std::uint8_t { generative, discriminative };

/// Registry key for the 35 pathology detectors. Declaration order is the
/// canonical sort order for reports.
enum class PathologyId : std::uint8_t {
  // generative
  delusion,
  illusion,
  hallucination,
  confabulation,
  misattribution,
  semantic_drift,
  semantic_compression,
  exaggeration,
  causal_inference_failure,
  uncanny_valley,
  bluffing,
  cognitive_stereotypy,
  pragmatic_misunderstanding,
  hypersignification,
  semantic_reheating,
  semantic_warming,
  simulated_authority,
  abductive_leap,
  contextual_drift,
  referential_hallucination,
  semiotic_frankenstein,
  // discriminative
  overfitting,
  bias_amplification,
  spurious_correlation,
  adversarial_vulnerability,
  calibration_failure,
  concept_drift_sensitivity,
  misclassification_under_uncertainty,
  prosodic_misclassification,
  accent_bias,
  turn_boundary_failure,
  semantic_boundary_confusion,
  noise_overfitting,
  latency_induced_decision_drift,
  ambiguity_collapse,
};

inline constexpr std::size_t kNumPathologies = 35;
inline constexpr std::size_t kNumGenerative = 21;
inline constexpr std::size_t kNumDiscriminative = 14;
/// Reheating and warming are counted once when reporting distinct pathologies.
inline constexpr std::size_t kNumDistinctPathologies = 34;

/// All ids in canonical order.
const std::array<PathologyId, kNumPathologies>& all_pathologies();
std::span<const PathologyId> generative_pathologies();
std::span<const PathologyId> discriminative_pathologies();

std::string_view name(PathologyId id);
std::optional<PathologyId> parse_pathology(std::string_view name);
Family family(PathologyId id);
std::string_view family_name(Family f);
inline std::size_t index(PathologyId id) { return static_cast<std::size_t>(id); }

/// Name of the alias group a pathology reports under; equals name(id) except
/// for semantic_reheating / semantic_warming which share "semantic_reheating_warming".
std::string_view alias_group(PathologyId id);

/// Generative detectors that consume a record sequence instead of one record.
bool is_corpus_level(PathologyId id);

/// Detectors whose severity is a function of cosine similarities (or Euclidean
/// distances) of embeddings only, and therefore invariant under a common rotation.
bool is_rotation_invariant(PathologyId id);

/// Record fields a detector needs. Names match the JSONL field names; annotation
/// keys are spelled "annotations.<key>".
std::span<const std::string_view> required_fields(PathologyId id);

/// Parameter keys a detector reads from DetectorConfig (valid override keys).
std::span<const std::string_view> parameter_keys(PathologyId id);

/// Result of scoring one pathology on one subject (record, record sequence,
/// causal fixture or classification corpus).
struct DetectorOutcome {
  PathologyId pathology{};
  std::string subject;
  bool fired = false;
  double severity = 0.0;
  double threshold = 0.0;
  double loss = 0.0;
  std::map<std::string, std::string> evidence;
};

/// A detector that could not run on a subject, with the reason.
struct SkippedDetector {
  PathologyId pathology{};
  std::string subject;
  std::string reason;
};

}  // namespace patho
