#include "patho/pathology.hpp"

#include <algorithm>

namespace patho {
namespace {

using sv = std::string_view;

struct Entry {
  PathologyId id;
  sv name;
  bool corpus_level;
  bool rotation_invariant;
  std::vector<sv> fields;
  std::vector<sv> params;
};

const std::vector<Entry>& table() {
  using P = PathologyId;
  static const std::vector<Entry> t = {
      {P::delusion, "delusion", false, true, {"prob_output_given_input", "prob_truth_given_input"}, {"margin", "log_cap", "same_tol"}},
      {P::illusion, "illusion", false, true, {"truth_embedding", "in_real_manifold"}, {"s_hi"}},
      {P::hallucination, "hallucination", false, true, {"in_real_manifold"}, {}},
      {P::confabulation, "confabulation", false, true, {"prob_output_given_input", "claim_embeddings"}, {"tau_c"}},
      {P::misattribution, "misattribution", true, true, {"annotations.content_id", "annotations.source"}, {"s_hi"}},
      {P::semantic_drift, "semantic_drift", true, true, {"intent_embedding"}, {"s_lo", "window"}},
      {P::semantic_compression, "semantic_compression", false, true, {"latent_dim", "input_dim"}, {"rho"}},
      {P::exaggeration, "exaggeration", false, true, {"output_magnitude", "truth_magnitude"}, {"alpha"}},
      {P::causal_inference_failure, "causal_inference_failure", false, true, {}, {"tv_tol"}},
      {P::uncanny_valley, "uncanny_valley", false, true, {"truth_embedding", "discomfort_score"}, {"s_hi", "d_hi"}},
      {P::bluffing, "bluffing", true, false, {"output_token_logprobs"}, {"mi_lo", "f_hi"}},
      {P::cognitive_stereotypy, "cognitive_stereotypy", true, true, {}, {"s_hi", "same_tol"}},
      {P::pragmatic_misunderstanding, "pragmatic_misunderstanding", false, true, {"intent_embedding"}, {"s_indep"}},
      {P::hypersignification, "hypersignification", true, true, {}, {"gamma", "s_lo"}},
      {P::semantic_reheating, "semantic_reheating", false, true, {"in_train_set"}, {}},
      {P::semantic_warming, "semantic_warming", true, true, {"style_embedding", "output_token_logprobs"}, {"f_hi", "window", "warming_slope_scale", "entropy_slope_scale", "entropy_ridge"}},
      {P::simulated_authority, "simulated_authority", false, true, {"style_embedding", "claim_embeddings"}, {"s_hi", "tau_c"}},
      {P::abductive_leap, "abductive_leap", false, true, {"prob_output_given_input", "has_inference_path"}, {"delta"}},
      {P::contextual_drift, "contextual_drift", false, true, {"context_vectors"}, {"eps", "k"}},
      {P::referential_hallucination, "referential_hallucination", false, true, {"referenced_entities"}, {}},
      {P::semiotic_frankenstein, "semiotic_frankenstein", false, true, {"claim_embeddings"}, {"s_hi", "s_lo"}},

      {P::overfitting, "overfitting", true, false, {"in_train_set"}, {"gap_hi", "n_min"}},
      {P::bias_amplification, "bias_amplification", true, false, {"group"}, {"amp_hi", "n_min", "positive_label"}},
      {P::spurious_correlation, "spurious_correlation", true, false, {"annotations.spurious_pair_id", "annotations.spurious_role"}, {"gap_hi", "n_min"}},
      {P::adversarial_vulnerability, "adversarial_vulnerability", true, false, {"perturbation_pair_id"}, {"eps_adv", "flip_hi", "n_min"}},
      {P::calibration_failure, "calibration_failure", true, false, {}, {"ece_hi", "ece_bins", "n_min"}},
      {P::concept_drift_sensitivity, "concept_drift_sensitivity", true, false, {"timestamp_index"}, {"gap_hi", "tv_hi", "tv_bins", "n_min", "drift_split"}},
      {P::misclassification_under_uncertainty, "misclassification_under_uncertainty", true, false, {"is_ood"}, {"c_hi", "frac_hi", "n_min"}},
      {P::prosodic_misclassification, "prosodic_misclassification", true, false, {"annotations.prosody_pair_id", "annotations.prosody"}, {"flip_hi", "n_min"}},
      {P::accent_bias, "accent_bias", true, false, {"group"}, {"amp_hi", "n_min"}},
      {P::turn_boundary_failure, "turn_boundary_failure", true, false, {"segment_bounds", "reference_bounds"}, {"tol_t"}},
      {P::semantic_boundary_confusion, "semantic_boundary_confusion", true, false, {"segment_bounds", "annotations.span_pair_id", "annotations.span"}, {"gap_hi"}},
      {P::noise_overfitting, "noise_overfitting", true, false, {"noise_pair_id", "annotations.noise_role"}, {"flip_hi", "n_min"}},
      {P::latency_induced_decision_drift, "latency_induced_decision_drift", true, false, {"latency_pair_id"}, {"flip_hi", "n_min"}},
      {P::ambiguity_collapse, "ambiguity_collapse", true, false, {"plausible_labels"}, {"c_hi", "margin_hi", "frac_hi", "n_min"}},
  };
  return t;
}

const Entry& entry(PathologyId id) { return table()[index(id)]; }

}  // namespace

const std::array<PathologyId, kNumPathologies>& all_pathologies() {
  static const auto ids = [] {
    std::array<PathologyId, kNumPathologies> a{};
    for (std::size_t i = 0; i < kNumPathologies; ++i) a[i] = static_cast<PathologyId>(i);
    return a;
  }();
  return ids;
}

std::span<const PathologyId> generative_pathologies() {
  return std::span<const PathologyId>(all_pathologies()).first(kNumGenerative);
}

std::span<const PathologyId> discriminative_pathologies() {
  return std::span<const PathologyId>(all_pathologies()).subspan(kNumGenerative);
}

std::string_view name(PathologyId id) { return entry(id).name; }

std::optional<PathologyId> parse_pathology(std::string_view n) {
  const auto& t = table();
  auto it = std::find_if(t.begin(), t.end(), [&](const Entry& e) { return e.name == n; });
  if (it == t.end()) return std::nullopt;
  return it->id;
}

Family family(PathologyId id) {
  return index(id) < kNumGenerative ? Family::generative : Family::discriminative;
}

std::string_view family_name(Family f) { return f == Family::generative ? "generative" : "discriminative"; }

std::string_view alias_group(PathologyId id) {
  if (id == PathologyId::semantic_reheating || id == PathologyId::semantic_warming)
    return "semantic_reheating_warming";
  return name(id);
}

bool is_corpus_level(PathologyId id) { return entry(id).corpus_level; }
bool is_rotation_invariant(PathologyId id) { return entry(id).rotation_invariant; }

std::span<const std::string_view> required_fields(PathologyId id) { return entry(id).fields; }
std::span<const std::string_view> parameter_keys(PathologyId id) { return entry(id).params; }

}  // namespace patho
