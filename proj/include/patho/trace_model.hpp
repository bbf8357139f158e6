#pragma once

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "patho/pathology.hpp"

namespace patho {

using Annotations = std::map<std::string, std::string>;

/// One generative-model interaction: payload embeddings, token log-probs and the
/// annotation flags the generative detectors read.
struct TraceRecord {
  std::string id;
  Eigen::VectorXd input_embedding;
  Eigen::VectorXd output_embedding;
  std::optional<Eigen::VectorXd> truth_embedding;
  std::optional<Eigen::VectorXd> intent_embedding;
  std::optional<std::vector<Eigen::VectorXd>> context_vectors;
  std::optional<std::vector<double>> output_token_logprobs;
  std::optional<double> prob_output_given_input;
  std::optional<double> prob_truth_given_input;
  std::optional<bool> in_real_manifold;
  std::optional<bool> in_train_set;
  std::optional<std::vector<std::string>> referenced_entities;
  std::optional<std::vector<Eigen::VectorXd>> claim_embeddings;
  std::optional<Eigen::VectorXd> style_embedding;
  std::optional<double> discomfort_score;
  std::optional<double> output_magnitude;
  std::optional<double> truth_magnitude;
  std::optional<int> latent_dim;
  std::optional<int> input_dim;
  std::optional<bool> has_inference_path;
  Annotations annotations;

  /// Shared embedding length d_e.
  Eigen::Index embedding_dim() const { return output_embedding.size(); }
};

/// One classifier decision with the pairing/grouping tags the discriminative
/// detectors read.
struct ClassificationRecord {
  std::string id;
  Eigen::VectorXd features;
  int predicted_label = 0;
  int true_label = 0;
  Eigen::VectorXd class_probabilities;
  std::optional<std::string> group;
  std::optional<long> timestamp_index;
  std::optional<bool> is_ood;
  std::optional<bool> in_train_set;
  std::optional<std::string> perturbation_pair_id;
  std::optional<std::string> noise_pair_id;
  std::optional<std::string> latency_pair_id;
  std::optional<std::array<long, 2>> segment_bounds;
  std::optional<std::array<long, 2>> reference_bounds;
  std::optional<std::vector<int>> plausible_labels;
  Annotations annotations;

  double confidence() const { return class_probabilities.maxCoeff(); }
  bool correct() const { return predicted_label == true_label; }
};

struct KnowledgeBaseEntry {
  std::string entity_id;
  Eigen::VectorXd embedding;
};

/// Verified facts (the real-entity set) plus optional expert-style centroids and
/// entity ids known to occur in the training data.
struct KnowledgeBase {
  std::vector<KnowledgeBaseEntry> entries;
  std::string source_tag;
  std::vector<Eigen::VectorXd> expert_style_centroids;
  std::vector<std::string> train_entity_ids;

  bool contains(std::string_view entity_id) const;
};

/// Finite probability tables for one X -> Y causal question. Rows of each
/// table are distributions over Y, one per value of the conditioning variable.
struct CausalFixture {
  std::string id;
  std::string x_name = "X";
  std::string y_name = "Y";
  std::string z_name = "Z";
  bool declares_edge = true;
  std::optional<Eigen::VectorXd> x_prior;
  Eigen::MatrixXd observational_conditional;
  Eigen::MatrixXd interventional_table;
  std::optional<Eigen::MatrixXd> secondary_interventional;

  /// p(Y) = sum_x p(x) p(Y | X = x), uniform p(x) when no prior is given.
  Eigen::VectorXd marginal_y() const;
};

enum class CorpusKind { trace, classification };

using Corpus = std::variant<std::vector<TraceRecord>, std::vector<ClassificationRecord>>;

// Record-level (de)serialization. from_json validates the record invariants.
TraceRecord trace_from_json(const nlohmann::json& j);
ClassificationRecord classification_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TraceRecord& r);
nlohmann::json to_json(const ClassificationRecord& r);

void validate(const TraceRecord& r);
void validate(const ClassificationRecord& r);

/// Reads a JSONL corpus. Blank lines are skipped; errors carry the line number.
Corpus load_trace_corpus(const std::filesystem::path& path, CorpusKind kind);
Corpus parse_trace_corpus(std::istream& in, CorpusKind kind);
std::vector<TraceRecord> load_traces(const std::filesystem::path& path);
std::vector<ClassificationRecord> load_classifications(const std::filesystem::path& path);

void write_corpus(std::ostream& out, std::span<const TraceRecord> records);
void write_corpus(std::ostream& out, std::span<const ClassificationRecord> records);

KnowledgeBase knowledge_base_from_json(const nlohmann::json& j);
KnowledgeBase load_knowledge_base(const std::filesystem::path& path);
CausalFixture causal_fixture_from_json(const nlohmann::json& j);
/// Accepts a single fixture object, an array, or {"fixtures": [...]}.
std::vector<CausalFixture> load_causal_fixtures(const std::filesystem::path& path);

/// Field-availability matrix: for each detector, which records carry its fields.
struct RecordAvailability {
  std::string record_id;
  bool available = false;
  std::vector<std::string> missing;
};

struct ValidationReport {
  std::map<PathologyId, std::vector<RecordAvailability>> by_detector;

  bool available(PathologyId id, std::string_view record_id) const;
  nlohmann::json to_json() const;
};

ValidationReport validate_corpus(std::span<const TraceRecord> records);
ValidationReport validate_corpus(std::span<const ClassificationRecord> records);
ValidationReport validate_corpus(const Corpus& corpus);

/// Fields from `required_fields(id)` missing on this record.
std::vector<std::string> missing_fields(PathologyId id, const TraceRecord& r);
std::vector<std::string> missing_fields(PathologyId id, const ClassificationRecord& r);

}  // namespace patho
