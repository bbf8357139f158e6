#include "patho/trace_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "patho/error.hpp"

namespace patho {

using nlohmann::json;

namespace {

std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

// Typed access to one JSON object with errors that name the record and field.
class Reader {
 public:
  Reader(const json& j, std::string_view kind) : j_(j), kind_(kind) {
    if (!j.is_object()) throw ParseError(std::string(kind) + " must be a JSON object");
    if (auto it = j.find("id"); it != j.end() && it->is_string()) id_ = it->get<std::string>();
  }

  const std::string& id() const { return id_; }

  [[noreturn]] void fail(std::string_view field, const std::string& what) const {
    throw ValidationError("record " + (id_.empty() ? std::string("<no id>") : id_) + ": field " +
                          std::string(field) + ": " + what);
  }

  bool has(std::string_view field) {
    seen_.insert(std::string(field));
    auto it = j_.find(field);
    return it != j_.end() && !it->is_null();
  }

  const json& at(std::string_view field) {
    if (!has(field)) fail(field, "missing required field");
    return j_.at(std::string(field));
  }

  std::string str(std::string_view field) {
    const json& v = at(field);
    if (!v.is_string()) fail(field, "expected string");
    return v.get<std::string>();
  }

  double num(std::string_view field) {
    const json& v = at(field);
    if (!v.is_number()) fail(field, "expected number");
    double d = v.get<double>();
    if (!std::isfinite(d)) fail(field, "non-finite value");
    return d;
  }

  long integer(std::string_view field) {
    const json& v = at(field);
    if (!v.is_number_integer()) fail(field, "expected integer");
    return v.get<long>();
  }

  bool boolean(std::string_view field) {
    const json& v = at(field);
    if (!v.is_boolean()) fail(field, "expected boolean");
    return v.get<bool>();
  }

  Eigen::VectorXd vec(std::string_view field) { return to_vec(field, at(field)); }

  std::vector<Eigen::VectorXd> vecs(std::string_view field) {
    const json& v = at(field);
    if (!v.is_array()) fail(field, "expected array of vectors");
    std::vector<Eigen::VectorXd> out;
    out.reserve(v.size());
    for (const auto& e : v) out.push_back(to_vec(field, e));
    return out;
  }

  std::vector<double> reals(std::string_view field) {
    Eigen::VectorXd v = vec(field);
    return {v.data(), v.data() + v.size()};
  }

  std::vector<std::string> strings(std::string_view field) {
    const json& v = at(field);
    if (!v.is_array()) fail(field, "expected array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) fail(field, "expected array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  Annotations annotations() {
    Annotations out;
    if (!has("annotations")) return out;
    const json& v = j_.at("annotations");
    if (!v.is_object()) fail("annotations", "expected object of strings");
    for (const auto& [k, e] : v.items()) {
      if (!e.is_string()) fail("annotations." + k, "expected string");
      out.emplace(k, e.get<std::string>());
    }
    return out;
  }

  template <typename T, typename F>
  std::optional<T> opt(std::string_view field, F&& read) {
    if (!has(field)) return std::nullopt;
    return read(field);
  }

  void reject_unknown() const {
    for (const auto& [k, _] : j_.items())
      if (!seen_.count(k)) fail(k, "unknown field for " + std::string(kind_));
  }

 private:
  Eigen::VectorXd to_vec(std::string_view field, const json& v) const {
    if (!v.is_array()) fail(field, "expected array of numbers");
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(field, "expected array of numbers");
      out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    if (!out.allFinite()) fail(field, "non-finite entry");
    return out;
  }

  const json& j_;
  std::string_view kind_;
  std::string id_;
  std::set<std::string> seen_;
};

json vec_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json vecs_json(const std::vector<Eigen::VectorXd>& vs) {
  json a = json::array();
  for (const auto& v : vs) a.push_back(vec_json(v));
  return a;
}

[[noreturn]] void fail(const std::string& id, std::string_view field, const std::string& what) {
  throw ValidationError("record " + id + ": field " + std::string(field) + ": " + what);
}

void check_prob(const std::string& id, std::string_view field, const std::optional<double>& p) {
  if (p && (*p < 0.0 || *p > 1.0)) fail(id, field, "probability " + fmt_num(*p) + " outside [0,1]");
}

void check_dim(const std::string& id, std::string_view field, const Eigen::VectorXd& v, Eigen::Index d) {
  if (v.size() != d)
    fail(id, field, "length " + std::to_string(v.size()) + " differs from embedding dimension " + std::to_string(d));
}

}  // namespace

// ---------------------------------------------------------------------------
// Validation

void validate(const TraceRecord& r) {
  if (r.id.empty()) fail("<no id>", "id", "must be a nonempty string");
  const Eigen::Index d = r.output_embedding.size();
  if (d == 0) fail(r.id, "output_embedding", "must be nonempty");
  check_dim(r.id, "input_embedding", r.input_embedding, d);
  if (r.truth_embedding) check_dim(r.id, "truth_embedding", *r.truth_embedding, d);
  if (r.intent_embedding) check_dim(r.id, "intent_embedding", *r.intent_embedding, d);
  if (r.context_vectors)
    for (const auto& c : *r.context_vectors) check_dim(r.id, "context_vectors", c, d);
  if (r.claim_embeddings)
    for (const auto& c : *r.claim_embeddings) check_dim(r.id, "claim_embeddings", c, d);
  if (r.style_embedding && r.style_embedding->size() == 0) fail(r.id, "style_embedding", "must be nonempty");
  if (r.output_token_logprobs) {
    for (double lp : *r.output_token_logprobs)
      if (!(lp <= 0.0)) fail(r.id, "output_token_logprobs", "log-probability " + fmt_num(lp) + " > 0");
  }
  check_prob(r.id, "prob_output_given_input", r.prob_output_given_input);
  check_prob(r.id, "prob_truth_given_input", r.prob_truth_given_input);
  check_prob(r.id, "discomfort_score", r.discomfort_score);
  if (r.output_magnitude && *r.output_magnitude < 0.0) fail(r.id, "output_magnitude", "must be >= 0");
  if (r.truth_magnitude && *r.truth_magnitude < 0.0) fail(r.id, "truth_magnitude", "must be >= 0");
  if (r.latent_dim && *r.latent_dim <= 0) fail(r.id, "latent_dim", "must be positive");
  if (r.input_dim && *r.input_dim <= 0) fail(r.id, "input_dim", "must be positive");
}

void validate(const ClassificationRecord& r) {
  if (r.id.empty()) fail("<no id>", "id", "must be a nonempty string");
  const auto& p = r.class_probabilities;
  if (p.size() == 0) fail(r.id, "class_probabilities", "must be nonempty");
  for (Eigen::Index k = 0; k < p.size(); ++k)
    if (p[k] < 0.0 || p[k] > 1.0) fail(r.id, "class_probabilities", "entry " + fmt_num(p[k]) + " outside [0,1]");
  const double total = p.sum();
  if (std::abs(total - 1.0) > 1e-9) fail(r.id, "class_probabilities", "probabilities sum " + fmt_num(total));
  const auto k = static_cast<int>(p.size());
  if (r.true_label < 0 || r.true_label >= k) fail(r.id, "true_label", "class id out of range");
  Eigen::Index argmax = 0;
  p.maxCoeff(&argmax);  // first maximum, i.e. lowest class id on ties
  if (r.predicted_label != static_cast<int>(argmax))
    fail(r.id, "predicted_label",
         "expected argmax " + std::to_string(argmax) + ", got " + std::to_string(r.predicted_label));
  if (r.plausible_labels)
    for (int l : *r.plausible_labels)
      if (l < 0 || l >= k) fail(r.id, "plausible_labels", "class id " + std::to_string(l) + " out of range");
  auto check_bounds = [&](std::string_view field, const std::optional<std::array<long, 2>>& b) {
    if (b && (*b)[0] > (*b)[1]) fail(r.id, field, "start exceeds end");
  };
  check_bounds("segment_bounds", r.segment_bounds);
  check_bounds("reference_bounds", r.reference_bounds);
}

// ---------------------------------------------------------------------------
// JSON

TraceRecord trace_from_json(const json& j) {
  Reader rd(j, "trace record");
  TraceRecord r;
  r.id = rd.str("id");
  r.input_embedding = rd.vec("input_embedding");
  r.output_embedding = rd.vec("output_embedding");
  auto vec = [&](std::string_view f) { return rd.vec(f); };
  auto vecs = [&](std::string_view f) { return rd.vecs(f); };
  auto num = [&](std::string_view f) { return rd.num(f); };
  auto boolean = [&](std::string_view f) { return rd.boolean(f); };
  auto integer = [&](std::string_view f) { return static_cast<int>(rd.integer(f)); };
  r.truth_embedding = rd.opt<Eigen::VectorXd>("truth_embedding", vec);
  r.intent_embedding = rd.opt<Eigen::VectorXd>("intent_embedding", vec);
  r.context_vectors = rd.opt<std::vector<Eigen::VectorXd>>("context_vectors", vecs);
  r.output_token_logprobs =
      rd.opt<std::vector<double>>("output_token_logprobs", [&](std::string_view f) { return rd.reals(f); });
  r.prob_output_given_input = rd.opt<double>("prob_output_given_input", num);
  r.prob_truth_given_input = rd.opt<double>("prob_truth_given_input", num);
  r.in_real_manifold = rd.opt<bool>("in_real_manifold", boolean);
  r.in_train_set = rd.opt<bool>("in_train_set", boolean);
  r.referenced_entities =
      rd.opt<std::vector<std::string>>("referenced_entities", [&](std::string_view f) { return rd.strings(f); });
  r.claim_embeddings = rd.opt<std::vector<Eigen::VectorXd>>("claim_embeddings", vecs);
  r.style_embedding = rd.opt<Eigen::VectorXd>("style_embedding", vec);
  r.discomfort_score = rd.opt<double>("discomfort_score", num);
  r.output_magnitude = rd.opt<double>("output_magnitude", num);
  r.truth_magnitude = rd.opt<double>("truth_magnitude", num);
  r.latent_dim = rd.opt<int>("latent_dim", integer);
  r.input_dim = rd.opt<int>("input_dim", integer);
  r.has_inference_path = rd.opt<bool>("has_inference_path", boolean);
  r.annotations = rd.annotations();
  rd.reject_unknown();
  validate(r);
  return r;
}

ClassificationRecord classification_from_json(const json& j) {
  Reader rd(j, "classification record");
  ClassificationRecord r;
  r.id = rd.str("id");
  r.features = rd.vec("features");
  r.predicted_label = static_cast<int>(rd.integer("predicted_label"));
  r.true_label = static_cast<int>(rd.integer("true_label"));
  r.class_probabilities = rd.vec("class_probabilities");
  auto str = [&](std::string_view f) { return rd.str(f); };
  auto boolean = [&](std::string_view f) { return rd.boolean(f); };
  auto bounds = [&](std::string_view f) {
    const json& v = rd.at(f);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
      rd.fail(f, "expected [start, end] integer pair");
    return std::array<long, 2>{v[0].get<long>(), v[1].get<long>()};
  };
  r.group = rd.opt<std::string>("group", str);
  r.timestamp_index = rd.opt<long>("timestamp_index", [&](std::string_view f) { return rd.integer(f); });
  r.is_ood = rd.opt<bool>("is_ood", boolean);
  r.in_train_set = rd.opt<bool>("in_train_set", boolean);
  r.perturbation_pair_id = rd.opt<std::string>("perturbation_pair_id", str);
  r.noise_pair_id = rd.opt<std::string>("noise_pair_id", str);
  r.latency_pair_id = rd.opt<std::string>("latency_pair_id", str);
  r.segment_bounds = rd.opt<std::array<long, 2>>("segment_bounds", bounds);
  r.reference_bounds = rd.opt<std::array<long, 2>>("reference_bounds", bounds);
  r.plausible_labels = rd.opt<std::vector<int>>("plausible_labels", [&](std::string_view f) {
    const json& v = rd.at(f);
    if (!v.is_array()) rd.fail(f, "expected array of class ids");
    std::set<int> s;
    for (const auto& e : v) {
      if (!e.is_number_integer()) rd.fail(f, "expected array of class ids");
      s.insert(e.get<int>());
    }
    return std::vector<int>(s.begin(), s.end());
  });
  r.annotations = rd.annotations();
  rd.reject_unknown();
  validate(r);
  return r;
}

json to_json(const TraceRecord& r) {
  json j;
  j["id"] = r.id;
  j["input_embedding"] = vec_json(r.input_embedding);
  j["output_embedding"] = vec_json(r.output_embedding);
  if (r.truth_embedding) j["truth_embedding"] = vec_json(*r.truth_embedding);
  if (r.intent_embedding) j["intent_embedding"] = vec_json(*r.intent_embedding);
  if (r.context_vectors) j["context_vectors"] = vecs_json(*r.context_vectors);
  if (r.output_token_logprobs) j["output_token_logprobs"] = *r.output_token_logprobs;
  if (r.prob_output_given_input) j["prob_output_given_input"] = *r.prob_output_given_input;
  if (r.prob_truth_given_input) j["prob_truth_given_input"] = *r.prob_truth_given_input;
  if (r.in_real_manifold) j["in_real_manifold"] = *r.in_real_manifold;
  if (r.in_train_set) j["in_train_set"] = *r.in_train_set;
  if (r.referenced_entities) j["referenced_entities"] = *r.referenced_entities;
  if (r.claim_embeddings) j["claim_embeddings"] = vecs_json(*r.claim_embeddings);
  if (r.style_embedding) j["style_embedding"] = vec_json(*r.style_embedding);
  if (r.discomfort_score) j["discomfort_score"] = *r.discomfort_score;
  if (r.output_magnitude) j["output_magnitude"] = *r.output_magnitude;
  if (r.truth_magnitude) j["truth_magnitude"] = *r.truth_magnitude;
  if (r.latent_dim) j["latent_dim"] = *r.latent_dim;
  if (r.input_dim) j["input_dim"] = *r.input_dim;
  if (r.has_inference_path) j["has_inference_path"] = *r.has_inference_path;
  if (!r.annotations.empty()) j["annotations"] = r.annotations;
  return j;
}

json to_json(const ClassificationRecord& r) {
  json j;
  j["id"] = r.id;
  j["features"] = vec_json(r.features);
  j["predicted_label"] = r.predicted_label;
  j["true_label"] = r.true_label;
  j["class_probabilities"] = vec_json(r.class_probabilities);
  if (r.group) j["group"] = *r.group;
  if (r.timestamp_index) j["timestamp_index"] = *r.timestamp_index;
  if (r.is_ood) j["is_ood"] = *r.is_ood;
  if (r.in_train_set) j["in_train_set"] = *r.in_train_set;
  if (r.perturbation_pair_id) j["perturbation_pair_id"] = *r.perturbation_pair_id;
  if (r.noise_pair_id) j["noise_pair_id"] = *r.noise_pair_id;
  if (r.latency_pair_id) j["latency_pair_id"] = *r.latency_pair_id;
  if (r.segment_bounds) j["segment_bounds"] = *r.segment_bounds;
  if (r.reference_bounds) j["reference_bounds"] = *r.reference_bounds;
  if (r.plausible_labels) j["plausible_labels"] = *r.plausible_labels;
  if (!r.annotations.empty()) j["annotations"] = r.annotations;
  return j;
}

// ---------------------------------------------------------------------------
// Corpus files

namespace {

template <typename Record, typename FromJson>
std::vector<Record> parse_lines(std::istream& in, FromJson from_json) {
  std::vector<Record> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  std::optional<Eigen::Index> dim;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    Record r;
    try {
      r = from_json(j);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno);
    }
    if (!ids.insert(r.id).second)
      throw ValidationError("line " + std::to_string(lineno) + ": record " + r.id + ": field id: duplicate id");
    Eigen::Index d;
    if constexpr (std::is_same_v<Record, TraceRecord>)
      d = r.embedding_dim();
    else
      d = r.features.size();
    if (dim && *dim != d)
      throw ValidationError("line " + std::to_string(lineno) + ": corpus: mixed embedding dimension (" +
                            std::to_string(*dim) + " vs " + std::to_string(d) + " in record " + r.id + ")");
    dim = d;
    out.push_back(std::move(r));
  }
  return out;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file " + path.string());
  return in;
}

json read_json_file(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": malformed JSON: " + e.what());
  }
}

}  // namespace

Corpus parse_trace_corpus(std::istream& in, CorpusKind kind) {
  if (kind == CorpusKind::trace) return parse_lines<TraceRecord>(in, trace_from_json);
  return parse_lines<ClassificationRecord>(in, classification_from_json);
}

Corpus load_trace_corpus(const std::filesystem::path& path, CorpusKind kind) {
  auto in = open_or_throw(path);
  return parse_trace_corpus(in, kind);
}

std::vector<TraceRecord> load_traces(const std::filesystem::path& path) {
  return std::get<std::vector<TraceRecord>>(load_trace_corpus(path, CorpusKind::trace));
}

std::vector<ClassificationRecord> load_classifications(const std::filesystem::path& path) {
  return std::get<std::vector<ClassificationRecord>>(load_trace_corpus(path, CorpusKind::classification));
}

void write_corpus(std::ostream& out, std::span<const TraceRecord> records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

void write_corpus(std::ostream& out, std::span<const ClassificationRecord> records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

bool KnowledgeBase::contains(std::string_view entity_id) const {
  return std::any_of(entries.begin(), entries.end(), [&](const auto& e) { return e.entity_id == entity_id; });
}

KnowledgeBase knowledge_base_from_json(const json& j) {
  Reader rd(j, "knowledge base");
  KnowledgeBase kb;
  const json& entries = rd.at("entries");
  if (!entries.is_array()) rd.fail("entries", "expected array");
  std::set<std::string> ids;
  std::optional<Eigen::Index> dim;
  for (const auto& e : entries) {
    Reader er(e, "knowledge base entry");
    KnowledgeBaseEntry entry{er.str("entity_id"), er.vec("embedding")};
    er.reject_unknown();
    if (!ids.insert(entry.entity_id).second) rd.fail("entries", "duplicate entity_id " + entry.entity_id);
    if (entry.embedding.size() == 0) rd.fail("entries", "empty embedding for " + entry.entity_id);
    if (dim && *dim != entry.embedding.size()) rd.fail("entries", "mixed embedding dimension");
    dim = entry.embedding.size();
    kb.entries.push_back(std::move(entry));
  }
  if (rd.has("source_tag")) kb.source_tag = rd.str("source_tag");
  if (rd.has("expert_style_centroids")) kb.expert_style_centroids = rd.vecs("expert_style_centroids");
  if (rd.has("train_entity_ids")) kb.train_entity_ids = rd.strings("train_entity_ids");
  rd.reject_unknown();
  return kb;
}

KnowledgeBase load_knowledge_base(const std::filesystem::path& path) {
  return knowledge_base_from_json(read_json_file(path));
}

namespace {

Eigen::MatrixXd table_from_json(Reader& rd, std::string_view field, const std::string& id) {
  auto rows = rd.vecs(field);
  if (rows.empty()) rd.fail(field, "table must have at least one row");
  const Eigen::Index cols = rows.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != cols) rd.fail(field, "ragged table");
    if ((row.array() < 0.0).any()) rd.fail(field, "negative probability");
    if (std::abs(row.sum() - 1.0) > 1e-9)
      rd.fail(field, "row " + std::to_string(i) + " of fixture " + id + " sums to " + fmt_num(row.sum()));
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

}  // namespace

CausalFixture causal_fixture_from_json(const json& j) {
  Reader rd(j, "causal fixture");
  CausalFixture f;
  f.id = rd.str("id");
  if (rd.has("x")) f.x_name = rd.str("x");
  if (rd.has("y")) f.y_name = rd.str("y");
  if (rd.has("z")) f.z_name = rd.str("z");
  if (rd.has("declares_edge")) f.declares_edge = rd.boolean("declares_edge");
  f.observational_conditional = table_from_json(rd, "observational_conditional", f.id);
  f.interventional_table = table_from_json(rd, "interventional_table", f.id);
  if (rd.has("secondary_interventional"))
    f.secondary_interventional = table_from_json(rd, "secondary_interventional", f.id);
  if (rd.has("x_prior")) {
    f.x_prior = rd.vec("x_prior");
    if (f.x_prior->size() != f.observational_conditional.rows())
      rd.fail("x_prior", "length must equal the number of observational rows");
    if (std::abs(f.x_prior->sum() - 1.0) > 1e-9 || (f.x_prior->array() < 0.0).any())
      rd.fail("x_prior", "not a probability vector");
  }
  if (f.interventional_table.cols() != f.observational_conditional.cols())
    rd.fail("interventional_table", "Y support differs from observational_conditional");
  if (f.secondary_interventional && f.secondary_interventional->cols() != f.interventional_table.cols())
    rd.fail("secondary_interventional", "Y support differs from interventional_table");
  rd.reject_unknown();
  return f;
}

std::vector<CausalFixture> load_causal_fixtures(const std::filesystem::path& path) {
  json j = read_json_file(path);
  if (j.is_object() && j.contains("fixtures")) j = j.at("fixtures");
  std::vector<CausalFixture> out;
  if (j.is_array()) {
    for (const auto& e : j) out.push_back(causal_fixture_from_json(e));
  } else {
    out.push_back(causal_fixture_from_json(j));
  }
  return out;
}

Eigen::VectorXd CausalFixture::marginal_y() const {
  const Eigen::Index nx = observational_conditional.rows();
  Eigen::VectorXd prior = x_prior ? *x_prior : Eigen::VectorXd::Constant(nx, 1.0 / static_cast<double>(nx));
  return observational_conditional.transpose() * prior;
}

// ---------------------------------------------------------------------------
// Field availability

namespace {

bool has_annotation(const Annotations& a, std::string_view field) {
  constexpr std::string_view prefix = "annotations.";
  return a.count(std::string(field.substr(prefix.size()))) > 0;
}

bool has_field(const TraceRecord& r, std::string_view f) {
  if (f.starts_with("annotations.")) return has_annotation(r.annotations, f);
  if (f == "truth_embedding") return r.truth_embedding.has_value();
  if (f == "intent_embedding") return r.intent_embedding.has_value();
  if (f == "context_vectors") return r.context_vectors.has_value();
  if (f == "output_token_logprobs") return r.output_token_logprobs && !r.output_token_logprobs->empty();
  if (f == "prob_output_given_input") return r.prob_output_given_input.has_value();
  if (f == "prob_truth_given_input") return r.prob_truth_given_input.has_value();
  if (f == "in_real_manifold") return r.in_real_manifold.has_value();
  if (f == "in_train_set") return r.in_train_set.has_value();
  if (f == "referenced_entities") return r.referenced_entities.has_value();
  if (f == "claim_embeddings") return r.claim_embeddings && !r.claim_embeddings->empty();
  if (f == "style_embedding") return r.style_embedding.has_value();
  if (f == "discomfort_score") return r.discomfort_score.has_value();
  if (f == "output_magnitude") return r.output_magnitude.has_value();
  if (f == "truth_magnitude") return r.truth_magnitude.has_value();
  if (f == "latent_dim") return r.latent_dim.has_value();
  if (f == "input_dim") return r.input_dim.has_value();
  if (f == "has_inference_path") return r.has_inference_path.has_value();
  return false;
}

bool has_field(const ClassificationRecord& r, std::string_view f) {
  if (f.starts_with("annotations.")) return has_annotation(r.annotations, f);
  if (f == "group") return r.group.has_value();
  if (f == "timestamp_index") return r.timestamp_index.has_value();
  if (f == "is_ood") return r.is_ood.has_value();
  if (f == "in_train_set") return r.in_train_set.has_value();
  if (f == "perturbation_pair_id") return r.perturbation_pair_id.has_value();
  if (f == "noise_pair_id") return r.noise_pair_id.has_value();
  if (f == "latency_pair_id") return r.latency_pair_id.has_value();
  if (f == "segment_bounds") return r.segment_bounds.has_value();
  if (f == "reference_bounds") return r.reference_bounds.has_value();
  if (f == "plausible_labels") return r.plausible_labels.has_value();
  return false;
}

template <typename Record>
std::vector<std::string> missing_for(PathologyId id, const Record& r, Family applicable) {
  if (family(id) != applicable) return {"record kind (" + std::string(family_name(family(id))) + " detector)"};
  std::vector<std::string> out;
  for (auto f : required_fields(id))
    if (!has_field(r, f)) out.emplace_back(f);
  return out;
}

template <typename Record>
ValidationReport report_for(std::span<const Record> records, Family applicable) {
  ValidationReport rep;
  for (PathologyId id : all_pathologies()) {
    auto& rows = rep.by_detector[id];
    for (const auto& r : records) {
      auto miss = missing_for(id, r, applicable);
      rows.push_back({r.id, miss.empty(), std::move(miss)});
    }
  }
  return rep;
}

}  // namespace

std::vector<std::string> missing_fields(PathologyId id, const TraceRecord& r) {
  return missing_for(id, r, Family::generative);
}

std::vector<std::string> missing_fields(PathologyId id, const ClassificationRecord& r) {
  return missing_for(id, r, Family::discriminative);
}

ValidationReport validate_corpus(std::span<const TraceRecord> records) {
  return report_for(records, Family::generative);
}

ValidationReport validate_corpus(std::span<const ClassificationRecord> records) {
  return report_for(records, Family::discriminative);
}

ValidationReport validate_corpus(const Corpus& corpus) {
  return std::visit(
      [](const auto& records) {
        using R = typename std::decay_t<decltype(records)>::value_type;
        return validate_corpus(std::span<const R>(records));
      },
      corpus);
}

bool ValidationReport::available(PathologyId id, std::string_view record_id) const {
  auto it = by_detector.find(id);
  if (it == by_detector.end()) return false;
  for (const auto& row : it->second)
    if (row.record_id == record_id) return row.available;
  return false;
}

json ValidationReport::to_json() const {
  json out = json::object();
  for (const auto& [id, rows] : by_detector) {
    json entry = json::object();
    std::size_t n_available = 0;
    for (const auto& row : rows) {
      if (row.available) {
        entry[row.record_id] = "available";
        ++n_available;
      } else {
        entry[row.record_id] = json{{"unavailable", row.missing}};
      }
    }
    out[std::string(name(id))] = json{{"records", entry}, {"available_count", n_available}};
  }
  return out;
}

}  // namespace patho
