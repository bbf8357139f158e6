#include "patho/generative.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "patho/error.hpp"
#include "patho/metrics.hpp"

namespace patho {

namespace detail {

double graded(double x, double threshold) {
  x = std::clamp(x, 0.0, 1.0);
  if (threshold <= 0.0) return 0.5 + 0.5 * x;
  if (x <= threshold) return 0.5 * x / threshold;
  return 0.5 + 0.5 * (x - threshold) / (1.0 - threshold);
}

double strictly_above(double t) { return std::nextafter(t, std::numeric_limits<double>::infinity()); }

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace detail

namespace {

using detail::format_number;
using detail::graded;
using detail::strictly_above;
using Evidence = std::map<std::string, std::string>;
using P = PathologyId;

DetectorOutcome outcome(PathologyId id, std::string subject, double severity, double threshold, Evidence ev = {}) {
  DetectorOutcome o;
  o.pathology = id;
  o.subject = std::move(subject);
  o.severity = std::clamp(severity, 0.0, 1.0);
  o.threshold = threshold;
  o.fired = o.severity >= threshold;
  o.loss = o.severity;
  o.evidence = std::move(ev);
  return o;
}

void require_fields(PathologyId id, const TraceRecord& r) {
  auto miss = missing_fields(id, r);
  if (!miss.empty()) throw UnavailableError(std::string(name(id)) + ": record " + r.id + " lacks field " + miss.front());
}

const KnowledgeBase& require_kb(PathologyId id, const KnowledgeBase* kb) {
  if (kb == nullptr || kb->entries.empty())
    throw UnavailableError(std::string(name(id)) + ": needs a nonempty knowledge base");
  return *kb;
}

bool same_embedding(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double tol) {
  return sim(a, b) >= 1.0 - tol;
}

// Best unclamped similarity of each claim to the knowledge base.
std::vector<double> claim_matches(const std::vector<Eigen::VectorXd>& claims, const KnowledgeBase& kb) {
  std::vector<double> out;
  out.reserve(claims.size());
  for (const auto& c : claims) {
    double best = -1.0;
    for (const auto& e : kb.entries) best = std::max(best, sim(c, e.embedding));
    out.push_back(best);
  }
  return out;
}

// --- record-level detectors -------------------------------------------------

DetectorOutcome delusion(const TraceRecord& r, const DetectorConfig& cfg) {
  const double p_out = *r.prob_output_given_input;
  const double p_true = *r.prob_truth_given_input;
  const double cap = std::log(cfg.get(P::delusion, "log_cap"));
  const double threshold = std::log(cfg.get(P::delusion, "margin")) / cap;
  Evidence ev{{"p_output", format_number(p_out)}, {"p_truth", format_number(p_true)}};
  if (r.truth_embedding && same_embedding(r.output_embedding, *r.truth_embedding, cfg.get(P::delusion, "same_tol"))) {
    ev["output_equals_truth"] = "true";
    return outcome(P::delusion, r.id, 0.0, threshold, ev);
  }
  double severity;
  if (p_true == 0.0) {
    severity = p_out > 0.0 ? 1.0 : 0.0;
  } else if (p_out == 0.0) {
    severity = 0.0;
  } else {
    const double log_ratio = std::log(p_out / p_true);
    ev["log_ratio"] = format_number(log_ratio);
    severity = log_ratio / cap;
  }
  return outcome(P::delusion, r.id, severity, threshold, ev);
}

DetectorOutcome illusion(const TraceRecord& r, const DetectorConfig& cfg) {
  const double s = sim(r.output_embedding, *r.truth_embedding);
  const bool real = *r.in_real_manifold;
  Evidence ev{{"sim_expected", format_number(s)}, {"in_real_manifold", real ? "true" : "false"}};
  return outcome(P::illusion, r.id, real ? 0.0 : std::max(0.0, s), cfg.get(P::illusion, "s_hi"), ev);
}

DetectorOutcome hallucination(const TraceRecord& r) {
  const bool real = *r.in_real_manifold;
  return outcome(P::hallucination, r.id, real ? 0.0 : 1.0, 0.5, {{"in_real_manifold", real ? "true" : "false"}});
}

// Fires when coherence < tau_c (strict) on the argmax candidate.
DetectorOutcome confabulation(const TraceRecord& r, const DetectorConfig& cfg, const KnowledgeBase* kb) {
  const auto& base = require_kb(P::confabulation, kb);
  const double tau_c = cfg.get(P::confabulation, "tau_c");
  const bool argmax = !r.prob_truth_given_input || *r.prob_output_given_input >= *r.prob_truth_given_input;
  const double c = coherence(*r.claim_embeddings, base);
  Evidence ev{{"coherence", format_number(c)}, {"argmax_candidate", argmax ? "true" : "false"}};
  return outcome(P::confabulation, r.id, argmax ? 1.0 - c : 0.0, strictly_above(1.0 - tau_c), ev);
}

DetectorOutcome semantic_compression(const TraceRecord& r, const DetectorConfig& cfg) {
  const double ratio = static_cast<double>(*r.latent_dim) / static_cast<double>(*r.input_dim);
  return outcome(P::semantic_compression, r.id, 1.0 - ratio, 1.0 - cfg.get(P::semantic_compression, "rho"),
                 {{"dim_ratio", format_number(ratio)}});
}

// Severity ln(ratio) / (2 ln alpha): 0.5 exactly at ratio == alpha, fires above it.
DetectorOutcome exaggeration(const TraceRecord& r, const DetectorConfig& cfg) {
  const double alpha = cfg.get(P::exaggeration, "alpha");
  if (!(alpha > 1.0)) throw ValidationError("exaggeration: alpha must exceed 1");
  const double out = *r.output_magnitude;
  const double truth = *r.truth_magnitude;
  double severity;
  Evidence ev;
  if (truth == 0.0) {
    severity = out > 0.0 ? 1.0 : 0.0;
  } else if (out == 0.0) {
    severity = 0.0;
  } else {
    const double ratio = out / truth;
    ev["magnitude_ratio"] = format_number(ratio);
    severity = std::log(ratio) / (2.0 * std::log(alpha));
  }
  return outcome(P::exaggeration, r.id, severity, strictly_above(0.5), ev);
}

DetectorOutcome uncanny_valley(const TraceRecord& r, const DetectorConfig& cfg) {
  const double s = sim(r.output_embedding, *r.truth_embedding);
  const double d = *r.discomfort_score;
  const double severity =
      std::min(graded(s, cfg.get(P::uncanny_valley, "s_hi")), graded(d, cfg.get(P::uncanny_valley, "d_hi")));
  return outcome(P::uncanny_valley, r.id, severity, 0.5,
                 {{"sim_human", format_number(s)}, {"discomfort", format_number(d)}});
}

DetectorOutcome pragmatic_misunderstanding(const TraceRecord& r, const DetectorConfig& cfg) {
  const double cs = sim(r.output_embedding, *r.intent_embedding, {.clamp = true});
  return outcome(P::pragmatic_misunderstanding, r.id, 1.0 - cs,
                 1.0 - cfg.get(P::pragmatic_misunderstanding, "s_indep"), {{"sim_intent_clamped", format_number(cs)}});
}

DetectorOutcome semantic_reheating(const TraceRecord& r) {
  const bool in_train = *r.in_train_set;
  auto it = r.annotations.find("presented_as_novel");
  const bool novel = it == r.annotations.end() || it->second != "false";
  return outcome(P::semantic_reheating, r.id, in_train && novel ? 1.0 : 0.0, 0.5,
                 {{"in_train_set", in_train ? "true" : "false"}, {"presented_as_novel", novel ? "true" : "false"}});
}

DetectorOutcome simulated_authority(const TraceRecord& r, const DetectorConfig& cfg, const KnowledgeBase* kb) {
  const auto& base = require_kb(P::simulated_authority, kb);
  if (base.expert_style_centroids.empty())
    throw UnavailableError("simulated_authority: knowledge base has no expert_style_centroids");
  double style = -1.0;
  for (const auto& c : base.expert_style_centroids) style = std::max(style, sim(*r.style_embedding, c));
  const double c = coherence(*r.claim_embeddings, base);
  const double severity = std::min(graded(style, cfg.get(P::simulated_authority, "s_hi")),
                                   graded(1.0 - c, 1.0 - cfg.get(P::simulated_authority, "tau_c")));
  return outcome(P::simulated_authority, r.id, severity, 0.5,
                 {{"sim_expert_style", format_number(style)}, {"coherence", format_number(c)}});
}

DetectorOutcome abductive_leap(const TraceRecord& r, const DetectorConfig& cfg) {
  const bool path = *r.has_inference_path;
  const double p = *r.prob_output_given_input;
  const double severity = path ? 0.0 : graded(p, cfg.get(P::abductive_leap, "delta"));
  return outcome(P::abductive_leap, r.id, severity, strictly_above(0.5),
                 {{"p_output", format_number(p)}, {"has_inference_path", path ? "true" : "false"}});
}

// Severity d / (d + eps): exactly 0.5 at d == eps, fires when d > eps.
DetectorOutcome contextual_drift(const TraceRecord& r, const DetectorConfig& cfg) {
  const auto& c = *r.context_vectors;
  const int k = cfg.get_int(P::contextual_drift, "k");
  const double eps = cfg.get(P::contextual_drift, "eps");
  if (k < 1) throw ValidationError("contextual_drift: k must be >= 1");
  if (!(eps > 0.0)) throw ValidationError("contextual_drift: eps must be > 0");
  if (c.size() < static_cast<std::size_t>(k) + 1)
    throw UnavailableError("contextual_drift: record " + r.id + " has fewer than k+1 context vectors");
  const double d = contextual_distance(c.back(), c[c.size() - 1 - static_cast<std::size_t>(k)]);
  return outcome(P::contextual_drift, r.id, d / (d + eps), strictly_above(0.5),
                 {{"distance", format_number(d)}, {"k", std::to_string(k)}});
}

DetectorOutcome referential_hallucination(const TraceRecord& r, const KnowledgeBase* kb) {
  const auto& base = require_kb(P::referential_hallucination, kb);
  const auto& ents = *r.referenced_entities;
  std::vector<std::string> unverified;
  for (const auto& e : ents) {
    const bool in_train =
        std::find(base.train_entity_ids.begin(), base.train_entity_ids.end(), e) != base.train_entity_ids.end();
    if (!base.contains(e) && !in_train) unverified.push_back(e);
  }
  double severity = 0.0;
  if (!unverified.empty())
    severity = 0.5 + 0.5 * static_cast<double>(unverified.size()) / static_cast<double>(ents.size());
  Evidence ev{{"unverified_count", std::to_string(unverified.size())}};
  if (!unverified.empty()) ev["first_unverified"] = unverified.front();
  return outcome(P::referential_hallucination, r.id, severity, 0.5, ev);
}

DetectorOutcome semiotic_frankenstein(const TraceRecord& r, const DetectorConfig& cfg, const KnowledgeBase* kb) {
  const auto& base = require_kb(P::semiotic_frankenstein, kb);
  const auto matches = claim_matches(*r.claim_embeddings, base);
  const double best = *std::max_element(matches.begin(), matches.end());
  const double worst = *std::min_element(matches.begin(), matches.end());
  const double severity = std::min(graded(best, cfg.get(P::semiotic_frankenstein, "s_hi")),
                                   graded(1.0 - worst, 1.0 - cfg.get(P::semiotic_frankenstein, "s_lo")));
  return outcome(P::semiotic_frankenstein, r.id, severity, 0.5,
                 {{"best_claim_match", format_number(best)}, {"worst_claim_match", format_number(worst)}});
}

// --- corpus-level detectors -------------------------------------------------

void require_all(PathologyId id, std::span<const TraceRecord> rs) {
  for (const auto& r : rs) require_fields(id, r);
}

DetectorOutcome misattribution(std::span<const TraceRecord> rs, const DetectorConfig& cfg, std::string subject) {
  require_all(P::misattribution, rs);
  double best = -1.0;
  std::string pair;
  std::size_t n_pairs = 0;
  for (std::size_t i = 0; i < rs.size(); ++i)
    for (std::size_t j = i + 1; j < rs.size(); ++j) {
      const auto& a = rs[i].annotations;
      const auto& b = rs[j].annotations;
      if (a.at("content_id") != b.at("content_id") || a.at("source") == b.at("source")) continue;
      ++n_pairs;
      const double s = sim(rs[i].output_embedding, rs[j].output_embedding);
      if (s > best) {
        best = s;
        pair = rs[i].id + "," + rs[j].id;
      }
    }
  if (n_pairs == 0) throw UnavailableError("misattribution: no content-matched pairs with different sources");
  return outcome(P::misattribution, std::move(subject), std::max(0.0, best), cfg.get(P::misattribution, "s_hi"),
                 {{"pair", pair}, {"pair_sim", format_number(best)}, {"eligible_pairs", std::to_string(n_pairs)}});
}

DetectorOutcome semantic_drift(std::span<const TraceRecord> rs, const DetectorConfig& cfg, std::string subject) {
  require_all(P::semantic_drift, rs);
  std::vector<double> s;
  for (const auto& r : rs) s.push_back(sim(r.output_embedding, *r.intent_embedding));
  const double slope = windowed_slope(s, cfg.get_int(P::semantic_drift, "window"));
  const double end = s.back();
  const double severity = slope < 0.0 ? 1.0 - end : 0.0;
  return outcome(P::semantic_drift, std::move(subject), severity,
                 strictly_above(1.0 - cfg.get(P::semantic_drift, "s_lo")),
                 {{"slope", format_number(slope)}, {"end_sim", format_number(end)}});
}

DetectorOutcome bluffing(std::span<const TraceRecord> rs, const DetectorConfig& cfg, std::string subject) {
  require_all(P::bluffing, rs);
  std::vector<Eigen::VectorXd> xs, ys;
  double fl = 0.0;
  for (const auto& r : rs) {
    xs.push_back(r.input_embedding);
    ys.push_back(r.output_embedding);
    fl += fluency(*r.output_token_logprobs);
  }
  fl /= static_cast<double>(rs.size());
  double mi;
  try {
    mi = mutual_information(xs, ys, cfg.mi);
  } catch (const InsufficientDataError& e) {
    throw UnavailableError(std::string("bluffing: ") + e.what());
  }
  const double mi_lo = cfg.get(P::bluffing, "mi_lo");
  const double emptiness = 1.0 - mi / (2.0 * mi_lo);
  const double severity = std::min(std::clamp(emptiness, 0.0, 1.0), graded(fl, cfg.get(P::bluffing, "f_hi")));
  return outcome(P::bluffing, std::move(subject), severity, 0.5,
                 {{"mutual_information", format_number(mi)}, {"mean_fluency", format_number(fl)}});
}

DetectorOutcome cognitive_stereotypy(std::span<const TraceRecord> rs, const DetectorConfig& cfg,
                                     std::string subject) {
  const double tol = cfg.get(P::cognitive_stereotypy, "same_tol");
  double worst = 2.0;
  std::size_t n_pairs = 0;
  for (std::size_t i = 0; i < rs.size(); ++i)
    for (std::size_t j = i + 1; j < rs.size(); ++j) {
      if (same_embedding(rs[i].input_embedding, rs[j].input_embedding, tol)) continue;
      ++n_pairs;
      worst = std::min(worst, sim(rs[i].output_embedding, rs[j].output_embedding));
    }
  if (n_pairs == 0) throw UnavailableError("cognitive_stereotypy: no pairs with distinct inputs");
  return outcome(P::cognitive_stereotypy, std::move(subject), std::max(0.0, worst),
                 cfg.get(P::cognitive_stereotypy, "s_hi"),
                 {{"min_output_sim", format_number(worst)}, {"eligible_pairs", std::to_string(n_pairs)}});
}

DetectorOutcome hypersignification(std::span<const TraceRecord> rs, const DetectorConfig& cfg, std::string subject) {
  const double s_lo = cfg.get(P::hypersignification, "s_lo");
  double best = 0.0;
  std::size_t n_pairs = 0;
  std::string pair;
  for (std::size_t i = 0; i < rs.size(); ++i)
    for (std::size_t j = i + 1; j < rs.size(); ++j) {
      if (sim(rs[i].input_embedding, rs[j].input_embedding) >= s_lo) continue;
      ++n_pairs;
      const double s = sim(rs[i].output_embedding, rs[j].output_embedding);
      if (s > best || pair.empty()) {
        best = std::max(best, s);
        pair = rs[i].id + "," + rs[j].id;
      }
    }
  return outcome(P::hypersignification, std::move(subject), best,
                 strictly_above(cfg.get(P::hypersignification, "gamma")),
                 {{"max_output_sim", format_number(best)}, {"weak_pairs", std::to_string(n_pairs)}, {"pair", pair}});
}

// Either the redundancy D_avg rises or the entropy H falls while fluency stays high.
DetectorOutcome semantic_warming(std::span<const TraceRecord> rs, const DetectorConfig& cfg, std::string subject) {
  require_all(P::semantic_warming, rs);
  if (rs.size() < 3) throw ArityError("semantic_warming: needs at least three records");
  const int window = cfg.get_int(P::semantic_warming, "window");
  const double ridge = cfg.get(P::semantic_warming, "entropy_ridge");
  std::vector<Eigen::VectorXd> styles;
  std::vector<double> d_avg, entropy, fl;
  for (const auto& r : rs) {
    styles.push_back(*r.style_embedding);
    fl.push_back(fluency(*r.output_token_logprobs));
    if (styles.size() >= 2) {
      d_avg.push_back(avg_pairwise_similarity(styles));
      entropy.push_back(semantic_entropy(styles, ridge));
    }
  }
  const double slope_d = windowed_slope(d_avg, window);
  const double slope_h = windowed_slope(entropy, window);
  const std::size_t w = std::min(fl.size(), static_cast<std::size_t>(window));
  double recent_fluency = 0.0;
  for (std::size_t i = fl.size() - w; i < fl.size(); ++i) recent_fluency += fl[i];
  recent_fluency /= static_cast<double>(w);

  constexpr double flat = 1e-12;
  auto trend = [](double slope, double scale) {
    return slope > flat ? std::clamp(0.5 + slope / (2.0 * scale), 0.5, 1.0) : 0.0;
  };
  const double f = graded(recent_fluency, cfg.get(P::semantic_warming, "f_hi"));
  const double redundancy = std::min(trend(slope_d, cfg.get(P::semantic_warming, "warming_slope_scale")), f);
  const double diversity_loss = std::min(trend(-slope_h, cfg.get(P::semantic_warming, "entropy_slope_scale")), f);
  return outcome(P::semantic_warming, std::move(subject), std::max(redundancy, diversity_loss), 0.5,
                 {{"d_avg_slope", format_number(slope_d)},
                  {"entropy_slope", format_number(slope_h)},
                  {"recent_fluency", format_number(recent_fluency)}});
}

}  // namespace

DetectorOutcome score(PathologyId id, const TraceRecord& r, const DetectorConfig& cfg, const KnowledgeBase* kb) {
  if (family(id) != Family::generative)
    throw ArityError(std::string(name(id)) + " scores classification corpora, not trace records");
  if (is_corpus_level(id)) throw ArityError(std::string(name(id)) + " needs a record sequence, got a single record");
  if (id == P::causal_inference_failure)
    throw ArityError("causal_inference_failure scores causal fixtures; use score_causal");
  require_fields(id, r);
  switch (id) {
    case P::delusion: return delusion(r, cfg);
    case P::illusion: return illusion(r, cfg);
    case P::hallucination: return hallucination(r);
    case P::confabulation: return confabulation(r, cfg, kb);
    case P::semantic_compression: return semantic_compression(r, cfg);
    case P::exaggeration: return exaggeration(r, cfg);
    case P::uncanny_valley: return uncanny_valley(r, cfg);
    case P::pragmatic_misunderstanding: return pragmatic_misunderstanding(r, cfg);
    case P::semantic_reheating: return semantic_reheating(r);
    case P::simulated_authority: return simulated_authority(r, cfg, kb);
    case P::abductive_leap: return abductive_leap(r, cfg);
    case P::contextual_drift: return contextual_drift(r, cfg);
    case P::referential_hallucination: return referential_hallucination(r, kb);
    case P::semiotic_frankenstein: return semiotic_frankenstein(r, cfg, kb);
    default: break;
  }
  throw ArityError(std::string(name(id)) + ": not a record-level detector");
}

DetectorOutcome score(PathologyId id, std::span<const TraceRecord> rs, const DetectorConfig& cfg,
                      const KnowledgeBase* /*kb*/, std::string subject) {
  if (family(id) != Family::generative || !is_corpus_level(id))
    throw ArityError(std::string(name(id)) + " is not a corpus-level generative detector");
  if (rs.size() < 2) throw ArityError(std::string(name(id)) + " needs at least two records");
  switch (id) {
    case P::misattribution: return misattribution(rs, cfg, std::move(subject));
    case P::semantic_drift: return semantic_drift(rs, cfg, std::move(subject));
    case P::bluffing: return bluffing(rs, cfg, std::move(subject));
    case P::cognitive_stereotypy: return cognitive_stereotypy(rs, cfg, std::move(subject));
    case P::hypersignification: return hypersignification(rs, cfg, std::move(subject));
    case P::semantic_warming: return semantic_warming(rs, cfg, std::move(subject));
    default: break;
  }
  throw ArityError(std::string(name(id)) + ": not a corpus-level detector");
}

namespace {

double total_variation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return 0.5 * (a - b).cwiseAbs().sum(); }

}  // namespace

DetectorOutcome score_causal(const CausalFixture& f, const DetectorConfig& cfg) {
  const double tol = cfg.get(P::causal_inference_failure, "tv_tol");
  if (!(tol > 0.0)) throw ValidationError("causal_inference_failure: tv_tol must be > 0");
  Evidence ev;
  double d = std::numeric_limits<double>::infinity();
  if (f.declares_edge) {
    const Eigen::VectorXd marginal = f.marginal_y();
    double worst = 0.0;
    for (Eigen::Index x = 0; x < f.interventional_table.rows(); ++x)
      worst = std::max(worst, total_variation(f.interventional_table.row(x).transpose(), marginal));
    ev["tv_do_x_vs_marginal"] = format_number(worst);
    d = std::min(d, worst);
  }
  if (f.secondary_interventional) {
    const auto& z = *f.secondary_interventional;
    double worst = 0.0;
    if (z.rows() == f.interventional_table.rows()) {
      for (Eigen::Index k = 0; k < z.rows(); ++k)
        worst = std::max(worst, total_variation(f.interventional_table.row(k).transpose(), z.row(k).transpose()));
    } else {
      worst = total_variation(f.interventional_table.colwise().mean().transpose(), z.colwise().mean().transpose());
    }
    ev["tv_do_x_vs_do_z"] = format_number(worst);
    d = std::min(d, worst);
  }
  if (!std::isfinite(d))
    throw UnavailableError("causal_inference_failure: fixture " + f.id +
                           " declares no X->Y edge and has no secondary intervention");
  return outcome(P::causal_inference_failure, f.id, 1.0 - d / (2.0 * tol), 0.5, ev);
}

void sort_outcomes(std::vector<DetectorOutcome>& outcomes) {
  std::stable_sort(outcomes.begin(), outcomes.end(), [](const DetectorOutcome& a, const DetectorOutcome& b) {
    if (a.pathology != b.pathology) return index(a.pathology) < index(b.pathology);
    return a.subject < b.subject;
  });
}

namespace {

// Session groups in first-appearance order.
std::vector<std::pair<std::string, std::vector<TraceRecord>>> sessions(std::span<const TraceRecord> corpus) {
  std::vector<std::pair<std::string, std::vector<TraceRecord>>> out;
  for (const auto& r : corpus) {
    auto it = r.annotations.find("session");
    const std::string key = it == r.annotations.end() ? "corpus" : "session:" + it->second;
    auto g = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == key; });
    if (g == out.end()) {
      out.emplace_back(key, std::vector<TraceRecord>{});
      g = std::prev(out.end());
    }
    g->second.push_back(r);
  }
  for (auto& [key, rs] : out) {
    const bool all_turns = std::all_of(rs.begin(), rs.end(), [](const TraceRecord& r) {
      auto it = r.annotations.find("turn");
      if (it == r.annotations.end()) return false;
      long v;
      auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
      return ec == std::errc{} && p == it->second.data() + it->second.size();
    });
    if (all_turns)
      std::stable_sort(rs.begin(), rs.end(), [](const TraceRecord& a, const TraceRecord& b) {
        return std::stol(a.annotations.at("turn")) < std::stol(b.annotations.at("turn"));
      });
  }
  return out;
}

}  // namespace

AuditResult audit_generative(std::span<const TraceRecord> corpus, const KnowledgeBase* kb,
                             std::span<const CausalFixture> fixtures, const DetectorConfig& cfg) {
  AuditResult res;
  auto run = [&](PathologyId id, const std::string& subject, auto&& fn) {
    try {
      res.outcomes.push_back(fn());
    } catch (const UnavailableError& e) {
      res.skipped.push_back({id, subject, e.what()});
    } catch (const ArityError& e) {
      res.skipped.push_back({id, subject, e.what()});
    } catch (const InsufficientDataError& e) {
      res.skipped.push_back({id, subject, e.what()});
    }
  };
  const auto groups = sessions(corpus);
  for (PathologyId id : generative_pathologies()) {
    if (id == P::causal_inference_failure) {
      if (fixtures.empty()) res.skipped.push_back({id, "", "no causal fixtures supplied"});
      for (const auto& f : fixtures) run(id, f.id, [&] { return score_causal(f, cfg); });
    } else if (is_corpus_level(id)) {
      if (corpus.empty()) res.skipped.push_back({id, "", "empty corpus"});
      for (const auto& [key, rs] : groups)
        run(id, key, [&] { return score(id, std::span<const TraceRecord>(rs), cfg, kb, key); });
    } else {
      if (corpus.empty()) res.skipped.push_back({id, "", "empty corpus"});
      for (const auto& r : corpus) run(id, r.id, [&] { return score(id, r, cfg, kb); });
    }
  }
  sort_outcomes(res.outcomes);
  return res;
}

}  // namespace patho
