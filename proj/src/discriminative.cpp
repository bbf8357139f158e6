#include "patho/discriminative.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "patho/error.hpp"

namespace patho {

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

namespace {

using detail::format_number;
using detail::graded;
using detail::strictly_above;
using Evidence = std::map<std::string, std::string>;
using P = PathologyId;
using Records = std::vector<const ClassificationRecord*>;

DetectorOutcome outcome(PathologyId id, double severity, double threshold, Evidence ev) {
  DetectorOutcome o;
  o.pathology = id;
  o.subject = "corpus";
  o.severity = std::clamp(severity, 0.0, 1.0);
  o.threshold = threshold;
  o.fired = o.severity >= threshold;
  o.loss = o.severity;
  o.evidence = std::move(ev);
  return o;
}

std::string rate_text(std::size_t events, std::size_t total) {
  return std::to_string(events) + "/" + std::to_string(total);
}

double rate(std::size_t events, std::size_t total) {
  return static_cast<double>(events) / static_cast<double>(total);
}

double accuracy(const Records& rs) {
  std::size_t ok = 0;
  for (const auto* r : rs) ok += r->correct() ? 1 : 0;
  return rate(ok, rs.size());
}

const std::string& annotation(const ClassificationRecord& r, const std::string& key) { return r.annotations.at(key); }

// Records carrying every required field, in id order.
Records eligible(PathologyId id, std::span<const ClassificationRecord> corpus) {
  Records out;
  for (const auto& r : corpus)
    if (missing_fields(id, r).empty()) out.push_back(&r);
  std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  if (out.empty()) throw UnavailableError(std::string(name(id)) + ": no record carries the required fields");
  return out;
}

void require_n_min(PathologyId id, std::size_t n, const DetectorConfig& cfg, const std::string& what = "records") {
  const auto n_min = static_cast<std::size_t>(std::max(0, cfg.get_int(id, "n_min")));
  if (n < n_min)
    throw InsufficientDataError(std::string(name(id)) + ": " + std::to_string(n) + " eligible " + what +
                                ", need at least " + std::to_string(n_min));
}

using Pair = std::pair<const ClassificationRecord*, const ClassificationRecord*>;

// Groups sharing a key of exactly two records, in key order.
template <class KeyFn>
std::vector<Pair> pairs_by(const Records& rs, KeyFn key) {
  std::map<std::string, Records> groups;
  for (const auto* r : rs) groups[key(*r)].push_back(r);
  std::vector<Pair> out;
  for (auto& [k, g] : groups)
    if (g.size() == 2) out.emplace_back(g[0], g[1]);
  return out;
}

// Orders a pair by a role annotation; false if the roles are not {first, second}.
bool by_role(Pair& p, const std::string& key, const std::string& first, const std::string& second) {
  const auto& a = annotation(*p.first, key);
  const auto& b = annotation(*p.second, key);
  if (a == second && b == first) std::swap(p.first, p.second);
  return annotation(*p.first, key) == first && annotation(*p.second, key) == second;
}

std::map<std::string, Records> by_group(const Records& rs) {
  std::map<std::string, Records> g;
  for (const auto* r : rs) g[*r->group].push_back(r);
  return g;
}

DetectorOutcome overfitting(std::span<const ClassificationRecord> corpus, const DetectorConfig& cfg) {
  const auto rs = eligible(P::overfitting, corpus);
  require_n_min(P::overfitting, rs.size(), cfg);
  Records train, held;
  for (const auto* r : rs) (*r->in_train_set ? train : held).push_back(r);
  if (train.empty() || held.empty())
    throw InsufficientDataError("overfitting: needs both train-flagged and held-out records");
  const double a_train = accuracy(train);
  const double a_held = accuracy(held);
  return outcome(P::overfitting, a_train - a_held, cfg.get(P::overfitting, "gap_hi"),
                 {{"train_accuracy", format_number(a_train)},
                  {"heldout_accuracy", format_number(a_held)},
                  {"train_n", std::to_string(train.size())},
                  {"heldout_n", std::to_string(held.size())}});
}

// Per group: |rate of predicted positives - rate of true positives|.
DetectorOutcome bias_amplification(std::span<const ClassificationRecord> corpus, const DetectorConfig& cfg) {
  const auto rs = eligible(P::bias_amplification, corpus);
  require_n_min(P::bias_amplification, rs.size(), cfg);
  const int positive = cfg.get_int(P::bias_amplification, "positive_label");
  Evidence ev;
  double worst = 0.0;
  for (const auto& [g, members] : by_group(rs)) {
    std::size_t pred = 0, truth = 0;
    for (const auto* r : members) {
      pred += r->predicted_label == positive ? 1 : 0;
      truth += r->true_label == positive ? 1 : 0;
    }
    const double gap = std::abs(rate(pred, members.size()) - rate(truth, members.size()));
    ev["group." + g] = "predicted " + rate_text(pred, members.size()) + ", true " + rate_text(truth, members.size());
    worst = std::max(worst, gap);
  }
  ev["max_gap"] = format_number(worst);
  return outcome(P::bias_amplification, worst, cfg.get(P::bias_amplification, "amp_hi"), ev);
}

DetectorOutcome spurious_correlation(std::span<const ClassificationRecord> corpus, const DetectorConfig& cfg) {
  const auto rs = eligible(P::spurious_correlation, corpus);
  auto pairs = pairs_by(rs, [](const auto& r) { return annotation(r, "spurious_pair_id"); });
  Records original, resampled;
  for (auto& p : pairs)
    if (by_role(p, "spurious_role", "original", "resampled")) {
      original.push_back(p.first);
      resampled.push_back(p.second);
    }
  require_n_min(P::spurious_correlation, 2 * original.size(), cfg, "paired records");
  const double a0 = accuracy(original);
  const double a1 = accuracy(resampled);
  return outcome(P::spurious_correlation, a0 - a1, cfg.get(P::spurious_correlation, "gap_hi"),
                 {{"original_accuracy", format_number(a0)},
                  {"resampled_accuracy", format_number(a1)},
                  {"pairs", std::to_string(original.size())}});
}

DetectorOutcome adversarial_vulnerability(std::span<const ClassificationRecord> corpus, const DetectorConfig& cfg) {
  const auto rs = eligible(P::adversarial_vulnerability, corpus);
  const double eps = cfg.get(P::adversarial_vulnerability, "eps_adv");
  std::size_t n = 0, flips = 0;
  for (const auto& [a, b] : pairs_by(rs, [](const auto& r) { return *r.perturbation_pair_id; })) {
    if (a->features.size() != b->features.size() || (a->features - b->features).norm() > eps) continue;
    ++n;
    flips += a->predicted_label != b->predicted_label ? 1 : 0;
  }
  require_n_min(P::adversarial_vulnerability, 2 * n, cfg, "paired records");
  return outcome(P::adversarial_vulnerability, rate(flips, n), cfg.get(P::adversarial_vulnerability, "flip_hi"),
                 {{"flips", rate_text(flips, n)}});
}

DetectorOutcome calibration_failure(std::span<const ClassificationRecord> corpus, const DetectorConfig& cfg) {
  Records rs;
  for (const auto& r : corpus) rs.push_back(&r);
  std::sort(rs.begin(), rs.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  require_n_min(P::calibration_failure, rs.size(), cfg);
  std::vector<ClassificationRecord> sorted;
  sorted.reserve(rs.size());
  for (const auto* r : rs) sorted.push_back(*r);
  const int bins = cfg.get_int(P::calibration_failure, "ece_bins");
  const double ece = expected_calibration_error(sorted, bins);
  return outcome(P::calibration_failure, ece, cfg.get(P::calibration_failure, "ece_hi"),
                 {{"ece", format_number(ece)}, {"bins", std::to_string(bins)}});
}

// Largest per-coordinate TV distance between binned feature histograms.
double feature_tv(const Records& ref, const Records& cur, int bins) {
  const Eigen::Index d = ref.front()->features.size();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    double lo = ref.front()->features(j), hi = lo;
    for (const auto* set : {&ref, &cur})
      for (const auto* r : *set) {
        lo = std::min(lo, r->features(j));
        hi = std::max(hi, r->features(j));
      }
    const double width = (hi - lo) / bins;
    auto hist = [&](const Records& rs) {
      std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
      for (const auto* r : rs) {
        std::size_t b = 0;
        if (width > 0.0)
          b = std::min(static_cast<std::size_t>((r->features(j) - lo) / width), static_cast<std::size_t>(bins - 1));
        h[b] += 1.0;
      }
      for (double& x : h) x /= static_cast<double>(rs.size());
      return h;
    };
    const auto a = hist(ref);
    const auto b = hist(cur);
    double tv = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) tv += std::abs(a[k] - b[k]);
    worst = std::max(worst, 0.5 * tv);
  }
  return worst;
}

DetectorOutcome concept_drift_sensitivity(std::span<const ClassificationRecord> corpus, const DetectorConfig& cfg) {
  const auto rs = eligible(P::concept_drift_sensitivity, corpus);
  require_n_min(P::concept_drift_sensitivity, rs.size(), cfg);
  double split = cfg.get(P::concept_drift_sensitivity, "drift_split");
  if (std::isnan(split)) {
    std::vector<long> ts;
    for (const auto* r : rs) ts.push_back(*r->timestamp_index);
    std::sort(ts.begin(), ts.end());
    split = static_cast<double>(ts[ts.size() / 2]);
  }
  Records ref, cur;
  for (const auto* r : rs) (static_cast<double>(*r->timestamp_index) < split ? ref : cur).push_back(r);
  if (ref.empty() || cur.empty())
    throw InsufficientDataError("concept_drift_sensitivity: reference or current slice is empty");
  for (const auto* r : rs)
    if (r->features.size() != ref.front()->features.size())
      throw ValidationError("concept_drift_sensitivity: records differ in feature length");
  const double drop = accuracy(ref) - accuracy(cur);
  const double tv = feature_tv(ref, cur, cfg.get_int(P::concept_drift_sensitivity, "tv_bins"));
  const double severity = std::min(graded(drop, cfg.get(P::concept_drift_sensitivity, "gap_hi")),
                                   graded(tv, cfg.get(P::concept_drift_sensitivity, "tv_hi")));
  return outcome(P::concept_drift_sensitivity, severity, 0.5,
                 {{"accuracy_drop", format_number(drop)},
                  {"feature_tv", format_number(tv)},
                  {"split", format_number(split)},
                  {"reference_n", std::to_string(ref.size())},
                  {"current_n", std::to_string(cur.size())}});
}

DetectorOutcome misclassification_under_uncertainty(std::span<const ClassificationRecord> corpus,
                                                    const DetectorConfig& cfg) {
  Records ood;
  for (const auto* r : eligible(P::misclassification_under_uncertainty, corpus))
    if (*r->is_ood) ood.push_back(r);
  require_n_min(P::misclassification_under_uncertainty, ood.size(), cfg, "out-of-distribution records");
  const double c_hi = cfg.get(P::misclassification_under_uncertainty, "c_hi");
  std::size_t events = 0;
  for (const auto* r : ood) events += (r->confidence() >= c_hi && !r->correct()) ? 1 : 0;
  return outcome(P::misclassification_under_uncertainty, rate(events, ood.size()),
                 cfg.get(P::misclassification_under_uncertainty, "frac_hi"),
                 {{"confident_errors", rate_text(events, ood.size())}});
}

DetectorOutcome prosodic_misclassification(std::span<const ClassificationRecord> corpus, const DetectorConfig& cfg) {
  const auto rs = eligible(P::prosodic_misclassification, corpus);
  std::size_t n = 0, events = 0;
  for (const auto& [a, b] : pairs_by(rs, [](const auto& r) { return annotation(r, "prosody_pair_id"); })) {
    if (annotation(*a, "prosody") == annotation(*b, "prosody")) continue;
    ++n;
    events += (a->predicted_label != b->predicted_label && (!a->correct() || !b->correct())) ? 1 : 0;
  }
  require_n_min(P::prosodic_misclassification, 2 * n, cfg, "paired records");
  return outcome(P::prosodic_misclassification, rate(events, n), cfg.get(P::prosodic_misclassification, "flip_hi"),
                 {{"prosody_flips", rate_text(events, n)}});
}

DetectorOutcome accent_bias(std::span<const ClassificationRecord> corpus, const DetectorConfig& cfg) {
  auto rs = eligible(P::accent_bias, corpus);
  auto groups = by_group(rs);
  if (groups.size() < 2) throw InsufficientDataError("accent_bias: needs at least two groups");
  const bool matched = std::all_of(rs.begin(), rs.end(), [](const auto* r) { return r->annotations.count("content_id"); });
  if (matched) {
    // Restrict to content every group has, so groups are compared on identical items.
    std::set<std::string> common;
    bool first = true;
    for (const auto& [g, members] : groups) {
      std::set<std::string> ids;
      for (const auto* r : members) ids.insert(annotation(*r, "content_id"));
      if (first) {
        common = ids;
        first = false;
      } else {
        std::set<std::string> keep;
        std::set_intersection(common.begin(), common.end(), ids.begin(), ids.end(), std::inserter(keep, keep.end()));
        common = std::move(keep);
      }
    }
    Records kept;
    for (const auto* r : rs)
      if (common.count(annotation(*r, "content_id"))) kept.push_back(r);
    rs = std::move(kept);
    groups = by_group(rs);
    if (groups.size() < 2) throw InsufficientDataError("accent_bias: no content shared across groups");
  }
  require_n_min(P::accent_bias, rs.size(), cfg);
  Evidence ev;
  double lo = 1.0, hi = 0.0;
  for (const auto& [g, members] : groups) {
    const double a = accuracy(members);
    lo = std::min(lo, a);
    hi = std::max(hi, a);
    ev["group." + g] = format_number(a);
  }
  ev["content_matched"] = matched ? "true" : "false";
  return outcome(P::accent_bias, hi - lo, cfg.get(P::accent_bias, "amp_hi"), ev);
}

// Severity offset / (offset + tol_t): fires when some boundary is off by more than tol_t.
DetectorOutcome turn_boundary_failure(std::span<const ClassificationRecord> corpus, const DetectorConfig& cfg) {
  const auto rs = eligible(P::turn_boundary_failure, corpus);
  const double tol = cfg.get(P::turn_boundary_failure, "tol_t");
  if (!(tol > 0.0)) throw ValidationError("turn_boundary_failure: tol_t must be > 0");
  double worst = 0.0;
  std::string worst_id;
  std::size_t misaligned = 0;
  for (const auto* r : rs) {
    const auto& s = *r->segment_bounds;
    const auto& ref = *r->reference_bounds;
    const double off = static_cast<double>(std::max(std::labs(s[0] - ref[0]), std::labs(s[1] - ref[1])));
    if (off > tol) ++misaligned;
    if (off > worst || worst_id.empty()) {
      worst = std::max(worst, off);
      worst_id = r->id;
    }
  }
  return outcome(P::turn_boundary_failure, worst / (worst + tol), strictly_above(0.5),
                 {{"max_offset", format_number(worst)},
                  {"record", worst_id},
                  {"misaligned", rate_text(misaligned, rs.size())}});
}

DetectorOutcome semantic_boundary_confusion(std::span<const ClassificationRecord> corpus, const DetectorConfig& cfg) {
  const auto rs = eligible(P::semantic_boundary_confusion, corpus);
  double worst = 0.0;
  std::size_t n = 0;
  std::string worst_pair;
  for (auto p : pairs_by(rs, [](const auto& r) { return annotation(r, "span_pair_id"); })) {
    if (!by_role(p, "span", "wide", "narrow")) continue;
    const auto& w = *p.first->segment_bounds;
    const auto& nb = *p.second->segment_bounds;
    if (!(w[0] <= nb[0] && nb[1] <= w[1]))
      throw ValidationError("semantic_boundary_confusion: wide span of " + p.first->id +
                            " does not contain the narrow span of " + p.second->id);
    auto score = [](const ClassificationRecord& r) {
      if (r.true_label < 0 || r.true_label >= r.class_probabilities.size())
        throw ValidationError("record " + r.id + ": true_label outside class_probabilities");
      return r.class_probabilities(r.true_label);
    };
    ++n;
    const double gap = score(*p.second) - score(*p.first);
    if (gap > worst || worst_pair.empty()) {
      worst = std::max(worst, gap);
      worst_pair = p.first->id + "," + p.second->id;
    }
  }
  if (n == 0) throw InsufficientDataError("semantic_boundary_confusion: no wide/narrow span pairs");
  return outcome(P::semantic_boundary_confusion, worst, cfg.get(P::semantic_boundary_confusion, "gap_hi"),
                 {{"max_score_gap", format_number(worst)}, {"pair", worst_pair}, {"pairs", std::to_string(n)}});
}

DetectorOutcome noise_overfitting(std::span<const ClassificationRecord> corpus, const DetectorConfig& cfg) {
  const auto rs = eligible(P::noise_overfitting, corpus);
  std::size_t n = 0, flips = 0;
  for (auto p : pairs_by(rs, [](const auto& r) { return *r.noise_pair_id; })) {
    if (!by_role(p, "noise_role", "clean", "noisy") || !p.first->correct()) continue;
    ++n;
    flips += p.second->correct() ? 0 : 1;
  }
  require_n_min(P::noise_overfitting, 2 * n, cfg, "paired records with a correct clean input");
  return outcome(P::noise_overfitting, rate(flips, n), cfg.get(P::noise_overfitting, "flip_hi"),
                 {{"noise_flips", rate_text(flips, n)}});
}

DetectorOutcome latency_induced_decision_drift(std::span<const ClassificationRecord> corpus,
                                               const DetectorConfig& cfg) {
  const auto rs = eligible(P::latency_induced_decision_drift, corpus);
  std::size_t n = 0, flips = 0;
  for (const auto& [a, b] : pairs_by(rs, [](const auto& r) { return *r.latency_pair_id; })) {
    ++n;
    flips += a->predicted_label != b->predicted_label ? 1 : 0;
  }
  require_n_min(P::latency_induced_decision_drift, 2 * n, cfg, "paired records");
  return outcome(P::latency_induced_decision_drift, rate(flips, n),
                 cfg.get(P::latency_induced_decision_drift, "flip_hi"), {{"disagreements", rate_text(flips, n)}});
}

DetectorOutcome ambiguity_collapse(std::span<const ClassificationRecord> corpus, const DetectorConfig& cfg) {
  Records amb;
  for (const auto* r : eligible(P::ambiguity_collapse, corpus))
    if (r->plausible_labels->size() >= 2) amb.push_back(r);
  require_n_min(P::ambiguity_collapse, amb.size(), cfg, "ambiguous records");
  const double c_hi = cfg.get(P::ambiguity_collapse, "c_hi");
  const double margin_hi = cfg.get(P::ambiguity_collapse, "margin_hi");
  std::size_t events = 0;
  for (const auto* r : amb) {
    Eigen::Index top;
    const double conf = r->class_probabilities.maxCoeff(&top);
    double alt = 0.0;
    for (int y : *r->plausible_labels)
      if (y != top && y >= 0 && y < r->class_probabilities.size()) alt = std::max(alt, r->class_probabilities(y));
    if (conf >= c_hi && top != r->true_label && conf - alt > margin_hi) ++events;
  }
  return outcome(P::ambiguity_collapse, rate(events, amb.size()), cfg.get(P::ambiguity_collapse, "frac_hi"),
                 {{"collapsed", rate_text(events, amb.size())}});
}

}  // namespace

double expected_calibration_error(std::span<const ClassificationRecord> records, int bins) {
  if (bins < 1) throw ValidationError("expected_calibration_error: bins must be >= 1");
  if (records.empty()) throw InsufficientDataError("expected_calibration_error: no records");
  std::vector<std::vector<double>> conf(static_cast<std::size_t>(bins)), hit(static_cast<std::size_t>(bins));
  for (const auto& r : records) {
    const double c = r.confidence();
    const auto b = std::min(static_cast<std::size_t>(bins - 1), static_cast<std::size_t>(std::floor(c * bins)));
    conf[b].push_back(c);
    hit[b].push_back(r.correct() ? 1.0 : 0.0);
  }
  std::vector<double> terms;
  for (std::size_t b = 0; b < conf.size(); ++b) {
    if (conf[b].empty()) continue;
    const double m = static_cast<double>(conf[b].size());
    terms.push_back(m * std::abs(pairwise_sum(hit[b]) / m - pairwise_sum(conf[b]) / m));
  }
  return pairwise_sum(terms) / static_cast<double>(records.size());
}

DetectorOutcome score_discriminative(PathologyId id, std::span<const ClassificationRecord> corpus,
                                     const DetectorConfig& cfg) {
  if (family(id) != Family::discriminative)
    throw ArityError(std::string(name(id)) + " scores trace records, not classification corpora");
  if (corpus.empty()) throw InsufficientDataError(std::string(name(id)) + ": empty corpus");
  switch (id) {
    case P::overfitting: return overfitting(corpus, cfg);
    case P::bias_amplification: return bias_amplification(corpus, cfg);
    case P::spurious_correlation: return spurious_correlation(corpus, cfg);
    case P::adversarial_vulnerability: return adversarial_vulnerability(corpus, cfg);
    case P::calibration_failure: return calibration_failure(corpus, cfg);
    case P::concept_drift_sensitivity: return concept_drift_sensitivity(corpus, cfg);
    case P::misclassification_under_uncertainty: return misclassification_under_uncertainty(corpus, cfg);
    case P::prosodic_misclassification: return prosodic_misclassification(corpus, cfg);
    case P::accent_bias: return accent_bias(corpus, cfg);
    case P::turn_boundary_failure: return turn_boundary_failure(corpus, cfg);
    case P::semantic_boundary_confusion: return semantic_boundary_confusion(corpus, cfg);
    case P::noise_overfitting: return noise_overfitting(corpus, cfg);
    case P::latency_induced_decision_drift: return latency_induced_decision_drift(corpus, cfg);
    case P::ambiguity_collapse: return ambiguity_collapse(corpus, cfg);
    default: break;
  }
  throw ArityError(std::string(name(id)) + ": unknown discriminative detector");
}

AuditResult audit_discriminative(std::span<const ClassificationRecord> corpus, const DetectorConfig& cfg) {
  AuditResult res;
  for (PathologyId id : discriminative_pathologies()) {
    try {
      res.outcomes.push_back(score_discriminative(id, corpus, cfg));
    } catch (const UnavailableError& e) {
      res.skipped.push_back({id, "corpus", e.what()});
    } catch (const InsufficientDataError& e) {
      res.skipped.push_back({id, "corpus", e.what()});
    }
  }
  sort_outcomes(res.outcomes);
  return res;
}

}  // namespace patho
