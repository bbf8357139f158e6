#include "fixtures.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include "patho/discriminative.hpp"
#include "patho/generative.hpp"

namespace fixtures {

using patho::CausalFixture;
using P = PathologyId;

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Eigen::VectorXd unit(int d, int k) { return Eigen::VectorXd::Unit(d, k); }

namespace {

Eigen::VectorXd e(int k) { return unit(kDim, k); }

TraceRecord trace(const std::string& id) {
  TraceRecord r;
  r.id = id;
  r.input_embedding = e(0);
  r.output_embedding = e(0);
  return r;
}

KnowledgeBase two_fact_kb() {
  KnowledgeBase kb;
  kb.source_tag = "fixture";
  kb.entries = {{"paris", e(0)}, {"berlin", e(1)}};
  kb.expert_style_centroids = {vec({1.0, 0.0, 0.0})};
  kb.train_entity_ids = {"rome"};
  return kb;
}

// Output direction at `deg` degrees from e0 in the e0/e1 plane.
Eigen::VectorXd at_angle(double deg) {
  const double a = deg * 3.14159265358979323846 / 180.0;
  return vec({std::cos(a), std::sin(a), 0.0, 0.0});
}

PathologyFixture trace_fixture(PathologyId id, bool pos) {
  PathologyFixture f;
  auto& t = f.traces;
  switch (id) {
    case P::delusion: {
      // ln(0.9/0.01) / ln(100) = 0.977 vs ln(0.5/0.4) / ln(100) = 0.048; threshold ln 10 / ln 100 = 0.5.
      auto r = trace("r0");
      r.output_embedding = e(0);
      r.truth_embedding = e(1);
      r.prob_output_given_input = pos ? 0.9 : 0.5;
      r.prob_truth_given_input = pos ? 0.01 : 0.4;
      t.push_back(r);
      break;
    }
    case P::illusion: {
      auto r = trace("r0");
      r.output_embedding = vec({1.0, 0.1, 0.0, 0.0});  // sim 0.995 to the truth
      r.truth_embedding = e(0);
      r.in_real_manifold = !pos;
      t.push_back(r);
      break;
    }
    case P::hallucination: {
      auto r = trace("r0");
      r.in_real_manifold = !pos;
      t.push_back(r);
      break;
    }
    case P::confabulation: {
      // Clamped sims of (-1,-1)/sqrt2 to both facts are 0.146, so coherence 0.146 < 0.5.
      auto r = trace("r0");
      r.prob_output_given_input = 0.8;
      r.prob_truth_given_input = 0.1;
      r.claim_embeddings = std::vector<Eigen::VectorXd>{pos ? vec({-1.0, -1.0, 0.0, 0.0}).normalized() : e(0)};
      t.push_back(r);
      f.kb = two_fact_kb();
      break;
    }
    case P::misattribution: {
      auto a = trace("r0"), b = trace("r1");
      a.annotations = {{"content_id", "c1"}, {"source", "news"}};
      b.annotations = {{"content_id", "c1"}, {"source", "poetry"}};
      a.output_embedding = e(0);
      b.output_embedding = pos ? vec({1.0, 0.05, 0.0, 0.0}) : e(1);  // sim 0.9988 or 0
      t = {a, b};
      break;
    }
    case P::semantic_drift: {
      // Similarity to the intent falls 1 -> 0.17 (slope < 0, end < 0.3), or stays 1.
      for (int k = 0; k < 5; ++k) {
        auto r = trace("r" + std::to_string(k));
        r.intent_embedding = e(0);
        r.output_embedding = pos ? at_angle(20.0 * k) : e(0);
        t.push_back(r);
      }
      break;
    }
    case P::semantic_compression: {
      auto r = trace("r0");
      r.latent_dim = pos ? 5 : 50;  // ratio 0.05 <= 0.1, or 0.5
      r.input_dim = 100;
      t.push_back(r);
      break;
    }
    case P::exaggeration: {
      auto r = trace("r0");
      r.output_magnitude = pos ? 5.0 : 1.0;
      r.truth_magnitude = 1.0;
      t.push_back(r);
      break;
    }
    case P::causal_inference_failure: {
      // p(Y) = [0.5, 0.5] from the observational table and a uniform prior.
      CausalFixture c;
      c.id = "fx0";
      c.x_prior = vec({0.5, 0.5});
      c.observational_conditional.resize(2, 2);
      c.observational_conditional << 0.7, 0.3, 0.3, 0.7;
      c.interventional_table.resize(2, 2);
      if (pos)
        c.interventional_table << 0.5, 0.5, 0.5, 0.5;  // intervening does nothing: TV 0
      else
        c.interventional_table << 0.9, 0.1, 0.1, 0.9;  // TV 0.4
      f.causal.push_back(c);
      break;
    }
    case P::uncanny_valley: {
      auto r = trace("r0");
      r.output_embedding = vec({1.0, 0.1, 0.0, 0.0});
      r.truth_embedding = e(0);
      r.discomfort_score = pos ? 0.8 : 0.1;
      t.push_back(r);
      break;
    }
    case P::bluffing: {
      // 400 pairs: outputs independent of inputs (MI ~ 0.01) or equal to them
      // (MI = entropy of the binned projection, about 1.1); fluency exp(-0.1) = 0.905 either way.
      std::mt19937_64 rng(11);
      std::normal_distribution<double> n(0.0, 1.0);
      for (int k = 0; k < 400; ++k) {
        auto r = trace("r" + std::to_string(1000 + k));
        for (int j = 0; j < kDim; ++j) r.input_embedding(j) = n(rng);
        for (int j = 0; j < kDim; ++j) r.output_embedding(j) = n(rng);
        if (!pos) r.output_embedding = r.input_embedding;
        r.output_token_logprobs = std::vector<double>{-0.1, -0.1, -0.1};
        t.push_back(r);
      }
      break;
    }
    case P::cognitive_stereotypy: {
      for (int k = 0; k < 3; ++k) {
        auto r = trace("r" + std::to_string(k));
        r.input_embedding = e(k);
        r.output_embedding = pos ? vec({1.0, 1.0, 0.02 * k, 0.0}) : e(k);
        t.push_back(r);
      }
      break;
    }
    case P::pragmatic_misunderstanding: {
      // Clamped sim 0.5 -> severity 0.5 >= 1 - 0.55.
      auto r = trace("r0");
      r.intent_embedding = e(0);
      r.output_embedding = pos ? e(1) : e(0);
      t.push_back(r);
      break;
    }
    case P::hypersignification: {
      auto a = trace("r0"), b = trace("r1");
      a.input_embedding = e(0);
      b.input_embedding = e(1);
      a.output_embedding = e(2);
      b.output_embedding = pos ? vec({0.0, 0.0, 1.0, 0.1}) : e(3);  // sim 0.995 or 0
      t = {a, b};
      break;
    }
    case P::semantic_reheating: {
      auto r = trace("r0");
      r.in_train_set = pos;
      t.push_back(r);
      break;
    }
    case P::semantic_warming: {
      // Styles e1, e2, then four near-copies of e0: the running average pairwise
      // similarity climbs 0, 0, .17, .3, .4. Fluency exp(-0.05) or exp(-2).
      const std::vector<Eigen::VectorXd> styles{vec({0.0, 1.0, 0.0}), vec({0.0, 0.0, 1.0}), vec({1.0, 0.0, 0.0}),
                                                vec({1.0, 0.01, 0.0}), vec({1.0, 0.0, 0.01}), vec({1.0, 0.01, 0.01})};
      for (std::size_t k = 0; k < styles.size(); ++k) {
        auto r = trace("r" + std::to_string(k));
        r.style_embedding = styles[k];
        r.output_token_logprobs = std::vector<double>(4, pos ? -0.05 : -2.0);
        t.push_back(r);
      }
      break;
    }
    case P::simulated_authority: {
      auto r = trace("r0");
      r.style_embedding = vec({1.0, 0.05, 0.0});
      r.claim_embeddings = std::vector<Eigen::VectorXd>{pos ? vec({-1.0, -1.0, 0.0, 0.0}).normalized() : e(0)};
      t.push_back(r);
      f.kb = two_fact_kb();
      break;
    }
    case P::abductive_leap: {
      auto r = trace("r0");
      r.prob_output_given_input = 0.95;
      r.has_inference_path = !pos;
      t.push_back(r);
      break;
    }
    case P::contextual_drift: {
      auto r = trace("r0");
      const Eigen::VectorXd first = pos ? vec({3.0, 4.0, 0.0, 0.0}) : vec({0.0, 0.5, 0.0, 0.0});
      r.context_vectors = std::vector<Eigen::VectorXd>{first, vec({1.0, 1.0, 0.0, 0.0}), vec({2.0, 2.0, 0.0, 0.0}),
                                                       Eigen::VectorXd::Zero(kDim)};
      t.push_back(r);
      break;
    }
    case P::referential_hallucination: {
      auto r = trace("r0");
      r.referenced_entities =
          pos ? std::vector<std::string>{"paris", "atlantis"} : std::vector<std::string>{"paris", "rome"};
      t.push_back(r);
      f.kb = two_fact_kb();
      break;
    }
    case P::semiotic_frankenstein: {
      auto r = trace("r0");
      r.claim_embeddings = std::vector<Eigen::VectorXd>{e(0), pos ? e(3) : e(1)};
      t.push_back(r);
      f.kb = two_fact_kb();
      break;
    }
    default:
      throw std::logic_error("not a generative pathology");
  }
  return f;
}

}  // namespace

ClassificationRecord binary(const std::string& id, int pred, int truth, double conf, Eigen::VectorXd features) {
  ClassificationRecord r;
  r.id = id;
  r.features = std::move(features);
  r.predicted_label = pred;
  r.true_label = truth;
  r.class_probabilities = pred == 1 ? vec({1.0 - conf, conf}) : vec({conf, 1.0 - conf});
  return r;
}

namespace {

std::string rid(int k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "c%03d", k);
  return buf;
}

// `pairs` pairs sharing a pair id, with `events` of them diverging as `diverge` says.
template <class Make>
std::vector<ClassificationRecord> paired(int pairs, Make make) {
  std::vector<ClassificationRecord> out;
  for (int p = 0; p < pairs; ++p) {
    auto [a, b] = make(p, rid(2 * p), rid(2 * p + 1));
    out.push_back(a);
    out.push_back(b);
  }
  return out;
}

PathologyFixture classification_fixture(PathologyId id, bool pos) {
  PathologyFixture f;
  auto& c = f.records;
  switch (id) {
    case P::overfitting: {
      // Train accuracy 1.0; held-out 0.5 (gap 0.5) or 0.9 (gap 0.1).
      for (int k = 0; k < 10; ++k) {
        auto r = binary(rid(k), 1, 1);
        r.in_train_set = true;
        c.push_back(r);
      }
      for (int k = 0; k < 10; ++k) {
        const bool wrong = k < (pos ? 5 : 1);
        auto r = binary(rid(10 + k), 1, wrong ? 0 : 1);
        r.in_train_set = false;
        c.push_back(r);
      }
      break;
    }
    case P::bias_amplification: {
      // Group a: 5/10 truly positive; predicted positive 9/10 (gap 0.4) or 5/10.
      for (int k = 0; k < 20; ++k) {
        const bool ga = k < 10;
        const int truth = k % 2;
        int pred = truth;
        if (pos && ga && k < 8) pred = 1;
        auto r = binary(rid(k), pred, truth);
        r.group = ga ? "a" : "b";
        c.push_back(r);
      }
      break;
    }
    case P::spurious_correlation: {
      c = paired(10, [&](int p, std::string ia, std::string ib) {
        auto a = binary(ia, 1, 1), b = binary(ib, (pos && p < 5) ? 0 : 1, 1);
        a.annotations = {{"spurious_pair_id", "s" + std::to_string(p)}, {"spurious_role", "original"}};
        b.annotations = {{"spurious_pair_id", "s" + std::to_string(p)}, {"spurious_role", "resampled"}};
        return std::pair{a, b};
      });
      break;
    }
    case P::adversarial_vulnerability: {
      // 10 pairs 0.05 apart, 3 label flips -> 0.3.
      c = paired(10, [&](int p, std::string ia, std::string ib) {
        auto a = binary(ia, 1, 1, 0.8, vec({1.0, 0.0})), b = binary(ib, (pos && p < 3) ? 0 : 1, 1, 0.8, vec({1.0, 0.05}));
        a.perturbation_pair_id = b.perturbation_pair_id = "p" + std::to_string(p);
        return std::pair{a, b};
      });
      break;
    }
    case P::calibration_failure: {
      // Confidence 1.0 with accuracy 0.5 (ECE 0.5), or confidence 0.9 with accuracy 0.9.
      for (int k = 0; k < 20; ++k) {
        const bool wrong = pos ? k < 10 : k < 2;
        c.push_back(binary(rid(k), 1, wrong ? 0 : 1, pos ? 1.0 : 0.9));
      }
      break;
    }
    case P::concept_drift_sensitivity: {
      // Features move from x0 in [0,1) to [5,6); current accuracy 0.5 or 1.0.
      for (int k = 0; k < 40; ++k) {
        const bool current = k >= 20;
        const double x = (current ? 5.0 : 0.0) + 0.05 * (k % 20);
        const bool wrong = pos && current && k % 2 == 0;
        auto r = binary(rid(k), 1, wrong ? 0 : 1, 0.8, vec({x, 1.0}));
        r.timestamp_index = k;
        c.push_back(r);
      }
      break;
    }
    case P::misclassification_under_uncertainty: {
      for (int k = 0; k < 20; ++k) {
        const bool wrong = pos && k < 10;
        auto r = binary(rid(k), 1, wrong ? 0 : 1, 0.95);
        r.is_ood = true;
        c.push_back(r);
      }
      break;
    }
    case P::prosodic_misclassification: {
      c = paired(10, [&](int p, std::string ia, std::string ib) {
        auto a = binary(ia, 1, 1), b = binary(ib, (pos && p < 3) ? 0 : 1, 1);
        a.annotations = {{"prosody_pair_id", "q" + std::to_string(p)}, {"prosody", "flat"}};
        b.annotations = {{"prosody_pair_id", "q" + std::to_string(p)}, {"prosody", "rising"}};
        return std::pair{a, b};
      });
      break;
    }
    case P::accent_bias: {
      // Same ten items per accent; accuracies 1.0 vs 0.5, or 0.9 vs 0.9.
      for (int k = 0; k < 20; ++k) {
        const bool g1 = k < 10;
        const int item = k % 10;
        const bool wrong = pos ? (!g1 && item < 5) : item == 0;
        auto r = binary(rid(k), 1, wrong ? 0 : 1);
        r.group = g1 ? "a1" : "a2";
        r.annotations = {{"content_id", "u" + std::to_string(item)}};
        c.push_back(r);
      }
      break;
    }
    case P::turn_boundary_failure: {
      // Offset 5 -> 5/7 with tol 2, or offset 1 -> 1/3.
      auto r = binary(rid(0), 1, 1);
      r.segment_bounds = std::array<long, 2>{0, 10};
      r.reference_bounds = std::array<long, 2>{pos ? 5 : 1, 10};
      c.push_back(r);
      break;
    }
    case P::semantic_boundary_confusion: {
      // True-label score 0.2 on the wide span vs 0.9 on the nested narrow one.
      auto wide = binary(rid(0), pos ? 0 : 1, 1, pos ? 0.8 : 0.85);
      auto narrow = binary(rid(1), 1, 1, 0.9);
      wide.segment_bounds = std::array<long, 2>{0, 20};
      narrow.segment_bounds = std::array<long, 2>{5, 10};
      wide.annotations = {{"span_pair_id", "w0"}, {"span", "wide"}};
      narrow.annotations = {{"span_pair_id", "w0"}, {"span", "narrow"}};
      c = {wide, narrow};
      break;
    }
    case P::noise_overfitting: {
      c = paired(10, [&](int p, std::string ia, std::string ib) {
        auto a = binary(ia, 1, 1), b = binary(ib, (pos && p < 4) ? 0 : 1, 1);
        a.noise_pair_id = b.noise_pair_id = "n" + std::to_string(p);
        a.annotations = {{"noise_role", "clean"}};
        b.annotations = {{"noise_role", "noisy"}};
        return std::pair{a, b};
      });
      break;
    }
    case P::latency_induced_decision_drift: {
      c = paired(10, [&](int p, std::string ia, std::string ib) {
        auto a = binary(ia, 1, 1), b = binary(ib, (pos && p < 2) ? 0 : 1, 1);
        a.latency_pair_id = b.latency_pair_id = "l" + std::to_string(p);
        return std::pair{a, b};
      });
      break;
    }
    case P::ambiguity_collapse: {
      // Three classes, labels 0 and 1 both plausible; 0.95 on label 0 with a
      // 0.92 margin over label 1. Half are wrong (true label 1) in the positive.
      for (int k = 0; k < 20; ++k) {
        ClassificationRecord r;
        r.id = rid(k);
        r.features = Eigen::VectorXd::Zero(2);
        r.class_probabilities = vec({0.95, 0.03, 0.02});
        r.predicted_label = 0;
        r.true_label = (pos && k < 10) ? 1 : 0;
        r.plausible_labels = std::vector<int>{0, 1};
        c.push_back(r);
      }
      break;
    }
    default:
      throw std::logic_error("not a discriminative pathology");
  }
  return f;
}

PathologyFixture make(PathologyId id, bool pos) {
  return patho::family(id) == patho::Family::generative ? trace_fixture(id, pos) : classification_fixture(id, pos);
}

}  // namespace

PathologyFixture positive_fixture(PathologyId id) { return make(id, true); }
PathologyFixture negative_fixture(PathologyId id) { return make(id, false); }

patho::DetectorOutcome evaluate(PathologyId id, const PathologyFixture& f, const patho::DetectorConfig& cfg) {
  const KnowledgeBase* kb = f.kb ? &*f.kb : nullptr;
  if (patho::family(id) == patho::Family::discriminative) return patho::score_discriminative(id, f.records, cfg);
  if (id == P::causal_inference_failure) return patho::score_causal(f.causal.at(0), cfg);
  if (patho::is_corpus_level(id)) return patho::score(id, std::span<const TraceRecord>(f.traces), cfg, kb);
  return patho::score(id, f.traces.at(0), cfg, kb);
}

PathologyFixture rotate(const PathologyFixture& f, const Eigen::MatrixXd& q, const Eigen::MatrixXd& q_style) {
  PathologyFixture g = f;
  auto rot = [&](Eigen::VectorXd& v) { v = q * v; };
  auto rot_all = [&](std::optional<std::vector<Eigen::VectorXd>>& vs) {
    if (vs)
      for (auto& v : *vs) rot(v);
  };
  for (auto& r : g.traces) {
    rot(r.input_embedding);
    rot(r.output_embedding);
    if (r.truth_embedding) rot(*r.truth_embedding);
    if (r.intent_embedding) rot(*r.intent_embedding);
    rot_all(r.context_vectors);
    rot_all(r.claim_embeddings);
    if (r.style_embedding) *r.style_embedding = q_style * *r.style_embedding;
  }
  if (g.kb) {
    for (auto& e : g.kb->entries) rot(e.embedding);
    for (auto& c : g.kb->expert_style_centroids) c = q_style * c;
  }
  return g;
}

Eigen::MatrixXd random_orthogonal(int d, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd a(d, d);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
}

}  // namespace fixtures
