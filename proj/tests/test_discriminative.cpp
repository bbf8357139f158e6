#include <algorithm>
#include <map>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "patho/discriminative.hpp"
#include "patho/error.hpp"

using namespace patho;
using fixtures::binary;
using fixtures::vec;
using P = PathologyId;

namespace {

// {positive, negative} severities worked out from the fixture construction.
const std::map<P, std::pair<double, double>>& expected() {
  static const std::map<P, std::pair<double, double>> m{
      {P::overfitting, {0.5, 0.1}},
      {P::bias_amplification, {0.4, 0.0}},
      {P::spurious_correlation, {0.5, 0.0}},
      {P::adversarial_vulnerability, {0.3, 0.0}},
      {P::calibration_failure, {0.5, 0.0}},
      {P::concept_drift_sensitivity, {0.5 + 0.5 * 0.3 / 0.8, 0.0}},
      {P::misclassification_under_uncertainty, {0.5, 0.0}},
      {P::prosodic_misclassification, {0.3, 0.0}},
      {P::accent_bias, {0.5, 0.0}},
      {P::turn_boundary_failure, {5.0 / 7.0, 1.0 / 3.0}},
      {P::semantic_boundary_confusion, {0.7, 0.05}},
      {P::noise_overfitting, {0.4, 0.0}},
      {P::latency_induced_decision_drift, {0.2, 0.0}},
      {P::ambiguity_collapse, {0.5, 0.0}},
  };
  return m;
}

}  // namespace

TEST_CASE("discriminative detectors on their fixtures") {
  for (P id : discriminative_pathologies()) {
    CAPTURE(name(id));
    const auto pos = fixtures::evaluate(id, fixtures::positive_fixture(id));
    const auto neg = fixtures::evaluate(id, fixtures::negative_fixture(id));
    CHECK(pos.fired);
    CHECK_FALSE(neg.fired);
    CHECK(pos.subject == "corpus");
    const auto [p, n] = expected().at(id);
    CHECK(pos.severity == doctest::Approx(p).epsilon(1e-12));
    CHECK(neg.severity == doctest::Approx(n).epsilon(1e-12));
  }
}

TEST_CASE("expected calibration error against a direct computation") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.5, 1.0);
  std::bernoulli_distribution coin(0.7);
  std::vector<ClassificationRecord> rs;
  for (int k = 0; k < 300; ++k) rs.push_back(binary("r" + std::to_string(k), 1, coin(rng) ? 1 : 0, u(rng)));
  for (int bins : {1, 5, 10, 15}) {
    std::vector<double> conf(bins, 0.0), acc(bins, 0.0), cnt(bins, 0.0);
    for (const auto& r : rs) {
      const int b = std::min(bins - 1, static_cast<int>(r.confidence() * bins));
      conf[b] += r.confidence();
      acc[b] += r.correct();
      cnt[b] += 1.0;
    }
    double ece = 0.0;
    for (int b = 0; b < bins; ++b)
      if (cnt[b] > 0) ece += std::abs(acc[b] - conf[b]) / static_cast<double>(rs.size());
    CHECK(expected_calibration_error(rs, bins) == doctest::Approx(ece).epsilon(1e-12));
  }
  CHECK_THROWS_AS(expected_calibration_error(rs, 0), ValidationError);
}

TEST_CASE("rate detectors need n_min eligible records") {
  auto f = fixtures::positive_fixture(P::overfitting);
  f.records.pop_back();
  CHECK_THROWS_AS(fixtures::evaluate(P::overfitting, f), InsufficientDataError);
  DetectorConfig cfg;
  cfg.set(P::overfitting, "n_min", 19);
  CHECK(fixtures::evaluate(P::overfitting, f, cfg).fired);

  auto pairs = fixtures::positive_fixture(P::latency_induced_decision_drift);
  pairs.records.pop_back();  // breaks one pair, leaving 9 pairs = 18 paired records
  CHECK_THROWS_AS(fixtures::evaluate(P::latency_induced_decision_drift, pairs), InsufficientDataError);

  std::vector<ClassificationRecord> plain{binary("a", 1, 1)};
  CHECK_THROWS_AS(score_discriminative(P::overfitting, plain, DetectorConfig{}), UnavailableError);
  CHECK_THROWS_AS(score_discriminative(P::overfitting, {}, DetectorConfig{}), InsufficientDataError);
  CHECK_THROWS_AS(score_discriminative(P::delusion, plain, DetectorConfig{}), ArityError);
}

TEST_CASE("adversarial pairs farther apart than eps_adv are ignored") {
  auto f = fixtures::positive_fixture(P::adversarial_vulnerability);
  DetectorConfig cfg;
  cfg.set(P::adversarial_vulnerability, "eps_adv", 0.01);
  CHECK_THROWS_AS(fixtures::evaluate(P::adversarial_vulnerability, f, cfg), InsufficientDataError);
  cfg.set(P::adversarial_vulnerability, "eps_adv", 0.05);
  CHECK(fixtures::evaluate(P::adversarial_vulnerability, f, cfg).severity == doctest::Approx(0.3));
}

TEST_CASE("semantic boundary confusion validates span nesting") {
  auto f = fixtures::positive_fixture(P::semantic_boundary_confusion);
  for (auto& r : f.records)
    if (r.annotations.at("span") == "narrow") r.segment_bounds = std::array<long, 2>{15, 25};
  CHECK_THROWS_AS(fixtures::evaluate(P::semantic_boundary_confusion, f), ValidationError);
}

TEST_CASE("accent bias compares groups on shared content only") {
  auto f = fixtures::positive_fixture(P::accent_bias);
  // Extra wrong answers in a1 on items a2 never saw must not count.
  for (int k = 0; k < 5; ++k) {
    auto r = binary("x" + std::to_string(k), 1, 0);
    r.group = "a1";
    r.annotations = {{"content_id", "only_a1_" + std::to_string(k)}};
    f.records.push_back(r);
  }
  const auto o = fixtures::evaluate(P::accent_bias, f);
  CHECK(o.severity == doctest::Approx(0.5));
  CHECK(o.evidence.at("content_matched") == "true");
}

TEST_CASE("discriminative scores do not depend on corpus order (property)") {
  std::mt19937_64 rng(21);
  for (P id : discriminative_pathologies()) {
    CAPTURE(name(id));
    for (bool positive : {true, false}) {
      auto f = positive ? fixtures::positive_fixture(id) : fixtures::negative_fixture(id);
      const auto base = fixtures::evaluate(id, f);
      for (int trial = 0; trial < 5; ++trial) {
        std::shuffle(f.records.begin(), f.records.end(), rng);
        const auto o = fixtures::evaluate(id, f);
        CHECK(o.severity == base.severity);
        CHECK(o.evidence == base.evidence);
      }
    }
  }
}

TEST_CASE("group-gap detectors are symmetric in group labels (property)") {
  for (P id : {P::bias_amplification, P::accent_bias}) {
    CAPTURE(name(id));
    auto f = fixtures::positive_fixture(id);
    std::map<std::string, std::string> swap;
    for (const auto& r : f.records) swap[*r.group] = "";
    // Reverse the lexicographic order of the group names.
    std::vector<std::string> names;
    for (const auto& [g, _] : swap) names.push_back(g);
    for (std::size_t i = 0; i < names.size(); ++i) swap[names[i]] = "z" + names[names.size() - 1 - i];
    auto g = f;
    for (auto& r : g.records) r.group = swap.at(*r.group);
    CHECK(fixtures::evaluate(id, g).severity == fixtures::evaluate(id, f).severity);
  }
}

TEST_CASE("audit over a mixed corpus") {
  std::vector<ClassificationRecord> corpus;
  for (const auto& r : fixtures::positive_fixture(P::calibration_failure).records) corpus.push_back(r);
  const auto res = audit_discriminative(corpus, DetectorConfig{});
  // The bare records only feed the calibration detector; every other one skips.
  REQUIRE(res.outcomes.size() == 1);
  CHECK(res.outcomes[0].pathology == P::calibration_failure);
  CHECK(res.skipped.size() == kNumDiscriminative - 1);
  for (const auto& s : res.skipped) CHECK(s.subject == "corpus");
}

TEST_CASE("pairwise sum") {
  std::vector<double> v(1000, 0.1);
  CHECK(pairwise_sum(v) == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
}
