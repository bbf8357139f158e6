#include "patho/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "patho/canonical_json.hpp"
#include "patho/discriminative.hpp"
#include "patho/game.hpp"
#include "patho/generative.hpp"
#include "patho/holonorm.hpp"
#include "patho/risk.hpp"

namespace patho::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot open file " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) {
  const std::string text = read_file(p);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(p.string() + ": malformed JSON: " + e.what());
  }
}

std::string fixed(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12f", v);
  return buf;
}

// Collects outputs in memory, then writes them together with the manifest.
class Run {
 public:
  Run(std::string subcommand, std::string out_dir, bool force)
      : subcommand_(std::move(subcommand)), out_dir_(std::move(out_dir)), force_(force) {}

  void arg(const std::string& key, json value) { config_["args"][key] = std::move(value); }
  void input(const std::string& path) { config_["inputs"][path] = fnv1a_hex(read_file(path)); }
  void seed(std::uint64_t s) { seed_ = s; }
  void add(const std::string& file, std::string content) { files_.emplace_back(file, std::move(content)); }
  void add_json(const std::string& file, const json& j) { add(file, canonical_dump(j)); }
  /// Written but excluded from the manifest's reproducibility claim.
  void add_volatile(const std::string& file, const json& j) {
    volatile_.push_back(file);
    add(file, canonical_dump(j));
  }

  void commit() {
    if (out_dir_.empty()) {
      const char* env = std::getenv("PATHO_OUT_DIR");
      if (env == nullptr || *env == '\0') throw ValidationError("no output directory: pass --out or set PATHO_OUT_DIR");
      out_dir_ = env;
    }
    const fs::path dir(out_dir_);
    std::vector<std::string> names;
    for (const auto& [f, c] : files_) names.push_back(f);
    names.push_back("manifest.json");
    if (!force_)
      for (const auto& n : names)
        if (fs::exists(dir / n))
          throw ValidationError("refusing to overwrite " + (dir / n).string() + " (pass --force)");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ValidationError("cannot create output directory " + dir.string() + ": " + ec.message());

    config_["subcommand"] = subcommand_;
    json manifest;
    manifest["tool"] = "patho";
    manifest["version"] = kVersion;
    manifest["subcommand"] = subcommand_;
    manifest["seed"] = seed_ ? json(*seed_) : json(nullptr);
    manifest["config_hash"] = fnv1a_hex(canonical_dump(config_));
    manifest["config"] = config_;
    manifest["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                "." + std::to_string(EIGEN_MINOR_VERSION);
    json outputs = json::object();
    for (const auto& [f, c] : files_) {
      const bool vol = std::find(volatile_.begin(), volatile_.end(), f) != volatile_.end();
      outputs[f] = vol ? json("varies between runs") : json(fnv1a_hex(c));
    }
    manifest["outputs"] = outputs;
    files_.emplace_back("manifest.json", canonical_dump(manifest));
    for (const auto& [f, c] : files_) {
      std::ofstream o(dir / f, std::ios::binary | std::ios::trunc);
      if (!o) throw ValidationError("cannot write " + (dir / f).string());
      o << c;
    }
  }

  const std::string& out_dir() const { return out_dir_; }

 private:
  std::string subcommand_;
  std::string out_dir_;
  bool force_;
  json config_ = json::object();
  std::optional<std::uint64_t> seed_;
  std::vector<std::pair<std::string, std::string>> files_;
  std::vector<std::string> volatile_;
};

json outcome_json(const DetectorOutcome& o) {
  json ev = json::object();
  for (const auto& [k, v] : o.evidence) ev[k] = v;
  return {{"pathology", std::string(name(o.pathology))},
          {"family", std::string(family_name(family(o.pathology)))},
          {"subject", o.subject},
          {"fired", o.fired},
          {"severity", o.severity},
          {"threshold", o.threshold},
          {"loss", o.loss},
          {"evidence", ev}};
}

DetectorOutcome outcome_from_json(const json& j, std::size_t i) {
  const std::string where = "outcomes[" + std::to_string(i) + "]";
  if (!j.is_object() || !j.contains("pathology") || !j["pathology"].is_string())
    throw ValidationError(where + ": needs a pathology name");
  auto id = parse_pathology(j["pathology"].get<std::string>());
  if (!id) throw ValidationError(where + ": unknown pathology " + j["pathology"].get<std::string>());
  DetectorOutcome o;
  o.pathology = *id;
  o.subject = j.value("subject", "");
  const char* loss_key = j.contains("loss") ? "loss" : "severity";
  if (!j.contains(loss_key) || !j[loss_key].is_number()) throw ValidationError(where + ": needs a numeric loss");
  o.loss = j[loss_key].get<double>();
  o.severity = j.contains("severity") && j["severity"].is_number() ? j["severity"].get<double>() : o.loss;
  o.threshold = j.contains("threshold") && j["threshold"].is_number() ? j["threshold"].get<double>() : 0.0;
  o.fired = j.contains("fired") && j["fired"].is_boolean() ? j["fired"].get<bool>() : false;
  return o;
}

std::vector<DetectorOutcome> load_outcomes(const fs::path& p) {
  const json j = read_json(p);
  const json& arr = j.is_object() && j.contains("outcomes") ? j["outcomes"] : j;
  if (!arr.is_array()) throw ValidationError(p.string() + ": expected an outcomes array");
  std::vector<DetectorOutcome> out;
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(outcome_from_json(arr[i], i));
  return out;
}

std::string outcomes_csv(const std::vector<DetectorOutcome>& outcomes) {
  std::ostringstream os;
  os << "pathology,subject,fired,severity,threshold\n";
  for (const auto& o : outcomes)
    os << name(o.pathology) << ',' << o.subject << ',' << (o.fired ? "true" : "false") << ',' << fixed(o.severity)
       << ',' << fixed(o.threshold) << '\n';
  return os.str();
}

// --- subcommands -------------------------------------------------------------

struct AuditArgs {
  std::string corpus, kind = "trace", kb, causal, config;
  std::optional<std::uint64_t> seed;
};

int do_audit(const AuditArgs& a, Run& run, std::ostream& out) {
  run.input(a.corpus);
  run.arg("kind", a.kind);
  DetectorConfig cfg;
  if (!a.config.empty()) {
    run.input(a.config);
    cfg = DetectorConfig::from_json(read_json(a.config));
  }
  if (a.seed) {
    cfg.mi.seed = *a.seed;
    run.seed(*a.seed);
  }
  run.arg("detector_config", cfg.to_json());

  AuditResult res;
  json availability;
  std::size_t n_records = 0;
  if (a.kind == "trace") {
    const auto corpus = load_traces(a.corpus);
    n_records = corpus.size();
    std::optional<KnowledgeBase> kb;
    if (!a.kb.empty()) {
      run.input(a.kb);
      kb = load_knowledge_base(a.kb);
    }
    std::vector<CausalFixture> fixtures;
    if (!a.causal.empty()) {
      run.input(a.causal);
      fixtures = load_causal_fixtures(a.causal);
    }
    res = audit_generative(corpus, kb ? &*kb : nullptr, fixtures, cfg);
    availability = validate_corpus(std::span<const TraceRecord>(corpus)).to_json();
  } else if (a.kind == "classification") {
    if (!a.kb.empty() || !a.causal.empty())
      throw ValidationError("--kb and --causal apply to trace corpora only");
    const auto corpus = load_classifications(a.corpus);
    n_records = corpus.size();
    res = audit_discriminative(corpus, cfg);
    availability = validate_corpus(std::span<const ClassificationRecord>(corpus)).to_json();
  } else {
    throw ValidationError("--kind must be trace or classification");
  }

  json outcomes = json::array(), skipped = json::array();
  std::size_t fired = 0;
  for (const auto& o : res.outcomes) {
    outcomes.push_back(outcome_json(o));
    fired += o.fired ? 1 : 0;
  }
  for (const auto& s : res.skipped)
    skipped.push_back({{"pathology", std::string(name(s.pathology))}, {"subject", s.subject}, {"reason", s.reason}});
  run.add_json("outcomes.json",
               {{"corpus_kind", a.kind}, {"records", n_records}, {"outcomes", outcomes}, {"skipped", skipped}});
  run.add("outcomes.csv", outcomes_csv(res.outcomes));
  run.add_json("availability.json", availability);
  run.commit();
  out << "audit: " << res.outcomes.size() << " outcomes (" << fired << " fired), " << res.skipped.size()
      << " skipped -> " << run.out_dir() << "\n";
  return ok;
}

struct RiskArgs {
  std::string outcomes, eps_path;
  double tau = 0.9;
  std::optional<double> eps_default;
  bool gate = false;
};

int do_risk(const RiskArgs& a, Run& run, std::ostream& out) {
  run.input(a.outcomes);
  run.arg("tau", a.tau);
  run.arg("gate", a.gate);
  const auto outcomes = load_outcomes(a.outcomes);
  std::vector<double> eps(kNumPathologies, std::numeric_limits<double>::infinity());
  if (!a.eps_path.empty()) {
    run.input(a.eps_path);
    eps = eps_from_json(read_json(a.eps_path), std::numeric_limits<double>::infinity());
  }
  if (a.eps_default) {
    if (!a.eps_path.empty()) throw ValidationError("use either --eps or --eps-default");
    eps.assign(kNumPathologies, *a.eps_default);
    run.arg("eps_default", *a.eps_default);
  }
  const auto rep = risk_report(outcomes, eps, {.tau = a.tau});
  run.add_json("risk_report.json", rep.to_json());
  run.add("risk_report.csv", rep.to_csv());
  run.commit();
  out << "risk: " << (rep.feasible ? "feasible" : "infeasible");
  for (PathologyId id : rep.violations) out << (id == rep.violations.front() ? " (violations: " : ", ") << name(id);
  if (!rep.violations.empty()) out << ")";
  out << " -> " << run.out_dir() << "\n";
  return a.gate && !rep.feasible ? infeasible_gate : ok;
}

struct HolonormArgs {
  int dim = 2;
  long samples = 100000;
  std::uint64_t seed = 0;
  double tolerance = 0.1;
  int points = 200;
};

Eigen::VectorXd random_in_ball(std::mt19937_64& rng, int d, double rmax) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd v(d);
  do {
    for (int k = 0; k < d; ++k) v(k) = normal(rng);
  } while (v.norm() == 0.0);
  return v / v.norm() * (rmax * unif(rng));
}

int do_holonorm(const HolonormArgs& a, Run& run, std::ostream& out) {
  if (a.points < 1) throw ValidationError("--points must be positive");
  run.seed(a.seed);
  run.arg("dim", a.dim);
  run.arg("samples", a.samples);
  run.arg("tolerance", a.tolerance);
  run.arg("points", a.points);
  using clock = std::chrono::steady_clock;
  json checks, timings;
  auto timed = [&](const std::string& key, auto&& fn) {
    const auto t0 = clock::now();
    checks[key] = fn();
    timings[key + "_seconds"] = std::chrono::duration<double>(clock::now() - t0).count();
  };
  std::mt19937_64 rng(a.seed);

  timed("round_trip", [&] {
    double worst = 0.0;
    for (int i = 0; i < a.points; ++i) {
      const Eigen::VectorXd y = random_in_ball(rng, a.dim, 1.0 - 1e-6);
      worst = std::max(worst, (hn(inverse_hn(y)) - y).cwiseAbs().maxCoeff());
    }
    return json{{"max_abs_error", worst}, {"tolerance", 1e-12}, {"passed", worst <= 1e-12}};
  });
  timed("jacobian_determinant", [&] {
    json per_dim = json::object();
    bool passed = true;
    for (int d : {1, 2, 3, 8}) {
      double worst = 0.0;
      for (int i = 0; i < a.points; ++i) {
        const Eigen::VectorXd y = random_in_ball(rng, d, 0.9);
        const double closed = det_jacobian_inverse_hn(y);
        const double fd = finite_difference_jacobian_inverse_hn(y).determinant();
        worst = std::max(worst, std::abs(fd - closed) / closed);
      }
      per_dim[std::to_string(d)] = worst;
      passed = passed && worst <= 1e-5;
    }
    return json{{"max_rel_error_by_dim", per_dim}, {"tolerance", 1e-5}, {"passed", passed}};
  });
  timed("determinant_lemma", [&] {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> dims(1, 50);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const int d = dims(rng);
      const double alpha = (u(rng) < 0 ? -1.0 : 1.0) * (0.5 + std::abs(u(rng)));
      const double beta = u(rng);
      Eigen::VectorXd v(d);
      // Scaled so alpha + beta |v|^2 stays away from 0 and the relative error is meaningful.
      for (int k = 0; k < d; ++k) v(k) = u(rng) / std::sqrt(static_cast<double>(d));
      worst = std::max(worst, matrix_determinant_lemma_check(alpha, beta, v).rel_error);
    }
    return json{{"max_rel_error", worst}, {"cases", 100}, {"tolerance", 1e-8}, {"passed", worst <= 1e-8}};
  });
  timed("density", [&] {
    DensityCheckConfig c;
    c.dim = a.dim;
    c.samples = a.samples;
    c.seed = a.seed;
    c.tolerance = a.tolerance;
    return density_transform_check(c).to_json();
  });
  timed("degeneracy", [&] {
    auto model = HolonormModel<double>::random(2, 4, 2, 8, a.seed);
    std::vector<Eigen::MatrixXd> probes;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int p = 0; p < 10; ++p) {
      Eigen::MatrixXd z(5, 4);
      for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = normal(rng);
      probes.push_back(z);
    }
    json j = constant_param_degeneracy_check(model, probes).to_json();
    j["passed"] = j["degenerate_constant"].get<bool>() && j["normal_distinct"].get<bool>() &&
                  j["feedforward_pointwise"].get<bool>();
    return j;
  });
  timed("permutation_equivariance", [&] {
    auto model = HolonormModel<double>::random(2, 4, 2, 8, a.seed + 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd z(6, 4);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = normal(rng);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(6);
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + 6, rng);
    const double diff = (model.forward(perm * z) - perm * model.forward(z)).cwiseAbs().maxCoeff();
    return json{{"max_abs_diff", diff}, {"tolerance", 1e-12}, {"passed", diff <= 1e-12}};
  });

  bool all = true;
  for (const auto& [k, v] : checks.items()) all = all && v["passed"].get<bool>();
  run.add_json("holonorm_report.json", {{"checks", checks}, {"passed", all}});
  run.add_volatile("holonorm_timings.json", timings);
  run.commit();
  out << "holonorm-verify: " << (all ? "all checks passed" : "some checks FAILED") << " -> " << run.out_dir() << "\n";
  return ok;
}

struct GameArgs {
  std::string scenario;
  std::optional<std::size_t> random_agents;
  std::optional<std::uint64_t> seed;
  int dim = 3;
  double cloud_cap = 5.0;
  double gamma = 0.2;
};

int do_game(const GameArgs& a, Run& run, std::ostream& out) {
  Scenario sc;
  if (!a.scenario.empty()) {
    if (a.random_agents) throw ValidationError("use either --scenario or --random-agents");
    run.input(a.scenario);
    sc = scenario_from_json(read_json(a.scenario));
    if (a.seed) run.seed(*a.seed);
  } else if (a.random_agents) {
    if (!a.seed) throw ValidationError("--random-agents needs --seed");
    run.seed(*a.seed);
    run.arg("random_agents", *a.random_agents);
    run.arg("dim", a.dim);
    run.arg("cloud_cap", a.cloud_cap);
    run.arg("gamma", a.gamma);
    sc = random_quadratic_scenario(*a.random_agents, a.dim, a.cloud_cap, a.gamma, *a.seed);
  } else {
    throw ValidationError("game needs --scenario or --random-agents");
  }
  const DelegatedGame game(sc.agents, sc.config);
  const GameState state = game.solve();
  json agents = json::array();
  const auto risks = game.agent_risks(state.theta, sc.expectile);
  for (std::size_t i = 0; i < game.size(); ++i)
    agents.push_back({{"pathology", std::string(name(game.agent(i).pathology))},
                      {"budget_radius", game.radius(i)},
                      {"risk", risks[i]}});
  json result{{"equilibrium", to_json(state)}, {"agents", agents}, {"tau", sc.expectile.tau}};
  if (!sc.eps_schedule.empty()) result["stackelberg"] = to_json(stackelberg_loop(game, sc.eps_schedule, sc.expectile), game);
  std::ostringstream csv;
  csv << "round,residual\n";
  for (std::size_t r = 0; r < state.trajectory.size(); ++r) csv << r + 1 << ',' << fixed(state.trajectory[r]) << '\n';
  run.add_json("equilibrium.json", result);
  run.add("iterations.csv", csv.str());
  run.commit();
  out << "game: " << status_name(state.status) << " after " << state.rounds << " rounds, residual " << state.residual;
  if (result.contains("stackelberg")) out << "; " << result["stackelberg"]["verdict"].get<std::string>();
  out << " -> " << run.out_dir() << "\n";
  return ok;
}

struct ParetoArgs {
  std::uint64_t seed = 0;
  int candidates = 11;
  int samples = 400;
  double tau = 0.9;
};

int do_pareto(const ParetoArgs& a, Run& run, std::ostream& out) {
  run.seed(a.seed);
  run.arg("candidates", a.candidates);
  run.arg("samples", a.samples);
  run.arg("tau", a.tau);
  BluffingSweepConfig cfg;
  cfg.candidates = a.candidates;
  cfg.samples = a.samples;
  cfg.tau = a.tau;
  cfg.seed = a.seed;
  const auto sweep = bluffing_family_sweep(cfg);
  json cands = json::array();
  std::ostringstream csv;
  csv << "s,fluency_risk,truth_risk,on_front\n";
  for (std::size_t k = 0; k < sweep.s.size(); ++k) {
    const bool front = std::find(sweep.pareto.front.begin(), sweep.pareto.front.end(), k) != sweep.pareto.front.end();
    const auto r = static_cast<Eigen::Index>(k);
    cands.push_back({{"s", sweep.s[k]},
                     {"fluency_risk", sweep.objectives(r, 0)},
                     {"truth_risk", sweep.objectives(r, 1)},
                     {"on_front", front}});
    csv << fixed(sweep.s[k]) << ',' << fixed(sweep.objectives(r, 0)) << ',' << fixed(sweep.objectives(r, 1)) << ','
        << (front ? "true" : "false") << '\n';
  }
  std::vector<double> grid;
  for (int k = 0; k <= 10; ++k) grid.push_back(k / 10.0);
  const auto table = expvar_binary_monotonicity_check(grid, a.tau);
  json rows = json::array();
  for (const auto& r : table.rows) rows.push_back({{"p", r.p}, {"expectile", r.value}});
  run.add_json("pareto.json", {{"candidates", cands},
                               {"front", sweep.pareto.front},
                               {"front_size", sweep.pareto.front.size()},
                               {"non_aligned", sweep.pareto.non_aligned},
                               {"binary_expectile", {{"tau", table.tau},
                                                     {"rows", rows},
                                                     {"monotone", table.monotone},
                                                     {"zero_at_zero", table.zero_at_zero}}}});
  run.add("pareto.csv", csv.str());
  run.commit();
  out << "pareto: front of " << sweep.pareto.front.size() << " / " << sweep.s.size() << " candidates"
      << (sweep.pareto.non_aligned ? " (risks not aligned)" : "") << " -> " << run.out_dir() << "\n";
  return ok;
}

struct ReportArgs {
  std::string outcomes, risk;
};

int do_report(const ReportArgs& a, Run& run, std::ostream& out) {
  run.input(a.outcomes);
  const json audit = read_json(a.outcomes);
  const auto outcomes = load_outcomes(a.outcomes);
  std::vector<std::size_t> n(kNumPathologies, 0), fired(kNumPathologies, 0), skipped(kNumPathologies, 0);
  for (const auto& o : outcomes) {
    ++n[index(o.pathology)];
    fired[index(o.pathology)] += o.fired ? 1 : 0;
  }
  if (audit.is_object() && audit.contains("skipped") && audit["skipped"].is_array())
    for (const auto& s : audit["skipped"])
      if (s.contains("pathology") && s["pathology"].is_string())
        if (auto id = parse_pathology(s["pathology"].get<std::string>())) ++skipped[index(*id)];

  json risk;
  if (!a.risk.empty()) {
    run.input(a.risk);
    risk = read_json(a.risk);
    if (!risk.is_object() || !risk.contains("entries")) throw ValidationError(a.risk + ": not a risk report");
  }
  json rows = json::array();
  std::ostringstream csv;
  csv << "pathology,family,outcomes,fired,skipped,R\n";
  std::size_t covered = 0;
  for (PathologyId id : all_pathologies()) {
    const std::size_t i = index(id);
    json r{{"pathology", std::string(name(id))},
           {"family", std::string(family_name(family(id)))},
           {"outcomes", n[i]},
           {"fired", fired[i]},
           {"skipped", skipped[i]}};
    std::string rv;
    if (!risk.is_null()) {
      const auto& e = risk["entries"][i];
      if (e.value("available", false) && e.contains("R")) {
        r["R"] = e["R"];
        rv = fixed(e["R"].get<double>());
      }
    }
    covered += n[i] > 0 ? 1 : 0;
    rows.push_back(r);
    csv << name(id) << ',' << family_name(family(id)) << ',' << n[i] << ',' << fired[i] << ',' << skipped[i] << ','
        << rv << '\n';
  }
  json rep{{"pathologies", rows},
           {"pathology_count", kNumPathologies},
           {"distinct_pathology_count", kNumDistinctPathologies},
           {"covered_pathologies", covered}};
  if (!risk.is_null()) rep["feasible"] = risk.value("feasible", false);
  run.add_json("report.json", rep);
  run.add("report.csv", csv.str());
  run.commit();
  out << "report: " << covered << " of " << kNumPathologies << " pathologies covered -> " << run.out_dir() << "\n";
  return ok;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Audits model traces for cognitive pathologies and gates deployment on expectile risk", "patho"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string out_dir;
  bool force = false;
  int threads = 1;
  bool verbose = false;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", out_dir, "Output directory (default: $PATHO_OUT_DIR)");
    sub->add_flag("--force", force, "Overwrite existing outputs");
    sub->add_option("--threads", threads, "Worker threads (runs are serial; accepted for scripting)")
        ->check(CLI::PositiveNumber);
    sub->add_flag("-v,--verbose", verbose, "Echo the run configuration");
  };

  AuditArgs audit;
  auto* s_audit = app.add_subcommand("audit", "Run every detector with its inputs over a corpus");
  s_audit->add_option("--corpus", audit.corpus, "JSONL corpus")->required()->check(CLI::ExistingFile);
  s_audit->add_option("--kind", audit.kind, "trace or classification")->check(CLI::IsMember({"trace", "classification"}));
  s_audit->add_option("--kb", audit.kb, "Knowledge base JSON")->check(CLI::ExistingFile);
  s_audit->add_option("--causal", audit.causal, "Causal fixtures JSON")->check(CLI::ExistingFile);
  s_audit->add_option("--config", audit.config, "Detector thresholds JSON")->check(CLI::ExistingFile);
  s_audit->add_option("--seed", audit.seed, "Seed of the mutual-information projection");
  common(s_audit);

  RiskArgs risk;
  auto* s_risk = app.add_subcommand("risk", "Expectile risk per pathology and the deployment gate");
  s_risk->add_option("--outcomes", risk.outcomes, "outcomes.json from audit")->required()->check(CLI::ExistingFile);
  s_risk->add_option("--tau", risk.tau, "Expectile level in (0,1)")->check(CLI::Range(0.0, 1.0));
  s_risk->add_option("--eps", risk.eps_path, "Thresholds JSON")->check(CLI::ExistingFile);
  s_risk->add_option("--eps-default", risk.eps_default, "Same threshold for every pathology");
  s_risk->add_flag("--gate", risk.gate, "Exit 3 when the gate rejects");
  common(s_risk);

  HolonormArgs hol;
  auto* s_hol = app.add_subcommand("holonorm-verify", "Numerical checks of the holonorm map and block");
  s_hol->add_option("--dim", hol.dim, "Dimension of the density check (1 or 2)")->check(CLI::IsMember({1, 2}));
  s_hol->add_option("--samples", hol.samples, "Monte-Carlo samples")->check(CLI::PositiveNumber);
  s_hol->add_option("--seed", hol.seed, "Random seed")->required();
  s_hol->add_option("--tolerance", hol.tolerance, "Density mean relative error bound");
  s_hol->add_option("--points", hol.points, "Random points per Jacobian dimension");
  common(s_hol);

  GameArgs game;
  auto* s_game = app.add_subcommand("game", "Solve the delegated agent game and the leader loop");
  s_game->add_option("--scenario", game.scenario, "Scenario JSON")->check(CLI::ExistingFile);
  s_game->add_option("--random-agents", game.random_agents, "Seeded quadratic scenario with N agents");
  s_game->add_option("--seed", game.seed, "Random seed");
  s_game->add_option("--dim", game.dim, "Parameter dimension of the random scenario");
  s_game->add_option("--cloud-cap", game.cloud_cap, "Shared compute cap of the random scenario");
  s_game->add_option("--gamma", game.gamma, "Mean-field coupling of the random scenario");
  common(s_game);

  ParetoArgs par;
  auto* s_par = app.add_subcommand("pareto", "Fluency-versus-grounding sweep and its Pareto front");
  s_par->add_option("--seed", par.seed, "Random seed")->required();
  s_par->add_option("--candidates", par.candidates, "Candidates in the sweep")->check(CLI::Range(2, 100000));
  s_par->add_option("--samples", par.samples, "Samples per candidate")->check(CLI::PositiveNumber);
  s_par->add_option("--tau", par.tau, "Expectile level")->check(CLI::Range(0.0, 1.0));
  common(s_par);

  ReportArgs rep;
  auto* s_rep = app.add_subcommand("report", "Coverage summary of an audit, optionally with its risk report");
  s_rep->add_option("--outcomes", rep.outcomes, "outcomes.json from audit")->required()->check(CLI::ExistingFile);
  s_rep->add_option("--risk", rep.risk, "risk_report.json from risk")->check(CLI::ExistingFile);
  common(s_rep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "patho: error: " << e.what() << "\n";
    return validation_error;
  }

  try {
    auto* sub = app.get_subcommands().front();
    Run run(sub->get_name(), out_dir, force);
    if (verbose) err << "patho " << sub->get_name() << ": threads=" << threads << "\n";
    if (sub == s_audit) return do_audit(audit, run, out);
    if (sub == s_risk) return do_risk(risk, run, out);
    if (sub == s_hol) return do_holonorm(hol, run, out);
    if (sub == s_game) return do_game(game, run, out);
    if (sub == s_par) return do_pareto(par, run, out);
    if (sub == s_rep) return do_report(rep, run, out);
  } catch (const ConvergenceError& e) {
    err << "patho: error: " << e.what() << "\n";
    return internal_error;
  } catch (const Error& e) {
    err << "patho: error: " << e.what() << "\n";
    return validation_error;
  } catch (const std::exception& e) {
    err << "patho: internal error: " << e.what() << "\n";
    return internal_error;
  }
  return internal_error;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"patho"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace patho::cli
