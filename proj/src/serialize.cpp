#include "replica/serialize.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "replica/errors.hpp"

namespace replica {

void check_keys(const json& j, const std::vector<std::string>& required,
                const std::vector<std::string>& optional, const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + ": expected a JSON object");
  std::set<std::string> allowed(required.begin(), required.end());
  allowed.insert(optional.begin(), optional.end());
  for (const auto& [key, val] : j.items()) {
    (void)val;
    if (!allowed.count(key)) throw ConfigError(context + ": unknown key \"" + key + "\"");
  }
  for (const auto& key : required)
    if (!j.contains(key)) throw ConfigError(context + ": missing key \"" + key + "\"");
}

std::string content_hash(const json& j) {
  std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return std::string(buf);
}

json spectral_law_to_json(const SpectralLaw& law) {
  if (const auto* mp = std::get_if<MarchenkoPastur>(&law.variant()))
    return json{{"kind", "marchenko_pastur"}, {"r", mp->r}};
  if (const auto* sp = std::get_if<ScaledProjector>(&law.variant()))
    return json{{"kind", "scaled_projector"}, {"r", sp->r}, {"c", sp->c}};
  const auto& e = std::get<Empirical>(law.variant());
  return json{{"kind", "empirical"}, {"eigenvalues", e.eigenvalues}};
}

SpectralLaw spectral_law_from_json(const json& j) {
  check_keys(j, {"kind"}, {"r", "c", "eigenvalues", "path"}, "spectral law");
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "marchenko_pastur") {
    check_keys(j, {"kind", "r"}, {}, "marchenko_pastur law");
    return SpectralLaw::marchenko_pastur(j.at("r").get<double>());
  }
  if (kind == "scaled_projector") {
    check_keys(j, {"kind", "r", "c"}, {}, "scaled_projector law");
    return SpectralLaw::scaled_projector(j.at("r").get<double>(), j.at("c").get<double>());
  }
  if (kind == "empirical") {
    check_keys(j, {"kind"}, {"eigenvalues", "path"}, "empirical law");
    if (j.contains("path"))
      return SpectralLaw::empirical_from_file(j.at("path").get<std::string>());
    if (j.contains("eigenvalues"))
      return SpectralLaw::empirical(j.at("eigenvalues").get<std::vector<double>>());
    throw ConfigError("empirical law: need \"eigenvalues\" or \"path\"");
  }
  throw ConfigError("spectral law: unknown kind \"" + kind + "\"");
}

Prior prior_from_json(const json& j) {
  check_keys(j, {"kind"}, {"atoms", "mean", "var", "sparsity", "scale", "gaussians"},
             "prior");
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "discrete") {
    check_keys(j, {"kind", "atoms"}, {}, "discrete prior");
    std::vector<Prior::Atom> atoms;
    for (const auto& a : j.at("atoms"))
      atoms.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
    return Prior::discrete(std::move(atoms));
  }
  if (kind == "gaussian") {
    check_keys(j, {"kind", "var"}, {"mean"}, "gaussian prior");
    return Prior::gaussian(j.value("mean", 0.0), j.at("var").get<double>());
  }
  if (kind == "bernoulli_gaussian") {
    check_keys(j, {"kind", "sparsity", "var"}, {}, "bernoulli_gaussian prior");
    return Prior::bernoulli_gaussian(j.at("sparsity").get<double>(),
                                     j.at("var").get<double>());
  }
  if (kind == "laplace") {
    check_keys(j, {"kind", "scale"}, {}, "laplace prior");
    return Prior::laplace(j.at("scale").get<double>());
  }
  if (kind == "mixture") {
    // atoms plus gaussian components, both optional
    check_keys(j, {"kind"}, {"atoms", "gaussians"}, "mixture prior");
    std::vector<Prior::Atom> atoms;
    if (j.contains("atoms"))
      for (const auto& a : j.at("atoms"))
        atoms.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
    double watoms = 0.0;
    for (const auto& a : atoms) watoms += a.weight;
    if (j.contains("gaussians")) {
      const auto& gs = j.at("gaussians");
      if (gs.size() == 1 && atoms.empty()) {
        const auto& g = gs.at(0);
        return Prior::gaussian(g.at(0).get<double>(), g.at(1).get<double>());
      }
      if (gs.size() == 1 && atoms.size() == 1 && atoms[0].value == 0.0) {
        const auto& g = gs.at(0);
        if (g.at(0).get<double>() == 0.0)
          return Prior::bernoulli_gaussian(g.at(2).get<double>(), g.at(1).get<double>());
      }
      throw ConfigError("mixture prior: only atom-at-zero plus one Gaussian supported");
    }
    return Prior::discrete(std::move(atoms));
  }
  throw ConfigError("prior: unknown kind \"" + kind + "\"");
}

json prior_to_json(const Prior& p) {
  // structural export of the supported shapes
  if (p.is_discrete()) {
    json atoms = json::array();
    for (const auto& a : p.atoms()) atoms.push_back({a.value, a.weight});
    return json{{"kind", "discrete"}, {"atoms", atoms}};
  }
  // re-derive gaussian / bernoulli-gaussian from the mixture structure
  auto nodes_probe = p.atoms();
  double atom_w = 0.0;
  for (const auto& a : nodes_probe) atom_w += a.weight;
  if (nodes_probe.empty()) {
    // single gaussian is the only pure-continuous exportable shape
    double mean = p.mean();
    double var = p.second_moment() - mean * mean;
    return json{{"kind", "gaussian"}, {"mean", mean}, {"var", var}};
  }
  if (nodes_probe.size() == 1 && nodes_probe[0].value == 0.0) {
    double sparsity = 1.0 - nodes_probe[0].weight;
    double var = p.second_moment() / sparsity;
    return json{{"kind", "bernoulli_gaussian"}, {"sparsity", sparsity}, {"var", var}};
  }
  throw ConfigError("prior_to_json: shape not exportable; keep the original spec");
}

Utility utility_from_json(const json& j) {
  check_keys(j, {"kind"}, {"alpha", "alpha1", "alpha2", "atoms"}, "utility");
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "quadratic") {
    check_keys(j, {"kind", "alpha"}, {}, "quadratic utility");
    return Utility::quadratic(j.at("alpha").get<double>());
  }
  if (kind == "l1") {
    check_keys(j, {"kind", "alpha"}, {}, "l1 utility");
    return Utility::l1(j.at("alpha").get<double>());
  }
  if (kind == "elastic_net") {
    check_keys(j, {"kind", "alpha1", "alpha2"}, {}, "elastic_net utility");
    return Utility::elastic_net(j.at("alpha1").get<double>(), j.at("alpha2").get<double>());
  }
  if (kind == "discrete_support") {
    check_keys(j, {"kind", "atoms"}, {}, "discrete_support utility");
    std::vector<DiscreteSupportUtility::Atom> atoms;
    for (const auto& a : j.at("atoms"))
      atoms.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
    return Utility::discrete_support(std::move(atoms));
  }
  if (kind == "zero") {
    check_keys(j, {"kind"}, {}, "zero utility");
    return Utility::zero();
  }
  throw ConfigError("utility: unknown kind \"" + kind + "\"");
}

json utility_to_json(const Utility& u) {
  if (const auto* q = std::get_if<QuadraticUtility>(&u.variant()))
    return json{{"kind", "quadratic"}, {"alpha", q->alpha}};
  if (const auto* l = std::get_if<L1Utility>(&u.variant()))
    return json{{"kind", "l1"}, {"alpha", l->alpha}};
  if (const auto* e = std::get_if<ElasticNetUtility>(&u.variant()))
    return json{{"kind", "elastic_net"}, {"alpha1", e->alpha1}, {"alpha2", e->alpha2}};
  if (const auto* d = std::get_if<DiscreteSupportUtility>(&u.variant())) {
    json atoms = json::array();
    for (const auto& a : d->atoms) atoms.push_back({a.value, a.cost});
    return json{{"kind", "discrete_support"}, {"atoms", atoms}};
  }
  throw ConfigError("utility_to_json: custom utilities are not serializable");
}

json rs_solution_to_json(const RsSolution& s) {
  json j;
  j["chi"] = s.state.chi;
  j["q"] = s.state.q;
  j["lambda0_s"] = s.lambda0_s;
  j["lambda_s"] = s.lambda_s;
  j["residual"] = s.residual;
  j["iterations"] = s.iterations;
  j["converged"] = s.converged;
  j["lambda0_s_clamped"] = s.lambda0_s_clamped;
  if (std::isfinite(s.quad_doubling_delta)) j["quad_doubling_delta"] = s.quad_doubling_delta;
  return j;
}

RsSolution rs_solution_from_json(const json& j) {
  check_keys(j,
             {"chi", "q", "lambda0_s", "lambda_s", "residual", "iterations", "converged",
              "lambda0_s_clamped"},
             {"quad_doubling_delta"}, "rs solution");
  RsSolution s;
  s.state.chi = j.at("chi").get<double>();
  s.state.q = j.at("q").get<double>();
  s.lambda0_s = j.at("lambda0_s").get<double>();
  s.lambda_s = j.at("lambda_s").get<double>();
  s.residual = j.at("residual").get<double>();
  s.iterations = j.at("iterations").get<int>();
  s.converged = j.at("converged").get<bool>();
  s.lambda0_s_clamped = j.at("lambda0_s_clamped").get<bool>();
  if (j.contains("quad_doubling_delta"))
    s.quad_doubling_delta = j.at("quad_doubling_delta").get<double>();
  return s;
}

json onersb_solution_to_json(const OneRsbSolution& s) {
  json j;
  j["chi"] = s.state.chi;
  j["p"] = s.state.p;
  j["q"] = s.state.q;
  j["mu"] = s.state.mu;
  j["lambda0_s"] = s.lambda0_s;
  j["lambda1_s"] = s.lambda1_s;
  j["lambda_s"] = s.lambda_s;
  j["defects"] = {{"q", s.defects.q},
                  {"eq36a", s.defects.eq36a},
                  {"eq36b", s.defects.eq36b},
                  {"eq37", s.defects.eq37}};
  j["status"] = to_string(s.status);
  j["converged"] = s.converged;
  j["inner_iterations"] = s.inner_iterations;
  j["outer_evaluations"] = s.outer_evaluations;
  j["max_eq37_identity_gap"] = s.max_eq37_identity_gap;
  if (s.status != OneRsbStatus::kRsb) j["rs_fallback"] = rs_solution_to_json(s.rs_fallback);
  if (std::isfinite(s.quad_doubling_delta)) j["quad_doubling_delta"] = s.quad_doubling_delta;
  return j;
}

OneRsbSolution onersb_solution_from_json(const json& j) {
  check_keys(j,
             {"chi", "p", "q", "mu", "lambda0_s", "lambda1_s", "lambda_s", "defects",
              "status", "converged", "inner_iterations", "outer_evaluations",
              "max_eq37_identity_gap"},
             {"rs_fallback", "quad_doubling_delta"}, "1rsb solution");
  OneRsbSolution s;
  s.state.chi = j.at("chi").get<double>();
  s.state.p = j.at("p").get<double>();
  s.state.q = j.at("q").get<double>();
  s.state.mu = j.at("mu").get<double>();
  s.lambda0_s = j.at("lambda0_s").get<double>();
  s.lambda1_s = j.at("lambda1_s").get<double>();
  s.lambda_s = j.at("lambda_s").get<double>();
  s.defects.q = j.at("defects").at("q").get<double>();
  s.defects.eq36a = j.at("defects").at("eq36a").get<double>();
  s.defects.eq36b = j.at("defects").at("eq36b").get<double>();
  s.defects.eq37 = j.at("defects").at("eq37").get<double>();
  std::string status = j.at("status").get<std::string>();
  s.status = status == "rsb" ? OneRsbStatus::kRsb
             : status == "collapsed to RS" ? OneRsbStatus::kCollapsedToRs
                                           : OneRsbStatus::kNoRsbRoot;
  s.converged = j.at("converged").get<bool>();
  s.inner_iterations = j.at("inner_iterations").get<int>();
  s.outer_evaluations = j.at("outer_evaluations").get<int>();
  s.max_eq37_identity_gap = j.at("max_eq37_identity_gap").get<double>();
  if (j.contains("rs_fallback")) s.rs_fallback = rs_solution_from_json(j.at("rs_fallback"));
  if (j.contains("quad_doubling_delta"))
    s.quad_doubling_delta = j.at("quad_doubling_delta").get<double>();
  return s;
}

json report_to_json(const ComparisonReport& r) {
  json j;
  j["mse"] = {{"empirical", r.mse},
              {"ci_lo", r.mse_ci_lo},
              {"ci_hi", r.mse_ci_hi},
              {"predicted_q", r.predicted_q},
              {"pass", r.mse_pass}};
  j["moments"] = json::array();
  for (const auto& m : r.moments)
    j["moments"].push_back({{"k", m.k},
                            {"l", m.l},
                            {"empirical", m.empirical},
                            {"std_error", m.std_error},
                            {"ci_lo", m.ci_lo},
                            {"ci_hi", m.ci_hi},
                            {"predicted", m.predicted},
                            {"in_ci_scope", m.in_ci_scope},
                            {"pass", m.pass}});
  j["moments_pass"] = r.moments_pass;
  j["cdf"] = json::array();
  for (const auto& c : r.cdf)
    j["cdf"].push_back({{"bin", c.bin},
                        {"count", c.count},
                        {"distance", c.distance},
                        {"threshold", c.threshold},
                        {"p_value", c.p_value},
                        {"excluded", c.excluded},
                        {"pass", c.pass}});
  j["cdf_pass"] = r.cdf_pass;
  j["homogeneity"] = {{"max_distance", r.homogeneity_distance},
                      {"p_value", r.homogeneity_p},
                      {"tests", r.homogeneity_tests},
                      {"groups", r.homogeneity_groups},
                      {"pass", r.homogeneity_pass}};
  j["overall_pass"] = r.overall_pass;
  j["solution_id"] = r.solution_id;
  return j;
}

ComparisonReport report_from_json(const json& j) {
  ComparisonReport r;
  const auto& m = j.at("mse");
  r.mse = m.at("empirical").get<double>();
  r.mse_ci_lo = m.at("ci_lo").get<double>();
  r.mse_ci_hi = m.at("ci_hi").get<double>();
  r.predicted_q = m.at("predicted_q").get<double>();
  r.mse_pass = m.at("pass").get<bool>();
  for (const auto& row : j.at("moments")) {
    MomentRow mr;
    mr.k = row.at("k").get<int>();
    mr.l = row.at("l").get<int>();
    mr.empirical = row.at("empirical").get<double>();
    mr.std_error = row.at("std_error").get<double>();
    mr.ci_lo = row.at("ci_lo").get<double>();
    mr.ci_hi = row.at("ci_hi").get<double>();
    mr.predicted = row.at("predicted").get<double>();
    mr.in_ci_scope = row.at("in_ci_scope").get<bool>();
    mr.pass = row.at("pass").get<bool>();
    r.moments.push_back(mr);
  }
  r.moments_pass = j.at("moments_pass").get<bool>();
  for (const auto& row : j.at("cdf")) {
    CdfRow cr;
    cr.bin = row.at("bin").get<std::string>();
    cr.count = row.at("count").get<std::size_t>();
    cr.distance = row.at("distance").get<double>();
    cr.threshold = row.at("threshold").get<double>();
    cr.p_value = row.at("p_value").get<double>();
    cr.excluded = row.at("excluded").get<bool>();
    cr.pass = row.at("pass").get<bool>();
    r.cdf.push_back(cr);
  }
  r.cdf_pass = j.at("cdf_pass").get<bool>();
  const auto& h = j.at("homogeneity");
  r.homogeneity_distance = h.at("max_distance").get<double>();
  r.homogeneity_p = h.at("p_value").get<double>();
  r.homogeneity_tests = h.at("tests").get<std::size_t>();
  r.homogeneity_groups = h.at("groups").get<int>();
  r.homogeneity_pass = h.at("pass").get<bool>();
  r.overall_pass = j.at("overall_pass").get<bool>();
  r.solution_id = j.at("solution_id").get<std::string>();
  return r;
}

std::string report_to_csv(const ComparisonReport& r) {
  std::ostringstream os;
  os.precision(12);
  os << "criterion,predicted,empirical,ci_lo,ci_hi,pass\n";
  os << "mse," << r.predicted_q << "," << r.mse << "," << r.mse_ci_lo << ","
     << r.mse_ci_hi << "," << (r.mse_pass ? 1 : 0) << "\n";
  for (const auto& m : r.moments)
    os << "moment_" << m.k << "_" << m.l << "," << m.predicted << "," << m.empirical
       << "," << m.ci_lo << "," << m.ci_hi << "," << (m.pass ? 1 : 0) << "\n";
  for (const auto& c : r.cdf) {
    if (c.excluded) continue;
    os << "cdf_" << c.bin << "," << c.threshold << "," << c.distance << ",,"
       << "," << (c.pass ? 1 : 0) << "\n";
  }
  os << "homogeneity," << r.homogeneity_p << "," << r.homogeneity_distance << ",,,"
     << (r.homogeneity_pass ? 1 : 0) << "\n";
  os << "overall,,,,," << (r.overall_pass ? 1 : 0) << "\n";
  return os.str();
}

void write_samples_csv(const std::string& path, const std::vector<TrialResult>& results) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << "trial,j,x,xhat\n";
  char buf[80];
  for (const auto& r : results) {
    for (std::size_t j = 0; j < r.x.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%d,%zu,%.17g,%.17g\n", r.trial, j, r.x[j],
                    r.xhat[j]);
      out << buf;
    }
  }
}

JointSampleSet read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open samples file: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("trial,j,x,xhat", 0) != 0)
    throw ConfigError("samples file missing 'trial,j,x,xhat' header: " + path);
  JointSampleSet s;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int tr = 0, j = 0;
    double x = 0.0, xh = 0.0;
    if (std::sscanf(line.c_str(), "%d,%d,%lg,%lg", &tr, &j, &x, &xh) != 4)
      throw ConfigError("bad samples row: " + line);
    s.trial.push_back(tr);
    s.index.push_back(j);
    s.x.push_back(x);
    s.xhat.push_back(xh);
  }
  s.validate();
  return s;
}

namespace {

RsOptions rs_options_from_json(const json& j) {
  check_keys(j, {},
             {"damping", "tol", "max_iter", "quad_order", "init_chi", "init_q",
              "quad_doubling_check"},
             "solver.rs");
  RsOptions o;
  o.damping = j.value("damping", o.damping);
  o.tol = j.value("tol", o.tol);
  o.max_iter = j.value("max_iter", o.max_iter);
  o.quad_order = j.value("quad_order", o.quad_order);
  o.init_chi = j.value("init_chi", o.init_chi);
  o.init_q = j.value("init_q", o.init_q);
  o.quad_doubling_check = j.value("quad_doubling_check", o.quad_doubling_check);
  if (!(o.damping > 0.0 && o.damping <= 1.0))
    throw ConfigError("solver.rs: damping must be in (0, 1]");
  return o;
}

OneRsbOptions onersb_options_from_json(const json& j) {
  check_keys(j, {},
             {"damping", "inner_tol", "inner_max_iter", "tol", "mu_tol", "quad_order",
              "mu_min", "mu_max", "mu_grid", "init_chi", "init_p", "init_q",
              "quad_doubling_check"},
             "solver.onersb");
  OneRsbOptions o;
  o.damping = j.value("damping", o.damping);
  o.inner_tol = j.value("inner_tol", o.inner_tol);
  o.inner_max_iter = j.value("inner_max_iter", o.inner_max_iter);
  o.tol = j.value("tol", o.tol);
  o.mu_tol = j.value("mu_tol", o.mu_tol);
  o.quad_order = j.value("quad_order", o.quad_order);
  o.mu_min = j.value("mu_min", o.mu_min);
  o.mu_max = j.value("mu_max", o.mu_max);
  o.mu_grid = j.value("mu_grid", o.mu_grid);
  o.init_chi = j.value("init_chi", o.init_chi);
  o.init_p = j.value("init_p", o.init_p);
  o.init_q = j.value("init_q", o.init_q);
  o.quad_doubling_check = j.value("quad_doubling_check", o.quad_doubling_check);
  if (!(o.damping > 0.0 && o.damping <= 1.0))
    throw ConfigError("solver.onersb: damping must be in (0, 1]");
  return o;
}

VectorSolverOptions vec_options_from_json(const json& j) {
  check_keys(j, {}, {"tol_objective", "tol_residual", "max_iter"}, "vector_solver");
  VectorSolverOptions o;
  o.tol_objective = j.value("tol_objective", o.tol_objective);
  o.tol_residual = j.value("tol_residual", o.tol_residual);
  o.max_iter = j.value("max_iter", o.max_iter);
  return o;
}

ReportOptions report_options_from_json(const json& j) {
  check_keys(j, {},
             {"quantile_bins", "min_bin_count", "null_replicas", "cdf_alpha",
              "homogeneity_groups", "homogeneity_alpha", "calibration_seed"},
             "report");
  ReportOptions o;
  o.quantile_bins = j.value("quantile_bins", o.quantile_bins);
  o.min_bin_count = j.value("min_bin_count", o.min_bin_count);
  o.null_replicas = j.value("null_replicas", o.null_replicas);
  o.cdf_alpha = j.value("cdf_alpha", o.cdf_alpha);
  o.homogeneity_groups = j.value("homogeneity_groups", o.homogeneity_groups);
  o.homogeneity_alpha = j.value("homogeneity_alpha", o.homogeneity_alpha);
  o.calibration_seed = j.value("calibration_seed", o.calibration_seed);
  return o;
}

}  // namespace

SpectralLaw ExperimentConfig::solver_law() const {
  std::string kind = ensemble_spec.at("kind").get<std::string>();
  if (kind == "iid_gaussian") return SpectralLaw::marchenko_pastur(r);
  return spectral_law_from_json(ensemble_spec.at("law"));
}

EnsembleSampler ExperimentConfig::make_ensemble() const {
  std::string kind = ensemble_spec.at("kind").get<std::string>();
  if (kind == "iid_gaussian") return EnsembleSampler::iid_gaussian(n, k);
  return EnsembleSampler::haar_spectral(n, k, spectral_law_from_json(ensemble_spec.at("law")),
                                        ensemble_spec.value("quantile_eigenvalues", false));
}

json ExperimentConfig::echo() const {
  json j;
  j["prior"] = prior_spec;
  j["utility"] = utility_spec;
  j["ensemble"] = ensemble_spec;
  j["lambda"] = lambda;
  j["lambda0"] = lambda0;
  j["n"] = n;
  j["k"] = k;
  j["r"] = r;
  j["ansatz"] = ansatz;
  j["trials"] = trials;
  j["seed"] = seed;
  return j;
}

std::string ExperimentConfig::hash() const {
  // identity of the statistical experiment: what is predicted / simulated,
  // excluding solver tolerances, seeds and trial counts
  json j;
  j["prior"] = prior_spec;
  j["utility"] = utility_spec;
  j["ensemble"] = ensemble_spec;
  j["lambda"] = lambda;
  j["lambda0"] = lambda0;
  j["n"] = n;
  j["k"] = k;
  j["r"] = r;
  return content_hash(j);
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  check_keys(j, {"prior", "utility", "lambda", "lambda0", "ensemble"},
             {"n", "k", "r", "ansatz", "trials", "seed", "solver", "vector_solver",
              "report", "sweep"},
             "config");
  ExperimentConfig c;
  c.prior_spec = j.at("prior");
  c.utility_spec = j.at("utility");
  c.ensemble_spec = j.at("ensemble");
  c.prior = prior_from_json(c.prior_spec);
  c.utility = utility_from_json(c.utility_spec);
  check_keys(c.ensemble_spec, {"kind"}, {"law", "quantile_eigenvalues"}, "ensemble");
  std::string ekind = c.ensemble_spec.at("kind").get<std::string>();
  if (ekind != "iid_gaussian" && ekind != "haar_spectral")
    throw ConfigError("ensemble: unknown kind \"" + ekind + "\"");
  if (ekind == "haar_spectral" && !c.ensemble_spec.contains("law"))
    throw ConfigError("ensemble: haar_spectral needs a \"law\"");

  c.lambda = j.at("lambda").get<double>();
  c.lambda0 = j.at("lambda0").get<double>();
  if (!(c.lambda > 0.0)) throw ConfigError("config: lambda must consistently be > 0");
  if (!(c.lambda0 >= 0.0)) throw ConfigError("config: lambda0 must be >= 0");

  bool has_n = j.contains("n"), has_k = j.contains("k"), has_r = j.contains("r");
  if (has_n) c.n = j.at("n").get<int>();
  if (has_k) c.k = j.at("k").get<int>();
  if (has_r) c.r = j.at("r").get<double>();
  if (has_n && has_k) {
    if (c.n < 1 || c.k < 1) throw ConfigError("config: need n, k >= 1");
    double rr = static_cast<double>(c.n) / c.k;
    if (has_r && std::abs(rr - c.r) > 1e-9 * std::max(1.0, c.r))
      throw ConfigError("config: r = " + std::to_string(c.r) +
                        " inconsistent with n/k = " + std::to_string(rr));
    c.r = rr;
  } else if (has_n && has_r) {
    c.k = static_cast<int>(std::lround(c.n / c.r));
    if (c.k < 1) throw ConfigError("config: n / r rounds to k < 1");
    c.r = static_cast<double>(c.n) / c.k;
  } else if (has_r && !has_n) {
    c.n = 0;  // prediction-only config; finite-size stages will reject it
  } else if (has_n || has_k) {
    throw ConfigError("config: give (n, k) or (n, r) or r alone");
  }

  c.ansatz = j.value("ansatz", std::string("rs"));
  if (c.ansatz != "rs" && c.ansatz != "1rsb" && c.ansatz != "both")
    throw ConfigError("config: ansatz must be rs | 1rsb | both");
  c.trials = j.value("trials", 1);
  c.seed = j.value("seed", std::uint64_t{1});

  if (j.contains("solver")) {
    check_keys(j.at("solver"), {}, {"rs", "onersb"}, "solver");
    if (j.at("solver").contains("rs"))
      c.rs_opts = rs_options_from_json(j.at("solver").at("rs"));
    if (j.at("solver").contains("onersb"))
      c.onersb_opts = onersb_options_from_json(j.at("solver").at("onersb"));
  }
  if (j.contains("vector_solver")) c.vec_opts = vec_options_from_json(j.at("vector_solver"));
  if (j.contains("report")) c.report_opts = report_options_from_json(j.at("report"));
  if (j.contains("sweep")) {
    check_keys(j.at("sweep"), {"parameter", "values"}, {}, "sweep");
    if (j.at("sweep").at("parameter").get<std::string>() != "lambda")
      throw ConfigError("sweep: only the lambda parameter is supported");
    c.sweep_lambda = j.at("sweep").at("values").get<std::vector<double>>();
    if (c.sweep_lambda->empty()) throw ConfigError("sweep: empty value list");
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace replica
