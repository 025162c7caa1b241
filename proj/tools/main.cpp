// Command-line front end: predict / simulate / verify / sweep.
//
// Exit codes: 0 success, 2 verification criteria failed, 3 solver
// non-convergence, 4 configuration error.

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "replica/errors.hpp"
#include "replica/serialize.hpp"

namespace fs = std::filesystem;
using replica::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCriteriaFailed = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitConfigError = 4;

int resolve_workers(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("REPLICA_DECOUPLE_WORKERS")) {
    int w = std::atoi(env);
    if (w > 0) return w;
  }
  return 0;  // run_trials resolves 0 to hardware concurrency
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw replica::ConfigError("cannot open for writing: " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw replica::ConfigError("cannot open: " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : content) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

json resolved_config_echo(const replica::ExperimentConfig& cfg) {
  json j = cfg.echo();
  j["solver"] = {
      {"rs",
       {{"damping", cfg.rs_opts.damping},
        {"tol", cfg.rs_opts.tol},
        {"max_iter", cfg.rs_opts.max_iter},
        {"quad_order", cfg.rs_opts.quad_order}}},
      {"onersb",
       {{"damping", cfg.onersb_opts.damping},
        {"inner_tol", cfg.onersb_opts.inner_tol},
        {"tol", cfg.onersb_opts.tol},
        {"mu_tol", cfg.onersb_opts.mu_tol},
        {"quad_order", cfg.onersb_opts.quad_order},
        {"mu_min", cfg.onersb_opts.mu_min},
        {"mu_max", cfg.onersb_opts.mu_max},
        {"mu_grid", cfg.onersb_opts.mu_grid}}}};
  j["vector_solver"] = {{"tol_objective", cfg.vec_opts.tol_objective},
                        {"tol_residual", cfg.vec_opts.tol_residual},
                        {"max_iter", cfg.vec_opts.max_iter}};
  j["report"] = {{"quantile_bins", cfg.report_opts.quantile_bins},
                 {"min_bin_count", cfg.report_opts.min_bin_count},
                 {"null_replicas", cfg.report_opts.null_replicas},
                 {"cdf_alpha", cfg.report_opts.cdf_alpha},
                 {"homogeneity_groups", cfg.report_opts.homogeneity_groups},
                 {"homogeneity_alpha", cfg.report_opts.homogeneity_alpha},
                 {"calibration_seed", cfg.report_opts.calibration_seed}};
  return j;
}

json channel_artifacts(const replica::DecoupledChannel& channel) {
  json j;
  json moments = json::array();
  for (int total = 0; total <= 4; ++total)
    for (int k = total; k >= 0; --k)
      moments.push_back(
          {{"k", k}, {"l", total - k}, {"value", channel.moment(k, total - k)}});
  j["moments"] = moments;
  j["predicted_q"] = channel.predicted_q();

  // conditional cdf curves on a representative source grid
  std::vector<double> vs;
  for (const auto& node : channel.prior().integration_nodes(9)) vs.push_back(node.x);
  double spread = 4.0 * std::sqrt(channel.lambda0_s() + channel.lambda1_s()) + 1e-6;
  double vlo = *std::min_element(vs.begin(), vs.end());
  double vhi = *std::max_element(vs.begin(), vs.end());
  const int nt = 161;
  std::vector<double> tgrid(nt);
  for (int i = 0; i < nt; ++i)
    tgrid[i] = (vlo - spread) + (vhi - vlo + 2.0 * spread) * i / (nt - 1);
  json curves = json::array();
  for (double v : vs) {
    replica::ConditionalLaw law = channel.conditional(v);
    json col = json::array();
    for (double t : tgrid) col.push_back(law.cdf(t));
    curves.push_back({{"x", v}, {"cdf", col}});
  }
  j["cdf_grid"] = {{"t", tgrid}, {"conditionals", curves}};
  return j;
}

struct PredictOutcome {
  bool converged = true;
  json diagnostics = json::array();
};

void predict_one(const replica::ExperimentConfig& cfg, const fs::path& out,
                 const std::string& suffix, PredictOutcome& outcome) {
  replica::RTransform rt(cfg.solver_law());
  json base;
  base["config"] = resolved_config_echo(cfg);
  base["config_hash"] = cfg.hash();

  if (cfg.ansatz == "rs" || cfg.ansatz == "both") {
    replica::RsSolution sol =
        rs_solve(cfg.prior, cfg.utility, cfg.lambda, cfg.lambda0, rt, cfg.rs_opts);
    json j = base;
    j["type"] = "rs_solution";
    j["solution"] = replica::rs_solution_to_json(sol);
    j["solution_id"] = replica::content_hash(j["solution"].dump() + cfg.hash());
    replica::DecoupledChannel ch = rs_predicted_channel(sol, cfg.prior, cfg.utility);
    j.update(channel_artifacts(ch));
    write_json(out / ("rs" + suffix + ".json"), j);
    if (!sol.converged) {
      outcome.converged = false;
      outcome.diagnostics.push_back({{"stage", "rs" + suffix},
                                     {"residual", sol.residual},
                                     {"iterations", sol.iterations}});
    }
  }
  if (cfg.ansatz == "1rsb" || cfg.ansatz == "both") {
    replica::OneRsbSolution sol =
        onersb_solve(cfg.prior, cfg.utility, cfg.lambda, cfg.lambda0, rt, cfg.onersb_opts);
    json j = base;
    j["type"] = "onersb_solution";
    j["solution"] = replica::onersb_solution_to_json(sol);
    j["solution_id"] = replica::content_hash(j["solution"].dump() + cfg.hash());
    replica::DecoupledChannel ch = onersb_predicted_channel(sol, cfg.prior, cfg.utility);
    j.update(channel_artifacts(ch));
    write_json(out / ("onersb" + suffix + ".json"), j);
    if (!sol.converged) {
      outcome.converged = false;
      outcome.diagnostics.push_back({{"stage", "onersb" + suffix},
                                     {"status", to_string(sol.status)},
                                     {"defects_max", sol.defects.max()}});
    }
  }
}

int cmd_predict(const replica::ExperimentConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  PredictOutcome outcome;
  predict_one(cfg, out, "", outcome);
  if (!outcome.converged) {
    write_json(out / "predict_diagnostics.json",
               json{{"converged", false}, {"stages", outcome.diagnostics}});
    std::cerr << "predict: solver did not converge; see predict_diagnostics.json\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

int cmd_simulate(const replica::ExperimentConfig& cfg, const fs::path& out, int workers) {
  if (cfg.n < 1 || cfg.k < 1)
    throw replica::ConfigError("simulate: config must carry n and k (or n with r)");
  fs::create_directories(out);

  replica::TrialConfig tc{cfg.n,       cfg.k,     cfg.prior,    cfg.utility,
                          cfg.lambda,  cfg.lambda0, cfg.make_ensemble(), cfg.vec_opts,
                          cfg.trials,  cfg.seed};
  auto t0 = std::chrono::steady_clock::now();
  std::vector<replica::TrialResult> results = run_trials(tc, workers);
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  fs::path csv = out / "samples.csv";
  write_samples_csv(csv.string(), results);

  json meta;
  meta["config"] = resolved_config_echo(cfg);
  meta["config_hash"] = cfg.hash();
  meta["master_seed"] = cfg.seed;
  meta["samples_hash"] = file_hash(csv);
  meta["wall_seconds"] = wall;
  json per_trial = json::array();
  bool all_converged = true;
  for (const auto& r : results) {
    per_trial.push_back({{"trial", r.trial},
                         {"iterations", r.iterations},
                         {"objective", r.objective},
                         {"objective_at_truth", r.objective_at_truth},
                         {"converged", r.solver_converged},
                         {"wall_seconds", r.wall_seconds}});
    all_converged = all_converged && r.solver_converged;
  }
  meta["trials"] = per_trial;
  write_json(out / "simulate_meta.json", meta);
  if (!all_converged) {
    std::cerr << "simulate: some trials hit the iteration cap\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw replica::ConfigError("cannot open: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw replica::ConfigError("parse error in " + path.string() + ": " + e.what());
  }
  return j;
}

int cmd_verify(const fs::path& predict_path, const fs::path& samples_path,
               const fs::path& out) {
  json pred = load_json(predict_path);
  fs::path meta_path = samples_path.parent_path() / "simulate_meta.json";
  json meta = load_json(meta_path);

  std::string pred_hash = pred.at("config_hash").get<std::string>();
  std::string sim_hash = meta.at("config_hash").get<std::string>();
  if (pred_hash != sim_hash)
    throw replica::ConfigError("verify: config hash mismatch between predict (" +
                               pred_hash + ") and samples (" + sim_hash + ")");
  std::string recorded = meta.at("samples_hash").get<std::string>();
  std::string actual = file_hash(samples_path);
  if (recorded != actual)
    throw replica::ConfigError("verify: samples file content hash " + actual +
                               " does not match recorded " + recorded);

  replica::ExperimentConfig cfg = replica::ExperimentConfig::from_json(pred.at("config"));
  replica::JointSampleSet samples = replica::read_samples_csv(samples_path.string());

  replica::DecoupledChannel channel = [&]() {
    if (pred.at("type").get<std::string>() == "rs_solution") {
      replica::RsSolution sol = replica::rs_solution_from_json(pred.at("solution"));
      return rs_predicted_channel(sol, cfg.prior, cfg.utility);
    }
    replica::OneRsbSolution sol = replica::onersb_solution_from_json(pred.at("solution"));
    return onersb_predicted_channel(sol, cfg.prior, cfg.utility);
  }();

  replica::ComparisonReport report = build_report(
      samples, channel, cfg.report_opts, pred.at("solution_id").get<std::string>());

  fs::create_directories(out);
  write_json(out / "report.json", replica::report_to_json(report));
  write_text(out / "report.csv", replica::report_to_csv(report));

  // plot-ready empirical vs predicted conditional cdf curves
  {
    std::ostringstream os;
    os.precision(12);
    os << "bin,t,empirical,predicted\n";
    auto bins = make_conditioning_bins(samples, cfg.prior, cfg.report_opts.quantile_bins);
    for (const auto& bin : bins) {
      if (bin.members.size() < cfg.report_opts.min_bin_count) continue;
      std::vector<double> vals;
      std::map<double, std::size_t> counts;
      for (std::size_t i : bin.members) {
        vals.push_back(samples.xhat[i]);
        counts[samples.x[i]] += 1;
      }
      std::sort(vals.begin(), vals.end());
      std::vector<replica::ConditionalLaw> laws;
      std::vector<double> mult;
      for (const auto& [xv, c] : counts) {
        laws.push_back(channel.conditional(xv));
        mult.push_back(static_cast<double>(c));
      }
      const int nt = 101;
      for (int i = 0; i < nt; ++i) {
        double t = vals.front() + (vals.back() - vals.front()) * i / (nt - 1);
        double emp = static_cast<double>(
                         std::upper_bound(vals.begin(), vals.end(), t) - vals.begin()) /
                     static_cast<double>(vals.size());
        double pred_cdf = 0.0;
        for (std::size_t c = 0; c < laws.size(); ++c) pred_cdf += mult[c] * laws[c].cdf(t);
        pred_cdf /= static_cast<double>(vals.size());
        os << bin.label << "," << t << "," << emp << "," << pred_cdf << "\n";
      }
    }
    write_text(out / "cdf_curves.csv", os.str());
  }

  std::cout << (report.overall_pass ? "PASS" : "FAIL") << " mse=" << report.mse
            << " predicted_q=" << report.predicted_q << "\n";
  return report.overall_pass ? kExitOk : kExitCriteriaFailed;
}

int cmd_sweep(const replica::ExperimentConfig& base, const fs::path& out) {
  if (!base.sweep_lambda)
    throw replica::ConfigError("sweep: config needs a \"sweep\" section");
  fs::create_directories(out);
  std::ostringstream summary;
  summary.precision(12);
  summary << "lambda,ansatz,chi,p,q,mu,lambda0_s,lambda1_s,lambda_s,converged,status\n";
  PredictOutcome outcome;
  for (std::size_t i = 0; i < base.sweep_lambda->size(); ++i) {
    replica::ExperimentConfig cfg = base;
    cfg.lambda = (*base.sweep_lambda)[i];
    cfg.sweep_lambda.reset();
    char suffix[16];
    std::snprintf(suffix, sizeof(suffix), "_%03zu", i);
    predict_one(cfg, out, suffix, outcome);

    if (cfg.ansatz == "rs" || cfg.ansatz == "both") {
      json j = load_json(out / ("rs" + std::string(suffix) + ".json"));
      const auto& s = j.at("solution");
      summary << cfg.lambda << ",rs," << s.at("chi").get<double>() << ",,"
              << s.at("q").get<double>() << ",," << s.at("lambda0_s").get<double>()
              << ",," << s.at("lambda_s").get<double>() << ","
              << (s.at("converged").get<bool>() ? 1 : 0) << ",\n";
    }
    if (cfg.ansatz == "1rsb" || cfg.ansatz == "both") {
      json j = load_json(out / ("onersb" + std::string(suffix) + ".json"));
      const auto& s = j.at("solution");
      summary << cfg.lambda << ",1rsb," << s.at("chi").get<double>() << ","
              << s.at("p").get<double>() << "," << s.at("q").get<double>() << ","
              << s.at("mu").get<double>() << "," << s.at("lambda0_s").get<double>()
              << "," << s.at("lambda1_s").get<double>() << ","
              << s.at("lambda_s").get<double>() << ","
              << (s.at("converged").get<bool>() ? 1 : 0) << ","
              << s.at("status").get<std::string>() << "\n";
    }
  }
  write_text(out / "summary.csv", summary.str());
  if (!outcome.converged) {
    write_json(out / "predict_diagnostics.json",
               json{{"converged", false}, {"stages", outcome.diagnostics}});
    return kExitNotConverged;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Replica-predicted decoupled channels for MAP estimation over random "
               "linear systems, with Monte-Carlo verification"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", ansatz_override;
  std::string predict_path, samples_path;
  std::uint64_t seed_override = 0;
  bool seed_given = false;
  int workers = 0;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config)
      cmd->add_option("--config", config_path, "experiment config JSON")->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--workers", workers, "worker threads (env REPLICA_DECOUPLE_WORKERS)");
    cmd->add_option("--seed", seed_override, "master seed override")
        ->each([&](const std::string&) { seed_given = true; });
    cmd->add_option("--ansatz", ansatz_override, "rs | 1rsb | both")
        ->check(CLI::IsMember({"rs", "1rsb", "both"}));
  };

  CLI::App* predict = app.add_subcommand("predict", "solve the replica fixed points");
  add_common(predict, true);
  CLI::App* simulate = app.add_subcommand("simulate", "finite-size Monte-Carlo trials");
  add_common(simulate, true);
  CLI::App* verify = app.add_subcommand("verify", "compare samples against a prediction");
  verify->add_option("--predict", predict_path, "rs.json / onersb.json from predict")
      ->required();
  verify->add_option("--samples", samples_path, "samples.csv from simulate")->required();
  add_common(verify, false);
  CLI::App* sweep = app.add_subcommand("sweep", "predict over a lambda grid");
  add_common(sweep, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) return cmd_verify(predict_path, samples_path, out_dir);

    replica::ExperimentConfig cfg = replica::ExperimentConfig::load(config_path);
    if (seed_given) cfg.seed = seed_override;
    if (!ansatz_override.empty()) cfg.ansatz = ansatz_override;

    if (predict->parsed()) return cmd_predict(cfg, out_dir);
    if (simulate->parsed()) return cmd_simulate(cfg, out_dir, resolve_workers(workers));
    if (sweep->parsed()) return cmd_sweep(cfg, out_dir);
  } catch (const replica::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const replica::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNotConverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
