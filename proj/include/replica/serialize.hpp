#pragma once

#include <json.hpp>
#include <optional>
#include <string>

#include "replica/ensemble.hpp"
#include "replica/onersb.hpp"
#include "replica/prior.hpp"
#include "replica/report.hpp"
#include "replica/rs.hpp"
#include "replica/spectral.hpp"
#include "replica/stats.hpp"
#include "replica/trials.hpp"
#include "replica/utility.hpp"

namespace replica {

using json = nlohmann::json;

/// Rejects unknown keys and reports missing required ones.
void check_keys(const json& j, const std::vector<std::string>& required,
                const std::vector<std::string>& optional, const std::string& context);

/// FNV-1a over the canonical dump; stable content identifier.
std::string content_hash(const json& j);

json spectral_law_to_json(const SpectralLaw& law);
SpectralLaw spectral_law_from_json(const json& j);

Prior prior_from_json(const json& j);
/// Structural export; throws for priors carrying a custom discretization.
json prior_to_json(const Prior& p);

Utility utility_from_json(const json& j);
json utility_to_json(const Utility& u);

json rs_solution_to_json(const RsSolution& s);
RsSolution rs_solution_from_json(const json& j);

json onersb_solution_to_json(const OneRsbSolution& s);
OneRsbSolution onersb_solution_from_json(const json& j);

json report_to_json(const ComparisonReport& r);
ComparisonReport report_from_json(const json& j);
std::string report_to_csv(const ComparisonReport& r);

void write_samples_csv(const std::string& path, const std::vector<TrialResult>& results);
JointSampleSet read_samples_csv(const std::string& path);

/// Experiment description shared by the predict / simulate / verify stages.
struct ExperimentConfig {
  json prior_spec;
  json utility_spec;
  json ensemble_spec;  // {"kind":"iid_gaussian"} or haar_spectral with a law
  Prior prior = Prior::gaussian(0.0, 1.0);
  Utility utility = Utility::zero();
  double lambda = 1.0;
  double lambda0 = 0.0;
  int n = 0;
  int k = 0;
  double r = 1.0;  // n / k
  std::string ansatz = "rs";
  int trials = 1;
  std::uint64_t seed = 1;
  RsOptions rs_opts{};
  OneRsbOptions onersb_opts{};
  VectorSolverOptions vec_opts{};
  ReportOptions report_opts{};
  std::optional<std::vector<double>> sweep_lambda;

  /// Spectral law the replica solvers use (MP with the configured r for the
  /// i.i.d. ensemble, the configured law otherwise).
  SpectralLaw solver_law() const;
  EnsembleSampler make_ensemble() const;

  /// Echo of the resolved configuration (canonical form used for hashing).
  json echo() const;
  std::string hash() const;

  static ExperimentConfig from_json(const json& j);
  static ExperimentConfig load(const std::string& path);
};

}  // namespace replica
