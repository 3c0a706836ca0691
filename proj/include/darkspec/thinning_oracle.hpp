#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "darkspec/severity.hpp"

namespace darkspec {

/// How the simulated non-speculating analyst loses imagined risk.
///  Component: each replication keeps component k's whole jump total with
///             probability pi_k, else none of it.
///  Jump:      each jump of component k is detected independently with
///             probability pi_k (a compound Poisson of rate pi_k lambda_k).
/// Both agree in expectation; only Jump reproduces the closed-form variance
/// gap, since Component adds pi (1 - pi) E[J]^2.
enum class ThinningMode { Component, Jump };

struct ThinningComponent {
  std::string id;
  double lambda = 0.0;
  SeverityDistribution severity{};
  double pi = 1.0;
  double sigma_eps = 0.0;  // noise on the speculative (PKRE) observations
};

struct ThinningStudyConfig {
  std::vector<ThinningComponent> components;
  double horizon = 1.0;
  std::size_t replications = 10000;
  std::uint64_t seed = 0;
  ThinningMode mode = ThinningMode::Jump;
};

/// Monte Carlo statistics are on per-unit-time losses J / T. Variances are
/// reported scaled by T, so they compare directly with lambda E[Z^2].
struct ThinningRow {
  std::string id;
  double pi = 1.0;
  double bias_formula = 0.0;
  double bias_mc = 0.0;
  double bias_se = 0.0;
  double var_gap_formula = 0.0;
  double var_gap_mc = 0.0;
  double pkre_variance_mc = 0.0;
  double nospec_variance_mc = 0.0;
  double pkre_variance_se = 0.0;
  long long truncations = 0;     // rejected noise draws (Z + eps < 0)
  double mean_noise = 0.0;       // average accepted eps; truncation bias
};

struct ThinningStudyResult {
  std::vector<ThinningRow> components;
  ThinningRow total;  // sums over components; pi left at 1
};

/// Replication i of component k draws from derive_seed(seed, k, i): jump
/// count, sizes, detection uniforms, then noise only when sigma_eps > 0, so a
/// zero sigma_eps leaves every other draw unchanged.
ThinningStudyResult run_thinning_study(const ThinningStudyConfig& config);

/// Columns: component_id,pi,bias_formula,bias_mc,var_gap_formula,var_gap_mc,
/// abs_error,rel_error. Errors are the larger of the two metrics; the last
/// row has component_id "total".
void write_gap_report_csv(std::ostream& out, const ThinningStudyResult& result);

}  // namespace darkspec
