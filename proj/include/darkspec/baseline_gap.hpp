#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "darkspec/estimation.hpp"

namespace darkspec {

struct PathSample;

/// Detection probability that improves with the round:
///   pi*(r) = pi_max - exp(-psi (r - 1)) pi_1,  0 < pi_1 < pi_max < 1, psi > 0.
struct ImprovingDetection {
  double pi_1 = 0.0;
  double pi_max = 0.0;
  double psi = 0.0;

  void validate() const;
};

/// Probability with which the non-speculating analyst detects each imagined
/// component. Constant mode: one pi_k in [0, 1] per component.
class DetectionProfile {
 public:
  static DetectionProfile constant(std::vector<double> pis);
  static DetectionProfile improving(ImprovingDetection curve);

  bool is_constant() const { return std::holds_alternative<std::vector<double>>(mode_); }
  /// Throws DomainError in improving mode.
  const std::vector<double>& pis() const;
  /// Throws DomainError in constant mode.
  const ImprovingDetection& curve() const;

 private:
  explicit DetectionProfile(std::variant<std::vector<double>, ImprovingDetection> m)
      : mode_(std::move(m)) {}
  std::variant<std::vector<double>, ImprovingDetection> mode_;
};

/// Per-component measurement-error standard deviations sigma_eps >= 0.
struct MeasurementError {
  std::vector<double> sigma_epsilon;
};

/// sum_k (pi_k - 1) lambda_k xi_k.
double bias_nospec(std::span<const RiskEstimate> imagined,
                   const DetectionProfile& profile);

/// sum_k (pi_k - 1) lambda_k (s_k^2 + xi_k^2).
double variance_gap(std::span<const RiskEstimate> imagined,
                    std::span<const double> severity_variances,
                    const DetectionProfile& profile);

/// variance_gap minus sum_k lambda_k sigma_eps_k^2.
double variance_gap_with_error(std::span<const RiskEstimate> imagined,
                               std::span<const double> severity_variances,
                               const DetectionProfile& profile,
                               const MeasurementError& errors);

double improvement_curve(int round, const ImprovingDetection& curve);

/// One-period movement of the PKRE over the improving non-speculating
/// estimate: (1 - pi*(R)) lambda xi / E[delta].
double delta_benefit(int round, const ImprovingDetection& curve,
                     double lambda_hat, double xi_hat,
                     double expected_duration);

struct StaggeredEntry {
  std::string component_id;
  double commencement = 0.0;
  double duration = 0.0;  // delta_k = T - t_k
  long long event_count = 0;
  std::vector<double> jump_sizes;
};

/// Components observed over different durations; entries are kept sorted by
/// commencement.
struct StaggeredPanel {
  std::vector<StaggeredEntry> entries;

  static StaggeredPanel from_paths(std::span<const PathSample> paths);
};

/// sum_k N_k / delta_k. Throws DomainError if any duration is <= 0.
double staggered_frequency(const StaggeredPanel& panel);

}  // namespace darkspec
