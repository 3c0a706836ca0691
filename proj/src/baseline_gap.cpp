#include "darkspec/baseline_gap.hpp"

#include <algorithm>
#include <cmath>

#include "darkspec/errors.hpp"
#include "darkspec/levy.hpp"
#include "darkspec/numeric.hpp"

namespace darkspec {

void ImprovingDetection::validate() const {
  if (!(pi_1 > 0.0 && pi_1 < pi_max && pi_max < 1.0))
    throw ParameterError("improving detection needs 0 < pi_1 < pi_max < 1");
  if (!(psi > 0.0) || !std::isfinite(psi))
    throw ParameterError("improving detection needs psi > 0");
}

DetectionProfile DetectionProfile::constant(std::vector<double> pis) {
  for (double p : pis)
    if (!(p >= 0.0 && p <= 1.0))
      throw ParameterError("detection probability must lie in [0, 1]");
  return DetectionProfile(std::move(pis));
}

DetectionProfile DetectionProfile::improving(ImprovingDetection curve) {
  curve.validate();
  return DetectionProfile(curve);
}

const std::vector<double>& DetectionProfile::pis() const {
  if (const auto* p = std::get_if<std::vector<double>>(&mode_)) return *p;
  throw DomainError("detection profile is not in constant mode");
}

const ImprovingDetection& DetectionProfile::curve() const {
  if (const auto* c = std::get_if<ImprovingDetection>(&mode_)) return *c;
  throw DomainError("detection profile is not in improving mode");
}

namespace {

const std::vector<double>& matched_pis(std::size_t n, const DetectionProfile& profile) {
  const auto& pis = profile.pis();
  if (pis.size() != n)
    throw DomainError("detection profile has " + std::to_string(pis.size()) +
                      " probabilities for " + std::to_string(n) + " estimates");
  return pis;
}

double xi_of(const RiskEstimate& e) { return e.xi_hat.value_or(0.0); }

}  // namespace

double bias_nospec(std::span<const RiskEstimate> imagined,
                   const DetectionProfile& profile) {
  const auto& pis = matched_pis(imagined.size(), profile);
  ExactSum s;
  for (std::size_t k = 0; k < imagined.size(); ++k)
    s.add((pis[k] - 1.0) * imagined[k].lambda_hat * xi_of(imagined[k]));
  return s.value();
}

double variance_gap(std::span<const RiskEstimate> imagined,
                    std::span<const double> severity_variances,
                    const DetectionProfile& profile) {
  const auto& pis = matched_pis(imagined.size(), profile);
  if (severity_variances.size() != imagined.size())
    throw DomainError("variance_gap: severity variance count mismatch");
  ExactSum s;
  for (std::size_t k = 0; k < imagined.size(); ++k) {
    const double xi = xi_of(imagined[k]);
    s.add((pis[k] - 1.0) * imagined[k].lambda_hat *
          (severity_variances[k] + xi * xi));
  }
  return s.value();
}

double variance_gap_with_error(std::span<const RiskEstimate> imagined,
                               std::span<const double> severity_variances,
                               const DetectionProfile& profile,
                               const MeasurementError& errors) {
  const auto& pis = matched_pis(imagined.size(), profile);
  if (severity_variances.size() != imagined.size() ||
      errors.sigma_epsilon.size() != imagined.size())
    throw DomainError("variance_gap_with_error: per-component input count mismatch");
  ExactSum s;
  for (std::size_t k = 0; k < imagined.size(); ++k) {
    const double se = errors.sigma_epsilon[k];
    if (!(se >= 0.0)) throw ParameterError("sigma_epsilon must be >= 0");
    const double xi = xi_of(imagined[k]);
    const double lam = imagined[k].lambda_hat;
    s.add((pis[k] - 1.0) * lam * (severity_variances[k] + xi * xi) - lam * se * se);
  }
  return s.value();
}

double improvement_curve(int round, const ImprovingDetection& curve) {
  if (round < 1) throw DomainError("improvement_curve: round must be >= 1");
  curve.validate();
  return curve.pi_max - std::exp(-curve.psi * (round - 1)) * curve.pi_1;
}

double delta_benefit(int round, const ImprovingDetection& curve,
                     double lambda_hat, double xi_hat,
                     double expected_duration) {
  if (!(expected_duration > 0.0))
    throw DomainError("delta_benefit: expected duration must be > 0");
  const double pi = improvement_curve(round, curve);
  return (1.0 - pi) * lambda_hat * xi_hat / expected_duration;
}

StaggeredPanel StaggeredPanel::from_paths(std::span<const PathSample> paths) {
  StaggeredPanel panel;
  for (const auto& p : paths)
    panel.entries.push_back({p.component_id, p.commencement,
                             p.horizon - p.commencement,
                             static_cast<long long>(p.jump_sizes.size()),
                             p.jump_sizes});
  std::stable_sort(panel.entries.begin(), panel.entries.end(),
                   [](const auto& a, const auto& b) {
                     return a.commencement < b.commencement;
                   });
  return panel;
}

double staggered_frequency(const StaggeredPanel& panel) {
  ExactSum s;
  for (const auto& e : panel.entries) {
    if (!(e.duration > 0.0))
      throw DomainError("staggered_frequency: component '" + e.component_id +
                        "' has nonpositive duration");
    s.add(static_cast<double>(e.event_count) / e.duration);
  }
  return s.value();
}

}  // namespace darkspec
