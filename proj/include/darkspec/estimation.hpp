#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace darkspec {

struct PathSample;

enum class EstimateSource { ObservedHistory, UnderwritingRound };

struct RiskEstimate {
  std::string component_id;
  double lambda_hat = 0.0;
  std::optional<double> xi_hat;  // empty: no events observed
  double severity_variance_hat = 0.0;
  double window = 1.0;
  long long event_count = 0;
  EstimateSource source = EstimateSource::ObservedHistory;
  int round = 0;  // underwriting round; 0 for observed history
  // Raw jump total when built from data. Lets expected_jump_loss return
  // T^-1 sum Z exactly rather than the rounded product lambda_hat * xi_hat.
  std::optional<double> jump_total;

  friend bool operator==(const RiskEstimate&, const RiskEstimate&) = default;
};

struct FrequencyEstimate {
  double rate;
  double variance;
};

struct SeverityEstimate {
  double mean;
  double variance;         // variance of the mean: s^2 / N
  double sample_variance;  // s^2 with the N - 1 divisor
};

FrequencyEstimate estimate_frequency(long long event_count, double window);

/// Throws NoEventsError on an empty sample.
SeverityEstimate estimate_severity(std::span<const double> jump_sizes);

/// Estimate from an observed jump history over a window of length T.
RiskEstimate observed_estimate(std::string component_id,
                               std::span<const double> jump_sizes,
                               double window);
RiskEstimate observed_estimate(const PathSample& path);

/// Estimate returned by an underwriting call in round r.
RiskEstimate underwriting_estimate(std::string component_id, int round,
                                   double lambda_hat, double xi_hat,
                                   double severity_variance = 0.0,
                                   double window = 1.0);

/// lambda_hat * xi_hat, or T^-1 sum Z for data-built estimates. A component
/// with no events contributes 0.
double expected_jump_loss(const RiskEstimate& estimate);

/// SecondMoment: lambda (xi^2 + s^2) / T, the compound Poisson variance.
/// AsPrinted: (lambda xi + lambda s^2) / T, kept for comparison only.
enum class VarianceForm { SecondMoment, AsPrinted };

double jump_loss_variance(double lambda_hat, double xi_hat,
                          double severity_variance, double window,
                          VarianceForm form = VarianceForm::SecondMoment);
double jump_loss_variance(const RiskEstimate& estimate,
                          VarianceForm form = VarianceForm::SecondMoment);

struct PkreContribution {
  std::string component_id;
  bool imagined = false;
  double loss_rate = 0.0;
  double variance = 0.0;

  friend bool operator==(const PkreContribution&,
                         const PkreContribution&) = default;
};

struct PkreResult {
  int round = 0;
  std::vector<PkreContribution> contributions;  // observed first, input order
  double observed_total = 0.0;
  double imagined_total = 0.0;
  double total = 0.0;
  double variance = 0.0;

  friend bool operator==(const PkreResult&, const PkreResult&) = default;
};

/// Totals are exactly rounded sums over the contributions, so they do not
/// depend on summation order. Throws DomainError on a duplicate component id
/// within either list.
PkreResult compute_pkre(std::span<const RiskEstimate> observed,
                        std::span<const RiskEstimate> imagined, int round,
                        VarianceForm form = VarianceForm::SecondMoment);

/// Union of two results over disjoint component sets; totals recomputed.
PkreResult combine(const PkreResult& a, const PkreResult& b);

/// Columns: component_id,source,round,lambda_hat,xi_hat,severity_var,window,n_events.
void write_estimates_csv(std::ostream& out,
                         std::span<const RiskEstimate> estimates);
std::vector<RiskEstimate> read_estimates_csv(std::istream& in);

}  // namespace darkspec
