#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "darkspec/rng.hpp"

namespace darkspec {

struct Exponential {
  double rate;
  friend bool operator==(const Exponential&, const Exponential&) = default;
};

struct LogNormal {
  double mu;
  double sigma;
  friend bool operator==(const LogNormal&, const LogNormal&) = default;
};

/// Pareto type I with support [scale, inf).
struct Pareto {
  double scale;
  double shape;
  friend bool operator==(const Pareto&, const Pareto&) = default;
};

struct Degenerate {
  double value;
  friend bool operator==(const Degenerate&, const Degenerate&) = default;
};

using SeverityFamily = std::variant<Exponential, LogNormal, Pareto, Degenerate>;

struct MixtureTerm {
  double weight;
  SeverityFamily family;
  friend bool operator==(const MixtureTerm&, const MixtureTerm&) = default;
};

/// Jump-size law G(Z) of one catastrophic risk process. Sizes are
/// nonnegative magnitudes; the loss process subtracts them.
///
/// Internally a finite mixture of base families. A single-term mixture with
/// weight 1 *is* the base family: sampling it consumes no selector draw, so
/// wrapping never changes a random stream.
class SeverityDistribution {
 public:
  /// Degenerate(1); only meaningful as a placeholder for rate-zero components.
  SeverityDistribution();
  SeverityDistribution(SeverityFamily family);  // NOLINT: implicit by design of the value type

  static SeverityDistribution exponential(double rate);
  static SeverityDistribution exponential_mean(double mean) {
    return exponential(1.0 / mean);
  }
  static SeverityDistribution lognormal(double mu, double sigma);
  static SeverityDistribution pareto(double scale, double shape);
  static SeverityDistribution degenerate(double value);

  /// Weighted mixture. Weights must be nonnegative with a positive sum; they
  /// are normalized, zero-weight terms are dropped, nested mixtures are
  /// flattened.
  static SeverityDistribution mixture(
      std::span<const std::pair<double, SeverityDistribution>> parts);

  double mean() const;
  /// Second raw moment E[Z^2]. Throws VarianceUndefinedError for Pareto with
  /// shape <= 2.
  double second_moment() const;
  /// Central variance. Same error contract as second_moment().
  double variance() const;

  double sample(Xoshiro256& gen) const;

  bool is_mixture() const { return terms_.size() > 1; }
  std::span<const MixtureTerm> terms() const { return terms_; }

  /// Short textual form, e.g. "exponential(rate=0.5)".
  std::string describe() const;

  friend bool operator==(const SeverityDistribution&,
                         const SeverityDistribution&) = default;

 private:
  std::vector<MixtureTerm> terms_;
};

/// Throws ParameterError if a base family's parameters are invalid.
void validate_family(const SeverityFamily& family);

double family_mean(const SeverityFamily& family);
double family_second_moment(const SeverityFamily& family);
double sample_family(const SeverityFamily& family, Xoshiro256& gen);

}  // namespace darkspec
