#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "darkspec/severity.hpp"

namespace darkspec {

/// Observational status of a risk process. Movement is one-way:
/// SDS -> Imagined -> Observed.
enum class RiskCategory { Observed, Imagined, SDS };

std::string_view to_string(RiskCategory c);
RiskCategory parse_risk_category(std::string_view text);

struct LevyParams {
  std::string id;
  double alpha = 0.0;
  double sigma = 0.0;
  double lambda = 0.0;
  SeverityDistribution severity{};
  RiskCategory category = RiskCategory::Observed;
  double commencement = 0.0;
};

/// One spectrally negative Levy loss process
///   X_t = alpha (t - t_k) + sigma W(t - t_k) - sum_{n <= N(t)} Z_n,
/// active from its commencement time t_k. Immutable once built.
class LevyComponent {
 public:
  explicit LevyComponent(LevyParams params);

  const std::string& id() const { return p_.id; }
  double alpha() const { return p_.alpha; }
  double sigma() const { return p_.sigma; }
  double lambda() const { return p_.lambda; }
  const SeverityDistribution& severity() const { return p_.severity; }
  RiskCategory category() const { return p_.category; }
  double commencement() const { return p_.commencement; }
  const LevyParams& params() const { return p_; }

  /// Copy with a new category; throws DomainError on a backward move
  /// (e.g. Observed -> Imagined).
  LevyComponent reclassified(RiskCategory next) const;

  /// Same law of motion (everything except the id).
  bool same_law(const LevyComponent& other) const;

  friend bool operator==(const LevyComponent& a, const LevyComponent& b) {
    return a.p_.id == b.p_.id && a.same_law(b);
  }

 private:
  LevyParams p_;
};

/// One simulated trajectory over (commencement, horizon].
struct PathSample {
  std::string component_id;
  double horizon = 0.0;
  double commencement = 0.0;
  double alpha = 0.0;
  double sigma = 0.0;
  std::vector<double> jump_times;  // sorted, in (commencement, horizon]
  std::vector<double> jump_sizes;  // Z_n >= 0, same length as jump_times
  double brownian_terminal = 0.0;  // W(horizon - commencement) ~ N(0, dt)
  double terminal_value = 0.0;
  std::uint64_t seed = 0;

  /// Sum of jump sizes in index order.
  double jump_total() const;
  /// alpha*dt + sigma*W - sum Z, evaluated exactly as at sampling time.
  double reconstruct_terminal() const;

  friend bool operator==(const PathSample&, const PathSample&) = default;
};

struct MomentSummary {
  double mean = 0.0;
  double variance = 0.0;
  double horizon = 0.0;
};

/// Draws one path. Draw order on the seeded stream: jump count, jump times,
/// jump sizes, Brownian terminal value.
PathSample sample_path(const LevyComponent& component, double horizon,
                       std::uint64_t seed);

/// Paths 0..count-1 of one component, path i seeded with
/// derive_seed(root_seed, component_index, i).
std::vector<PathSample> simulate_paths(const LevyComponent& component,
                                       double horizon, std::uint64_t root_seed,
                                       std::uint64_t component_index,
                                       std::size_t count);

/// Levy sum of components sharing a commencement time: drifts add,
/// diffusions add in quadrature, rates add, severity is the rate-weighted
/// mixture. A single component is returned unchanged.
LevyComponent aggregate(std::span<const LevyComponent> components);

/// E[X] at the horizon; needs only a finite severity mean.
double theoretical_mean(const LevyComponent& component, double horizon);

/// Mean and variance of X at the horizon.
MomentSummary theoretical_moments(const LevyComponent& component,
                                  double horizon);

/// Path CSV: component_id,path_index,jump_time,jump_size,terminal_value.
/// One row per jump (terminal_value empty) then a terminal row with
/// jump_time = horizon and jump_size = 0.
void write_paths_csv(std::ostream& out, std::span<const PathSample> paths,
                     bool with_header = true);

/// Parses the path CSV back into per-path jump lists. Fields other than
/// component id, horizon, jumps and terminal value are left at defaults.
std::vector<PathSample> read_paths_csv(std::istream& in);

}  // namespace darkspec
