#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "darkspec/baseline_gap.hpp"
#include "darkspec/estimation.hpp"

namespace darkspec {

struct Narrative;

struct CostModel {
  double c_write = 1.0;
  double c_obs = 0.0;
  bool variable = false;  // charge ln(1 + H) instead of c_spec
  double c_spec = 1.0;

  void validate() const;
  double speculation_cost(std::size_t happenings) const;
};

enum class PsiShape { Quadratic, Absolute };

struct LossWeights {
  double D1 = 1.0;
  double D2 = 1.0;
  PsiShape shape = PsiShape::Quadratic;
  double phi = 1.0;

  void validate() const;
  double psi(double x) const;
};

struct NarrativeQuality {
  double sigma2_max = 1.0;
  double sigma2_min = 0.5;
  double eta = 1.0;

  void validate() const;
};

struct RedLineConfig {
  double nu_star = 1.0;
  void validate() const;
};

struct HyperanxiousEstimate {
  double lambda_dot = 0.0;
  double z_dot = 0.0;
};

enum class Decision { Continue, Stop };
std::string_view to_string(Decision d);

/// First- and second-moment gaps of one imagined component.
struct MomentGap {
  double first = 0.0;
  double second = 0.0;
};

struct RoundDeltas {
  double dL2 = 0.0;
  double dM = 0.0;
  double dO = 0.0;

  double total() const { return dL2 + dM + dO; }
  friend bool operator==(const RoundDeltas&, const RoundDeltas&) = default;
};

/// sum_k D1 Psi(phi g1_k) + D2 Psi(phi g2_k).
double statistical_loss(const LossWeights& weights, std::span<const MomentGap> gaps);

/// Gaps of one component at detection pi with speculative noise variance
/// sigma2_eps: ((pi-1) lambda xi, (pi-1) lambda (s^2 + xi^2) - lambda sigma2_eps).
MomentGap component_gap(double pi, double lambda_hat, double xi_hat,
                        double severity_variance, double sigma2_eps);

/// Continue iff c_write + c_spec <= dL2 + dM + dO. Throws DomainError for a
/// variable-cost model.
Decision continuation_constant(const CostModel& costs, const RoundDeltas& deltas);

/// sigma2_max - exp(eta (H - 1)) sigma2_min, clamped to
/// [0, sigma2_max - sigma2_min]. Throws DomainError for H < 1.
double narrative_error_variance(long long happenings, const NarrativeQuality& quality);

/// Continue into round R + 1 iff
///   c_write + ln(1 + H) + ln(R + 2) - ln(R + 1) <= dL2 + dM + dO,
/// where dL2 was evaluated with narrative_error_variance(H). Throws
/// DomainError for H < 1 or a constant-cost model.
Decision continuation_variable(const CostModel& costs, long long happenings,
                               int rounds_completed, const RoundDeltas& deltas);

/// Triggered iff pkre_total > nu_star.
bool red_line_check(double pkre_total, const RedLineConfig& config);

/// Avoided iff 1 - pi > (lambda_dot z_dot - prior_pkre) / R - nu_star.
bool hyperanxiety_avoidance(double pi, const HyperanxiousEstimate& hyper,
                            double prior_pkre, const RedLineConfig& config, int round);

/// Improves iff dlambda_dbeta > lambda_prev / R.
bool community_precision_condition(double dlambda_dbeta, double lambda_prev, int round);

struct StoppingResult {
  int tau = 0;                  // rounds to run; 0 stops before round 1
  double value = 0.0;           // V(tau)
  std::vector<double> values;   // V(0..R_max)
};

/// Exhaustive search over stop-after-tau policies with
/// V(tau) = sum_{s <= tau} rho^(s-1) u_s; the earliest maximizer wins.
/// Requires 1 <= R_max <= 30, utilities.size() == R_max, rho in (0, 1].
StoppingResult optimal_stopping_brute(int R_max, std::span<const double> utilities,
                                      double rho);

/// Rounds executed by the per-round constant-cost gate: (first round whose
/// gate says Stop) - 1, or the number of rounds if it never stops.
int gate_stopping_round(const CostModel& costs, std::span<const RoundDeltas> deltas);

struct DetectionConfig {
  std::optional<double> pi;                 // constant detection
  std::optional<ImprovingDetection> curve;  // or improving with the round

  double at_round(int round) const;
};

struct EngineConfig {
  CostModel costs;
  LossWeights weights;
  DetectionConfig detection{0.0, std::nullopt};
  NarrativeQuality quality;
  RedLineConfig redline;
  double sigma_eps = 0.0;  // speculative noise in constant-cost mode

  void validate() const;
};

/// Everything a round consumes; persisted so the round can be replayed.
struct RoundInputs {
  int round = 0;
  std::string risk;
  int narrative_round = 0;
  long long happenings = 1;
  RiskEstimate underwriting;
  std::vector<RiskEstimate> observed;
  double mitigation_benefit = 0.0;  // M_r
  double option_value = 0.0;        // O_r
  bool sponsored = false;

  friend bool operator==(const RoundInputs&, const RoundInputs&) = default;
};

struct RoundRecord {
  RoundInputs inputs;
  std::size_t imagined_count = 0;
  double pkre_observed = 0.0;
  double pkre_imagined = 0.0;
  double pkre_total = 0.0;
  double pkre_variance = 0.0;
  double pi = 0.0;
  double sigma2_eps = 0.0;
  double cost_write = 0.0;
  double cost_spec = 0.0;
  double cost_obs = 0.0;
  double cost_total = 0.0;
  double statistical_loss = 0.0;
  RoundDeltas deltas;
  Decision decision = Decision::Continue;
  bool red_line = false;

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

class RoundLedger {
 public:
  std::span<const RoundRecord> records() const { return records_; }
  bool empty() const { return records_.empty(); }
  int last_round() const { return records_.empty() ? 0 : records_.back().inputs.round; }
  std::size_t imagined_count() const {
    return records_.empty() ? 0 : records_.back().imagined_count;
  }
  /// Throws DomainError unless the round index is last_round() + 1.
  void append(RoundRecord record);

  /// One JSON object per line.
  void write_ndjson(std::ostream& out) const;
  static RoundLedger read_ndjson(std::istream& in);

  static constexpr int kSchemaVersion = 1;

 private:
  std::vector<RoundRecord> records_;
};

struct UnderwritingResult {
  double lambda_hat = 0.0;
  double xi_hat = 0.0;
  double severity_variance = 0.0;
};

using UnderwritingCall = std::function<UnderwritingResult(const Narrative&, int round)>;

class SpeculationEngine {
 public:
  explicit SpeculationEngine(EngineConfig config);

  const EngineConfig& config() const { return config_; }
  const RoundLedger& ledger() const { return ledger_; }

  /// One full round: the narrative's risk moves from SDS to Imagined with
  /// the underwritten estimate, the PKRE is recomputed over the observed
  /// feed and every imagined risk so far, costs are debited and the
  /// continuation gate and red line are evaluated. A validation failure
  /// throws PreconditionError; any exception leaves the ledger unchanged.
  const RoundRecord& run_round(const Narrative& narrative, const UnderwritingCall& underwriting,
                               std::span<const RiskEstimate> observed_feed,
                               double mitigation_benefit, double option_value,
                               bool sponsored = false);

  /// The same step from recorded inputs (no narrative, no callback).
  const RoundRecord& apply_round(const RoundInputs& inputs);

 private:
  RoundRecord evaluate(const RoundInputs& inputs) const;

  EngineConfig config_;
  RoundLedger ledger_;
};

/// Component id assigned to the risk imagined in a round.
std::string imagined_component_id(const std::string& risk, int round);

struct ReplayResult {
  bool identical = true;
  int first_mismatch = 0;  // round index, 0 when identical
  RoundLedger replayed;
};

/// Re-evaluates every persisted round from its inputs and compares whole
/// records bit for bit.
ReplayResult replay(const EngineConfig& config, const RoundLedger& persisted);

}  // namespace darkspec
