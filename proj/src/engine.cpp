#include "darkspec/engine.hpp"

#include <algorithm>
#include <cmath>

#include "darkspec/errors.hpp"
#include "darkspec/narrative.hpp"
#include "darkspec/numeric.hpp"

namespace darkspec {

namespace {

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace

void CostModel::validate() const {
  if (!(std::isfinite(c_write) && c_write > 0.0))
    throw ParameterError("cost.c_write must be > 0");
  if (!finite_nonneg(c_obs)) throw ParameterError("cost.c_obs must be >= 0");
  if (!variable && !(std::isfinite(c_spec) && c_spec > 0.0))
    throw ParameterError("cost.c_spec must be > 0");
}

double CostModel::speculation_cost(std::size_t happenings) const {
  return variable ? std::log1p(static_cast<double>(happenings)) : c_spec;
}

void LossWeights::validate() const {
  if (!(std::isfinite(D1) && D1 > 0.0 && std::isfinite(D2) && D2 > 0.0))
    throw ParameterError("weights.D1 and weights.D2 must be > 0");
  if (!std::isfinite(phi)) throw ParameterError("weights.phi must be finite");
}

double LossWeights::psi(double x) const {
  return shape == PsiShape::Quadratic ? x * x : std::fabs(x);
}

void NarrativeQuality::validate() const {
  if (!(sigma2_min > 0.0 && sigma2_max > sigma2_min && std::isfinite(sigma2_max)))
    throw ParameterError("quality needs sigma2_max > sigma2_min > 0");
  if (!(eta > 0.0 && std::isfinite(eta))) throw ParameterError("quality.eta must be > 0");
}

void RedLineConfig::validate() const {
  if (!(std::isfinite(nu_star) && nu_star > 0.0))
    throw ParameterError("redline.nu_star must be finite and > 0");
}

std::string_view to_string(Decision d) { return d == Decision::Continue ? "continue" : "stop"; }

double statistical_loss(const LossWeights& w, std::span<const MomentGap> gaps) {
  ExactSum s;
  for (const auto& g : gaps) {
    s.add(w.D1 * w.psi(w.phi * g.first));
    s.add(w.D2 * w.psi(w.phi * g.second));
  }
  return s.value();
}

MomentGap component_gap(double pi, double lambda_hat, double xi_hat, double severity_variance,
                        double sigma2_eps) {
  return {(pi - 1.0) * lambda_hat * xi_hat,
          (pi - 1.0) * lambda_hat * (severity_variance + xi_hat * xi_hat) -
              lambda_hat * sigma2_eps};
}

Decision continuation_constant(const CostModel& costs, const RoundDeltas& d) {
  if (costs.variable) throw DomainError("continuation_constant: cost model is variable");
  return costs.c_write + costs.c_spec <= d.total() ? Decision::Continue : Decision::Stop;
}

double narrative_error_variance(long long H, const NarrativeQuality& q) {
  if (H < 1) throw DomainError("narrative_error_variance: H must be >= 1");
  const double raw = q.sigma2_max - std::exp(q.eta * static_cast<double>(H - 1)) * q.sigma2_min;
  return std::clamp(raw, 0.0, q.sigma2_max - q.sigma2_min);
}

Decision continuation_variable(const CostModel& costs, long long H, int R,
                               const RoundDeltas& d) {
  if (!costs.variable) throw DomainError("continuation_variable: cost model is constant");
  if (H < 1) throw DomainError("continuation_variable: H must be >= 1");
  const double lhs = costs.c_write + std::log1p(static_cast<double>(H)) +
                     (std::log(R + 2.0) - std::log(R + 1.0));
  return lhs <= d.total() ? Decision::Continue : Decision::Stop;
}

bool red_line_check(double pkre_total, const RedLineConfig& config) {
  config.validate();
  return pkre_total > config.nu_star;
}

bool hyperanxiety_avoidance(double pi, const HyperanxiousEstimate& h, double prior_pkre,
                            const RedLineConfig& config, int R) {
  if (R < 1) throw DomainError("hyperanxiety_avoidance: round must be >= 1");
  return 1.0 - pi > (h.lambda_dot * h.z_dot - prior_pkre) / R - config.nu_star;
}

bool community_precision_condition(double dlambda_dbeta, double lambda_prev, int R) {
  if (R < 1) throw DomainError("community_precision_condition: round must be >= 1");
  return dlambda_dbeta > lambda_prev / R;
}

StoppingResult optimal_stopping_brute(int R_max, std::span<const double> u, double rho) {
  if (R_max < 1 || R_max > 30) throw DomainError("optimal_stopping_brute: R_max must be in 1..30");
  if (u.size() != static_cast<std::size_t>(R_max))
    throw DomainError("optimal_stopping_brute: need one utility per round");
  if (!(rho > 0.0 && rho <= 1.0)) throw DomainError("optimal_stopping_brute: rho must be in (0, 1]");
  StoppingResult r;
  r.values.assign(static_cast<std::size_t>(R_max) + 1, 0.0);
  // Every stopping round is scored from scratch rather than by a running sum.
  for (int tau = 1; tau <= R_max; ++tau) {
    ExactSum v;
    double disc = 1.0;
    for (int s = 1; s <= tau; ++s) {
      if (!std::isfinite(u[s - 1])) throw DomainError("optimal_stopping_brute: utility not finite");
      v.add(disc * u[s - 1]);
      disc *= rho;
    }
    r.values[tau] = v.value();
  }
  for (int tau = 0; tau <= R_max; ++tau)
    if (r.values[tau] > r.values[r.tau]) r.tau = tau;
  r.value = r.values[r.tau];
  return r;
}

int gate_stopping_round(const CostModel& costs, std::span<const RoundDeltas> deltas) {
  for (std::size_t i = 0; i < deltas.size(); ++i)
    if (continuation_constant(costs, deltas[i]) == Decision::Stop) return static_cast<int>(i);
  return static_cast<int>(deltas.size());
}

double DetectionConfig::at_round(int round) const {
  if (curve) return improvement_curve(round, *curve);
  return pi.value_or(0.0);
}

void EngineConfig::validate() const {
  costs.validate();
  weights.validate();
  redline.validate();
  if (costs.variable) quality.validate();
  if (detection.curve) {
    detection.curve->validate();
  } else if (detection.pi && !(*detection.pi >= 0.0 && *detection.pi <= 1.0)) {
    throw ParameterError("detection.pi must lie in [0, 1]");
  }
  if (!finite_nonneg(sigma_eps)) throw ParameterError("measurement.sigma_eps must be >= 0");
}

void RoundLedger::append(RoundRecord record) {
  if (record.inputs.round != last_round() + 1)
    throw DomainError("ledger: round " + std::to_string(record.inputs.round) +
                      " does not follow round " + std::to_string(last_round()));
  records_.push_back(std::move(record));
}

std::string imagined_component_id(const std::string& risk, int round) {
  return risk + "#" + std::to_string(round);
}

SpeculationEngine::SpeculationEngine(EngineConfig config) : config_(std::move(config)) {
  config_.validate();
}

RoundRecord SpeculationEngine::evaluate(const RoundInputs& in) const {
  if (in.round != ledger_.last_round() + 1)
    throw DomainError("round " + std::to_string(in.round) + " does not follow round " +
                      std::to_string(ledger_.last_round()));
  if (in.happenings < 1) throw DomainError("round needs at least one happening");

  RoundRecord rec;
  rec.inputs = in;
  const auto prior = ledger_.records();
  rec.imagined_count = ledger_.imagined_count() + 1;

  std::vector<RiskEstimate> imagined;
  std::vector<long long> sizes;
  for (const auto& p : prior) {
    imagined.push_back(p.inputs.underwriting);
    sizes.push_back(p.inputs.happenings);
  }
  imagined.push_back(in.underwriting);
  sizes.push_back(in.happenings);

  const auto pkre = compute_pkre(in.observed, imagined, in.round);
  rec.pkre_observed = pkre.observed_total;
  rec.pkre_imagined = pkre.imagined_total;
  rec.pkre_total = pkre.total;
  rec.pkre_variance = pkre.variance;

  rec.pi = config_.detection.at_round(in.round);
  rec.sigma2_eps = config_.costs.variable ? narrative_error_variance(in.happenings, config_.quality)
                                          : config_.sigma_eps * config_.sigma_eps;
  std::vector<MomentGap> gaps;
  for (std::size_t k = 0; k < imagined.size(); ++k) {
    const double s2e = config_.costs.variable
                           ? narrative_error_variance(sizes[k], config_.quality)
                           : config_.sigma_eps * config_.sigma_eps;
    gaps.push_back(component_gap(rec.pi, imagined[k].lambda_hat, imagined[k].xi_hat.value_or(0.0),
                                 imagined[k].severity_variance_hat, s2e));
  }
  rec.statistical_loss = statistical_loss(config_.weights, gaps);

  const RoundRecord* last = prior.empty() ? nullptr : &prior.back();
  rec.deltas.dL2 = rec.statistical_loss - (last ? last->statistical_loss : 0.0);
  rec.deltas.dM = in.mitigation_benefit - (last ? last->inputs.mitigation_benefit : 0.0);
  rec.deltas.dO = in.option_value - (last ? last->inputs.option_value : 0.0);

  rec.cost_write = config_.costs.c_write;
  rec.cost_spec = config_.costs.speculation_cost(static_cast<std::size_t>(in.happenings));
  rec.cost_obs = in.sponsored ? config_.costs.c_obs : 0.0;
  rec.cost_total = rec.cost_write + rec.cost_spec + rec.cost_obs;

  rec.decision = config_.costs.variable
                     ? continuation_variable(config_.costs, in.happenings, in.round, rec.deltas)
                     : continuation_constant(config_.costs, rec.deltas);
  rec.red_line = red_line_check(rec.pkre_total, config_.redline);
  return rec;
}

const RoundRecord& SpeculationEngine::apply_round(const RoundInputs& inputs) {
  RoundRecord rec = evaluate(inputs);
  ledger_.append(std::move(rec));
  return ledger_.records().back();
}

const RoundRecord& SpeculationEngine::run_round(const Narrative& narrative,
                                                const UnderwritingCall& underwriting,
                                                std::span<const RiskEstimate> observed_feed,
                                                double mitigation_benefit, double option_value,
                                                bool sponsored) {
  const auto report = validate(narrative);
  if (!report.ok())
    throw PreconditionError("run_round: narrative does not validate (" +
                            report.violations.front().label + ": " +
                            report.violations.front().message + ")");
  const int round = ledger_.last_round() + 1;
  const UnderwritingResult u = underwriting(narrative, round);

  RoundInputs in;
  in.round = round;
  in.risk = narrative.risk;
  in.narrative_round = narrative.round;
  in.happenings = static_cast<long long>(narrative.happening_count());
  in.underwriting = underwriting_estimate(imagined_component_id(narrative.risk, round), round,
                                          u.lambda_hat, u.xi_hat, u.severity_variance);
  in.observed.assign(observed_feed.begin(), observed_feed.end());
  in.mitigation_benefit = mitigation_benefit;
  in.option_value = option_value;
  in.sponsored = sponsored;
  return apply_round(in);
}

ReplayResult replay(const EngineConfig& config, const RoundLedger& persisted) {
  ReplayResult out;
  SpeculationEngine engine(config);
  for (const auto& rec : persisted.records()) {
    const RoundRecord& again = engine.apply_round(rec.inputs);
    if (out.identical && !(again == rec)) {
      out.identical = false;
      out.first_mismatch = rec.inputs.round;
    }
  }
  out.replayed = engine.ledger();
  return out;
}

}  // namespace darkspec
