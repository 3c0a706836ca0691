#include "darkspec/estimation.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include "darkspec/csv.hpp"
#include "darkspec/errors.hpp"
#include "darkspec/levy.hpp"
#include "darkspec/numeric.hpp"

namespace darkspec {

FrequencyEstimate estimate_frequency(long long event_count, double window) {
  if (!(window > 0.0)) throw DomainError("estimate_frequency: window must be > 0");
  if (event_count < 0)
    throw DomainError("estimate_frequency: negative event count");
  const double rate = static_cast<double>(event_count) / window;
  return {rate, rate / window};
}

SeverityEstimate estimate_severity(std::span<const double> z) {
  if (z.empty()) throw NoEventsError("estimate_severity: no events in sample");
  ExactSum sum;
  for (double x : z) {
    if (!(x >= 0.0)) throw DomainError("estimate_severity: negative jump size");
    sum.add(x);
  }
  const double n = static_cast<double>(z.size());
  const double mean = sum.value() / n;
  double s2 = 0.0;
  if (z.size() > 1) {
    ExactSum ss;
    for (double x : z) ss.add((x - mean) * (x - mean));
    s2 = ss.value() / (n - 1.0);
  }
  return {mean, s2 / n, s2};
}

RiskEstimate observed_estimate(std::string component_id,
                               std::span<const double> jump_sizes,
                               double window) {
  const auto freq =
      estimate_frequency(static_cast<long long>(jump_sizes.size()), window);
  RiskEstimate e;
  e.component_id = std::move(component_id);
  e.lambda_hat = freq.rate;
  e.window = window;
  e.event_count = static_cast<long long>(jump_sizes.size());
  e.source = EstimateSource::ObservedHistory;
  if (!jump_sizes.empty()) {
    const auto sev = estimate_severity(jump_sizes);
    e.xi_hat = sev.mean;
    e.severity_variance_hat = sev.sample_variance;
    e.jump_total = exact_sum(jump_sizes);
  } else {
    e.jump_total = 0.0;
  }
  return e;
}

RiskEstimate observed_estimate(const PathSample& path) {
  return observed_estimate(path.component_id, path.jump_sizes,
                           path.horizon - path.commencement);
}

RiskEstimate underwriting_estimate(std::string component_id, int round,
                                   double lambda_hat, double xi_hat,
                                   double severity_variance, double window) {
  if (!(lambda_hat >= 0.0) || !std::isfinite(lambda_hat))
    throw ParameterError("underwriting estimate: lambda must be >= 0");
  if (!(xi_hat >= 0.0) || !std::isfinite(xi_hat))
    throw ParameterError("underwriting estimate: xi must be >= 0");
  if (!(severity_variance >= 0.0))
    throw ParameterError("underwriting estimate: severity variance must be >= 0");
  if (!(window > 0.0)) throw DomainError("underwriting estimate: window must be > 0");
  RiskEstimate e;
  e.component_id = std::move(component_id);
  e.lambda_hat = lambda_hat;
  e.xi_hat = xi_hat;
  e.severity_variance_hat = severity_variance;
  e.window = window;
  e.source = EstimateSource::UnderwritingRound;
  e.round = round;
  return e;
}

double expected_jump_loss(const RiskEstimate& e) {
  if (e.jump_total) return *e.jump_total / e.window;
  if (!e.xi_hat) return 0.0;
  return e.lambda_hat * *e.xi_hat;
}

double jump_loss_variance(double lambda_hat, double xi_hat,
                          double severity_variance, double window,
                          VarianceForm form) {
  if (!(window > 0.0)) throw DomainError("jump_loss_variance: window must be > 0");
  if (form == VarianceForm::AsPrinted)
    return (lambda_hat * xi_hat + lambda_hat * severity_variance) / window;
  return lambda_hat * (xi_hat * xi_hat + severity_variance) / window;
}

double jump_loss_variance(const RiskEstimate& e, VarianceForm form) {
  if (!e.xi_hat) return 0.0;
  return jump_loss_variance(e.lambda_hat, *e.xi_hat, e.severity_variance_hat,
                            e.window, form);
}

namespace {

void total_up(PkreResult& r) {
  ExactSum obs, img, var;
  for (const auto& c : r.contributions) {
    (c.imagined ? img : obs).add(c.loss_rate);
    var.add(c.variance);
  }
  r.observed_total = obs.value();
  r.imagined_total = img.value();
  ExactSum all;
  for (const auto& c : r.contributions) all.add(c.loss_rate);
  r.total = all.value();
  r.variance = var.value();
}

void add_list(PkreResult& r, std::span<const RiskEstimate> list, bool imagined,
              VarianceForm form) {
  std::set<std::string> seen;
  for (const auto& e : list) {
    if (!seen.insert(e.component_id).second)
      throw DomainError("compute_pkre: duplicate component id '" +
                        e.component_id + "'");
    r.contributions.push_back(
        {e.component_id, imagined, expected_jump_loss(e), jump_loss_variance(e, form)});
  }
}

}  // namespace

PkreResult compute_pkre(std::span<const RiskEstimate> observed,
                        std::span<const RiskEstimate> imagined, int round,
                        VarianceForm form) {
  PkreResult r;
  r.round = round;
  add_list(r, observed, false, form);
  add_list(r, imagined, true, form);
  total_up(r);
  return r;
}

PkreResult combine(const PkreResult& a, const PkreResult& b) {
  PkreResult r;
  r.round = std::max(a.round, b.round);
  for (const auto& c : a.contributions)
    if (!c.imagined) r.contributions.push_back(c);
  for (const auto& c : b.contributions)
    if (!c.imagined) r.contributions.push_back(c);
  for (const auto& c : a.contributions)
    if (c.imagined) r.contributions.push_back(c);
  for (const auto& c : b.contributions)
    if (c.imagined) r.contributions.push_back(c);
  total_up(r);
  return r;
}

void write_estimates_csv(std::ostream& out,
                         std::span<const RiskEstimate> estimates) {
  out << "component_id,source,round,lambda_hat,xi_hat,severity_var,window,n_events\n";
  for (const auto& e : estimates) {
    write_csv_row(out, {e.component_id,
                        e.source == EstimateSource::ObservedHistory ? "observed"
                                                                    : "underwriting",
                        std::to_string(e.round), format_double(e.lambda_hat),
                        e.xi_hat ? format_double(*e.xi_hat) : std::string(),
                        format_double(e.severity_variance_hat),
                        format_double(e.window), std::to_string(e.event_count)});
  }
}

std::vector<RiskEstimate> read_estimates_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  const auto c_id = t.column("component_id");
  const auto c_src = t.column("source");
  const auto c_round = t.column("round");
  const auto c_lambda = t.column("lambda_hat");
  const auto c_xi = t.column("xi_hat");
  const auto c_var = t.column("severity_var");
  const auto c_window = t.column("window");
  const auto c_n = t.column("n_events");
  std::vector<RiskEstimate> out;
  for (const auto& row : t.rows) {
    RiskEstimate e;
    e.component_id = row[c_id];
    if (row[c_src] == "observed")
      e.source = EstimateSource::ObservedHistory;
    else if (row[c_src] == "underwriting")
      e.source = EstimateSource::UnderwritingRound;
    else
      throw std::invalid_argument("estimates csv: unknown source '" + row[c_src] + "'");
    e.round = static_cast<int>(parse_int(row[c_round]));
    e.lambda_hat = parse_double(row[c_lambda]);
    if (!row[c_xi].empty()) e.xi_hat = parse_double(row[c_xi]);
    e.severity_variance_hat = parse_double(row[c_var]);
    e.window = parse_double(row[c_window]);
    e.event_count = parse_int(row[c_n]);
    if (!(e.window > 0.0))
      throw std::invalid_argument("estimates csv: window must be > 0");
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace darkspec
