#include "darkspec/thinning_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "darkspec/csv.hpp"
#include "darkspec/errors.hpp"
#include "darkspec/numeric.hpp"
#include "darkspec/rng.hpp"

namespace darkspec {

namespace {

struct Accumulators {
  RunningStats diff;    // nospec - pkre
  RunningStats pkre;
  RunningStats nospec;
  long long truncations = 0;
  ExactSum noise;
  long long noise_draws = 0;
};

struct Draw {
  double pkre;
  double nospec;
};

Draw replicate(const ThinningComponent& c, double horizon, ThinningMode mode,
               Xoshiro256& gen, std::vector<double>& z, Accumulators& acc) {
  z.clear();
  const double m = c.lambda * horizon;
  if (m > 0.0) {
    std::poisson_distribution<long long> count(m);
    const long long n = count(gen);
    for (long long i = 0; i < n; ++i) z.push_back(c.severity.sample(gen));
  }
  double nospec = 0.0;
  if (mode == ThinningMode::Component) {
    if (gen.uniform() < c.pi)
      for (double x : z) nospec += x;
  } else {
    for (double x : z)
      if (gen.uniform() < c.pi) nospec += x;
  }
  double pkre = 0.0;
  if (c.sigma_eps > 0.0) {
    std::normal_distribution<double> noise(0.0, c.sigma_eps);
    for (double x : z) {
      double e = noise(gen);
      while (x + e < 0.0) {
        ++acc.truncations;
        e = noise(gen);
      }
      acc.noise.add(e);
      ++acc.noise_draws;
      pkre += x + e;
    }
  } else {
    for (double x : z) pkre += x;
  }
  return {pkre / horizon, nospec / horizon};
}

ThinningRow summarize(const std::string& id, double pi, double bias_formula,
                      double var_formula, const Accumulators& a, double horizon) {
  ThinningRow r;
  r.id = id;
  r.pi = pi;
  r.bias_formula = bias_formula;
  r.bias_mc = a.diff.mean();
  r.bias_se = a.diff.standard_error();
  r.var_gap_formula = var_formula;
  r.pkre_variance_mc = a.pkre.variance() * horizon;
  r.nospec_variance_mc = a.nospec.variance() * horizon;
  r.pkre_variance_se = a.pkre.variance_standard_error() * horizon;
  r.var_gap_mc = r.nospec_variance_mc - r.pkre_variance_mc;
  r.truncations = a.truncations;
  r.mean_noise =
      a.noise_draws ? a.noise.value() / static_cast<double>(a.noise_draws) : 0.0;
  return r;
}

}  // namespace

ThinningStudyResult run_thinning_study(const ThinningStudyConfig& cfg) {
  if (cfg.components.empty()) throw DomainError("thinning study: no components");
  if (cfg.replications < 2) throw DomainError("thinning study: need >= 2 replications");
  if (!(cfg.horizon > 0.0)) throw DomainError("thinning study: horizon must be > 0");
  for (const auto& c : cfg.components) {
    if (!(c.pi >= 0.0 && c.pi <= 1.0))
      throw ParameterError("thinning study: pi of '" + c.id + "' outside [0, 1]");
    if (!(c.lambda >= 0.0)) throw ParameterError("thinning study: lambda must be >= 0");
    if (!(c.sigma_eps >= 0.0))
      throw ParameterError("thinning study: sigma_eps must be >= 0");
  }

  const std::size_t K = cfg.components.size();
  std::vector<Accumulators> acc(K);
  Accumulators total;
  std::vector<double> z;
  for (std::size_t i = 0; i < cfg.replications; ++i) {
    double sum_pkre = 0.0;
    double sum_nospec = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      Xoshiro256 gen(derive_seed(cfg.seed, k, i));
      const Draw d = replicate(cfg.components[k], cfg.horizon, cfg.mode, gen, z, acc[k]);
      acc[k].pkre.push(d.pkre);
      acc[k].nospec.push(d.nospec);
      acc[k].diff.push(d.nospec - d.pkre);
      sum_pkre += d.pkre;
      sum_nospec += d.nospec;
    }
    total.pkre.push(sum_pkre);
    total.nospec.push(sum_nospec);
    total.diff.push(sum_nospec - sum_pkre);
  }

  ThinningStudyResult out;
  ExactSum bias_sum, var_sum;
  for (std::size_t k = 0; k < K; ++k) {
    const auto& c = cfg.components[k];
    const double xi = c.severity.mean();
    const double ez2 = c.severity.second_moment();
    const double bias = (c.pi - 1.0) * c.lambda * xi;
    const double var =
        (c.pi - 1.0) * c.lambda * ez2 - c.lambda * c.sigma_eps * c.sigma_eps;
    bias_sum.add(bias);
    var_sum.add(var);
    out.components.push_back(summarize(c.id, c.pi, bias, var, acc[k], cfg.horizon));
    total.truncations += acc[k].truncations;
  }
  out.total = summarize("total", 1.0, bias_sum.value(), var_sum.value(), total,
                        cfg.horizon);
  return out;
}

void write_gap_report_csv(std::ostream& out, const ThinningStudyResult& result) {
  out << "component_id,pi,bias_formula,bias_mc,var_gap_formula,var_gap_mc,"
         "abs_error,rel_error\n";
  auto row = [&](const ThinningRow& r) {
    const double eb = std::fabs(r.bias_mc - r.bias_formula);
    const double ev = std::fabs(r.var_gap_mc - r.var_gap_formula);
    const double rb = r.bias_formula != 0.0 ? eb / std::fabs(r.bias_formula) : eb;
    const double rv = r.var_gap_formula != 0.0 ? ev / std::fabs(r.var_gap_formula) : ev;
    write_csv_row(out, {r.id, format_double(r.pi), format_double(r.bias_formula),
                        format_double(r.bias_mc), format_double(r.var_gap_formula),
                        format_double(r.var_gap_mc), format_double(std::max(eb, ev)),
                        format_double(std::max(rb, rv))});
  };
  for (const auto& r : result.components) row(r);
  row(result.total);
}

}  // namespace darkspec
