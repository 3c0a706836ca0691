#include "darkspec/severity.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "darkspec/errors.hpp"

namespace darkspec {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

void validate_family(const SeverityFamily& family) {
  std::visit(
      overloaded{
          [](const Exponential& e) {
            if (!positive_finite(e.rate))
              throw ParameterError("exponential severity: rate must be > 0");
          },
          [](const LogNormal& l) {
            if (!std::isfinite(l.mu) || !positive_finite(l.sigma))
              throw ParameterError(
                  "lognormal severity: mu must be finite and sigma > 0");
          },
          [](const Pareto& p) {
            if (!positive_finite(p.scale))
              throw ParameterError("pareto severity: scale must be > 0");
            if (!std::isfinite(p.shape) || p.shape <= 1.0)
              throw ParameterError(
                  "pareto severity: shape must exceed 1 for a finite mean");
          },
          [](const Degenerate& d) {
            if (!positive_finite(d.value))
              throw ParameterError("degenerate severity: value must be > 0");
          },
      },
      family);
}

double family_mean(const SeverityFamily& family) {
  return std::visit(
      overloaded{
          [](const Exponential& e) { return 1.0 / e.rate; },
          [](const LogNormal& l) {
            return std::exp(l.mu + 0.5 * l.sigma * l.sigma);
          },
          [](const Pareto& p) { return p.shape * p.scale / (p.shape - 1.0); },
          [](const Degenerate& d) { return d.value; },
      },
      family);
}

double family_second_moment(const SeverityFamily& family) {
  return std::visit(
      overloaded{
          [](const Exponential& e) { return 2.0 / (e.rate * e.rate); },
          [](const LogNormal& l) {
            return std::exp(2.0 * l.mu + 2.0 * l.sigma * l.sigma);
          },
          [](const Pareto& p) -> double {
            if (p.shape <= 2.0)
              throw VarianceUndefinedError(
                  "pareto severity: variance undefined for shape <= 2");
            return p.shape * p.scale * p.scale / (p.shape - 2.0);
          },
          [](const Degenerate& d) { return d.value * d.value; },
      },
      family);
}

double sample_family(const SeverityFamily& family, Xoshiro256& gen) {
  return std::visit(
      overloaded{
          [&gen](const Exponential& e) {
            std::exponential_distribution<double> dist(e.rate);
            return dist(gen);
          },
          [&gen](const LogNormal& l) {
            std::lognormal_distribution<double> dist(l.mu, l.sigma);
            return dist(gen);
          },
          [&gen](const Pareto& p) {
            // 1 - U lies in (0, 1], so the draw is finite and >= scale.
            const double u = 1.0 - gen.uniform();
            return p.scale * std::pow(u, -1.0 / p.shape);
          },
          [](const Degenerate& d) { return d.value; },
      },
      family);
}

SeverityDistribution::SeverityDistribution()
    : SeverityDistribution(Degenerate{1.0}) {}

SeverityDistribution::SeverityDistribution(SeverityFamily family) {
  validate_family(family);
  terms_.push_back({1.0, family});
}

SeverityDistribution SeverityDistribution::exponential(double rate) {
  return SeverityDistribution(Exponential{rate});
}
SeverityDistribution SeverityDistribution::lognormal(double mu, double sigma) {
  return SeverityDistribution(LogNormal{mu, sigma});
}
SeverityDistribution SeverityDistribution::pareto(double scale, double shape) {
  return SeverityDistribution(Pareto{scale, shape});
}
SeverityDistribution SeverityDistribution::degenerate(double value) {
  return SeverityDistribution(Degenerate{value});
}

SeverityDistribution SeverityDistribution::mixture(
    std::span<const std::pair<double, SeverityDistribution>> parts) {
  double total = 0.0;
  for (const auto& [w, dist] : parts) {
    if (!std::isfinite(w) || w < 0.0)
      throw ParameterError("mixture severity: weights must be nonnegative");
    total += w;
  }
  if (!(total > 0.0))
    throw ParameterError("mixture severity: weights must have positive sum");

  SeverityDistribution out;
  out.terms_.clear();
  for (const auto& [w, dist] : parts) {
    if (w == 0.0) continue;
    for (const auto& term : dist.terms_)
      out.terms_.push_back({w / total * term.weight, term.family});
  }
  if (out.terms_.size() == 1) out.terms_.front().weight = 1.0;
  return out;
}

double SeverityDistribution::mean() const {
  double m = 0.0;
  for (const auto& t : terms_) m += t.weight * family_mean(t.family);
  return m;
}

double SeverityDistribution::second_moment() const {
  double m2 = 0.0;
  for (const auto& t : terms_) m2 += t.weight * family_second_moment(t.family);
  return m2;
}

double SeverityDistribution::variance() const {
  if (terms_.size() == 1) {
    const auto& f = terms_.front().family;
    // Closed forms avoid cancellation in E[Z^2] - E[Z]^2.
    if (const auto* e = std::get_if<Exponential>(&f)) return 1.0 / (e->rate * e->rate);
    if (std::holds_alternative<Degenerate>(f)) return 0.0;
    if (const auto* l = std::get_if<LogNormal>(&f)) {
      const double s2 = l->sigma * l->sigma;
      return std::expm1(s2) * std::exp(2.0 * l->mu + s2);
    }
    if (const auto* p = std::get_if<Pareto>(&f)) {
      if (p->shape <= 2.0)
        throw VarianceUndefinedError(
            "pareto severity: variance undefined for shape <= 2");
      const double a = p->shape;
      return p->scale * p->scale * a / ((a - 1.0) * (a - 1.0) * (a - 2.0));
    }
  }
  const double m = mean();
  const double v = second_moment() - m * m;
  return v > 0.0 ? v : 0.0;
}

double SeverityDistribution::sample(Xoshiro256& gen) const {
  if (terms_.size() == 1) return sample_family(terms_.front().family, gen);
  const double u = gen.uniform();
  double acc = 0.0;
  for (const auto& t : terms_) {
    acc += t.weight;
    if (u < acc) return sample_family(t.family, gen);
  }
  return sample_family(terms_.back().family, gen);
}

std::string SeverityDistribution::describe() const {
  std::ostringstream os;
  os.precision(17);
  auto one = [&os](const SeverityFamily& f) {
    std::visit(overloaded{
                   [&os](const Exponential& e) { os << "exponential(rate=" << e.rate << ")"; },
                   [&os](const LogNormal& l) {
                     os << "lognormal(mu=" << l.mu << ",sigma=" << l.sigma << ")";
                   },
                   [&os](const Pareto& p) {
                     os << "pareto(scale=" << p.scale << ",shape=" << p.shape << ")";
                   },
                   [&os](const Degenerate& d) { os << "degenerate(value=" << d.value << ")"; },
               },
               f);
  };
  if (terms_.size() == 1) {
    one(terms_.front().family);
    return os.str();
  }
  os << "mixture[";
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (i) os << ";";
    os << terms_[i].weight << "*";
    one(terms_[i].family);
  }
  os << "]";
  return os.str();
}

}  // namespace darkspec
