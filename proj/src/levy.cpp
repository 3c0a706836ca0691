#include "darkspec/levy.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>

#include "darkspec/csv.hpp"
#include "darkspec/errors.hpp"
#include "darkspec/rng.hpp"

namespace darkspec {

std::string_view to_string(RiskCategory c) {
  switch (c) {
    case RiskCategory::Observed: return "observed";
    case RiskCategory::Imagined: return "imagined";
    case RiskCategory::SDS: return "sds";
  }
  return "observed";
}

RiskCategory parse_risk_category(std::string_view text) {
  if (text == "observed") return RiskCategory::Observed;
  if (text == "imagined") return RiskCategory::Imagined;
  if (text == "sds") return RiskCategory::SDS;
  throw ParameterError("unknown risk category '" + std::string(text) + "'");
}

namespace {

int category_rank(RiskCategory c) {
  switch (c) {
    case RiskCategory::SDS: return 0;
    case RiskCategory::Imagined: return 1;
    case RiskCategory::Observed: return 2;
  }
  return 0;
}

}  // namespace

LevyComponent::LevyComponent(LevyParams params) : p_(std::move(params)) {
  if (!std::isfinite(p_.alpha))
    throw ParameterError("levy component '" + p_.id + "': drift must be finite");
  if (!std::isfinite(p_.sigma) || p_.sigma < 0.0)
    throw ParameterError("levy component '" + p_.id + "': sigma must be >= 0");
  if (!std::isfinite(p_.lambda) || p_.lambda < 0.0)
    throw ParameterError("levy component '" + p_.id + "': lambda must be >= 0");
  if (!std::isfinite(p_.commencement) || p_.commencement < 0.0)
    throw ParameterError("levy component '" + p_.id +
                         "': commencement must be >= 0");
}

LevyComponent LevyComponent::reclassified(RiskCategory next) const {
  if (category_rank(next) < category_rank(p_.category))
    throw DomainError("levy component '" + p_.id + "': cannot move from " +
                      std::string(to_string(p_.category)) + " back to " +
                      std::string(to_string(next)));
  LevyParams q = p_;
  q.category = next;
  return LevyComponent(std::move(q));
}

bool LevyComponent::same_law(const LevyComponent& o) const {
  return p_.alpha == o.p_.alpha && p_.sigma == o.p_.sigma &&
         p_.lambda == o.p_.lambda && p_.severity == o.p_.severity &&
         p_.category == o.p_.category && p_.commencement == o.p_.commencement;
}

double PathSample::jump_total() const {
  double s = 0.0;
  for (double z : jump_sizes) s += z;
  return s;
}

double PathSample::reconstruct_terminal() const {
  return alpha * (horizon - commencement) + sigma * brownian_terminal -
         jump_total();
}

PathSample sample_path(const LevyComponent& c, double horizon,
                       std::uint64_t seed) {
  if (!std::isfinite(horizon) || horizon < c.commencement())
    throw DomainError("sample_path: horizon precedes commencement of '" +
                      c.id() + "'");
  PathSample path;
  path.component_id = c.id();
  path.horizon = horizon;
  path.commencement = c.commencement();
  path.alpha = c.alpha();
  path.sigma = c.sigma();
  path.seed = seed;

  const double dt = horizon - c.commencement();
  Xoshiro256 gen(seed);
  const double expected_jumps = c.lambda() * dt;
  std::size_t n = 0;
  if (expected_jumps > 0.0) {
    std::poisson_distribution<long long> count(expected_jumps);
    n = static_cast<std::size_t>(count(gen));
  }
  path.jump_times.resize(n);
  for (auto& t : path.jump_times)
    t = c.commencement() + dt * (1.0 - gen.uniform());
  std::sort(path.jump_times.begin(), path.jump_times.end());
  path.jump_sizes.resize(n);
  for (auto& z : path.jump_sizes) z = c.severity().sample(gen);
  if (dt > 0.0) {
    std::normal_distribution<double> w(0.0, std::sqrt(dt));
    path.brownian_terminal = w(gen);
  }
  path.terminal_value = path.reconstruct_terminal();
  return path;
}

std::vector<PathSample> simulate_paths(const LevyComponent& component,
                                       double horizon, std::uint64_t root_seed,
                                       std::uint64_t component_index,
                                       std::size_t count) {
  std::vector<PathSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(
        sample_path(component, horizon, derive_seed(root_seed, component_index, i)));
  return out;
}

LevyComponent aggregate(std::span<const LevyComponent> components) {
  if (components.empty()) throw DomainError("aggregate: empty component list");
  if (components.size() == 1) return components.front();

  const double t0 = components.front().commencement();
  LevyParams q;
  q.commencement = t0;
  double drift = 0.0;
  double var = 0.0;
  double rate = 0.0;
  bool all_observed = true;
  std::vector<std::pair<double, SeverityDistribution>> parts;
  for (const auto& c : components) {
    if (c.commencement() != t0)
      throw DomainError(
          "aggregate: components have different commencement times; simulate "
          "them separately");
    if (!q.id.empty()) q.id += "+";
    q.id += c.id();
    drift += c.alpha();
    var += c.sigma() * c.sigma();
    rate += c.lambda();
    all_observed = all_observed && c.category() == RiskCategory::Observed;
    parts.emplace_back(c.lambda(), c.severity());
  }
  q.alpha = drift;
  q.sigma = std::sqrt(var);
  q.lambda = rate;
  q.category = all_observed ? RiskCategory::Observed : RiskCategory::Imagined;
  q.severity = rate > 0.0 ? SeverityDistribution::mixture(parts)
                          : components.front().severity();
  return LevyComponent(std::move(q));
}

double theoretical_mean(const LevyComponent& c, double horizon) {
  if (!std::isfinite(horizon) || horizon < c.commencement())
    throw DomainError("theoretical_mean: horizon precedes commencement of '" +
                      c.id() + "'");
  const double dt = horizon - c.commencement();
  if (c.lambda() == 0.0) return c.alpha() * dt;
  return c.alpha() * dt - c.lambda() * dt * c.severity().mean();
}

MomentSummary theoretical_moments(const LevyComponent& c, double horizon) {
  if (!std::isfinite(horizon) || horizon < c.commencement())
    throw DomainError("theoretical_moments: horizon precedes commencement of '" +
                      c.id() + "'");
  const double dt = horizon - c.commencement();
  MomentSummary m;
  m.horizon = horizon;
  if (c.lambda() == 0.0) {
    m.mean = c.alpha() * dt;
    m.variance = c.sigma() * c.sigma() * dt;
    return m;
  }
  const double xi = c.severity().mean();
  m.mean = c.alpha() * dt - c.lambda() * dt * xi;
  // E[Z^2] = xi^2 + var(Z); compound Poisson variance is lambda dt E[Z^2].
  m.variance = c.sigma() * c.sigma() * dt +
               c.lambda() * dt * (xi * xi + c.severity().variance());
  return m;
}

void write_paths_csv(std::ostream& out, std::span<const PathSample> paths,
                     bool with_header) {
  if (with_header)
    out << "component_id,path_index,jump_time,jump_size,terminal_value\n";
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& p = paths[i];
    const std::string id = csv_escape(p.component_id);
    for (std::size_t j = 0; j < p.jump_times.size(); ++j)
      out << id << ',' << i << ',' << format_double(p.jump_times[j]) << ','
          << format_double(p.jump_sizes[j]) << ",\n";
    out << id << ',' << i << ',' << format_double(p.horizon) << ",0,"
        << format_double(p.terminal_value) << '\n';
  }
}

std::vector<PathSample> read_paths_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  const auto c_id = t.column("component_id");
  const auto c_idx = t.column("path_index");
  const auto c_time = t.column("jump_time");
  const auto c_size = t.column("jump_size");
  const auto c_term = t.column("terminal_value");

  std::vector<PathSample> out;
  std::map<std::pair<std::string, long long>, std::size_t> open;
  for (const auto& row : t.rows) {
    const auto key = std::make_pair(row[c_id], parse_int(row[c_idx]));
    auto it = open.find(key);
    if (it == open.end()) {
      it = open.emplace(key, out.size()).first;
      out.emplace_back();
      out.back().component_id = row[c_id];
    }
    PathSample& p = out[it->second];
    if (row[c_term].empty()) {
      p.jump_times.push_back(parse_double(row[c_time]));
      p.jump_sizes.push_back(parse_double(row[c_size]));
    } else {
      p.horizon = parse_double(row[c_time]);
      p.terminal_value = parse_double(row[c_term]);
    }
  }
  return out;
}

}  // namespace darkspec
