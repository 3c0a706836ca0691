#include "darkspec/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "darkspec/baseline_gap.hpp"
#include "darkspec/csv.hpp"
#include "darkspec/engine.hpp"
#include "darkspec/errors.hpp"
#include "darkspec/estimation.hpp"
#include "darkspec/kv_config.hpp"
#include "darkspec/levy.hpp"
#include "darkspec/narrative.hpp"
#include "darkspec/numeric.hpp"
#include "darkspec/thinning_oracle.hpp"

namespace darkspec::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config_path;
  std::uint64_t seed = 1;
  bool seed_set = false;
  long long reps = 0;
  std::string out_dir = ".";
  double tolerance = 0.05;
  bool tolerance_set = false;
  bool plot = false;
  std::vector<std::string> overrides;
  std::vector<std::string> files;
  std::string replay;
};

struct Context {
  Options opt;
  KvConfig cfg;
  std::ostream& out;
  std::ostream& err;

  std::uint64_t seed() const {
    return opt.seed_set ? opt.seed : static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  }
  std::size_t reps(long long fallback) const {
    const long long r = opt.reps > 0 ? opt.reps : cfg.get_int("reps", fallback);
    if (r < 1) throw ConfigError("replication count must be >= 1");
    return static_cast<std::size_t>(r);
  }
  double tolerance() const {
    return opt.tolerance_set ? opt.tolerance : cfg.get_double("tolerance", 0.05);
  }
  fs::path out_path(const std::string& name) const { return fs::path(opt.out_dir) / name; }
};

struct ReportRow {
  std::string metric;
  double formula = 0.0;
  double oracle = 0.0;
  double tolerance = 0.0;  // absolute

  double abs_error() const { return std::fabs(oracle - formula); }
  double rel_error() const {
    return formula != 0.0 ? abs_error() / std::fabs(formula) : abs_error();
  }
  bool pass() const { return abs_error() <= tolerance; }
};

struct PlotPoint {
  std::string series;
  double x;
  double y;
};

std::ofstream open_out(const Context& ctx, const std::string& name) {
  fs::create_directories(ctx.opt.out_dir);
  std::ofstream f(ctx.out_path(name), std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + ctx.out_path(name).string() + "'");
  return f;
}

bool write_report(const Context& ctx, const std::vector<ReportRow>& rows) {
  auto f = open_out(ctx, "report.csv");
  f << "metric,formula_value,oracle_value,abs_error,rel_error,tolerance,pass,seed\n";
  bool all = true;
  for (const auto& r : rows) {
    write_csv_row(f, {r.metric, format_double(r.formula), format_double(r.oracle),
                      format_double(r.abs_error()), format_double(r.rel_error()),
                      format_double(r.tolerance), r.pass() ? "pass" : "fail",
                      std::to_string(ctx.seed())});
    all = all && r.pass();
    ctx.out << (r.pass() ? "  pass  " : "  FAIL  ") << r.metric << ": formula "
            << format_double(r.formula) << ", oracle " << format_double(r.oracle)
            << ", |err| " << format_double(r.abs_error()) << " (tol "
            << format_double(r.tolerance) << ")\n";
  }
  return all;
}

void write_plot(const Context& ctx, const std::vector<PlotPoint>& pts) {
  if (!ctx.opt.plot) return;
  auto f = open_out(ctx, "plot.csv");
  f << "series,x,y\n";
  for (const auto& p : pts) write_csv_row(f, {p.series, format_double(p.x), format_double(p.y)});
}

SeverityDistribution severity_from(const KvConfig& c, const std::string& p) {
  const std::string fam = c.get_string(p + "severity", "exponential");
  if (fam == "exponential") {
    if (c.has(p + "severity.mean"))
      return SeverityDistribution::exponential_mean(c.get_double(p + "severity.mean"));
    return SeverityDistribution::exponential(c.get_double(p + "severity.rate"));
  }
  if (fam == "lognormal")
    return SeverityDistribution::lognormal(c.get_double(p + "severity.mu"),
                                           c.get_double(p + "severity.sigma"));
  if (fam == "pareto")
    return SeverityDistribution::pareto(c.get_double(p + "severity.scale"),
                                        c.get_double(p + "severity.shape"));
  if (fam == "degenerate")
    return SeverityDistribution::degenerate(c.get_double(p + "severity.value"));
  throw ConfigError("unknown severity family '" + fam + "' for " + p + "severity");
}

struct ComponentSpec {
  LevyComponent component;
  double pi;
  double sigma_eps;
};

std::vector<ComponentSpec> components_from(const KvConfig& c) {
  std::vector<ComponentSpec> out;
  for (int i = 0;; ++i) {
    const std::string p = "component." + std::to_string(i) + ".";
    if (!c.has(p + "id")) break;
    LevyParams lp;
    lp.id = c.get_string(p + "id");
    lp.alpha = c.get_double(p + "alpha", 0.0);
    lp.sigma = c.get_double(p + "sigma", 0.0);
    lp.lambda = c.get_double(p + "lambda");
    if (lp.lambda > 0.0 || c.has(p + "severity")) lp.severity = severity_from(c, p);
    lp.category = parse_risk_category(c.get_string(p + "category", "observed"));
    lp.commencement = c.get_double(p + "commencement", 0.0);
    const double pi = c.get_double(p + "pi", 1.0);
    if (!(pi >= 0.0 && pi <= 1.0))
      throw ConfigError(p + "pi = " + c.get_string(p + "pi") + " is outside [0, 1]");
    const double se = c.get_double(p + "sigma_eps", 0.0);
    if (!(se >= 0.0)) throw ConfigError(p + "sigma_eps must be >= 0");
    out.push_back({LevyComponent(std::move(lp)), pi, se});
  }
  if (out.empty()) throw ConfigError("no components configured (component.0.id missing)");
  return out;
}

double horizon_from(const KvConfig& c) { return c.get_double("horizon", 1.0); }

// simulate

int cmd_simulate(Context& ctx) {
  const auto specs = components_from(ctx.cfg);
  const double T = horizon_from(ctx.cfg);
  const std::size_t n = ctx.reps(1000);
  const double tol = ctx.tolerance();
  std::vector<ReportRow> rows;
  std::vector<PlotPoint> plot;
  auto paths_file = open_out(ctx, "paths.csv");
  bool header = true;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const auto& c = specs[k].component;
    const auto paths = simulate_paths(c, T, ctx.seed(), k, n);
    write_paths_csv(paths_file, paths, header);
    header = false;
    RunningStats st;
    for (std::size_t i = 0; i < paths.size(); ++i) {
      st.push(paths[i].terminal_value);
      if (ctx.opt.plot) plot.push_back({c.id() + ".terminal", double(i), paths[i].terminal_value});
    }
    rows.push_back({c.id() + ".mean", theoretical_mean(c, T), st.mean(), 3.0 * st.standard_error()});
    try {
      const auto m = theoretical_moments(c, T);
      rows.push_back({c.id() + ".variance", m.variance, st.variance(), tol * m.variance});
    } catch (const VarianceUndefinedError&) {
      ctx.out << "  " << c.id() << ": severity variance undefined, variance check skipped\n";
    }
  }
  write_plot(ctx, plot);
  return write_report(ctx, rows) ? kPass : kCheckFailed;
}

// estimate

int cmd_estimate(Context& ctx) {
  std::vector<RiskEstimate> estimates;
  std::vector<ReportRow> rows;
  std::vector<PlotPoint> plot;
  if (ctx.cfg.has("input.paths")) {
    const std::string path = ctx.cfg.get_string("input.paths");
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open path file '" + path + "'");
    const auto paths = read_paths_csv(in);
    const double window = ctx.cfg.get_double("input.window", 0.0);
    std::map<std::string, std::pair<std::vector<double>, double>> pooled;
    std::vector<std::string> order;
    for (const auto& p : paths) {
      auto [it, fresh] = pooled.try_emplace(p.component_id);
      if (fresh) order.push_back(p.component_id);
      it->second.first.insert(it->second.first.end(), p.jump_sizes.begin(), p.jump_sizes.end());
      it->second.second += window > 0.0 ? window : p.horizon;
    }
    for (const auto& id : order)
      estimates.push_back(observed_estimate(id, pooled[id].first, pooled[id].second));
  } else {
    const auto specs = components_from(ctx.cfg);
    const double T = horizon_from(ctx.cfg);
    const std::size_t n = ctx.reps(1000);
    const double tol = ctx.tolerance();
    for (std::size_t k = 0; k < specs.size(); ++k) {
      const auto& c = specs[k].component;
      const auto paths = simulate_paths(c, T, ctx.seed(), k, n);
      const double dt = T - c.commencement();
      std::vector<double> all;
      RunningStats rate;
      for (const auto& p : paths) {
        all.insert(all.end(), p.jump_sizes.begin(), p.jump_sizes.end());
        rate.push(expected_jump_loss(observed_estimate(p)));
      }
      const double window = dt * static_cast<double>(n);
      const auto e = observed_estimate(c.id(), all, window);
      estimates.push_back(e);
      rows.push_back({c.id() + ".lambda_hat", c.lambda(), e.lambda_hat,
                      3.0 * std::sqrt(c.lambda() / window)});
      if (e.xi_hat) {
        rows.push_back({c.id() + ".xi_hat", c.severity().mean(), *e.xi_hat,
                        3.0 * std::sqrt(e.severity_variance_hat / double(e.event_count))});
      }
      const double loss = c.lambda() * (c.lambda() > 0.0 ? c.severity().mean() : 0.0);
      rows.push_back({c.id() + ".expected_jump_loss", loss, rate.mean(), 3.0 * rate.standard_error()});
      if (c.lambda() > 0.0) {
        try {
          const double v = jump_loss_variance(c.lambda(), c.severity().mean(),
                                              c.severity().variance(), 1.0);
          rows.push_back({c.id() + ".jump_loss_variance", v, rate.variance() * dt, tol * v});
        } catch (const VarianceUndefinedError&) {
        }
      }
      if (ctx.opt.plot)
        plot.push_back({"lambda_hat", double(k), e.lambda_hat});
    }
  }
  {
    auto f = open_out(ctx, "estimates.csv");
    write_estimates_csv(f, estimates);
  }
  for (const auto& e : estimates)
    ctx.out << "  " << e.component_id << ": lambda_hat " << format_double(e.lambda_hat)
            << ", xi_hat " << (e.xi_hat ? format_double(*e.xi_hat) : std::string("n/a"))
            << ", N " << e.event_count << "\n";
  write_plot(ctx, plot);
  if (rows.empty()) return kPass;
  return write_report(ctx, rows) ? kPass : kCheckFailed;
}

// gap-study

int cmd_gap_study(Context& ctx) {
  const auto specs = components_from(ctx.cfg);
  ThinningStudyConfig st;
  st.horizon = horizon_from(ctx.cfg);
  st.replications = ctx.reps(10000);
  st.seed = ctx.seed();
  const std::string mode = ctx.cfg.get_string("gap.thinning", "jump");
  if (mode == "jump")
    st.mode = ThinningMode::Jump;
  else if (mode == "component")
    st.mode = ThinningMode::Component;
  else
    throw ConfigError("gap.thinning must be 'jump' or 'component'");
  for (const auto& s : specs)
    st.components.push_back({s.component.id(), s.component.lambda(), s.component.severity(),
                             s.pi, s.sigma_eps});
  const auto result = run_thinning_study(st);
  {
    auto f = open_out(ctx, "gap_report.csv");
    write_gap_report_csv(f, result);
  }
  const double tol = ctx.tolerance();
  std::vector<ReportRow> rows;
  std::vector<PlotPoint> plot;
  auto add = [&](const ThinningRow& r) {
    rows.push_back({r.id + ".bias", r.bias_formula, r.bias_mc, 3.0 * r.bias_se});
    rows.push_back({r.id + ".variance_gap", r.var_gap_formula, r.var_gap_mc,
                    tol * std::fabs(r.var_gap_formula)});
    plot.push_back({r.id + ".bias_formula", r.pi, r.bias_formula});
    plot.push_back({r.id + ".bias_mc", r.pi, r.bias_mc});
    plot.push_back({r.id + ".var_gap_formula", r.pi, r.var_gap_formula});
    plot.push_back({r.id + ".var_gap_mc", r.pi, r.var_gap_mc});
    if (r.truncations > 0)
      ctx.out << "  " << r.id << ": " << r.truncations
              << " noise draws rejected by truncation, mean accepted noise "
              << format_double(r.mean_noise) << "\n";
  };
  for (const auto& r : result.components) add(r);
  add(result.total);
  write_plot(ctx, plot);
  return write_report(ctx, rows) ? kPass : kCheckFailed;
}

// narrative-check

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open narrative file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> narrative_files(const Context& ctx) {
  std::vector<std::string> files = ctx.opt.files;
  if (files.empty() && ctx.cfg.has("process.narratives")) {
    std::stringstream ss(ctx.cfg.get_string("process.narratives"));
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) files.push_back(item);
  }
  if (files.empty()) throw ConfigError("no narrative files given");
  return files;
}

int cmd_narrative_check(Context& ctx) {
  const auto files = narrative_files(ctx);
  auto f = open_out(ctx, "narrative_check.csv");
  f << "file,status,label,message\n";
  bool all_ok = true;
  for (const auto& path : files) {
    const std::string text = read_file(path);
    try {
      const Narrative n = parse_narrative(text);
      const auto report = validate(n);
      if (report.ok()) {
        write_csv_row(f, {path, "valid", "", ""});
        ctx.out << path << ": valid, H=" << n.happening_count() << "\n";
        for (const auto& p : find_pivots(n))
          ctx.out << "  pivot " << p.happening << " enabled by " << p.enables
                  << ", defeated by " << p.defeat << "\n";
      } else {
        all_ok = false;
        ctx.out << path << ": invalid\n";
        for (const auto& v : report.violations) {
          write_csv_row(f, {path, "invalid", v.label, v.message});
          ctx.out << "  " << v.label << ": " << v.message << "\n";
        }
      }
    } catch (const NarrativeParseError& e) {
      all_ok = false;
      write_csv_row(f, {path, "parse-error", std::string(e.label()), e.what()});
      ctx.out << path << ": " << e.label() << " at " << e.what() << "\n";
    }
  }
  return all_ok ? kPass : kCheckFailed;
}

// run-process

EngineConfig engine_config_from(const KvConfig& c) {
  EngineConfig e;
  e.costs.c_write = c.get_double("cost.c_write", 1.0);
  e.costs.c_obs = c.get_double("cost.c_obs", 0.0);
  e.costs.variable = c.get_bool("cost.variable", false);
  e.costs.c_spec = c.get_double("cost.c_spec", 1.0);
  e.weights.D1 = c.get_double("weights.D1", 1.0);
  e.weights.D2 = c.get_double("weights.D2", 1.0);
  const std::string shape = c.get_string("weights.psi_shape", "quadratic");
  if (shape == "quadratic")
    e.weights.shape = PsiShape::Quadratic;
  else if (shape == "absolute")
    e.weights.shape = PsiShape::Absolute;
  else
    throw ConfigError("weights.psi_shape must be 'quadratic' or 'absolute'");
  e.weights.phi = c.get_double("weights.phi", 1.0);
  e.quality.sigma2_max = c.get_double("quality.sigma2_max", e.quality.sigma2_max);
  e.quality.sigma2_min = c.get_double("quality.sigma2_min", e.quality.sigma2_min);
  e.quality.eta = c.get_double("quality.eta", e.quality.eta);
  e.redline.nu_star = c.get_double("redline.nu_star", 1.0);
  if (c.has("detection.pi_1")) {
    e.detection.pi.reset();
    e.detection.curve = ImprovingDetection{c.get_double("detection.pi_1"),
                                           c.get_double("detection.pi_max"),
                                           c.get_double("detection.psi")};
  } else {
    e.detection.pi = c.get_double("detection.pi", 0.0);
  }
  e.sigma_eps = c.get_double("measurement.sigma_eps", 0.0);
  try {
    e.validate();
  } catch (const ParameterError& err) {
    throw ConfigError(err.what());
  }
  return e;
}

void write_rounds(const Context& ctx, const RoundLedger& ledger, std::vector<PlotPoint>& plot) {
  auto f = open_out(ctx, "rounds.csv");
  f << "round,risk,happenings,lambda_hat,xi_hat,pkre_total,pkre_variance,statistical_loss,"
       "delta_L2,delta_M,delta_O,cost_total,decision,red_line\n";
  for (const auto& r : ledger.records()) {
    const auto& u = r.inputs.underwriting;
    write_csv_row(f, {std::to_string(r.inputs.round), r.inputs.risk,
                      std::to_string(r.inputs.happenings), format_double(u.lambda_hat),
                      format_double(u.xi_hat.value_or(0.0)), format_double(r.pkre_total),
                      format_double(r.pkre_variance), format_double(r.statistical_loss),
                      format_double(r.deltas.dL2), format_double(r.deltas.dM),
                      format_double(r.deltas.dO), format_double(r.cost_total),
                      std::string(to_string(r.decision)), r.red_line ? "true" : "false"});
    ctx.out << "  round " << r.inputs.round << ": PKRE " << format_double(r.pkre_total)
            << ", decision " << to_string(r.decision)
            << (r.red_line ? ", red line TRIGGERED" : ", red line clear") << "\n";
    plot.push_back({"pkre_total", double(r.inputs.round), r.pkre_total});
    plot.push_back({"statistical_loss", double(r.inputs.round), r.statistical_loss});
  }
}

int cmd_run_process(Context& ctx) {
  const EngineConfig ecfg = engine_config_from(ctx.cfg);
  std::vector<PlotPoint> plot;
  if (!ctx.opt.replay.empty()) {
    std::ifstream in(ctx.opt.replay);
    if (!in) throw ConfigError("cannot open ledger '" + ctx.opt.replay + "'");
    const RoundLedger persisted = RoundLedger::read_ndjson(in);
    const ReplayResult rr = replay(ecfg, persisted);
    write_rounds(ctx, rr.replayed, plot);
    write_plot(ctx, plot);
    if (!rr.identical) {
      ctx.out << "replay diverges at round " << rr.first_mismatch << "\n";
      return kCheckFailed;
    }
    ctx.out << "replay identical over " << persisted.records().size() << " rounds\n";
    return kPass;
  }

  const auto files = narrative_files(ctx);
  std::vector<Narrative> narratives;
  bool bad = false;
  for (const auto& path : files) {
    Narrative n;
    try {
      n = parse_narrative(read_file(path));
    } catch (const NarrativeParseError& e) {
      ctx.err << path << ": " << e.label() << " at " << e.what() << "\n";
      bad = true;
      continue;
    }
    const auto report = validate(n);
    for (const auto& v : report.violations)
      ctx.err << path << ": " << v.label << ": " << v.message << "\n";
    bad = bad || !report.ok();
    narratives.push_back(std::move(n));
  }
  if (bad) throw ConfigError("narrative validation failed; no rounds were run");

  std::vector<RiskEstimate> observed;
  if (ctx.cfg.has("observed.estimates")) {
    const std::string path = ctx.cfg.get_string("observed.estimates");
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open observed estimates '" + path + "'");
    observed = read_estimates_csv(in);
  }

  const int rounds =
      static_cast<int>(ctx.cfg.get_int("process.rounds", static_cast<long long>(narratives.size())));
  if (rounds < 1) throw ConfigError("process.rounds must be >= 1");
  const KvConfig& cfg = ctx.cfg;
  const UnderwritingCall scripted = [&cfg](const Narrative&, int r) {
    const std::string p = "round." + std::to_string(r) + ".";
    return UnderwritingResult{cfg.get_double(p + "lambda"), cfg.get_double(p + "xi"),
                              cfg.get_double(p + "severity_var", 0.0)};
  };
  SpeculationEngine engine(ecfg);
  for (int r = 1; r <= rounds; ++r) {
    const std::string p = "round." + std::to_string(r) + ".";
    engine.run_round(narratives[static_cast<std::size_t>(r - 1) % narratives.size()], scripted,
                     observed, cfg.get_double(p + "mitigation", 0.0),
                     cfg.get_double(p + "option", 0.0), cfg.get_bool(p + "sponsored", false));
  }
  {
    auto f = open_out(ctx, "ledger.ndjson");
    engine.ledger().write_ndjson(f);
  }
  write_rounds(ctx, engine.ledger(), plot);
  int first_stop = 0;
  for (const auto& rec : engine.ledger().records())
    if (rec.decision == Decision::Stop) {
      first_stop = rec.inputs.round;
      break;
    }
  if (first_stop)
    ctx.out << "gate first says stop at round " << first_stop << "\n";
  else
    ctx.out << "gate never says stop\n";
  write_plot(ctx, plot);
  return kPass;
}

// stopping

int cmd_stopping(Context& ctx) {
  const KvConfig& c = ctx.cfg;
  const double rho = c.get_double("stopping.rho", 1.0);
  std::vector<double> u;
  std::vector<RoundDeltas> deltas;
  CostModel costs;
  int R_max = 0;
  if (c.has("stopping.utilities")) {
    u = c.get_doubles("stopping.utilities");
    R_max = static_cast<int>(c.get_int("stopping.R_max", static_cast<long long>(u.size())));
  } else {
    R_max = static_cast<int>(c.get_int("stopping.R_max", 20));
    costs.c_write = c.get_double("cost.c_write", 1.0);
    costs.c_spec = c.get_double("cost.c_spec", 1.0);
    const double d0 = c.get_double("stopping.delta0");
    const double q = c.get_double("stopping.ratio");
    for (int r = 1; r <= R_max; ++r) {
      const double d = d0 * std::pow(q, r);
      deltas.push_back({d, 0.0, 0.0});
      u.push_back(d - (costs.c_write + costs.c_spec));
    }
  }
  if (static_cast<int>(u.size()) != R_max)
    throw ConfigError("stopping.R_max does not match the number of utilities");
  StoppingResult s;
  try {
    s = optimal_stopping_brute(R_max, u, rho);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  {
    auto f = open_out(ctx, "stopping.csv");
    f << "tau,value\n";
    for (std::size_t t = 0; t < s.values.size(); ++t)
      write_csv_row(f, {std::to_string(t), format_double(s.values[t])});
  }
  std::vector<PlotPoint> plot;
  for (std::size_t t = 0; t < s.values.size(); ++t)
    plot.push_back({"value", double(t), s.values[t]});
  write_plot(ctx, plot);
  ctx.out << "  optimal stopping round " << s.tau << " (value " << format_double(s.value) << ")\n";
  if (deltas.empty()) return kPass;
  const int gate = gate_stopping_round(costs, deltas);
  std::vector<ReportRow> rows{{"stopping_round", double(s.tau), double(gate), 0.0}};
  return write_report(ctx, rows) ? kPass : kCheckFailed;
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monte Carlo and closed-form checks for speculative catastrophe-risk models",
               argv.empty() ? "darkspec" : argv.front()};
  app.require_subcommand(1);
  Options opt;
  app.add_option("--config", opt.config_path, "key = value configuration file");
  auto* seed = app.add_option("--seed", opt.seed, "root seed");
  app.add_option("--reps", opt.reps, "replication count")->check(CLI::PositiveNumber);
  app.add_option("--out", opt.out_dir, "output directory");
  auto* tol = app.add_option("--tolerance", opt.tolerance,
                             "relative tolerance for variance-type metrics");
  app.add_flag("--plot", opt.plot, "also write long-format plot.csv");
  app.add_option("--set", opt.overrides, "override a config key (key=value)");
  app.fallthrough();

  auto* sim = app.add_subcommand("simulate", "simulate paths and compare moments");
  auto* est = app.add_subcommand("estimate", "frequency/severity estimates");
  auto* gap = app.add_subcommand("gap-study", "thinning study of the non-speculating baseline");
  auto* chk = app.add_subcommand("narrative-check", "parse and validate narrative files");
  chk->add_option("files", opt.files, "narrative files");
  auto* run = app.add_subcommand("run-process", "run scripted speculation rounds");
  run->add_option("--narrative", opt.files, "narrative file (repeatable)");
  run->add_option("--replay", opt.replay, "replay a persisted ledger");
  auto* stop = app.add_subcommand("stopping", "brute-force optimal stopping");

  std::vector<const char*> cargv;
  for (const auto& a : argv) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  }
  opt.seed_set = seed->count() > 0;
  opt.tolerance_set = tol->count() > 0;

  try {
    KvConfig cfg = opt.config_path.empty() ? KvConfig() : KvConfig::load(opt.config_path);
    for (const auto& o : opt.overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + o + "'");
      cfg.set(o.substr(0, eq), o.substr(eq + 1));
    }
    Context ctx{opt, std::move(cfg), out, err};
    const auto t0 = std::chrono::steady_clock::now();
    int status = kPass;
    std::string name;
    if (sim->parsed()) {
      name = "simulate";
      status = cmd_simulate(ctx);
    } else if (est->parsed()) {
      name = "estimate";
      status = cmd_estimate(ctx);
    } else if (gap->parsed()) {
      name = "gap-study";
      status = cmd_gap_study(ctx);
    } else if (chk->parsed()) {
      name = "narrative-check";
      status = cmd_narrative_check(ctx);
    } else if (run->parsed()) {
      name = "run-process";
      status = cmd_run_process(ctx);
    } else if (stop->parsed()) {
      name = "stopping";
      status = cmd_stopping(ctx);
    }
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    out << name << ": " << (status == kPass ? "pass" : "FAIL") << " (seed " << ctx.seed()
        << ", " << dt.count() << " s)\n";
    return status;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
  } catch (const ParameterError& e) {
    err << "parameter error: " << e.what() << "\n";
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
  } catch (const std::invalid_argument& e) {
    err << "input error: " << e.what() << "\n";
  } catch (const std::out_of_range& e) {
    err << "input error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kUsageError;
}

}  // namespace darkspec::cli
