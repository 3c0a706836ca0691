#include <boost/multiprecision/cpp_dec_float.hpp>
#include <cmath>
#include <random>
#include <sstream>

#include "darkspec/engine.hpp"
#include "darkspec/errors.hpp"
#include "darkspec/narrative.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace darkspec;
using big = boost::multiprecision::cpp_dec_float_50;

namespace {

Narrative small_narrative(const std::string& risk, int H = 3) {
  Narrative n;
  n.risk = risk;
  n.actors = {{"g", ActorKind::Human}};
  n.actions = {{"act", ActionKind::Human}};
  for (int s = 1; s <= H; ++s)
    n.happenings.push_back({"t" + std::to_string(s), s, "step", {}, true});
  for (int s = 1; s < H; ++s)
    n.edges.push_back({"t" + std::to_string(s), "t" + std::to_string(s + 1), "g", "act"});
  return n;
}

UnderwritingCall fixed(double lambda, double xi, double s2 = 0.0) {
  return [=](const Narrative&, int) { return UnderwritingResult{lambda, xi, s2}; };
}

EngineConfig base_config() {
  EngineConfig c;
  c.costs = {1.0, 0.5, false, 1.0};
  c.detection = {0.25, std::nullopt};
  c.redline.nu_star = 100.0;
  return c;
}

}  // namespace

TEST_CASE("statistical loss") {
  const LossWeights w;
  CHECK(statistical_loss(w, std::vector<MomentGap>{{0, 0}, {0, 0}}) == 0.0);
  CHECK(statistical_loss(w, std::vector<MomentGap>{{-10, -8}}) == 164.0);
  LossWeights abs_w;
  abs_w.shape = PsiShape::Absolute;
  CHECK(statistical_loss(abs_w, std::vector<MomentGap>{{-10, -8}}) == 18.0);
  LossWeights scaled{2.0, 3.0, PsiShape::Quadratic, 0.5};
  CHECK(statistical_loss(scaled, std::vector<MomentGap>{{-10, -8}}) == 2.0 * 25 + 3.0 * 16);
  CHECK_THROWS_AS((LossWeights{0.0, 1.0}.validate()), ParameterError);
}

TEST_CASE("quadratic and absolute loss shapes on random gaps") {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  LossWeights q, a;
  a.shape = PsiShape::Absolute;
  for (int i = 0; i < 2000; ++i) {
    const double x = U(g);
    const std::vector<MomentGap> one{{x, 0.0}};
    const double lq = statistical_loss(q, one), la = statistical_loss(a, one);
    CHECK(lq >= 0.0);
    CHECK(la >= 0.0);
    CHECK((lq >= la) == (std::fabs(x) >= 1.0 || x == 0.0));

    const std::vector<MomentGap> many{{U(g), U(g)}, {U(g), U(g)}, {0.0, 0.0}};
    CHECK(statistical_loss(q, many) > 0.0);
  }
}

TEST_CASE("component gaps use the detection and noise terms") {
  const auto g = component_gap(0.5, 2.0, 10.0, 4.0, 1.5);
  CHECK(g.first == -10.0);
  CHECK(g.second == doctest::Approx(-0.5 * 2.0 * 104.0 - 3.0));
  const auto full = component_gap(1.0, 2.0, 10.0, 4.0, 0.0);
  CHECK(full.first == 0.0);
  CHECK(full.second == 0.0);
}

TEST_CASE("constant-cost continuation") {
  CostModel free_costs{0.0, 0.0, false, 0.0};
  CHECK(continuation_constant(free_costs, {0.1, 0, 0}) == Decision::Continue);
  CostModel costs{1.0, 0.0, false, 1.0};
  CHECK(continuation_constant(costs, {0, 0, 0}) == Decision::Stop);
  CHECK(continuation_constant(costs, {1.0, 0.5, 0.5}) == Decision::Continue);
  CostModel var{1.0, 0.0, true, 0.0};
  CHECK_THROWS_AS(continuation_constant(var, {}), DomainError);

  std::vector<RoundDeltas> d;
  for (int r = 1; r <= 20; ++r) d.push_back({10.0 * std::pow(0.5, r), 0.0, 0.0});
  int first_stop = 0;
  for (int r = 1; r <= 20 && !first_stop; ++r)
    if (10.0 * std::pow(0.5, r) < 2.0) first_stop = r;
  CHECK(first_stop == 3);
  CHECK(continuation_constant(costs, d[first_stop - 1]) == Decision::Stop);
  for (int r = 1; r < first_stop; ++r) CHECK(continuation_constant(costs, d[r - 1]) == Decision::Continue);
  CHECK(gate_stopping_round(costs, d) == first_stop - 1);

  // The gate is reversible: a later round with larger deltas continues again.
  d[5] = {5.0, 0, 0};
  CHECK(continuation_constant(costs, d[5]) == Decision::Continue);
}

TEST_CASE("narrative error variance") {
  const NarrativeQuality q{5.0, 1.0, 0.2};
  CHECK(narrative_error_variance(1, q) == 4.0);
  CHECK(narrative_error_variance(1000, q) == 0.0);
  const big oracle = big(5) - exp(big("0.4"));
  CHECK(narrative_error_variance(3, q) == doctest::Approx(oracle.convert_to<double>()).epsilon(1e-14));
  CHECK(narrative_error_variance(3, q) == doctest::Approx(3.5082).epsilon(1e-4));
  CHECK_THROWS_AS(narrative_error_variance(0, q), DomainError);
  CHECK_THROWS_AS((NarrativeQuality{1.0, 1.0, 1.0}.validate()), ParameterError);
}

TEST_CASE("variable-cost continuation") {
  CostModel costs{0.5, 0.0, true, 0.0};
  const int R = 2;
  const long long H = 3;
  const double threshold = 0.5 + std::log(4.0) + std::log(4.0) - std::log(3.0);
  CHECK(continuation_variable(costs, H, R, {threshold, 0, 0}) == Decision::Continue);
  CHECK(continuation_variable(costs, H, R, {std::nextafter(threshold, 0.0), 0, 0}) == Decision::Stop);
  CHECK_THROWS_AS(continuation_variable(costs, 0, R, {}), DomainError);
  CHECK_THROWS_AS(continuation_variable(CostModel{}, H, R, {}), DomainError);
  CHECK(costs.speculation_cost(3) == doctest::Approx(std::log(4.0)));
}

TEST_CASE("red line") {
  const RedLineConfig c{10.0};
  CHECK_FALSE(red_line_check(9.0, c));
  CHECK_FALSE(red_line_check(10.0, c));
  CHECK(red_line_check(std::nextafter(10.0, 11.0), c));
  CHECK_THROWS_AS(red_line_check(1.0, {0.0}), ParameterError);

  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> U(0.0, 20.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = U(g), y = x + U(g);
    if (red_line_check(x, c)) CHECK(red_line_check(y, c));
  }
}

TEST_CASE("hyperanxiety avoidance as printed") {
  CHECK(hyperanxiety_avoidance(0.0, {5.0, 5.0}, 0.0, {1e9}, 1));
  // pi = 1: avoided iff the right-hand side is negative.
  CHECK(hyperanxiety_avoidance(1.0, {1.0, 1.0}, 0.0, {2.0}, 1));
  CHECK_FALSE(hyperanxiety_avoidance(1.0, {3.0, 1.0}, 0.0, {2.0}, 1));
  CHECK_FALSE(hyperanxiety_avoidance(1.0, {2.0, 1.0}, 0.0, {2.0}, 1));
  CHECK_THROWS_AS(hyperanxiety_avoidance(0.5, {1, 1}, 0, {1.0}, 0), DomainError);

  // Direct evaluation oracle over a grid. Lower pi always helps; the effect
  // of R follows the sign of lambda_dot z_dot - prior.
  const RedLineConfig c{2.0};
  const double prior = 10.0;
  int low_pi = 0, high_pi = 0, low_r_up = 0, high_r_up = 0, low_r_down = 0, high_r_down = 0;
  for (double pi : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0})
    for (int R = 1; R <= 10; ++R)
      for (double ld : {0.5, 1.0, 2.0, 4.0, 8.0})
        for (double zd : {0.5, 1.0, 2.0, 5.0, 10.0}) {
          const bool avoided = hyperanxiety_avoidance(pi, {ld, zd}, prior, c, R);
          CHECK(avoided == (1.0 - pi > (ld * zd - prior) / R - 2.0));
          (pi <= 0.5 ? low_pi : high_pi) += avoided;
          if (ld * zd > prior) (R <= 5 ? low_r_up : high_r_up) += avoided;
          if (ld * zd < prior) (R <= 5 ? low_r_down : high_r_down) += avoided;
        }
  CHECK(low_pi > high_pi);
  CHECK(high_r_up > low_r_up);
  CHECK(low_r_down >= high_r_down);
}

TEST_CASE("community precision condition as printed") {
  CHECK_FALSE(community_precision_condition(0.0, 2.0, 1));
  CHECK(community_precision_condition(0.1, 0.0, 3));
  CHECK_THROWS_AS(community_precision_condition(1.0, 1.0, 0), DomainError);
  std::mt19937_64 g(8);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double d = U(g), l = std::fabs(U(g));
    const int R = 1 + int(g() % 10);
    CHECK(community_precision_condition(d, l, R) == (d > l / R));
  }
}

TEST_CASE("optimal stopping by enumeration") {
  const std::vector<double> neg{-1, -2, -0.5};
  CHECK(optimal_stopping_brute(3, neg, 0.9).tau == 0);
  const std::vector<double> pos{1, 2, 0.5, 0.1};
  CHECK(optimal_stopping_brute(4, pos, 0.9).tau == 4);
  const std::vector<double> u{5, 3, 1, -1, -3};
  const auto r = optimal_stopping_brute(5, u, 1.0);
  CHECK(r.tau == 3);
  CHECK(r.value == 9.0);
  CHECK(r.values == std::vector<double>{0, 5, 8, 9, 8, 5});
  const std::vector<double> tie{1, 0, 0};
  CHECK(optimal_stopping_brute(3, tie, 1.0).tau == 1);
  CHECK_THROWS_AS(optimal_stopping_brute(0, {}, 1.0), DomainError);
  const std::vector<double> long_u(31, 1.0);
  CHECK_THROWS_AS(optimal_stopping_brute(31, long_u, 1.0), DomainError);
  CHECK_THROWS_AS(optimal_stopping_brute(3, u, 1.0), DomainError);
  CHECK_THROWS_AS(optimal_stopping_brute(5, u, 0.0), DomainError);
  CHECK_THROWS_AS(optimal_stopping_brute(5, u, 1.5), DomainError);
}

TEST_CASE("gate agrees with enumeration for nonincreasing deltas") {
  std::mt19937_64 g(2718);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int R = 1 + int(g() % 25);
    CostModel costs{0.1 + U(g), 0.0, false, 0.1 + U(g)};
    std::vector<RoundDeltas> d;
    std::vector<double> u;
    double x = 10.0 * U(g);
    for (int r = 0; r < R; ++r) {
      d.push_back({x, 0.0, 0.0});
      u.push_back(x - costs.c_write - costs.c_spec);
      x *= U(g);
    }
    CHECK(gate_stopping_round(costs, d) == optimal_stopping_brute(R, u, 1.0).tau);
  }
}

TEST_CASE("detection config") {
  DetectionConfig constant{0.3, std::nullopt};
  CHECK(constant.at_round(7) == 0.3);
  DetectionConfig improving{std::nullopt, ImprovingDetection{0.3, 0.8, 0.5}};
  CHECK(improving.at_round(1) == doctest::Approx(0.5));
  EngineConfig bad;
  bad.detection = {1.5, std::nullopt};
  CHECK_THROWS_AS(SpeculationEngine{bad}, ParameterError);
}

TEST_CASE("first round and zero-rate rounds") {
  SpeculationEngine e(base_config());
  const auto& r1 = e.run_round(small_narrative("a"), fixed(0.5, 10.0), {}, 0, 0);
  CHECK(r1.pkre_total == 5.0);
  CHECK(r1.imagined_count == 1);
  CHECK(r1.inputs.underwriting.component_id == imagined_component_id("a", 1));
  const auto& r2 = e.run_round(small_narrative("b"), fixed(0.0, 123.0), {}, 0, 0);
  CHECK(r2.pkre_total == 5.0);
  CHECK(r2.imagined_count == 2);
}

TEST_CASE("scripted rounds match hand-computed running sums") {
  EngineConfig cfg = base_config();
  cfg.weights = {1.0, 1.0, PsiShape::Quadratic, 1.0};
  SpeculationEngine e(cfg);
  const std::vector<RiskEstimate> feed{underwriting_estimate("obs", 0, 1.0, 2.0, 1.0)};
  const double lam[] = {0.5, 0.2, 1.0}, xi[] = {10.0, 5.0, 3.0}, s2[] = {4.0, 1.0, 0.0};
  const double M[] = {1.0, 3.0, 2.0}, O[] = {0.5, 0.5, 0.0};
  double imagined = 0.0, loss = 0.0, prev_loss = 0.0;
  for (int r = 0; r < 3; ++r) {
    const auto& rec = e.run_round(small_narrative("k" + std::to_string(r), 2 + r),
                                  fixed(lam[r], xi[r], s2[r]), feed, M[r], O[r], r == 1);
    imagined += lam[r] * xi[r];
    const double g1 = (0.25 - 1) * lam[r] * xi[r];
    const double g2 = (0.25 - 1) * lam[r] * (s2[r] + xi[r] * xi[r]);
    loss += g1 * g1 + g2 * g2;
    CHECK(rec.pkre_imagined == doctest::Approx(imagined));
    CHECK(rec.pkre_observed == 2.0);
    CHECK(rec.pkre_total == doctest::Approx(imagined + 2.0));
    CHECK(rec.statistical_loss == doctest::Approx(loss));
    CHECK(rec.deltas.dL2 == doctest::Approx(loss - prev_loss));
    CHECK(rec.deltas.dM == M[r] - (r ? M[r - 1] : 0.0));
    CHECK(rec.deltas.dO == O[r] - (r ? O[r - 1] : 0.0));
    CHECK(rec.cost_obs == (r == 1 ? 0.5 : 0.0));
    CHECK(rec.cost_total == rec.cost_write + rec.cost_spec + rec.cost_obs);
    CHECK(rec.decision == (2.0 <= rec.deltas.total() ? Decision::Continue : Decision::Stop));
    CHECK(rec.imagined_count == std::size_t(r + 1));
    prev_loss = loss;
  }
}

TEST_CASE("variable-cost rounds draw noise from the narrative size") {
  EngineConfig cfg = base_config();
  cfg.costs = {0.5, 0.0, true, 0.0};
  cfg.quality = {5.0, 1.0, 0.2};
  SpeculationEngine e(cfg);
  const auto& rec = e.run_round(small_narrative("v", 3), fixed(1.0, 2.0), {}, 0, 0);
  CHECK(rec.sigma2_eps == doctest::Approx(5.0 - std::exp(0.4)));
  CHECK(rec.cost_spec == doctest::Approx(std::log(4.0)));
  CHECK(rec.decision == continuation_variable(cfg.costs, 3, 1, rec.deltas));
}

TEST_CASE("failed rounds leave the ledger unchanged") {
  SpeculationEngine e(base_config());
  e.run_round(small_narrative("a"), fixed(1.0, 1.0), {}, 0, 0);
  auto broken = small_narrative("b");
  broken.edges.push_back({"t3", "t1", "g", "act"});
  CHECK_THROWS_AS(e.run_round(broken, fixed(1.0, 1.0), {}, 0, 0), PreconditionError);
  UnderwritingCall boom = [](const Narrative&, int) -> UnderwritingResult {
    throw std::runtime_error("underwriting unavailable");
  };
  CHECK_THROWS_AS(e.run_round(small_narrative("c"), boom, {}, 0, 0), std::runtime_error);
  CHECK_THROWS_AS(e.run_round(small_narrative("c"), fixed(-1.0, 1.0), {}, 0, 0), ParameterError);
  const std::vector<RiskEstimate> dup{underwriting_estimate("o", 0, 1, 1),
                                      underwriting_estimate("o", 0, 1, 1)};
  CHECK_THROWS_AS(e.run_round(small_narrative("c"), fixed(1.0, 1.0), dup, 0, 0), DomainError);
  CHECK(e.ledger().records().size() == 1);
  CHECK(e.ledger().last_round() == 1);
  RoundInputs skip;
  skip.round = 3;
  skip.underwriting = underwriting_estimate("x", 3, 1, 1);
  CHECK_THROWS_AS(e.apply_round(skip), DomainError);
}

TEST_CASE("a hyperanxious round crosses the red line at that round") {
  EngineConfig cfg = base_config();
  cfg.redline.nu_star = 20.0;
  SpeculationEngine e(cfg);
  const double lam[] = {0.5, 0.5, 0.2, 4.0, 0.1};
  for (int r = 0; r < 5; ++r) e.run_round(small_narrative("h" + std::to_string(r)), fixed(lam[r], 10.0), {}, 0, 0);
  const auto recs = e.ledger().records();
  int transition = 0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const double running = [&] {
      double s = 0.0;
      for (std::size_t j = 0; j <= i; ++j) s += lam[j] * 10.0;
      return s;
    }();
    CHECK(recs[i].red_line == (running > 20.0));
    if (recs[i].red_line && (i == 0 || !recs[i - 1].red_line)) transition = int(i) + 1;
  }
  CHECK(transition == 4);

  std::stringstream ss;
  e.ledger().write_ndjson(ss);
  const auto back = RoundLedger::read_ndjson(ss);
  CHECK(replay(cfg, back).identical);
}

TEST_CASE("ledger persistence and replay") {
  EngineConfig cfg = base_config();
  cfg.detection = {std::nullopt, ImprovingDetection{0.2, 0.7, 0.3}};
  cfg.sigma_eps = 0.7;
  SpeculationEngine e(cfg);
  std::mt19937_64 g(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<RiskEstimate> feed{underwriting_estimate("o1", 0, 0.3, 1.0 / 3.0, 0.1)};
  for (int r = 0; r < 10; ++r) {
    if (r == 4) feed.push_back(observed_estimate("o2", std::vector<double>{0.1, 0.7, 2.9}, 7.0));
    e.run_round(small_narrative("risk" + std::to_string(r), 1 + r % 5),
                fixed(U(g), 10 * U(g), U(g)), feed, U(g), U(g), r % 3 == 0);
  }
  std::stringstream ss;
  e.ledger().write_ndjson(ss);
  const std::string text = ss.str();
  const auto back = RoundLedger::read_ndjson(ss);
  REQUIRE(back.records().size() == 10);
  for (std::size_t i = 0; i < 10; ++i) CHECK(back.records()[i] == e.ledger().records()[i]);

  const auto rep = replay(cfg, back);
  CHECK(rep.identical);
  CHECK(rep.first_mismatch == 0);
  std::stringstream again;
  rep.replayed.write_ndjson(again);
  CHECK(again.str() == text);

  EngineConfig other = cfg;
  other.costs.c_write = 1.25;
  const auto diff = replay(other, back);
  CHECK_FALSE(diff.identical);
  CHECK(diff.first_mismatch == 1);

  std::string tampered = text;
  tampered.replace(tampered.find("\"schema\":1"), 10, "\"schema\":2");
  std::istringstream bad(tampered);
  CHECK_THROWS_AS(RoundLedger::read_ndjson(bad), ConfigError);
  std::istringstream junk("{not json\n");
  CHECK_THROWS_AS(RoundLedger::read_ndjson(junk), ConfigError);
}

TEST_CASE("imagined count grows by exactly one per round") {
  SpeculationEngine e(base_config());
  std::size_t prev = 0;
  for (int r = 0; r < 8; ++r) {
    e.run_round(small_narrative("s" + std::to_string(r)), fixed(0.1 * r, 1.0), {}, 0, 0);
    CHECK(e.ledger().imagined_count() == prev + 1);
    prev = e.ledger().imagined_count();
  }
}
