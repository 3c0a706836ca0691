#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "darkspec/errors.hpp"
#include "darkspec/narrative.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace darkspec;

namespace {

Narrative scenario(const std::string& name) {
  return parse_narrative(testing::slurp(testing::source_path("scenarios/" + name + ".narrative")));
}

// A chain theta1 -> ... -> thetaH, one human actor on every edge.
Narrative chain(int H) {
  Narrative n;
  n.risk = "r";
  n.actors = {{"g", ActorKind::Human}};
  n.actions = {{"act", ActionKind::Human}, {"alt", ActionKind::Human}};
  for (int s = 1; s <= H; ++s)
    n.happenings.push_back({"t" + std::to_string(s), s, "step", {}, true});
  for (int s = 1; s < H; ++s)
    n.edges.push_back({"t" + std::to_string(s), "t" + std::to_string(s + 1), "g", "act"});
  return n;
}

// Valid random narrative: an actualized chain over H stages, unactualized
// side happenings fed from the previous actualized stage, and a second actor
// covering a contiguous run of chain edges. Actions are random agentive kinds.
Narrative random_valid(std::mt19937_64& g, int H) {
  std::uniform_int_distribution<int> coin(0, 1);
  Narrative n;
  n.round = 1 + int(g() % 4);
  n.risk = "risk" + std::to_string(g() % 100);
  n.actors = {{"h", ActorKind::Human}, {"m", ActorKind::Machine}};
  const int A = 3 + int(g() % 4);
  for (int a = 0; a < A; ++a) {
    const int k = int(g() % 3);
    n.actions.push_back({"a" + std::to_string(a),
                         k == 0 ? ActionKind::Human : k == 1 ? ActionKind::Machine : ActionKind::Joint});
  }
  auto action_for = [&](ActorKind who) {
    std::vector<std::string> ok;
    for (const auto& a : n.actions)
      if (a.kind == ActionKind::Joint || (who == ActorKind::Human) == (a.kind == ActionKind::Human))
        ok.push_back(a.id);
    return ok.empty() ? std::string() : ok[g() % ok.size()];
  };
  for (int s = 1; s <= H; ++s) {
    n.happenings.push_back({"c" + std::to_string(s), s, "chain " + std::to_string(s), {}, true});
    if (coin(g)) n.happenings.back().context.push_back("detail " + std::to_string(g() % 9));
  }
  std::string joint = action_for(ActorKind::Human);
  if (joint.empty()) {
    n.actions.push_back({"hx", ActionKind::Human});
    joint = "hx";
  }
  for (int s = 1; s < H; ++s) {
    std::string act = action_for(ActorKind::Human);
    if (act.empty()) act = joint;
    n.edges.push_back({"c" + std::to_string(s), "c" + std::to_string(s + 1), "h", act});
  }
  const int lo = 1 + int(g() % H), hi = std::min(H, lo + int(g() % 3));
  for (int s = lo; s < hi; ++s) {
    const std::string act = action_for(ActorKind::Machine);
    if (!act.empty())
      n.edges.push_back({"c" + std::to_string(s), "c" + std::to_string(s + 1), "m", act});
  }
  for (int s = 2; s <= H; ++s)
    if (g() % 3 == 0) {
      const std::string id = "x" + std::to_string(s);
      n.happenings.push_back({id, s, "side " + std::to_string(s), {}, false});
      std::string act = action_for(ActorKind::Human);
      if (act.empty()) act = joint;
      n.edges.push_back({"c" + std::to_string(s - 1), id, "h", act});
    }
  const int P = int(g() % 4);
  for (int p = 0; p < P; ++p)
    n.pivots.push_back({"c" + std::to_string(1 + g() % H), n.actions[g() % n.actions.size()].id,
                        n.actions[g() % n.actions.size()].id});
  return n;
}

// Restriction 5 by brute force over (actor, s1 < s2 < s3).
bool flow5_oracle(const Narrative& n) {
  std::set<int> stages;
  for (const auto& h : n.happenings) stages.insert(h.stage);
  std::set<std::string> actors;
  for (const auto& a : n.actors) actors.insert(a.id);
  for (const auto& e : n.edges) actors.insert(e.actor);
  auto at = [&](const std::string& a, int s) {
    for (const auto& h : n.happenings) {
      if (h.stage != s) continue;
      for (const auto& e : n.edges)
        if (e.actor == a && (e.from == h.id || e.to == h.id)) return true;
      for (const auto& p : n.presence)
        if (p.actor == a && p.happening == h.id) return true;
    }
    return false;
  };
  for (const auto& a : actors)
    for (int s1 : stages)
      for (int s2 : stages)
        for (int s3 : stages)
          if (s1 < s2 && s2 < s3 && at(a, s1) && at(a, s3) && !at(a, s2)) return true;
  return false;
}

// Every (actualized happening, enabling action, defeating action) triple
// satisfying the counterfactual rule, intersected with the declared pivots.
std::vector<PivotAnnotation> pivot_oracle(const Narrative& n) {
  std::map<std::string, const Happening*> hs;
  for (const auto& h : n.happenings) hs[h.id] = &h;
  std::map<std::string, ActionKind> kinds;
  for (const auto& a : n.actions) kinds[a.id] = a.kind;
  std::set<std::string> taken;
  for (const auto& e : n.edges)
    if (hs[e.from]->actualized && hs[e.to]->actualized) taken.insert(e.action);
  std::set<PivotAnnotation> valid;
  for (const auto& h : n.happenings) {
    if (!h.actualized || h.stage < 2) continue;
    for (const auto& [en, ek] : kinds)
      for (const auto& [de, dk] : kinds) {
        if (en == de || ek == ActionKind::ForceMajeure || dk == ActionKind::ForceMajeure) continue;
        if (taken.count(de)) continue;
        bool prior = false;
        for (const auto& e : n.edges)
          prior = prior || (e.action == en && hs[e.from]->actualized && hs[e.to]->actualized &&
                            hs[e.from]->stage < h.stage);
        if (prior) valid.insert({h.id, en, de});
      }
  }
  std::vector<PivotAnnotation> out;
  for (const auto& p : n.pivots)
    if (valid.count(p)) out.push_back(p);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

NarrativeParseError parse_failure(const std::string& text) {
  try {
    parse_narrative(text);
  } catch (const NarrativeParseError& e) {
    return e;
  }
  FAIL("parse succeeded");
  return NarrativeParseError(NarrativeParseError::Kind::Syntax, 0, 0, "");
}

}  // namespace

TEST_CASE("scenario files parse into five-stage narratives") {
  const auto atl = scenario("atlanta");
  CHECK(atl.happening_count() == 5);
  CHECK(validate(atl).ok());
  bool bomb = false, cesium = false;
  for (const auto& h : atl.happenings) {
    bomb = bomb || h.description.find("car bomb explosion, 100 pounds of TNT") != std::string::npos;
    cesium = cesium || h.description.find("15,000 curies of Cesium-137") != std::string::npos;
  }
  CHECK(bomb);
  CHECK(cesium);

  const auto bio = scenario("bioweapon");
  CHECK(bio.happening_count() == 5);
  CHECK(validate(bio).ok());
  const Happening* last = bio.find_happening("theta5");
  REQUIRE(last);
  CHECK(last->stage == 5);
  CHECK(last->description.find("5,000 persons ride in the subway cars") != std::string::npos);
  REQUIRE(bio.find_actor("gamma1"));
  REQUIRE(bio.find_actor("gamma2"));
  CHECK(bio.find_actor("gamma1")->kind == ActorKind::Human);
  CHECK(bio.find_actor("gamma2")->kind == ActorKind::Machine);
}

TEST_CASE("degenerate documents are parse errors") {
  for (const std::string text : {"", "\n\n", "# only a comment\n"}) {
    const auto e = parse_failure(text);
    CHECK(e.kind() == NarrativeParseError::Kind::Syntax);
    CHECK(e.line() == 1);
    CHECK(e.column() == 1);
  }
}

TEST_CASE("parse errors carry a kind and position") {
  const std::string head = "NARRATIVE round=1 risk=r\n";
  auto e = parse_failure(head + "ACTOR g kind=human\nEDGE a -> b actor=g action=x\n");
  CHECK(e.kind() == NarrativeParseError::Kind::DanglingReference);
  CHECK(e.line() == 3);
  CHECK(e.column() == 6);
  CHECK(e.label() == "dangling-reference");

  e = parse_failure(head + "HAPPENING a stage=1 \"x\"\nACTION a kind=human\n");
  CHECK(e.kind() == NarrativeParseError::Kind::DuplicateId);
  CHECK(e.line() == 3);
  CHECK(e.column() == 8);

  e = parse_failure(head + "HAPPENING a stage=1 \"open\n");
  CHECK(e.kind() == NarrativeParseError::Kind::Syntax);
  CHECK(e.line() == 2);
  CHECK(e.column() == 21);

  e = parse_failure(head + "HAPPENING a stage=one \"x\"\n");
  CHECK(e.column() == 19);
  e = parse_failure(head + "ACTOR g kind=alien\n");
  CHECK(e.column() == 14);
  e = parse_failure(head + "BOGUS\n");
  CHECK(e.line() == 2);
  e = parse_failure(head + "ACTOR g kind=human extra\n");
  CHECK(e.column() == 20);
  e = parse_failure(head + head);
  CHECK(e.line() == 2);
}

TEST_CASE("forward references resolve") {
  const auto n = parse_narrative(
      "EDGE a -> b actor=g action=go\nNARRATIVE round=2 risk=r\nHAPPENING b stage=2 actualized \"b\"\n"
      "HAPPENING a stage=1 actualized \"a\"\nACTOR g kind=human\nACTION go kind=human\n");
  CHECK(n.round == 2);
  CHECK(validate(n).ok());
}

TEST_CASE("linear chain with one actor validates") {
  CHECK(validate(chain(5)).ok());
  CHECK(validate(chain(1)).ok());
}

TEST_CASE("validation labels") {
  SUBCASE("stage inversion") {
    auto n = chain(3);
    n.edges.push_back({"t3", "t2", "g", "act"});
    const auto r = validate(n);
    CHECK(r.has("flow-2"));
    CHECK(r.has("partial-acyclicity"));
  }
  SUBCASE("equal stages") {
    auto n = chain(3);
    n.happenings.push_back({"side", 2, "s", {}, false});
    n.edges.push_back({"t2", "side", "g", "act"});
    CHECK(validate(n).has("flow-2"));
  }
  SUBCASE("edge leaving the catastrophe") {
    auto n = chain(3);
    n.edges.push_back({"t1", "elsewhere", "g", "act"});
    CHECK(validate(n).has("flow-1"));
  }
  SUBCASE("undeclared actor") {
    auto n = chain(3);
    n.edges[0].actor = "ghost";
    CHECK(validate(n).has("flow-3"));
  }
  SUBCASE("actor gap") {
    auto n = chain(4);
    n.actors.push_back({"u", ActorKind::Human});
    n.presence.push_back({"u", "t1"});
    n.presence.push_back({"u", "t3"});
    const auto r = validate(n);
    CHECK(r.has("flow-5"));
    CHECK(flow5_oracle(n));
  }
  SUBCASE("kind mismatch and unknown action") {
    auto n = chain(3);
    n.actors.push_back({"bot", ActorKind::Machine});
    n.edges.push_back({"t1", "t2", "bot", "act"});
    n.edges.push_back({"t2", "t3", "g", "nope"});
    const auto r = validate(n);
    CHECK(r.has("action-kind"));
    CHECK(r.has("unknown-action"));
  }
  SUBCASE("two actualized happenings at a stage") {
    auto n = chain(3);
    n.happenings.push_back({"t2b", 2, "twin", {}, true});
    n.edges.push_back({"t1", "t2b", "g", "act"});
    CHECK(validate(n).has("actualization"));
  }
  SUBCASE("actualized chain broken") {
    auto n = chain(3);
    n.edges.erase(n.edges.begin() + 1);
    n.happenings.push_back({"t2b", 2, "side", {}, false});
    n.edges.push_back({"t2b", "t3", "g", "act"});
    n.edges.push_back({"t1", "t2b", "g", "act"});
    CHECK(validate(n).has("partial-acyclicity"));
  }
  SUBCASE("isolated happening") {
    auto n = chain(3);
    n.happenings.push_back({"lonely", 2, "s", {}, false});
    CHECK(validate(n).has("connectivity"));
  }
  SUBCASE("pivot references") {
    auto n = chain(3);
    n.pivots.push_back({"t9", "act", "missing"});
    CHECK(validate(n).has("pivot-reference"));
  }
  SUBCASE("duplicate ids across kinds") {
    auto n = chain(2);
    n.actions.push_back({"t1", ActionKind::Human});
    CHECK(validate(n).has("duplicate-id"));
  }
}

TEST_CASE("restriction 5 agrees with a brute-force scan") {
  std::mt19937_64 g(8086);
  int positives = 0;
  for (int trial = 0; trial < 400; ++trial) {
    auto n = random_valid(g, 3 + int(g() % 4));
    const int extra = int(g() % 3);
    for (int i = 0; i < extra; ++i) {
      const auto& h = n.happenings[g() % n.happenings.size()];
      n.presence.push_back({g() % 2 ? "h" : "m", h.id});
    }
    const bool expected = flow5_oracle(n);
    positives += expected;
    CHECK(validate(n).has("flow-5") == expected);
  }
  CHECK(positives > 10);
}

TEST_CASE("valid narratives have a unique topological order on the actualized chain") {
  std::mt19937_64 g(1234);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = random_valid(g, 2 + int(g() % 6));
    REQUIRE(validate(n).ok());
    std::vector<const Happening*> act;
    for (const auto& h : n.happenings)
      if (h.actualized) act.push_back(&h);
    std::sort(act.begin(), act.end(), [](auto a, auto b) { return a->stage < b->stage; });
    for (std::size_t i = 0; i < act.size(); ++i) CHECK(act[i]->stage == int(i) + 1);
  }
}

TEST_CASE("serialize then parse is the identity") {
  std::mt19937_64 g(42);
  for (int trial = 0; trial < 300; ++trial) {
    const auto n = random_valid(g, 1 + int(g() % 7));
    const auto text = serialize_narrative(n);
    const auto back = parse_narrative(text);
    CHECK(back == n);
    CHECK(serialize_narrative(back) == text);
  }
  for (const auto& name : {"atlanta", "bioweapon"}) {
    const auto n = scenario(name);
    CHECK(parse_narrative(serialize_narrative(n)) == n);
  }
  auto quoted = chain(2);
  quoted.happenings[0].description = "with \"quotes\", a # and \\ slash\nand a newline";
  CHECK(parse_narrative(serialize_narrative(quoted)) == quoted);
}

TEST_CASE("pivots") {
  CHECK(find_pivots(chain(4)).empty());

  const auto bio = scenario("bioweapon");
  const auto pivots = find_pivots(bio);
  REQUIRE(pivots.size() == 1);
  CHECK(pivots[0].happening == "theta4");
  CHECK(pivots[0].enables == "query");
  CHECK(pivots[0].defeat == "surveillance");

  auto broken = chain(3);
  broken.edges[0].actor = "ghost";
  CHECK_THROWS_AS(find_pivots(broken), PreconditionError);

  auto n = chain(3);
  n.pivots = {{"t1", "act", "alt"}, {"t3", "act", "alt"}, {"t2", "act", "act"},
              {"t3", "alt", "act"}};
  const auto p = find_pivots(n);
  REQUIRE(p.size() == 1);
  CHECK(p[0].happening == "t3");
}

TEST_CASE("find_pivots matches exhaustive enumeration on 6-stage narratives") {
  std::mt19937_64 g(606);
  int found = 0;
  for (int trial = 0; trial < 300; ++trial) {
    auto n = random_valid(g, 6);
    for (int i = 0; i < 4; ++i)
      n.pivots.push_back({"c" + std::to_string(1 + g() % 6), n.actions[g() % n.actions.size()].id,
                          n.actions[g() % n.actions.size()].id});
    const auto oracle = pivot_oracle(n);
    const auto got = find_pivots(n);
    CHECK(got == oracle);
    found += int(got.size());
    for (const auto& p : got) {
      const Happening* h = n.find_happening(p.happening);
      CHECK(h->actualized);
      CHECK(h->stage >= 2);
    }
  }
  CHECK(found > 0);
}

TEST_CASE("mitigation") {
  const auto bio = scenario("bioweapon");
  const auto pivot = find_pivots(bio).at(0);
  const auto base = underwriting_estimate("bio-subway", 1, 0.5, 10.0);
  const auto better = underwriting_estimate("bio-subway", 1, 0.1, 10.0);
  const auto out = apply_mitigation(bio, pivot, base, better);
  CHECK(out.baseline_loss == 5.0);
  CHECK(out.mitigated_loss == 1.0);
  CHECK(out.reduction == 4.0);
  CHECK(validate(out.variant).ok());
  const Happening* alt = out.variant.find_happening(alternative_happening_id(pivot));
  REQUIRE(alt);
  CHECK(alt->actualized);
  CHECK(alt->stage == 4);
  CHECK_FALSE(out.variant.find_happening("theta4")->actualized);
  CHECK_FALSE(out.variant.find_happening("theta5")->actualized);

  CHECK_THROWS_AS(apply_mitigation(bio, pivot, base, base), MitigationInvalidError);
  const auto worse = underwriting_estimate("bio-subway", 1, 1.0, 10.0);
  CHECK_THROWS_AS(apply_mitigation(bio, pivot, base, worse), MitigationInvalidError);
  CHECK_THROWS_AS(apply_mitigation(bio, {"theta2", "query", "surveillance"}, base, better),
                  PreconditionError);
}

TEST_CASE("mitigation outcomes are always strict improvements") {
  std::mt19937_64 g(777);
  std::uniform_real_distribution<double> U(0.0, 10.0);
  const auto bio = scenario("bioweapon");
  const auto pivot = find_pivots(bio).at(0);
  for (int i = 0; i < 500; ++i) {
    const auto b = underwriting_estimate("k", 1, U(g), U(g));
    const auto m = underwriting_estimate("k", 1, U(g), i % 10 == 0 ? b.xi_hat.value() : U(g));
    try {
      const auto out = apply_mitigation(bio, pivot, b, i % 10 == 0 ? b : m);
      CHECK(out.mitigated_loss < out.baseline_loss);
    } catch (const MitigationInvalidError&) {
      CHECK(expected_jump_loss(i % 10 == 0 ? b : m) >= expected_jump_loss(b));
    }
  }
}

TEST_CASE("mitigator argmin") {
  auto n = chain(2);
  n.actions = {{"a1", ActionKind::Human}, {"a2", ActionKind::Human},
               {"a3", ActionKind::Human}, {"a4", ActionKind::Human},
               {"act", ActionKind::Human}};
  const std::vector<std::pair<std::string, double>> four{{"a1", 3}, {"a2", 1}, {"a3", 4}, {"a4", 2}};
  CHECK(mitigator_argmin(n, four) == "a2");
  const std::vector<std::pair<std::string, double>> one{{"a3", 9}};
  CHECK(mitigator_argmin(n, one) == "a3");
  const std::vector<std::pair<std::string, double>> tie{{"a4", 2}, {"a2", 2}};
  CHECK(mitigator_argmin(n, tie) == "a2");
  CHECK_THROWS_AS(mitigator_argmin(n, {}), DomainError);
  const std::vector<std::pair<std::string, double>> stray{{"zz", 1}};
  CHECK_THROWS_AS(mitigator_argmin(n, stray), DomainError);

  std::mt19937_64 g(10);
  for (int trial = 0; trial < 200; ++trial) {
    Narrative m = chain(2);
    std::vector<std::pair<std::string, double>> cand;
    for (int i = 0; i < 10; ++i) {
      const std::string id = "b" + std::to_string(g() % 1000);
      if (m.find_action(id)) continue;
      m.actions.push_back({id, ActionKind::Human});
      cand.push_back({id, double(g() % 5)});
    }
    std::pair<std::string, double> best = cand[0];
    for (const auto& c : cand)
      if (c.second < best.second || (c.second == best.second && c.first < best.first)) best = c;
    CHECK(mitigator_argmin(m, cand) == best.first);
  }
}
