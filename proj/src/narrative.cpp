#include "darkspec/narrative.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "darkspec/errors.hpp"

namespace darkspec {

std::string_view to_string(ActorKind k) {
  switch (k) {
    case ActorKind::Human: return "human";
    case ActorKind::Machine: return "machine";
    case ActorKind::Nature: return "nature";
  }
  return "human";
}

std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::Human: return "human";
    case ActionKind::Machine: return "machine";
    case ActionKind::Joint: return "joint";
    case ActionKind::ForceMajeure: return "force-majeure";
  }
  return "human";
}

const Happening* Narrative::find_happening(std::string_view id) const {
  for (const auto& h : happenings)
    if (h.id == id) return &h;
  return nullptr;
}

const Actor* Narrative::find_actor(std::string_view id) const {
  for (const auto& a : actors)
    if (a.id == id) return &a;
  return nullptr;
}

const Action* Narrative::find_action(std::string_view id) const {
  for (const auto& a : actions)
    if (a.id == id) return &a;
  return nullptr;
}

std::vector<std::string> Narrative::participants(std::string_view happening) const {
  std::set<std::string> out;
  for (const auto& p : presence)
    if (p.happening == happening) out.insert(p.actor);
  for (const auto& e : edges)
    if (e.from == happening || e.to == happening) out.insert(e.actor);
  return {out.begin(), out.end()};
}

Narrative Narrative::canonical() const {
  Narrative n = *this;
  auto by_id = [](const auto& a, const auto& b) { return a.id < b.id; };
  std::stable_sort(n.actors.begin(), n.actors.end(), by_id);
  std::stable_sort(n.actions.begin(), n.actions.end(), by_id);
  std::stable_sort(n.happenings.begin(), n.happenings.end(), by_id);
  std::sort(n.presence.begin(), n.presence.end());
  n.presence.erase(std::unique(n.presence.begin(), n.presence.end()), n.presence.end());
  std::sort(n.edges.begin(), n.edges.end());
  std::sort(n.pivots.begin(), n.pivots.end());
  return n;
}

bool operator==(const Narrative& a, const Narrative& b) {
  const Narrative x = a.canonical();
  const Narrative y = b.canonical();
  return x.round == y.round && x.risk == y.risk && x.actors == y.actors &&
         x.actions == y.actions && x.happenings == y.happenings &&
         x.presence == y.presence && x.edges == y.edges && x.pivots == y.pivots;
}

bool ValidationReport::has(std::string_view label) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.label == label; });
}

namespace {

bool kinds_agree(ActorKind actor, ActionKind action) {
  switch (actor) {
    case ActorKind::Human:
      return action == ActionKind::Human || action == ActionKind::Joint;
    case ActorKind::Machine:
      return action == ActionKind::Machine || action == ActionKind::Joint;
    case ActorKind::Nature:
      return action == ActionKind::ForceMajeure;
  }
  return false;
}

bool agentive(ActionKind k) { return k != ActionKind::ForceMajeure; }

std::string edge_text(const NarrativeEdge& e) {
  return e.from + " -> " + e.to + " (" + e.actor + ", " + e.action + ")";
}

class Checker {
 public:
  explicit Checker(const Narrative& n) : n_(n) {}

  ValidationReport run() {
    ids();
    stages();
    edges();
    presence_and_context();
    restriction_5();
    cycles();
    actualized_path();
    connectivity();
    pivots();
    return std::move(report_);
  }

 private:
  void add(std::string label, std::string message, std::vector<std::string> elements) {
    report_.violations.push_back({std::move(label), std::move(message), std::move(elements)});
  }

  void ids() {
    std::map<std::string, int> count;
    for (const auto& a : n_.actors) ++count[a.id];
    for (const auto& a : n_.actions) ++count[a.id];
    for (const auto& h : n_.happenings) ++count[h.id];
    for (const auto& [id, c] : count)
      if (c > 1) add("duplicate-id", "id '" + id + "' is declared " + std::to_string(c) + " times", {id});
  }

  void stages() {
    for (const auto& h : n_.happenings)
      if (h.stage < 1)
        add("stage-range", "happening '" + h.id + "' has stage " + std::to_string(h.stage), {h.id});
  }

  void edges() {
    for (const auto& e : n_.edges) {
      const Happening* from = n_.find_happening(e.from);
      const Happening* to = n_.find_happening(e.to);
      if (!from || !to) {
        add("flow-1", "edge " + edge_text(e) + " has an endpoint outside the catastrophe",
            {e.from, e.to});
      } else if (!(from->stage < to->stage)) {
        add("flow-2", "edge " + edge_text(e) + " runs from stage " +
                          std::to_string(from->stage) + " to stage " + std::to_string(to->stage),
            {e.from, e.to});
      }
      const Actor* actor = n_.find_actor(e.actor);
      if (!actor)
        add("flow-3", "edge " + edge_text(e) + " names an undeclared actor", {e.actor});
      const Action* action = n_.find_action(e.action);
      if (!action)
        add("unknown-action", "edge " + edge_text(e) + " names an undeclared action", {e.action});
      if (actor && action && !kinds_agree(actor->kind, action->kind))
        add("action-kind", "a " + std::string(to_string(actor->kind)) + " actor cannot perform " +
                               std::string(to_string(action->kind)) + " action '" + e.action + "'",
            {e.actor, e.action});
      if (from && to) {
        const auto pf = n_.participants(e.from);
        const auto pt = n_.participants(e.to);
        if (!std::binary_search(pf.begin(), pf.end(), e.actor) ||
            !std::binary_search(pt.begin(), pt.end(), e.actor))
          add("flow-4", "actor '" + e.actor + "' is not present at both ends of " + edge_text(e),
              {e.actor, e.from, e.to});
      }
    }
  }

  void presence_and_context() {
    for (const auto& p : n_.presence) {
      if (!n_.find_actor(p.actor))
        add("flow-3", "presence of undeclared actor '" + p.actor + "'", {p.actor});
      if (!n_.find_happening(p.happening))
        add("flow-1", "presence at undeclared happening '" + p.happening + "'", {p.happening});
    }
  }

  // Each actor's stages must be contiguous over the stages that have
  // happenings at all.
  void restriction_5() {
    std::set<int> populated;
    for (const auto& h : n_.happenings) populated.insert(h.stage);
    std::map<std::string, std::set<int>> at;
    for (const auto& h : n_.happenings)
      for (const auto& a : n_.participants(h.id)) at[a].insert(h.stage);
    for (const auto& [actor, st] : at) {
      if (st.size() < 2) continue;
      const int lo = *st.begin();
      const int hi = *st.rbegin();
      for (int s : populated)
        if (s > lo && s < hi && !st.count(s))
          add("flow-5", "actor '" + actor + "' appears at stages " + std::to_string(lo) +
                            " and " + std::to_string(hi) + " but not at stage " +
                            std::to_string(s),
              {actor, std::to_string(s)});
    }
  }

  void cycles() {
    std::map<std::string, std::vector<std::string>> out;
    std::map<std::string, int> indeg;
    for (const auto& h : n_.happenings) indeg.emplace(h.id, 0);
    for (const auto& e : n_.edges) {
      if (!indeg.count(e.from) || !indeg.count(e.to)) continue;
      out[e.from].push_back(e.to);
      ++indeg[e.to];
    }
    std::vector<std::string> ready;
    for (const auto& [id, d] : indeg)
      if (d == 0) ready.push_back(id);
    std::size_t seen = 0;
    while (!ready.empty()) {
      const std::string id = ready.back();
      ready.pop_back();
      ++seen;
      for (const auto& t : out[id])
        if (--indeg[t] == 0) ready.push_back(t);
    }
    if (seen != indeg.size()) {
      std::vector<std::string> stuck;
      for (const auto& [id, d] : indeg)
        if (d > 0) stuck.push_back(id);
      add("partial-acyclicity", "the edge set contains a directed cycle", stuck);
    }
  }

  void actualized_path() {
    std::map<int, std::vector<const Happening*>> by_stage;
    for (const auto& h : n_.happenings) by_stage[h.stage];
    for (const auto& h : n_.happenings)
      if (h.actualized) by_stage[h.stage].push_back(&h);

    int last = 0;
    for (const auto& [s, list] : by_stage)
      if (!list.empty()) last = std::max(last, s);
    if (last == 0) {
      add("actualization", "no happening is actualized", {});
      return;
    }
    std::vector<const Happening*> chain;
    for (int s = 1; s <= last; ++s) {
      auto it = by_stage.find(s);
      const std::size_t c = it == by_stage.end() ? 0 : it->second.size();
      if (c != 1) {
        add("actualization", "stage " + std::to_string(s) + " has " + std::to_string(c) +
                                 " actualized happenings",
            {std::to_string(s)});
        return;
      }
      chain.push_back(it->second.front());
    }
    for (std::size_t i = 1; i < chain.size(); ++i) {
      const auto& a = chain[i - 1]->id;
      const auto& b = chain[i]->id;
      const bool linked = std::any_of(n_.edges.begin(), n_.edges.end(), [&](const auto& e) {
        return e.from == a && e.to == b;
      });
      if (!linked)
        add("partial-acyclicity", "actualized happenings '" + a + "' and '" + b +
                                      "' are not joined by an edge",
            {a, b});
    }
  }

  void connectivity() {
    if (n_.happenings.size() < 2) return;
    for (const auto& h : n_.happenings) {
      const bool touched = std::any_of(n_.edges.begin(), n_.edges.end(), [&](const auto& e) {
        return e.from == h.id || e.to == h.id;
      });
      if (!touched) add("connectivity", "happening '" + h.id + "' has no edges", {h.id});
    }
  }

  void pivots() {
    for (const auto& p : n_.pivots) {
      if (!n_.find_happening(p.happening))
        add("pivot-reference", "pivot names undeclared happening '" + p.happening + "'",
            {p.happening});
      if (!n_.find_action(p.enables))
        add("pivot-reference", "pivot names undeclared action '" + p.enables + "'", {p.enables});
      if (!n_.find_action(p.defeat))
        add("pivot-reference", "pivot names undeclared action '" + p.defeat + "'", {p.defeat});
    }
  }

  const Narrative& n_;
  ValidationReport report_;
};

bool pivot_holds(const Narrative& n, const PivotAnnotation& p) {
  const Happening* target = n.find_happening(p.happening);
  const Action* enables = n.find_action(p.enables);
  const Action* defeat = n.find_action(p.defeat);
  if (!target || !enables || !defeat) return false;
  if (!target->actualized || target->stage < 2) return false;
  if (!agentive(enables->kind) || !agentive(defeat->kind)) return false;
  if (p.enables == p.defeat) return false;
  bool enabled = false;
  for (const auto& e : n.edges) {
    const Happening* from = n.find_happening(e.from);
    const Happening* to = n.find_happening(e.to);
    if (!from || !to || !from->actualized || !to->actualized) continue;
    if (e.action == p.defeat) return false;
    if (e.action == p.enables && from->stage < target->stage) enabled = true;
  }
  return enabled;
}

}  // namespace

ValidationReport validate(const Narrative& narrative) { return Checker(narrative).run(); }

std::vector<PivotAnnotation> find_pivots(const Narrative& narrative) {
  const auto report = validate(narrative);
  if (!report.ok())
    throw PreconditionError("find_pivots: narrative does not validate (" +
                            report.violations.front().label + ": " +
                            report.violations.front().message + ")");
  std::vector<PivotAnnotation> out;
  for (const auto& p : narrative.pivots)
    if (pivot_holds(narrative, p)) out.push_back(p);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string alternative_happening_id(const PivotAnnotation& pivot) {
  return pivot.happening + "~" + pivot.defeat;
}

MitigationOutcome apply_mitigation(const Narrative& narrative, const PivotAnnotation& pivot,
                                   const RiskEstimate& baseline, const RiskEstimate& mitigated) {
  const auto pivots = find_pivots(narrative);
  if (!std::binary_search(pivots.begin(), pivots.end(), pivot))
    throw PreconditionError("apply_mitigation: '" + pivot.happening + "' via '" + pivot.defeat +
                            "' is not a pivot of the narrative");
  MitigationOutcome out;
  out.pivot = pivot;
  out.baseline_loss = expected_jump_loss(baseline);
  out.mitigated_loss = expected_jump_loss(mitigated);
  if (!(out.mitigated_loss < out.baseline_loss))
    throw MitigationInvalidError("mitigated expected loss " + std::to_string(out.mitigated_loss) +
                                 " is not below the baseline " +
                                 std::to_string(out.baseline_loss));
  out.reduction = out.baseline_loss - out.mitigated_loss;

  Narrative v = narrative;
  const Happening target = *narrative.find_happening(pivot.happening);
  std::string pred;
  for (auto& h : v.happenings) {
    if (h.actualized && h.stage == target.stage - 1) pred = h.id;
    if (h.stage >= target.stage) h.actualized = false;
  }
  const ActionKind dk = narrative.find_action(pivot.defeat)->kind;
  // Prefer an actor on the actualized edge into the pivot; otherwise the
  // first declared actor able to perform the defeating action.
  std::string actor;
  for (const auto& e : narrative.edges)
    if (e.from == pred && e.to == target.id) {
      const Actor* a = narrative.find_actor(e.actor);
      if (a && kinds_agree(a->kind, dk)) {
        actor = a->id;
        break;
      }
    }
  if (actor.empty()) {
    std::vector<Actor> sorted = narrative.actors;
    std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.id < b.id; });
    for (const auto& a : sorted)
      if (kinds_agree(a.kind, dk)) {
        actor = a.id;
        break;
      }
  }
  if (actor.empty())
    throw PreconditionError("apply_mitigation: no declared actor can perform '" + pivot.defeat + "'");

  Happening alt;
  alt.id = alternative_happening_id(pivot);
  alt.stage = target.stage;
  alt.description = "alternative to " + target.id + " after " + pivot.defeat;
  alt.actualized = true;
  v.happenings.push_back(alt);
  v.presence.push_back({actor, pred});
  v.presence.push_back({actor, alt.id});
  v.edges.push_back({pred, alt.id, actor, pivot.defeat});
  out.variant = v.canonical();
  return out;
}

std::string mitigator_argmin(const Narrative& narrative,
                             std::span<const std::pair<std::string, double>> candidates) {
  if (candidates.empty()) throw DomainError("mitigator_argmin: empty candidate set");
  const std::pair<std::string, double>* best = nullptr;
  for (const auto& c : candidates) {
    if (!narrative.find_action(c.first))
      throw DomainError("mitigator_argmin: '" + c.first + "' is not a declared action");
    if (!best || c.second < best->second || (c.second == best->second && c.first < best->first))
      best = &c;
  }
  return best->first;
}

}  // namespace darkspec
