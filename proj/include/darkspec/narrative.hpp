#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "darkspec/estimation.hpp"

namespace darkspec {

enum class ActorKind { Human, Machine, Nature };
enum class ActionKind { Human, Machine, Joint, ForceMajeure };

std::string_view to_string(ActorKind k);
std::string_view to_string(ActionKind k);

struct Happening {
  std::string id;
  int stage = 1;
  std::string description;
  std::vector<std::string> context;
  bool actualized = false;

  friend bool operator==(const Happening&, const Happening&) = default;
};

struct Actor {
  std::string id;
  ActorKind kind = ActorKind::Human;
  friend bool operator==(const Actor&, const Actor&) = default;
};

struct Action {
  std::string id;
  ActionKind kind = ActionKind::Human;
  friend bool operator==(const Action&, const Action&) = default;
};

struct NarrativeEdge {
  std::string from;
  std::string to;
  std::string actor;
  std::string action;
  friend auto operator<=>(const NarrativeEdge&, const NarrativeEdge&) = default;
};

/// Explicit ACTOR-AT declaration.
struct Presence {
  std::string actor;
  std::string happening;
  friend auto operator<=>(const Presence&, const Presence&) = default;
};

/// A declared counterfactual: `enables` led to the happening, `defeat` is the
/// alternative that would have prevented it.
struct PivotAnnotation {
  std::string happening;
  std::string enables;
  std::string defeat;
  friend auto operator<=>(const PivotAnnotation&, const PivotAnnotation&) = default;
};

struct Narrative {
  int round = 1;
  std::string risk;
  std::vector<Actor> actors;
  std::vector<Action> actions;
  std::vector<Happening> happenings;
  std::vector<Presence> presence;
  std::vector<NarrativeEdge> edges;
  std::vector<PivotAnnotation> pivots;

  std::size_t happening_count() const { return happenings.size(); }
  const Happening* find_happening(std::string_view id) const;
  const Actor* find_actor(std::string_view id) const;
  const Action* find_action(std::string_view id) const;

  /// Actors taking part in a happening: explicit ACTOR-AT declarations plus
  /// the actors of edges ending or starting there. Sorted, unique.
  std::vector<std::string> participants(std::string_view happening) const;

  /// Records sorted by id (context order within a happening is kept,
  /// duplicate presence records dropped).
  Narrative canonical() const;

  /// Equality of canonical forms.
  friend bool operator==(const Narrative& a, const Narrative& b);
};

struct Violation {
  std::string label;  // e.g. "flow-2", "partial-acyclicity"
  std::string message;
  std::vector<std::string> elements;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(std::string_view label) const;
};

/// Checks id uniqueness, flow restrictions 1-5, acyclicity of the full
/// graph, that the actualized happenings form a single staged path,
/// action/actor kind agreement and pivot references. Never throws for
/// structural problems; every problem becomes a report entry.
ValidationReport validate(const Narrative& narrative);

/// Pivots whose annotation holds on the narrative: the happening is
/// actualized at stage >= 2, the enabling action is a human, machine or
/// joint action on an actualized edge leaving an earlier stage, and the
/// defeating action is a declared human, machine or joint action not taken
/// on the actualized path. Sorted. Throws PreconditionError if the narrative
/// does not validate.
std::vector<PivotAnnotation> find_pivots(const Narrative& narrative);

struct MitigationOutcome {
  PivotAnnotation pivot;
  double baseline_loss = 0.0;
  double mitigated_loss = 0.0;
  double reduction = 0.0;
  Narrative variant;
};

/// Id of the alternative happening created by a mitigation.
std::string alternative_happening_id(const PivotAnnotation& pivot);

/// Mitigates at `pivot`: compares expected jump losses and builds the
/// variant in which the defeating action yields an alternative happening at
/// the pivot's stage and the pivot and everything after it no longer
/// actualize. Throws PreconditionError if `pivot` is not one of
/// find_pivots(narrative), MitigationInvalidError unless the mitigated loss
/// is strictly below the baseline.
MitigationOutcome apply_mitigation(const Narrative& narrative,
                                   const PivotAnnotation& pivot,
                                   const RiskEstimate& baseline,
                                   const RiskEstimate& mitigated);

/// Loss-minimizing candidate action; ties go to the lexicographically
/// smallest id. Throws DomainError on an empty set or an undeclared action.
std::string mitigator_argmin(
    const Narrative& narrative,
    std::span<const std::pair<std::string, double>> candidates);

// Text form.

class NarrativeParseError : public std::runtime_error {
 public:
  enum class Kind { Syntax, DanglingReference, DuplicateId };

  NarrativeParseError(Kind kind, int line, int column, const std::string& what);

  Kind kind() const { return kind_; }
  int line() const { return line_; }
  int column() const { return column_; }
  /// "syntax", "dangling-reference" or "duplicate-id".
  std::string_view label() const;

 private:
  Kind kind_;
  int line_;
  int column_;
};

/// Parses the line-oriented narrative format. The result is canonical.
Narrative parse_narrative(std::string_view text);

/// Canonical text: header, then ACTOR, ACTION, HAPPENING, CONTEXT,
/// ACTOR-AT, EDGE, PIVOT records, each group sorted by id.
std::string serialize_narrative(const Narrative& narrative);

}  // namespace darkspec
