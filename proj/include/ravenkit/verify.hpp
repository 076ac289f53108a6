#pragma once
// Independent checking: rule semantics evaluated directly against panels,
// puzzle validation against all eight candidates, brute-force answers for
// generated questions, and structural checks for reasoning chains.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ravenkit/scene.hpp"

namespace ravenkit {

struct QAItem;
struct Chain;

// One row of a component: the three panels read left to right.
using ComponentRow = std::array<const ComponentPanel*, 3>;

// Does the rule hold on a single row? DistributeThree is row-local here
// (three pairwise-distinct values or slot sets); the cross-row share/order
// conditions live in rule_holds.
bool rule_holds_on_row(Attribute, RuleKind, const ComponentPanel& a, const ComponentPanel& b,
                       const ComponentPanel& c);

// Does the rule hold on all three rows, with `last` completing row 3?
bool rule_holds(const Puzzle&, const RuleSpec&, const Panel& last);

// Truth of a rule statement on an arbitrary set of evidence rows. Used to
// filter rule-question distractors: a sentence that also holds on the shown
// rows cannot be offered as a wrong option.
bool rule_true_on_rows(Attribute, RuleKind, const std::vector<ComponentRow>&);

struct VerifyReport {
  bool ok = false;
  std::vector<std::string> failures;
  int passing_candidates = 0;
};

VerifyReport verify_rules(const Puzzle&);

// Answers a question by direct struct interrogation, bypassing the program
// executor. Returns nullopt if the item's binding does not fit the puzzle.
std::optional<std::string> brute_force_answer(const Puzzle&, const QAItem&);

struct ChainShapeReport {
  bool ok = false;
  std::vector<std::string> failures;
  int nodes = 0;
  int edges = 0;
};

ChainShapeReport check_chain_shape(const Chain&, const Puzzle&);

}  // namespace ravenkit
