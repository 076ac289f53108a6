#include "ravenkit/verify.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ravenkit/chain.hpp"
#include "ravenkit/question.hpp"

namespace ravenkit {

namespace {

int entity_count(const ComponentPanel& p) { return static_cast<int>(p.entities.size()); }

int level_of(const Entity& e, Attribute attr) {
  switch (attr) {
    case Attribute::kShape:
      return edge_rank(e.shape);
    case Attribute::kSize:
      return e.size_level;
    case Attribute::kColor:
      return e.color_level;
    default:
      return 0;
  }
}

// Single shared value across a panel's entities, if there is one.
std::optional<int> uniform_level(const ComponentPanel& p, Attribute attr) {
  if (p.entities.empty()) return std::nullopt;
  int v = level_of(p.entities.front(), attr);
  for (const Entity& e : p.entities) {
    if (level_of(e, attr) != v) return std::nullopt;
  }
  return v;
}

using SlotSet = std::vector<int>;

SlotSet union_of(const SlotSet& a, const SlotSet& b) {
  SlotSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

SlotSet difference_of(const SlotSet& a, const SlotSet& b) {
  SlotSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool distinct3(const SlotSet& a, const SlotSet& b, const SlotSet& c) {
  return a != b && b != c && a != c;
}

// Constant on a value attribute: with matching slot sets every slot keeps
// its value across the row (covers the per-slot variation), otherwise all
// entities of the row share one value.
bool constant_values_on_row(Attribute attr, const ComponentPanel& a, const ComponentPanel& b,
                            const ComponentPanel& c) {
  SlotSet sa = slot_set(a), sb = slot_set(b), sc = slot_set(c);
  if (sa == sb && sb == sc) {
    for (const Entity& ea : a.entities) {
      const Entity* eb = entity_at_slot(b, ea.slot);
      const Entity* ec = entity_at_slot(c, ea.slot);
      if (eb == nullptr || ec == nullptr) return false;
      int v = level_of(ea, attr);
      if (level_of(*eb, attr) != v || level_of(*ec, attr) != v) return false;
    }
    return !a.entities.empty();
  }
  std::optional<int> va = uniform_level(a, attr);
  std::optional<int> vb = uniform_level(b, attr);
  std::optional<int> vc = uniform_level(c, attr);
  return va && vb && vc && *va == *vb && *vb == *vc;
}

bool number_rule_on_row(RuleKind kind, int na, int nb, int nc) {
  switch (kind) {
    case RuleKind::kConstant:
      return na == nb && nb == nc;
    case RuleKind::kProgressionPlus1:
      return nb == na + 1 && nc == nb + 1;
    case RuleKind::kProgressionMinus1:
      return nb == na - 1 && nc == nb - 1;
    case RuleKind::kArithmeticPlus:
      return nc == na + nb;
    case RuleKind::kArithmeticMinus:
      return nc == na - nb;
    case RuleKind::kDistributeThree:
      return na != nb && nb != nc && na != nc;
    default:
      return false;
  }
}

bool position_rule_on_row(RuleKind kind, const ComponentPanel& a, const ComponentPanel& b,
                          const ComponentPanel& c) {
  SlotSet sa = slot_set(a), sb = slot_set(b), sc = slot_set(c);
  switch (kind) {
    case RuleKind::kConstant:
      return sa == sb && sb == sc;
    case RuleKind::kPositionUnion:
      return sc == union_of(sa, sb);
    case RuleKind::kPositionComplement:
      return sc == difference_of(sa, sb);
    case RuleKind::kDistributeThree:
      return distinct3(sa, sb, sc);
    default:
      return false;
  }
}

bool value_rule_on_row(Attribute attr, RuleKind kind, const ComponentPanel& a,
                       const ComponentPanel& b, const ComponentPanel& c) {
  if (kind == RuleKind::kConstant) return constant_values_on_row(attr, a, b, c);
  std::optional<int> va = uniform_level(a, attr);
  std::optional<int> vb = uniform_level(b, attr);
  std::optional<int> vc = uniform_level(c, attr);
  if (!va || !vb || !vc) return false;
  return number_rule_on_row(kind, *va, *vb, *vc);
}

// Cross-row part of distribute-three: every row draws the same three
// values, no two rows in the same order.
template <typename T>
bool distribute_rows_consistent(const std::vector<std::array<T, 3>>& tuples) {
  std::vector<T> base(tuples.front().begin(), tuples.front().end());
  std::sort(base.begin(), base.end());
  for (const auto& t : tuples) {
    std::vector<T> sorted(t.begin(), t.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted != base) return false;
  }
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    for (std::size_t j = i + 1; j < tuples.size(); ++j) {
      if (tuples[i] == tuples[j]) return false;
    }
  }
  return true;
}

bool distribute_consistent(Attribute attr, const std::vector<ComponentRow>& rows) {
  if (attr == Attribute::kPosition) {
    std::vector<std::array<SlotSet, 3>> tuples;
    for (const ComponentRow& row : rows) {
      tuples.push_back({slot_set(*row[0]), slot_set(*row[1]), slot_set(*row[2])});
    }
    return distribute_rows_consistent(tuples);
  }
  std::vector<std::array<int, 3>> tuples;
  for (const ComponentRow& row : rows) {
    std::array<int, 3> t{};
    for (int i = 0; i < 3; ++i) {
      if (attr == Attribute::kNumber) {
        t[static_cast<std::size_t>(i)] = entity_count(*row[static_cast<std::size_t>(i)]);
      } else {
        std::optional<int> v = uniform_level(*row[static_cast<std::size_t>(i)], attr);
        if (!v) return false;
        t[static_cast<std::size_t>(i)] = *v;
      }
    }
    tuples.push_back(t);
  }
  return distribute_rows_consistent(tuples);
}

std::vector<ComponentRow> puzzle_rows(const Puzzle& p, int component, const Panel& last) {
  std::size_t c = static_cast<std::size_t>(component);
  std::vector<ComponentRow> rows;
  for (int r = 0; r < 2; ++r) {
    std::size_t base = static_cast<std::size_t>(3 * r);
    rows.push_back({&p.context[base].components[c], &p.context[base + 1].components[c],
                    &p.context[base + 2].components[c]});
  }
  rows.push_back({&p.context[6].components[c], &p.context[7].components[c], &last.components[c]});
  return rows;
}

std::string describe_rule(const RuleSpec& rule) {
  std::ostringstream os;
  os << "component " << rule.component << " " << to_string(rule.attribute) << " "
     << to_string(rule.kind);
  return os.str();
}

}  // namespace

bool rule_holds_on_row(Attribute attr, RuleKind kind, const ComponentPanel& a,
                       const ComponentPanel& b, const ComponentPanel& c) {
  switch (attr) {
    case Attribute::kNumber:
      return number_rule_on_row(kind, entity_count(a), entity_count(b), entity_count(c));
    case Attribute::kPosition:
      return position_rule_on_row(kind, a, b, c);
    default:
      return value_rule_on_row(attr, kind, a, b, c);
  }
}

bool rule_true_on_rows(Attribute attr, RuleKind kind, const std::vector<ComponentRow>& rows) {
  if (rows.empty() || kind == RuleKind::kNoClearRule) return false;
  for (const ComponentRow& row : rows) {
    if (!rule_holds_on_row(attr, kind, *row[0], *row[1], *row[2])) return false;
  }
  if (kind == RuleKind::kDistributeThree && rows.size() >= 2) {
    return distribute_consistent(attr, rows);
  }
  return true;
}

bool rule_holds(const Puzzle& p, const RuleSpec& rule, const Panel& last) {
  if (rule.component < 0 || rule.component >= component_count(p.layout)) return false;
  return rule_true_on_rows(rule.attribute, rule.kind, puzzle_rows(p, rule.component, last));
}

VerifyReport verify_rules(const Puzzle& p) {
  VerifyReport rep;
  if (p.context.size() != 8 || p.candidates.size() != 8 || p.correct_index < 1 ||
      p.correct_index > 8) {
    rep.failures.push_back("malformed puzzle structure");
    return rep;
  }
  const Panel& correct = p.candidates[static_cast<std::size_t>(p.correct_index - 1)];
  for (const RuleSpec& rule : p.rules) {
    if (!rule_holds(p, rule, correct)) {
      rep.failures.push_back("rule fails with correct answer: " + describe_rule(rule));
    }
  }
  for (std::size_t i = 0; i < p.candidates.size(); ++i) {
    bool all = true;
    for (const RuleSpec& rule : p.rules) {
      if (!rule_holds(p, rule, p.candidates[i])) {
        all = false;
        break;
      }
    }
    if (all) ++rep.passing_candidates;
  }
  if (rep.passing_candidates != 1) {
    rep.failures.push_back("candidates satisfying all rules: " +
                           std::to_string(rep.passing_candidates) + " (want exactly 1)");
  }
  rep.ok = rep.failures.empty();
  return rep;
}

namespace {

struct BindingView {
  const Puzzle* puzzle = nullptr;
  const QAItem* qa = nullptr;

  std::optional<std::string> value(const char* key) const {
    auto it = qa->binding.find(key);
    if (it == qa->binding.end()) return std::nullopt;
    return it->second;
  }

  const ComponentPanel* panel(const char* key) const {
    std::optional<std::string> v = value(key);
    if (!v) return nullptr;
    int cell = -1;
    try {
      cell = std::stoi(*v);
    } catch (const std::exception&) {
      return nullptr;
    }
    if (cell < 0 || cell >= 8) return nullptr;
    std::size_t comp = static_cast<std::size_t>(qa->component);
    if (comp >= puzzle->context[static_cast<std::size_t>(cell)].components.size()) return nullptr;
    return &puzzle->context[static_cast<std::size_t>(cell)].components[comp];
  }

  const Entity* entity_at(const ComponentPanel* p, const char* slot_key) const {
    std::optional<std::string> name = value(slot_key);
    if (p == nullptr || !name) return nullptr;
    std::optional<int> slot = slot_from_name(puzzle->layout, qa->component, *name);
    if (!slot) return nullptr;
    return entity_at_slot(*p, *slot);
  }

  const Entity* unique_of_shape(const ComponentPanel* p, const char* shape_key) const {
    std::optional<std::string> name = value(shape_key);
    if (p == nullptr || !name) return nullptr;
    std::optional<Shape> shape = shape_from_string(*name);
    if (!shape) return nullptr;
    const Entity* found = nullptr;
    for (const Entity& e : p->entities) {
      if (e.shape != *shape) continue;
      if (found != nullptr) return nullptr;
      found = &e;
    }
    return found;
  }
};

std::string compare_words(int lhs, int rhs, const char* less, const char* more) {
  if (lhs == rhs) return "The same";
  return lhs < rhs ? less : more;
}

std::string same_all_answer(const ComponentPanel& p, Attribute attr) {
  if (p.entities.size() == 1) return "Only one object";
  return uniform_level(p, attr) ? "Yes" : "No";
}

std::optional<std::string> relative_position_answer(const Puzzle& p, int component,
                                                    const Entity& a, const Entity& b) {
  SlotBox ba = slot_box(p.layout, component, a.slot);
  SlotBox bb = slot_box(p.layout, component, b.slot);
  std::string vertical = ba.cy < bb.cy ? "Above" : (ba.cy > bb.cy ? "Below" : "");
  std::string horizontal = ba.cx < bb.cx ? "Left" : (ba.cx > bb.cx ? "Right" : "");
  if (vertical.empty() && horizontal.empty()) return std::nullopt;
  if (vertical.empty()) return horizontal;
  if (horizontal.empty()) return vertical;
  return vertical + "-" + horizontal;
}

std::optional<std::string> rule_question_answer(const Puzzle& p, const QAItem& qa,
                                                const std::vector<int>& row_ids) {
  std::optional<Attribute> attr = attribute_from_string(qa.attribute);
  if (!attr) return std::nullopt;
  const RuleSpec* spec = nullptr;
  for (const RuleSpec& rule : p.rules) {
    if (rule.component == qa.component && rule.attribute == *attr) spec = &rule;
  }
  if (spec == nullptr) return std::nullopt;
  std::vector<ComponentRow> rows;
  std::size_t comp = static_cast<std::size_t>(qa.component);
  for (int r : row_ids) {
    std::size_t base = static_cast<std::size_t>(3 * r);
    rows.push_back({&p.context[base].components[comp], &p.context[base + 1].components[comp],
                    &p.context[base + 2].components[comp]});
  }
  if (!rule_true_on_rows(*attr, spec->kind, rows)) return std::nullopt;
  return default_template_registry().rule_sentence(*attr, spec->kind);
}

}  // namespace

std::optional<std::string> brute_force_answer(const Puzzle& p, const QAItem& qa) {
  if (qa.component < 0 || qa.component >= component_count(p.layout)) return std::nullopt;
  if (p.context.size() != 8) return std::nullopt;
  BindingView view{&p, &qa};
  const std::string& t = qa.template_id;

  if (t == "final") return std::to_string(p.correct_index);
  if (t == "rule_number_1r" || t == "rule_position_1r" || t == "rule_shape_1r" ||
      t == "rule_size_1r" || t == "rule_color_1r") {
    std::optional<std::string> row = view.value("<ROW>");
    if (!row) return std::nullopt;
    int r = row == "0" ? 0 : (row == "1" ? 1 : -1);
    if (r < 0) return std::nullopt;
    return rule_question_answer(p, qa, {r});
  }
  if (t == "rule_number_2r" || t == "rule_position_2r" || t == "rule_shape_2r" ||
      t == "rule_size_2r" || t == "rule_color_2r") {
    return rule_question_answer(p, qa, {0, 1});
  }

  const ComponentPanel* a = view.panel("<P>");
  if (a == nullptr) return std::nullopt;

  if (t == "count_objects_1p") return std::to_string(entity_count(*a));
  if (t == "shape_at_1p") {
    const Entity* e = view.entity_at(a, "<X>");
    if (e == nullptr) return std::nullopt;
    return std::string(to_string(e->shape));
  }
  if (t == "position_of_1p") {
    const Entity* e = view.unique_of_shape(a, "<S>");
    if (e == nullptr) return std::nullopt;
    return slot_names(p.layout, qa.component)[static_cast<std::size_t>(e->slot)];
  }
  if (t == "compare_edges_1p" || t == "compare_size_1p" || t == "compare_color_1p") {
    const Entity* e1 = view.entity_at(a, "<X>");
    const Entity* e2 = view.entity_at(a, "<X2>");
    if (e1 == nullptr || e2 == nullptr) return std::nullopt;
    if (t == "compare_edges_1p") {
      return compare_words(edge_rank(e1->shape), edge_rank(e2->shape), "Fewer", "More");
    }
    if (t == "compare_size_1p") {
      return compare_words(e1->size_level, e2->size_level, "Smaller", "Larger");
    }
    return compare_words(e1->color_level, e2->color_level, "Brighter", "Darker");
  }
  if (t == "relative_position_1p") {
    const Entity* e1 = view.unique_of_shape(a, "<S>");
    const Entity* e2 = view.unique_of_shape(a, "<S2>");
    if (e1 == nullptr || e2 == nullptr) return std::nullopt;
    return relative_position_answer(p, qa.component, *e1, *e2);
  }
  if (t == "same_shape_1p") return same_all_answer(*a, Attribute::kShape);
  if (t == "same_size_1p") return same_all_answer(*a, Attribute::kSize);
  if (t == "same_color_1p") return same_all_answer(*a, Attribute::kColor);

  const ComponentPanel* b = view.panel("<P2>");
  if (b == nullptr) return std::nullopt;

  if (t == "compare_count_2p") {
    return compare_words(entity_count(*a), entity_count(*b), "Fewer", "More");
  }
  if (t == "same_position_2p") return slot_set(*a) == slot_set(*b) ? "Yes" : "No";
  if (t == "compare_edges_2p" || t == "compare_size_2p" || t == "compare_color_2p") {
    Attribute attr = t == "compare_edges_2p"
                         ? Attribute::kShape
                         : (t == "compare_size_2p" ? Attribute::kSize : Attribute::kColor);
    std::optional<int> va = uniform_level(*a, attr);
    std::optional<int> vb = uniform_level(*b, attr);
    if (!va || !vb) return "Not comparable";
    if (attr == Attribute::kShape) return compare_words(*va, *vb, "Fewer", "More");
    if (attr == Attribute::kSize) return compare_words(*va, *vb, "Smaller", "Larger");
    return compare_words(*va, *vb, "Brighter", "Darker");
  }
  return std::nullopt;
}

namespace {

std::string canonical_node_id(const std::string& attr, Stage stage, const std::vector<int>& panels,
                              const std::string& part) {
  std::string id;
  switch (stage) {
    case Stage::kSinglePanel:
      id = attr + "_single_panel_" + std::to_string(panels.empty() ? 0 : panels.front() + 1);
      break;
    case Stage::kTwoPanels:
      id = attr + "_two_panels_" + std::to_string(panels[0] + 1) + "_" +
           std::to_string(panels[1] + 1);
      break;
    case Stage::kOneRow:
      id = attr + "_one_row";
      break;
    case Stage::kTwoRows:
      id = attr + "_two_rows";
      break;
    case Stage::kFinal:
      id = "final";
      break;
  }
  if (!part.empty()) id += "_" + part;
  return id;
}

}  // namespace

ChainShapeReport check_chain_shape(const Chain& chain, const Puzzle& p) {
  ChainShapeReport rep;
  auto fail = [&](const std::string& msg) { rep.failures.push_back(msg); };

  int comps = component_count(p.layout);
  rep.nodes = static_cast<int>(chain.nodes.size());
  if (rep.nodes != comps * 36) {
    fail("node count " + std::to_string(rep.nodes) + ", want " + std::to_string(comps * 36));
  }
  if (chain.puzzle_id != p.id) fail("chain puzzle_id does not match puzzle");

  std::set<std::string> seen;
  for (const ChainNode& node : chain.nodes) {
    rep.edges += static_cast<int>(node.deps.size());
    if (!seen.insert(node.node_id).second) {
      fail("duplicate node id " + node.node_id);
      continue;
    }
    if (node.component < 0 || node.component >= comps) {
      fail(node.node_id + ": component out of range");
      continue;
    }
    std::string part =
        comps > 1 ? to_string(layout_parts(p.layout)[static_cast<std::size_t>(node.component)])
                  : std::string();
    if (node.node_id != canonical_node_id(node.attribute, node.stage, node.panels, part)) {
      fail("node id " + node.node_id + " does not match its structure");
    }
    if (node.qa.panels != node.panels) fail(node.node_id + ": question panels differ from node");
    if (node.qa.component != node.component) fail(node.node_id + ": question component differs");

    std::vector<int> want_panels;
    switch (node.stage) {
      case Stage::kSinglePanel:
        if (node.panels.size() != 1 || node.panels[0] < 0 || node.panels[0] > 2) {
          fail(node.node_id + ": single-panel node must show one of the first-row cells");
        }
        break;
      case Stage::kTwoPanels:
        if (!(node.panels == std::vector<int>{0, 1} || node.panels == std::vector<int>{1, 2})) {
          fail(node.node_id + ": two-panel node must pair adjacent first-row cells");
        }
        break;
      case Stage::kOneRow:
        want_panels = {0, 1, 2};
        if (node.panels != want_panels) fail(node.node_id + ": one-row node must show row 1");
        break;
      case Stage::kTwoRows:
        want_panels = {0, 1, 2, 3, 4, 5};
        if (node.panels != want_panels) fail(node.node_id + ": two-row node must show rows 1-2");
        break;
      case Stage::kFinal:
        want_panels = {0, 1, 2, 3, 4, 5, 6, 7};
        if (node.panels != want_panels) fail(node.node_id + ": final node must show the matrix");
        break;
    }

    // Dependencies must already be defined (topological order), live in the
    // same component, and sit exactly one stage tier down.
    std::size_t want_deps = 0;
    switch (node.stage) {
      case Stage::kSinglePanel:
        want_deps = 0;
        break;
      case Stage::kTwoPanels:
        want_deps = 2;
        break;
      case Stage::kOneRow:
        want_deps = 5;
        break;
      case Stage::kTwoRows:
        want_deps = 1;
        break;
      case Stage::kFinal:
        want_deps = 5;
        break;
    }
    if (node.deps.size() != want_deps) {
      fail(node.node_id + ": has " + std::to_string(node.deps.size()) + " deps, want " +
           std::to_string(want_deps));
    }
    for (const std::string& dep_id : node.deps) {
      if (seen.count(dep_id) == 0) {
        fail(node.node_id + ": dep " + dep_id + " not defined earlier");
        continue;
      }
      const ChainNode* dep = chain.find(dep_id);
      if (dep->component != node.component) fail(node.node_id + ": dep crosses components");
      bool stage_ok = false;
      switch (node.stage) {
        case Stage::kSinglePanel:
          break;
        case Stage::kTwoPanels:
          stage_ok = dep->stage == Stage::kSinglePanel && dep->attribute == node.attribute;
          break;
        case Stage::kOneRow:
          stage_ok = (dep->stage == Stage::kSinglePanel || dep->stage == Stage::kTwoPanels) &&
                     dep->attribute == node.attribute;
          break;
        case Stage::kTwoRows:
          stage_ok = dep->stage == Stage::kOneRow && dep->attribute == node.attribute;
          break;
        case Stage::kFinal:
          stage_ok = dep->stage == Stage::kTwoRows;
          break;
      }
      if (!stage_ok) fail(node.node_id + ": dep " + dep_id + " has the wrong stage");
      if (node.stage == Stage::kTwoPanels || node.stage == Stage::kOneRow) {
        for (int cell : dep->panels) {
          if (std::find(node.panels.begin(), node.panels.end(), cell) == node.panels.end()) {
            fail(node.node_id + ": dep " + dep_id + " shows cells outside the node image");
          }
        }
      }
    }
  }

  // Per component and attribute the ladder is 3 + 2 + 1 + 1 nodes plus one
  // final node, 55 edges in all.
  for (int c = 0; c < comps; ++c) {
    for (Attribute attr : kAllAttributes) {
      int singles = 0, pairs = 0, one_row = 0, two_rows = 0;
      for (const ChainNode& node : chain.nodes) {
        if (node.component != c || node.attribute != to_string(attr)) continue;
        switch (node.stage) {
          case Stage::kSinglePanel:
            ++singles;
            break;
          case Stage::kTwoPanels:
            ++pairs;
            break;
          case Stage::kOneRow:
            ++one_row;
            break;
          case Stage::kTwoRows:
            ++two_rows;
            break;
          case Stage::kFinal:
            break;
        }
      }
      if (singles != 3 || pairs != 2 || one_row != 1 || two_rows != 1) {
        fail("component " + std::to_string(c) + " attribute " + to_string(attr) +
             ": stage counts " + std::to_string(singles) + "/" + std::to_string(pairs) + "/" +
             std::to_string(one_row) + "/" + std::to_string(two_rows) + ", want 3/2/1/1");
      }
    }
    int finals = 0;
    for (const ChainNode& node : chain.nodes) {
      if (node.component == c && node.stage == Stage::kFinal) ++finals;
    }
    if (finals != 1) {
      fail("component " + std::to_string(c) + ": " + std::to_string(finals) +
           " final nodes, want 1");
    }
  }
  if (rep.edges != comps * 55) {
    fail("edge count " + std::to_string(rep.edges) + ", want " + std::to_string(comps * 55));
  }

  rep.ok = rep.failures.empty();
  return rep;
}

}  // namespace ravenkit
