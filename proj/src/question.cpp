#include "ravenkit/question.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ravenkit/verify.hpp"

namespace ravenkit {

namespace {

void replace_all(std::string& text, const std::string& from, const std::string& to) {
  if (from.empty()) return;
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
}

bool has_placeholder(const QuestionTemplate& tmpl, const char* name) {
  return std::find(tmpl.placeholders.begin(), tmpl.placeholders.end(), name) !=
         tmpl.placeholders.end();
}

const ComponentPanel& component_panel(const Puzzle& p, int cell, int component) {
  return p.context[static_cast<std::size_t>(cell)]
      .components[static_cast<std::size_t>(component)];
}

}  // namespace

const QuestionTemplate* TemplateRegistry::find(const std::string& id) const {
  for (const QuestionTemplate& t : templates) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

const std::string& TemplateRegistry::rule_sentence(Attribute attr, RuleKind kind) const {
  auto it = rule_sentences.find(to_string(attr));
  if (it == rule_sentences.end()) {
    throw std::out_of_range(std::string("no rule sentences for attribute ") + to_string(attr));
  }
  for (const auto& [token, sentence] : it->second) {
    if (token == to_string(kind)) return sentence;
  }
  throw std::out_of_range(std::string("no sentence for rule kind ") + to_string(kind) +
                          " on attribute " + to_string(attr));
}

std::optional<RuleKind> TemplateRegistry::kind_of_sentence(Attribute attr,
                                                           const std::string& sentence) const {
  auto it = rule_sentences.find(to_string(attr));
  if (it == rule_sentences.end()) return std::nullopt;
  for (const auto& [token, text] : it->second) {
    if (text == sentence) return rule_kind_from_string(token);
  }
  return std::nullopt;
}

TemplateRegistry load_template_registry(const std::string& json_text) {
  Json doc = Json::parse(json_text);
  TemplateRegistry reg;
  reg.position_vocabulary = doc.at("position_vocabulary").get<std::vector<std::string>>();
  reg.relative_position_space =
      doc.at("relative_position_space").get<std::vector<std::string>>();
  for (const auto& [attr, table] : doc.at("rule_sentences").items()) {
    for (const auto& [kind, sentence] : table.items()) {
      if (!rule_kind_from_string(kind)) {
        throw std::runtime_error("template registry: unknown rule kind token " + kind);
      }
      reg.rule_sentences[attr].emplace_back(kind, sentence.get<std::string>());
    }
  }
  reg.shape_note = doc.at("shape_note").get<std::string>();

  for (const Json& t : doc.at("templates")) {
    QuestionTemplate q;
    q.id = t.at("id").get<std::string>();
    q.configuration = t.at("configuration").get<std::string>();
    q.attribute = t.at("attribute").get<std::string>();
    q.pattern = t.at("pattern").get<std::string>();
    q.placeholders = t.at("placeholders").get<std::vector<std::string>>();
    if (t.contains("constraints")) {
      q.constraints = t.at("constraints").get<std::vector<std::string>>();
    }
    for (const Json& step : t.at("program")) {
      q.program.push_back({step.at("function").get<std::string>(),
                           step.at("args").get<std::vector<std::string>>()});
    }
    if (t.contains("answer_space_ref")) {
      std::string ref = t.at("answer_space_ref").get<std::string>();
      if (ref == "position_vocabulary") {
        q.answer_space = reg.position_vocabulary;
      } else if (ref == "relative_position_space") {
        q.answer_space = reg.relative_position_space;
      } else if (ref.rfind("rules:", 0) == 0) {
        std::string attr = ref.substr(6);
        auto it = reg.rule_sentences.find(attr);
        if (it == reg.rule_sentences.end()) {
          throw std::runtime_error("template registry: bad answer_space_ref " + ref);
        }
        for (const auto& [kind, sentence] : it->second) q.answer_space.push_back(sentence);
      } else {
        throw std::runtime_error("template registry: bad answer_space_ref " + ref);
      }
    } else {
      q.answer_space = t.at("answer_space").get<std::vector<std::string>>();
    }
    if (t.contains("dynamic_answers")) {
      q.dynamic_answers = t.at("dynamic_answers").get<std::vector<std::string>>();
    }
    q.paraphrases = t.at("paraphrases").get<std::vector<std::string>>();
    if (q.paraphrases.empty() || q.paraphrases.front() != q.pattern) {
      throw std::runtime_error("template registry: " + q.id +
                               " paraphrases must start with the pattern");
    }
    if (q.answer_space.size() < 2) {
      throw std::runtime_error("template registry: " + q.id + " answer space too small");
    }
    reg.templates.push_back(std::move(q));
  }

  // The shipped census: 25 stage templates plus the single final question.
  std::map<std::string, int> census;
  for (const QuestionTemplate& q : reg.templates) census[q.configuration]++;
  const std::map<std::string, int> want = {{"1P-B", 3}, {"1P-C", 7}, {"2P", 5},
                                           {"1R", 5},   {"2R", 5},   {"Final", 1}};
  if (census != want) {
    throw std::runtime_error("template registry: configuration census mismatch");
  }
  return reg;
}

const TemplateRegistry& default_template_registry() {
  static const TemplateRegistry reg = load_template_registry(default_template_registry_text());
  return reg;
}

namespace {

// Fills <X>/<X2>/<S>/<S2> against one concrete panel; false when the panel
// cannot satisfy the template.
bool fill_panel_slots(const QuestionTemplate& tmpl, const Puzzle& p, int component,
                      const ComponentPanel& panel, Rng& rng, Binding& b) {
  const std::vector<std::string>& names = slot_names(p.layout, component);
  bool wants_x = has_placeholder(tmpl, "<X>");
  bool wants_x2 = has_placeholder(tmpl, "<X2>");
  bool wants_s = has_placeholder(tmpl, "<S>");
  bool wants_s2 = has_placeholder(tmpl, "<S2>");

  if (wants_x) {
    if (wants_x2 && panel.entities.size() < 2) return false;
    std::vector<int> occupied = slot_set(panel);
    rng.shuffle(occupied);
    if (b.count("<X>") == 0) b["<X>"] = names[static_cast<std::size_t>(occupied[0])];
    if (wants_x2 && b.count("<X2>") == 0) {
      for (int slot : occupied) {
        if (names[static_cast<std::size_t>(slot)] != b["<X>"]) {
          b["<X2>"] = names[static_cast<std::size_t>(slot)];
          break;
        }
      }
      if (b.count("<X2>") == 0) return false;
    }
  }
  if (wants_s) {
    std::vector<std::string> unique;
    for (Shape shape : {Shape::kTriangle, Shape::kSquare, Shape::kPentagon, Shape::kHexagon,
                        Shape::kCircle}) {
      int n = 0;
      for (const Entity& e : panel.entities) n += e.shape == shape ? 1 : 0;
      if (n == 1) unique.push_back(to_string(shape));
    }
    if (unique.empty() || (wants_s2 && unique.size() < 2)) return false;
    rng.shuffle(unique);
    if (b.count("<S>") == 0) b["<S>"] = unique[0];
    if (wants_s2 && b.count("<S2>") == 0) {
      for (const std::string& s : unique) {
        if (s != b["<S>"]) {
          b["<S2>"] = s;
          break;
        }
      }
      if (b.count("<S2>") == 0) return false;
    }
  }
  return true;
}

}  // namespace

std::optional<Binding> bind_placeholders(const QuestionTemplate& tmpl, const Puzzle& p,
                                         int component, Rng& rng, const Binding& pinned) {
  Binding b = pinned;
  const std::string& cfg = tmpl.configuration;
  if (cfg == "Final" || cfg == "2R") return b;
  if (cfg == "1R") {
    if (b.count("<ROW>") == 0) b["<ROW>"] = std::to_string(rng.uniform_int(0, 1));
    return b;
  }
  if (cfg == "2P") {
    if (b.count("<P>") == 0 || b.count("<P2>") == 0) {
      std::vector<std::pair<int, int>> pairs;
      for (const auto& row : {std::vector<int>{0, 1, 2}, std::vector<int>{3, 4, 5},
                              std::vector<int>{6, 7}}) {
        for (int a : row) {
          for (int c : row) {
            if (a != c) pairs.emplace_back(a, c);
          }
        }
      }
      auto pick = pairs[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<int>(pairs.size()) - 1))];
      b["<P>"] = std::to_string(pick.first);
      b["<P2>"] = std::to_string(pick.second);
    }
    return b;
  }

  // Single-panel configurations.
  std::vector<int> cells;
  if (b.count("<P>") > 0) {
    cells = {std::stoi(b.at("<P>"))};
  } else {
    cells = {0, 1, 2, 3, 4, 5, 6, 7};
    rng.shuffle(cells);
  }
  for (int cell : cells) {
    Binding attempt = b;
    attempt["<P>"] = std::to_string(cell);
    if (fill_panel_slots(tmpl, p, component, component_panel(p, cell, component), rng,
                         attempt)) {
      return attempt;
    }
  }
  return std::nullopt;
}

namespace {

struct ExecState {
  const Puzzle* puzzle = nullptr;
  const TemplateRegistry* registry = nullptr;
  int component = 0;
  std::vector<int> panels;
  std::vector<int> rows;
  std::vector<std::vector<const Entity*>> selections;
  std::string answer;
};

const std::string& bound(const Binding& b, const std::string& key) {
  auto it = b.find(key);
  if (it == b.end()) throw ExecError("unbound placeholder " + key);
  return it->second;
}

const ComponentPanel& state_panel(const ExecState& st, std::size_t i) {
  if (i >= st.panels.size()) throw ExecError("panel_retrieve did not supply enough panels");
  return component_panel(*st.puzzle, st.panels[i], st.component);
}

std::string join_args(const std::vector<std::string>& args) {
  std::string out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i > 0) out += ", ";
    out += args[i];
  }
  return out;
}

std::string compare_token(int lhs, int rhs, const char* less, const char* more) {
  if (lhs == rhs) return "The same";
  return lhs < rhs ? less : more;
}

std::optional<int> shared_level(const ComponentPanel& panel, Attribute attr) {
  if (panel.entities.empty()) return std::nullopt;
  auto level = [&](const Entity& e) {
    switch (attr) {
      case Attribute::kShape:
        return edge_rank(e.shape);
      case Attribute::kSize:
        return e.size_level;
      default:
        return e.color_level;
    }
  };
  int v = level(panel.entities.front());
  for (const Entity& e : panel.entities) {
    if (level(e) != v) return std::nullopt;
  }
  return v;
}

Attribute parse_attribute_arg(const std::string& token) {
  std::optional<Attribute> attr = attribute_from_string(token);
  if (!attr) throw ExecError("unknown attribute argument " + token);
  return *attr;
}

std::string relative_position_token(const Puzzle& p, int component, const Entity& a,
                                    const Entity& b) {
  SlotBox ba = slot_box(p.layout, component, a.slot);
  SlotBox bb = slot_box(p.layout, component, b.slot);
  std::string vertical = ba.cy < bb.cy ? "Above" : (ba.cy > bb.cy ? "Below" : "");
  std::string horizontal = ba.cx < bb.cx ? "Left" : (ba.cx > bb.cx ? "Right" : "");
  if (vertical.empty() && horizontal.empty()) {
    throw ExecError("entities share a position; no relative direction");
  }
  if (vertical.empty()) return horizontal;
  if (horizontal.empty()) return vertical;
  return vertical + "-" + horizontal;
}

void exec_step(ExecState& st, const ProgramStep& step, const Binding& b) {
  const std::string& fn = step.function;
  const Puzzle& p = *st.puzzle;

  if (fn == "scene_retrieve") return;
  if (fn == "panel_retrieve") {
    if (step.args.size() == 1 && step.args[0] == "rows") {
      st.rows = {0, 1};
      st.panels = {0, 1, 2, 3, 4, 5};
      return;
    }
    if (step.args.size() == 2 && step.args[0] == "row") {
      int row = std::stoi(bound(b, step.args[1]));
      if (row < 0 || row > 1) throw ExecError("row index out of range");
      st.rows = {row};
      st.panels = {3 * row, 3 * row + 1, 3 * row + 2};
      return;
    }
    for (const std::string& arg : step.args) {
      int cell = std::stoi(bound(b, arg));
      if (cell < 0 || cell > 7) throw ExecError("panel index out of range");
      st.panels.push_back(cell);
    }
    return;
  }
  if (fn == "part_select") return;  // the component was fixed at entry
  if (fn == "filter_position") {
    const ComponentPanel& panel = state_panel(st, 0);
    std::optional<int> slot = slot_from_name(p.layout, st.component, bound(b, step.args.at(0)));
    if (!slot) throw ExecError("unknown position name " + bound(b, step.args.at(0)));
    std::vector<const Entity*> sel;
    if (const Entity* e = entity_at_slot(panel, *slot)) sel.push_back(e);
    st.selections.push_back(sel);
    return;
  }
  if (fn == "filter_shape") {
    const ComponentPanel& panel = state_panel(st, 0);
    std::optional<Shape> shape = shape_from_string(bound(b, step.args.at(0)));
    if (!shape) throw ExecError("unknown shape name " + bound(b, step.args.at(0)));
    std::vector<const Entity*> sel;
    for (const Entity& e : panel.entities) {
      if (e.shape == *shape) sel.push_back(&e);
    }
    st.selections.push_back(sel);
    return;
  }
  if (fn == "filter_unique") {
    if (st.selections.empty()) throw ExecError("filter_unique without a selection");
    if (st.selections.back().size() != 1) {
      throw ExecError("filter_unique: selection has " +
                      std::to_string(st.selections.back().size()) + " entities");
    }
    return;
  }
  if (fn == "count_objects") {
    st.answer = std::to_string(state_panel(st, 0).entities.size());
    return;
  }
  if (fn == "query_shape") {
    if (st.selections.empty() || st.selections.back().empty()) {
      throw ExecError("query_shape without a selected entity");
    }
    st.answer = to_string(st.selections.back().front()->shape);
    return;
  }
  if (fn == "query_position") {
    if (st.selections.empty() || st.selections.back().empty()) {
      throw ExecError("query_position without a selected entity");
    }
    st.answer = slot_names(p.layout, st.component)[static_cast<std::size_t>(
        st.selections.back().front()->slot)];
    return;
  }
  if (fn == "query_relative_position") {
    if (st.selections.size() < 2 || st.selections[0].empty() || st.selections[1].empty()) {
      throw ExecError("query_relative_position needs two selected entities");
    }
    st.answer = relative_position_token(p, st.component, *st.selections[0].front(),
                                        *st.selections[1].front());
    return;
  }
  if (fn == "compare_edges" || fn == "compare_size" || fn == "compare_color") {
    if (st.selections.size() < 2 || st.selections[0].empty() || st.selections[1].empty()) {
      throw ExecError(fn + " needs two selected entities");
    }
    const Entity& e1 = *st.selections[0].front();
    const Entity& e2 = *st.selections[1].front();
    if (fn == "compare_edges") {
      st.answer = compare_token(edge_rank(e1.shape), edge_rank(e2.shape), "Fewer", "More");
    } else if (fn == "compare_size") {
      st.answer = compare_token(e1.size_level, e2.size_level, "Smaller", "Larger");
    } else {
      st.answer = compare_token(e1.color_level, e2.color_level, "Brighter", "Darker");
    }
    return;
  }
  if (fn == "same_attribute_all") {
    const ComponentPanel& panel = state_panel(st, 0);
    if (panel.entities.size() == 1) {
      st.answer = "Only one object";
    } else {
      st.answer = shared_level(panel, parse_attribute_arg(step.args.at(0))) ? "Yes" : "No";
    }
    return;
  }
  if (fn == "compare_count_panels") {
    int a = static_cast<int>(state_panel(st, 0).entities.size());
    int c = static_cast<int>(state_panel(st, 1).entities.size());
    st.answer = compare_token(a, c, "Fewer", "More");
    return;
  }
  if (fn == "compare_panel_attribute") {
    const ComponentPanel& a = state_panel(st, 0);
    const ComponentPanel& c = state_panel(st, 1);
    const std::string& token = step.args.at(0);
    if (token == "position") {
      st.answer = slot_set(a) == slot_set(c) ? "Yes" : "No";
      return;
    }
    Attribute attr = parse_attribute_arg(token);
    std::optional<int> va = shared_level(a, attr);
    std::optional<int> vc = shared_level(c, attr);
    if (!va || !vc) {
      st.answer = "Not comparable";
    } else if (attr == Attribute::kShape) {
      st.answer = compare_token(*va, *vc, "Fewer", "More");
    } else if (attr == Attribute::kSize) {
      st.answer = compare_token(*va, *vc, "Smaller", "Larger");
    } else {
      st.answer = compare_token(*va, *vc, "Brighter", "Darker");
    }
    return;
  }
  if (fn == "query_rule") {
    Attribute attr = parse_attribute_arg(step.args.at(0));
    for (const RuleSpec& rule : p.rules) {
      if (rule.component == st.component && rule.attribute == attr) {
        st.answer = st.registry->rule_sentence(attr, rule.kind);
        return;
      }
    }
    throw ExecError(std::string("no rule annotation for attribute ") + to_string(attr));
  }
  if (fn == "query_final_answer") {
    st.answer = std::to_string(p.correct_index);
    return;
  }
  throw ExecError("unknown program function " + fn);
}

}  // namespace

ExecResult exec_program(const QuestionTemplate& tmpl, const TemplateRegistry& registry,
                        const Puzzle& p, int component, const Binding& b) {
  if (component < 0 || component >= component_count(p.layout)) {
    throw ExecError("component index out of range");
  }
  ExecState st;
  st.puzzle = &p;
  st.registry = &registry;
  st.component = component;
  ExecResult result;
  for (const ProgramStep& step : tmpl.program) {
    exec_step(st, step, b);
    std::ostringstream os;
    os << step.function << "(" << join_args(step.args) << ")";
    if (!st.answer.empty()) os << " -> " << st.answer;
    result.trace.push_back(os.str());
  }
  if (st.answer.empty()) throw ExecError("program for " + tmpl.id + " produced no answer");
  result.answer = st.answer;
  return result;
}

ChoiceSet sample_choices(const std::string& gt, const std::vector<std::string>& space, Rng& rng,
                         int max_choices) {
  if (std::find(space.begin(), space.end(), gt) == space.end()) {
    throw ExecError("ground truth is not in the answer space");
  }
  std::vector<std::string> pool;
  for (const std::string& s : space) {
    if (s != gt) pool.push_back(s);
  }
  int k = std::min<int>(max_choices, static_cast<int>(space.size()));
  std::vector<std::string> texts = rng.sample(pool, k - 1);
  texts.push_back(gt);
  rng.shuffle(texts);

  ChoiceSet out;
  out.texts = texts;
  for (int i = 0; i < k; ++i) {
    out.labels.push_back(std::string(1, static_cast<char>('A' + i)));
    if (texts[static_cast<std::size_t>(i)] == gt) out.gt_label = out.labels.back();
  }
  return out;
}

ChoiceSet build_choices(const QuestionTemplate& tmpl, const TemplateRegistry& registry,
                        const Puzzle& p, int component, const Binding& b, const std::string& gt,
                        Rng& rng) {
  if (tmpl.configuration == "Final") {
    ChoiceSet out;
    out.labels = tmpl.answer_space;
    out.texts = tmpl.answer_space;
    out.gt_label = gt;
    return out;
  }

  std::vector<std::string> space = tmpl.answer_space;
  if (tmpl.configuration == "1R" || tmpl.configuration == "2R") {
    // Drop rule sentences that also hold on the shown rows; the remaining
    // distractors are all refutable from the image.
    std::optional<Attribute> attr = attribute_from_string(tmpl.attribute);
    std::vector<int> row_ids =
        tmpl.configuration == "1R" ? std::vector<int>{std::stoi(bound(b, "<ROW>"))}
                                   : std::vector<int>{0, 1};
    std::vector<ComponentRow> rows;
    for (int r : row_ids) {
      rows.push_back({&component_panel(p, 3 * r, component),
                      &component_panel(p, 3 * r + 1, component),
                      &component_panel(p, 3 * r + 2, component)});
    }
    std::vector<std::string> filtered;
    for (const std::string& sentence : space) {
      if (sentence == gt) {
        filtered.push_back(sentence);
        continue;
      }
      std::optional<RuleKind> kind = registry.kind_of_sentence(*attr, sentence);
      if (kind && rule_true_on_rows(*attr, *kind, rows)) continue;
      filtered.push_back(sentence);
    }
    space = filtered;
  }

  bool dynamic_gt = std::find(tmpl.dynamic_answers.begin(), tmpl.dynamic_answers.end(), gt) !=
                    tmpl.dynamic_answers.end();
  if (dynamic_gt) space.push_back(gt);
  return sample_choices(gt, space, rng, 4);
}

std::string realize_question(const QuestionTemplate& tmpl, const TemplateRegistry& registry,
                             const Puzzle& p, int component, const Binding& b,
                             int paraphrase_index) {
  const std::vector<std::string>& pool = tmpl.paraphrases;
  std::string text = pool.empty()
                         ? tmpl.pattern
                         : pool[static_cast<std::size_t>(paraphrase_index) % pool.size()];

  // Single-object panels make "the object at <X>" redundant.
  if (has_placeholder(tmpl, "<X>") && !has_placeholder(tmpl, "<X2>") && b.count("<P>") > 0) {
    const ComponentPanel& panel = component_panel(p, std::stoi(b.at("<P>")), component);
    if (panel.entities.size() == 1) replace_all(text, " at <X>", "");
  }

  for (const char* key : {"<X>", "<X2>", "<S>", "<S2>"}) {
    auto it = b.find(key);
    if (it != b.end()) replace_all(text, key, it->second);
  }

  const std::string& cfg = tmpl.configuration;
  if (cfg == "2P") {
    replace_all(text, "panel <P>", "the left panel");
    replace_all(text, "panel <P2>", "the right panel");
  } else if (cfg == "1P-B" || cfg == "1P-C") {
    replace_all(text, "In panel <P>,", "In this panel,");
    replace_all(text, "panel <P>", "the panel");
  }

  if (component_count(p.layout) > 1 && cfg != "Final") {
    std::string part = to_string(layout_parts(p.layout)[static_cast<std::size_t>(component)]);
    if (cfg == "1P-B" || cfg == "1P-C") {
      replace_all(text, "the panel", "the " + part + " part of the panel");
      replace_all(text, "this panel", "the " + part + " part of the panel");
    } else if (cfg == "2P") {
      text = "Consider only the " + part + " part of the two panels in the image. " + text;
    } else if (cfg == "1R") {
      text = "Consider only the " + part + " part of the three panels in the image. " + text;
    } else if (cfg == "2R") {
      text = "Consider only the " + part + " part of the panels in the image. " + text;
    }
  }

  if (tmpl.attribute == "shape" && (cfg == "1R" || cfg == "2R")) {
    text += registry.shape_note;
  }
  return text;
}

std::vector<int> panels_for_binding(const QuestionTemplate& tmpl, const Binding& b) {
  const std::string& cfg = tmpl.configuration;
  if (cfg == "Final") return {0, 1, 2, 3, 4, 5, 6, 7};
  if (cfg == "2R") return {0, 1, 2, 3, 4, 5};
  if (cfg == "1R") {
    int row = std::stoi(bound(b, "<ROW>"));
    return {3 * row, 3 * row + 1, 3 * row + 2};
  }
  if (cfg == "2P") return {std::stoi(bound(b, "<P>")), std::stoi(bound(b, "<P2>"))};
  return {std::stoi(bound(b, "<P>"))};
}

std::string image_key_for(const std::string& configuration, const std::vector<int>& panels) {
  if (configuration == "Final") return "final";
  if (configuration == "2R") return "2r";
  if (configuration == "1R") return "1r_" + std::to_string(panels.at(0) / 3);
  if (configuration == "2P") {
    return "2p_" + std::to_string(panels.at(0)) + "_" + std::to_string(panels.at(1));
  }
  return "1p_" + std::to_string(panels.at(0));
}

namespace {

QAItem make_item(const QuestionTemplate& tmpl, const TemplateRegistry& registry,
                 const Puzzle& p, int component, const Binding& b, Rng& rng,
                 const QuestionOptions& opts) {
  QAItem qa;
  qa.puzzle_id = p.id;
  qa.configuration = tmpl.configuration;
  qa.attribute = tmpl.attribute;
  qa.template_id = tmpl.id;
  qa.component = component;
  if (component_count(p.layout) > 1 && tmpl.configuration != "Final") {
    qa.part = to_string(layout_parts(p.layout)[static_cast<std::size_t>(component)]);
  }
  qa.panels = panels_for_binding(tmpl, b);
  qa.image_key = image_key_for(tmpl.configuration, qa.panels);
  qa.binding = b;

  ExecResult res = exec_program(tmpl, registry, p, component, b);
  qa.gt_text = res.answer;
  qa.trace = std::move(res.trace);

  ChoiceSet cs = build_choices(tmpl, registry, p, component, b, qa.gt_text, rng);
  qa.choice_labels = std::move(cs.labels);
  qa.choice_texts = std::move(cs.texts);
  qa.gt_label = cs.gt_label;

  int pool = static_cast<int>(tmpl.paraphrases.size());
  if (opts.paraphrase_pool > 0) pool = std::min(pool, opts.paraphrase_pool);
  int idx = pool > 1 ? rng.uniform_int(0, pool - 1) : 0;
  qa.question = realize_question(tmpl, registry, p, component, b, idx);

  qa.qa_id = p.id + ":" + tmpl.id;
  if (!qa.part.empty()) qa.qa_id += ":" + qa.part;
  return qa;
}

}  // namespace

std::vector<QAItem> generate_direct(const Puzzle& p, const TemplateRegistry& registry,
                                    std::uint64_t seed, const QuestionOptions& opts) {
  std::vector<QAItem> out;
  Rng rng(derive_seed(seed, fnv1a64(p.id)));
  for (int c = 0; c < component_count(p.layout); ++c) {
    for (const QuestionTemplate& tmpl : registry.templates) {
      if (tmpl.configuration == "Final") continue;
      std::optional<Binding> b = bind_placeholders(tmpl, p, c, rng);
      if (!b) continue;
      out.push_back(make_item(tmpl, registry, p, c, *b, rng, opts));
    }
  }
  const QuestionTemplate* final_tmpl = registry.find("final");
  if (final_tmpl != nullptr) {
    out.push_back(make_item(*final_tmpl, registry, p, 0, Binding{}, rng, opts));
  }
  return out;
}

Json qa_to_json(const QAItem& qa) {
  Json j;
  j["qa_id"] = qa.qa_id;
  j["puzzle_id"] = qa.puzzle_id;
  j["configuration"] = qa.configuration;
  j["attribute"] = qa.attribute;
  j["template_id"] = qa.template_id;
  j["component"] = qa.component;
  j["part"] = qa.part;
  j["image_key"] = qa.image_key;
  j["panels"] = qa.panels;
  j["question"] = qa.question;
  j["choices"] = Json{{"labels", qa.choice_labels}, {"texts", qa.choice_texts}};
  j["gt_label"] = qa.gt_label;
  j["gt_text"] = qa.gt_text;
  j["binding"] = qa.binding;
  j["trace"] = qa.trace;
  return j;
}

QAItem qa_from_json(const Json& j) {
  QAItem qa;
  qa.qa_id = j.at("qa_id").get<std::string>();
  qa.puzzle_id = j.at("puzzle_id").get<std::string>();
  qa.configuration = j.at("configuration").get<std::string>();
  qa.attribute = j.at("attribute").get<std::string>();
  qa.template_id = j.at("template_id").get<std::string>();
  qa.component = j.at("component").get<int>();
  qa.part = j.at("part").get<std::string>();
  qa.image_key = j.at("image_key").get<std::string>();
  qa.panels = j.at("panels").get<std::vector<int>>();
  qa.question = j.at("question").get<std::string>();
  qa.choice_labels = j.at("choices").at("labels").get<std::vector<std::string>>();
  qa.choice_texts = j.at("choices").at("texts").get<std::vector<std::string>>();
  qa.gt_label = j.at("gt_label").get<std::string>();
  qa.gt_text = j.at("gt_text").get<std::string>();
  qa.binding = j.at("binding").get<Binding>();
  qa.trace = j.at("trace").get<std::vector<std::string>>();
  return qa;
}

}  // namespace ravenkit
