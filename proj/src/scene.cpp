#include "ravenkit/scene.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace ravenkit {

const char* to_string(Layout v) {
  switch (v) {
    case Layout::kCenterSingle: return "center_single";
    case Layout::kGrid2x2: return "grid_2x2";
    case Layout::kGrid3x3: return "grid_3x3";
    case Layout::kLeftRight: return "left_right";
    case Layout::kUpDown: return "up_down";
    case Layout::kOutInSingle: return "out_in_single";
    case Layout::kOutInGrid: return "out_in_grid";
  }
  return "?";
}

const char* to_string(Part v) {
  switch (v) {
    case Part::kWhole: return "whole";
    case Part::kLeft: return "left";
    case Part::kRight: return "right";
    case Part::kTop: return "top";
    case Part::kBottom: return "bottom";
    case Part::kOuter: return "outer";
    case Part::kInner: return "inner";
  }
  return "?";
}

const char* to_string(Shape v) {
  switch (v) {
    case Shape::kTriangle: return "triangle";
    case Shape::kSquare: return "square";
    case Shape::kPentagon: return "pentagon";
    case Shape::kHexagon: return "hexagon";
    case Shape::kCircle: return "circle";
  }
  return "?";
}

const char* to_string(Attribute v) {
  switch (v) {
    case Attribute::kNumber: return "number";
    case Attribute::kPosition: return "position";
    case Attribute::kShape: return "shape";
    case Attribute::kSize: return "size";
    case Attribute::kColor: return "color";
  }
  return "?";
}

const char* to_string(RuleKind v) {
  switch (v) {
    case RuleKind::kConstant: return "constant";
    case RuleKind::kProgressionPlus1: return "progression_plus_1";
    case RuleKind::kProgressionMinus1: return "progression_minus_1";
    case RuleKind::kDistributeThree: return "distribute_three";
    case RuleKind::kArithmeticPlus: return "arithmetic_plus";
    case RuleKind::kArithmeticMinus: return "arithmetic_minus";
    case RuleKind::kPositionUnion: return "position_union";
    case RuleKind::kPositionComplement: return "position_complement";
    case RuleKind::kNoClearRule: return "no_clear_rule";
  }
  return "?";
}

namespace {

template <typename T>
std::optional<T> parse_enum(const std::string& s, const std::vector<T>& values) {
  for (T v : values) {
    if (s == to_string(v)) return v;
  }
  return std::nullopt;
}

}  // namespace

std::optional<Layout> layout_from_string(const std::string& s) {
  return parse_enum<Layout>(s, {Layout::kCenterSingle, Layout::kGrid2x2, Layout::kGrid3x3,
                                Layout::kLeftRight, Layout::kUpDown, Layout::kOutInSingle,
                                Layout::kOutInGrid});
}

std::optional<Part> part_from_string(const std::string& s) {
  return parse_enum<Part>(s, {Part::kWhole, Part::kLeft, Part::kRight, Part::kTop,
                              Part::kBottom, Part::kOuter, Part::kInner});
}

std::optional<Shape> shape_from_string(const std::string& s) {
  return parse_enum<Shape>(s, {Shape::kTriangle, Shape::kSquare, Shape::kPentagon,
                               Shape::kHexagon, Shape::kCircle});
}

std::optional<Attribute> attribute_from_string(const std::string& s) {
  return parse_enum<Attribute>(s, {Attribute::kNumber, Attribute::kPosition, Attribute::kShape,
                                   Attribute::kSize, Attribute::kColor});
}

std::optional<RuleKind> rule_kind_from_string(const std::string& s) {
  return parse_enum<RuleKind>(
      s, {RuleKind::kConstant, RuleKind::kProgressionPlus1, RuleKind::kProgressionMinus1,
          RuleKind::kDistributeThree, RuleKind::kArithmeticPlus, RuleKind::kArithmeticMinus,
          RuleKind::kPositionUnion, RuleKind::kPositionComplement, RuleKind::kNoClearRule});
}

int edge_rank(Shape s) { return static_cast<int>(s); }

Shape shape_from_rank(int rank) {
  if (rank < 0 || rank > 4) throw std::out_of_range("shape rank out of range");
  return static_cast<Shape>(rank);
}

namespace {

struct ComponentGeometry {
  Part part;
  std::vector<SlotBox> boxes;
  std::vector<std::string> names;
};

struct LayoutGeometry {
  std::vector<Part> parts;
  std::vector<ComponentGeometry> components;
};

const std::map<Layout, LayoutGeometry>& geometry_table() {
  static const std::map<Layout, LayoutGeometry> table = [] {
    std::map<Layout, LayoutGeometry> t;
    t[Layout::kCenterSingle] = {
        {Part::kWhole},
        {{Part::kWhole, {{500, 500, 1000}}, {"center"}}}};
    t[Layout::kGrid2x2] = {
        {Part::kWhole},
        {{Part::kWhole,
          {{250, 250, 500}, {750, 250, 500}, {250, 750, 500}, {750, 750, 500}},
          {"top-left", "top-right", "bottom-left", "bottom-right"}}}};
    t[Layout::kGrid3x3] = {
        {Part::kWhole},
        {{Part::kWhole,
          {{166, 166, 333}, {500, 166, 333}, {833, 166, 333},
           {166, 500, 333}, {500, 500, 333}, {833, 500, 333},
           {166, 833, 333}, {500, 833, 333}, {833, 833, 333}},
          {"top-left", "top-center", "top-right",
           "middle-left", "middle-center", "middle-right",
           "bottom-left", "bottom-center", "bottom-right"}}}};
    t[Layout::kLeftRight] = {
        {Part::kLeft, Part::kRight},
        {{Part::kLeft, {{250, 500, 500}}, {"left"}},
         {Part::kRight, {{750, 500, 500}}, {"right"}}}};
    t[Layout::kUpDown] = {
        {Part::kTop, Part::kBottom},
        {{Part::kTop, {{500, 250, 500}}, {"top"}},
         {Part::kBottom, {{500, 750, 500}}, {"bottom"}}}};
    t[Layout::kOutInSingle] = {
        {Part::kOuter, Part::kInner},
        {{Part::kOuter, {{500, 500, 1000}}, {"outer-part"}},
         {Part::kInner, {{500, 500, 340}}, {"inner-part"}}}};
    t[Layout::kOutInGrid] = {
        {Part::kOuter, Part::kInner},
        {{Part::kOuter, {{500, 500, 1000}}, {"outer-part"}},
         {Part::kInner,
          {{390, 390, 220}, {610, 390, 220}, {390, 610, 220}, {610, 610, 220}},
          {"top-left of the inner part", "top-right of the inner part",
           "bottom-left of the inner part", "bottom-right of the inner part"}}}};
    return t;
  }();
  return table;
}

const ComponentGeometry& component_geometry(Layout layout, int component) {
  const auto& geo = geometry_table().at(layout);
  if (component < 0 || component >= static_cast<int>(geo.components.size())) {
    throw std::out_of_range("component index out of range");
  }
  return geo.components[static_cast<std::size_t>(component)];
}

}  // namespace

const std::vector<Part>& layout_parts(Layout layout) {
  return geometry_table().at(layout).parts;
}

int component_count(Layout layout) {
  return static_cast<int>(geometry_table().at(layout).components.size());
}

int slot_count(Layout layout, int component) {
  return static_cast<int>(component_geometry(layout, component).boxes.size());
}

SlotBox slot_box(Layout layout, int component, int slot) {
  const auto& geo = component_geometry(layout, component);
  if (slot < 0 || slot >= static_cast<int>(geo.boxes.size())) {
    throw std::out_of_range("slot index out of range");
  }
  return geo.boxes[static_cast<std::size_t>(slot)];
}

const std::vector<std::string>& slot_names(Layout layout, int component) {
  return component_geometry(layout, component).names;
}

const std::vector<std::string>& position_vocabulary() {
  // Union of every layout's slot names, in the canonical registry order.
  static const std::vector<std::string> vocab = {
      "center", "left", "right", "top", "bottom",
      "top-left", "top-right", "bottom-left", "bottom-right",
      "top-center", "middle-left", "middle-center", "middle-right", "bottom-center",
      "outer-part", "inner-part",
      "top-left of the inner part", "top-right of the inner part",
      "bottom-left of the inner part", "bottom-right of the inner part"};
  return vocab;
}

std::optional<int> slot_from_name(Layout layout, int component, const std::string& name) {
  const auto& names = component_geometry(layout, component).names;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

const Entity* entity_at_slot(const ComponentPanel& panel, int slot) {
  for (const auto& e : panel.entities) {
    if (e.slot == slot) return &e;
  }
  return nullptr;
}

std::vector<int> slot_set(const ComponentPanel& panel) {
  std::vector<int> slots;
  slots.reserve(panel.entities.size());
  for (const auto& e : panel.entities) slots.push_back(e.slot);
  std::sort(slots.begin(), slots.end());
  return slots;
}

namespace {

bool rule_kind_legal(Attribute attr, RuleKind kind) {
  if (kind == RuleKind::kNoClearRule || kind == RuleKind::kConstant ||
      kind == RuleKind::kDistributeThree) {
    return true;
  }
  switch (attr) {
    case Attribute::kNumber:
    case Attribute::kSize:
    case Attribute::kColor:
      return kind == RuleKind::kProgressionPlus1 || kind == RuleKind::kProgressionMinus1 ||
             kind == RuleKind::kArithmeticPlus || kind == RuleKind::kArithmeticMinus;
    case Attribute::kShape:
      return kind == RuleKind::kProgressionPlus1 || kind == RuleKind::kProgressionMinus1;
    case Attribute::kPosition:
      return kind == RuleKind::kPositionUnion || kind == RuleKind::kPositionComplement;
  }
  return false;
}

void check_panel(const Puzzle& p, const Panel& panel, const std::string& where,
                 std::vector<Violation>& out) {
  int comps = component_count(p.layout);
  if (static_cast<int>(panel.components.size()) != comps) {
    out.push_back({"component_count",
                   where + ": expected " + std::to_string(comps) + " components, got " +
                       std::to_string(panel.components.size())});
    return;
  }
  for (int c = 0; c < comps; ++c) {
    const auto& cp = panel.components[static_cast<std::size_t>(c)];
    int slots = slot_count(p.layout, c);
    std::set<int> seen;
    int prev = -1;
    for (const auto& e : cp.entities) {
      if (e.slot < 0 || e.slot >= slots) {
        out.push_back({"slot_range", where + ": slot " + std::to_string(e.slot)});
      } else if (!seen.insert(e.slot).second) {
        out.push_back({"slot_duplicate", where + ": slot " + std::to_string(e.slot)});
      }
      if (e.slot <= prev) {
        out.push_back({"slot_order", where + ": entities not sorted by slot"});
      }
      prev = e.slot;
      if (e.size_level < 0 || e.size_level >= kSizeLevels) {
        out.push_back({"size_range", where + ": size level " + std::to_string(e.size_level)});
      }
      if (e.color_level < 0 || e.color_level >= kColorLevels) {
        out.push_back({"color_range", where + ": color level " + std::to_string(e.color_level)});
      }
      if (e.angle_level < 0 || e.angle_level >= kAngleLevels) {
        out.push_back({"angle_range", where + ": angle level " + std::to_string(e.angle_level)});
      }
    }
    if (cp.entities.empty()) {
      out.push_back({"empty_component", where + ": component " + std::to_string(c)});
    }
  }
}

}  // namespace

ValidationReport validate_puzzle(const Puzzle& p) {
  ValidationReport report;
  auto& out = report.violations;
  if (p.context.size() != 8) {
    out.push_back({"context_count", "expected 8 context panels, got " +
                                        std::to_string(p.context.size())});
  }
  if (p.candidates.size() != 8) {
    out.push_back({"candidate_count", "expected 8 candidates, got " +
                                          std::to_string(p.candidates.size())});
  }
  if (p.correct_index < 1 || p.correct_index > static_cast<int>(p.candidates.size())) {
    out.push_back({"correct_index", std::to_string(p.correct_index)});
  }
  for (std::size_t i = 0; i < p.context.size(); ++i) {
    check_panel(p, p.context[i], "context[" + std::to_string(i) + "]", out);
  }
  for (std::size_t i = 0; i < p.candidates.size(); ++i) {
    check_panel(p, p.candidates[i], "candidate[" + std::to_string(i) + "]", out);
  }

  int comps = component_count(p.layout);
  std::set<std::pair<int, Attribute>> covered;
  for (const auto& rule : p.rules) {
    if (rule.component < 0 || rule.component >= comps) {
      out.push_back({"rule_component", std::to_string(rule.component)});
      continue;
    }
    if (!rule_kind_legal(rule.attribute, rule.kind)) {
      out.push_back({"rule_kind",
                     std::string(to_string(rule.attribute)) + "/" + to_string(rule.kind)});
    }
    if (!covered.insert({rule.component, rule.attribute}).second) {
      out.push_back({"rule_duplicate",
                     std::string(to_string(rule.attribute)) + " component " +
                         std::to_string(rule.component)});
    }
  }
  if (static_cast<int>(covered.size()) != comps * 5 ||
      static_cast<int>(p.rules.size()) != comps * 5) {
    out.push_back({"rule_coverage", "expected 5 rules per component"});
  }
  return report;
}

Json entity_to_json(const Entity& e) {
  Json j;
  j["slot"] = e.slot;
  j["shape"] = to_string(e.shape);
  j["size"] = e.size_level;
  j["color"] = e.color_level;
  j["angle"] = e.angle_level;
  return j;
}

Entity entity_from_json(const Json& j) {
  Entity e;
  e.slot = j.at("slot").get<int>();
  auto shape = shape_from_string(j.at("shape").get<std::string>());
  if (!shape) throw std::runtime_error("bad shape: " + j.at("shape").get<std::string>());
  e.shape = *shape;
  e.size_level = j.at("size").get<int>();
  e.color_level = j.at("color").get<int>();
  e.angle_level = j.at("angle").get<int>();
  return e;
}

Json panel_to_json(const Panel& p) {
  Json comps = Json::array();
  for (const auto& cp : p.components) {
    Json entities = Json::array();
    for (const auto& e : cp.entities) entities.push_back(entity_to_json(e));
    comps.push_back(std::move(entities));
  }
  return comps;
}

Panel panel_from_json(const Json& j) {
  Panel p;
  for (const auto& comp : j) {
    ComponentPanel cp;
    for (const auto& e : comp) cp.entities.push_back(entity_from_json(e));
    p.components.push_back(std::move(cp));
  }
  return p;
}

Json puzzle_to_json(const Puzzle& p) {
  Json j;
  j["id"] = p.id;
  j["layout"] = to_string(p.layout);
  j["seed"] = p.seed;
  Json context = Json::array();
  for (const auto& panel : p.context) context.push_back(panel_to_json(panel));
  j["context"] = std::move(context);
  Json candidates = Json::array();
  for (const auto& panel : p.candidates) candidates.push_back(panel_to_json(panel));
  j["candidates"] = std::move(candidates);
  j["correct_index"] = p.correct_index;
  Json rules = Json::array();
  for (const auto& rule : p.rules) {
    Json r;
    r["component"] = rule.component;
    r["attribute"] = to_string(rule.attribute);
    r["kind"] = to_string(rule.kind);
    rules.push_back(std::move(r));
  }
  j["rules"] = std::move(rules);
  return j;
}

Puzzle puzzle_from_json(const Json& j) {
  Puzzle p;
  p.id = j.at("id").get<std::string>();
  auto layout = layout_from_string(j.at("layout").get<std::string>());
  if (!layout) throw std::runtime_error("bad layout: " + j.at("layout").get<std::string>());
  p.layout = *layout;
  p.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& panel : j.at("context")) p.context.push_back(panel_from_json(panel));
  for (const auto& panel : j.at("candidates")) p.candidates.push_back(panel_from_json(panel));
  p.correct_index = j.at("correct_index").get<int>();
  for (const auto& r : j.at("rules")) {
    RuleSpec rule;
    rule.component = r.at("component").get<int>();
    auto attr = attribute_from_string(r.at("attribute").get<std::string>());
    auto kind = rule_kind_from_string(r.at("kind").get<std::string>());
    if (!attr || !kind) throw std::runtime_error("bad rule spec");
    rule.attribute = *attr;
    rule.kind = *kind;
    p.rules.push_back(rule);
  }
  return p;
}

}  // namespace ravenkit
