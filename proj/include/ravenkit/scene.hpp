#pragma once
// Scene model for RAVEN-style 3x3 matrix puzzles: layouts, slot geometry,
// entities, rule annotations, and structural validation.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace ravenkit {

using Json = nlohmann::ordered_json;

enum class Layout {
  kCenterSingle,
  kGrid2x2,
  kGrid3x3,
  kLeftRight,
  kUpDown,
  kOutInSingle,
  kOutInGrid,
};

enum class Part { kWhole, kLeft, kRight, kTop, kBottom, kOuter, kInner };

enum class Shape { kTriangle, kSquare, kPentagon, kHexagon, kCircle };

enum class Attribute { kNumber, kPosition, kShape, kSize, kColor };

enum class RuleKind {
  kConstant,
  kProgressionPlus1,
  kProgressionMinus1,
  kDistributeThree,
  kArithmeticPlus,
  kArithmeticMinus,
  kPositionUnion,
  kPositionComplement,
  kNoClearRule,
};

constexpr int kSizeLevels = 6;    // bounding-box scale (4 + level) / 10
constexpr int kColorLevels = 10;  // fill level 0 = white .. 9 = black
constexpr int kAngleLevels = 8;   // rotation in steps of 45 degrees

const char* to_string(Layout);
const char* to_string(Part);
const char* to_string(Shape);
const char* to_string(Attribute);
const char* to_string(RuleKind);
std::optional<Layout> layout_from_string(const std::string&);
std::optional<Part> part_from_string(const std::string&);
std::optional<Shape> shape_from_string(const std::string&);
std::optional<Attribute> attribute_from_string(const std::string&);
std::optional<RuleKind> rule_kind_from_string(const std::string&);

constexpr Attribute kAllAttributes[] = {
    Attribute::kNumber, Attribute::kPosition, Attribute::kShape,
    Attribute::kSize, Attribute::kColor};

// triangle=0, square=1, pentagon=2, hexagon=3, circle=4; comparisons and
// shape progressions run over this rank.
int edge_rank(Shape);
Shape shape_from_rank(int rank);

inline int size_scale_per_mille(int size_level) { return (4 + size_level) * 100; }
inline int color_fill_value(int color_level) { return 255 - (255 * color_level) / 9; }

struct Entity {
  int slot = 0;  // index into the component's slot table
  Shape shape = Shape::kTriangle;
  int size_level = 0;
  int color_level = 0;
  int angle_level = 0;
};

struct ComponentPanel {
  std::vector<Entity> entities;  // kept sorted by slot, at most one per slot
};

struct Panel {
  std::vector<ComponentPanel> components;  // one per layout part
};

struct RuleSpec {
  int component = 0;
  Attribute attribute = Attribute::kNumber;
  RuleKind kind = RuleKind::kConstant;
};

struct Puzzle {
  std::string id;
  Layout layout = Layout::kCenterSingle;
  std::uint64_t seed = 0;
  std::vector<Panel> context;     // cells 0..7 row-major; cell 8 is the blank
  std::vector<Panel> candidates;  // 8 answer options
  int correct_index = 1;          // 1-based index into candidates
  std::vector<RuleSpec> rules;    // 5 per component
};

const std::vector<Part>& layout_parts(Layout);
int component_count(Layout);
int slot_count(Layout, int component);

// Slot centers and bounding boxes in per-mille panel units.
struct SlotBox {
  int cx = 0;
  int cy = 0;
  int box = 0;  // side of the square the entity must fit in
};
SlotBox slot_box(Layout, int component, int slot);

const std::vector<std::string>& slot_names(Layout, int component);
const std::vector<std::string>& position_vocabulary();
std::optional<int> slot_from_name(Layout, int component, const std::string& name);

const Entity* entity_at_slot(const ComponentPanel&, int slot);
std::vector<int> slot_set(const ComponentPanel&);

struct Violation {
  std::string code;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate_puzzle(const Puzzle&);

Json entity_to_json(const Entity&);
Entity entity_from_json(const Json&);
Json panel_to_json(const Panel&);
Panel panel_from_json(const Json&);
Json puzzle_to_json(const Puzzle&);
Puzzle puzzle_from_json(const Json&);

}  // namespace ravenkit
