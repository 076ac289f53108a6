#include "ravenkit/gen.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ravenkit/verify.hpp"

namespace ravenkit {

namespace {

constexpr int kMaxPuzzleAttempts = 64;
constexpr int kMaxSampleRetries = 256;

int attr_index(Attribute a) { return static_cast<int>(a); }

bool outer_locked(Layout layout, int component) {
  return (layout == Layout::kOutInSingle || layout == Layout::kOutInGrid) && component == 0;
}

// A triangle in the outer ring would intersect the inner box, so outer
// components draw square and up only.
std::vector<int> allowed_shape_ranks(Layout layout, int component) {
  if (outer_locked(layout, component)) return {1, 2, 3, 4};
  return {0, 1, 2, 3, 4};
}

std::vector<int> allowed_sizes(Layout layout, int component) {
  // Outer rings stay large so the inner component remains visible.
  if (outer_locked(layout, component)) return {4, 5};
  return {0, 1, 2, 3, 4, 5};
}

std::vector<int> allowed_colors(Layout layout, int component) {
  if (outer_locked(layout, component)) return {0};
  return {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
}

struct ComponentPlan {
  std::array<RuleKind, 5> kind;   // indexed by Attribute
  std::array<bool, 5> per_slot{}; // constant shape/size/color varying by slot
};

struct PairPlan {
  RuleKind number;
  RuleKind position;
};

std::vector<PairPlan> pair_options(int m) {
  std::vector<PairPlan> opts;
  opts.push_back({RuleKind::kConstant, RuleKind::kConstant});
  if (m >= 3) {
    opts.push_back({RuleKind::kConstant, RuleKind::kDistributeThree});
    opts.push_back({RuleKind::kDistributeThree, RuleKind::kDistributeThree});
    opts.push_back({RuleKind::kArithmeticPlus, RuleKind::kPositionUnion});
    opts.push_back({RuleKind::kArithmeticMinus, RuleKind::kPositionComplement});
  }
  if (m >= 4) opts.push_back({RuleKind::kProgressionPlus1, RuleKind::kPositionUnion});
  if (m >= 5) opts.push_back({RuleKind::kProgressionMinus1, RuleKind::kPositionComplement});
  return opts;
}

std::vector<RuleKind> value_kind_options(Attribute attr, Layout layout, int component) {
  if (outer_locked(layout, component) && attr != Attribute::kShape) {
    return {RuleKind::kConstant};
  }
  std::vector<RuleKind> kinds = {RuleKind::kConstant, RuleKind::kProgressionPlus1,
                                 RuleKind::kProgressionMinus1, RuleKind::kDistributeThree};
  if (attr == Attribute::kSize || attr == Attribute::kColor) {
    kinds.push_back(RuleKind::kArithmeticPlus);
    kinds.push_back(RuleKind::kArithmeticMinus);
  }
  return kinds;
}

std::vector<ComponentPlan> sample_plan(Layout layout, Rng& rng) {
  std::vector<ComponentPlan> plans;
  for (int c = 0; c < component_count(layout); ++c) {
    int m = slot_count(layout, c);
    ComponentPlan plan;
    PairPlan pair = rng.pick(pair_options(m));
    plan.kind[attr_index(Attribute::kNumber)] = pair.number;
    plan.kind[attr_index(Attribute::kPosition)] = pair.position;
    for (Attribute attr : {Attribute::kShape, Attribute::kSize, Attribute::kColor}) {
      plan.kind[attr_index(attr)] = rng.pick(value_kind_options(attr, layout, c));
    }
    bool slots_fixed = pair.number == RuleKind::kConstant &&
                       pair.position == RuleKind::kConstant && m > 1;
    if (slots_fixed) {
      for (Attribute attr : {Attribute::kShape, Attribute::kSize, Attribute::kColor}) {
        if (plan.kind[attr_index(attr)] == RuleKind::kConstant && rng.chance(0.5)) {
          plan.per_slot[attr_index(attr)] = true;
        }
      }
    }
    plans.push_back(plan);
  }
  return plans;
}

using SlotSet = std::vector<int>;  // sorted

SlotSet sorted_sample(Rng& rng, const std::vector<int>& pool, int k) {
  SlotSet s = rng.sample(pool, k);
  std::sort(s.begin(), s.end());
  return s;
}

SlotSet set_union(const SlotSet& a, const SlotSet& b) {
  SlotSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

SlotSet set_difference(const SlotSet& a, const SlotSet& b) {
  SlotSet out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<int> complement_pool(const SlotSet& used, int m) {
  std::vector<int> pool;
  for (int i = 0; i < m; ++i) {
    if (!std::binary_search(used.begin(), used.end(), i)) pool.push_back(i);
  }
  return pool;
}

// Rejects value triples that would make some row of the rotation satisfy a
// progression or arithmetic reading as well, which would leave a rule
// question with two defensible answers.
bool d3_triple_ok(std::array<int, 3> t) {
  std::sort(t.begin(), t.end());
  if (t[1] == t[0] + 1 && t[2] == t[1] + 1) return false;
  if (t[2] == t[0] + t[1]) return false;
  return true;
}

std::array<int, 3> rotation(const std::array<int, 3>& base, int row) {
  return {base[row % 3], base[(row + 1) % 3], base[(row + 2) % 3]};
}

struct RowSets {
  std::array<std::array<SlotSet, 3>, 3> sets;  // [row][col]
};

RowSets sample_position_sets(const PairPlan& pair, int m, Rng& rng) {
  std::vector<int> all(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) all[static_cast<std::size_t>(i)] = i;
  int cap = std::min(m, 9);
  RowSets out;

  auto fill_constant_rows = [&] {
    for (int r = 0; r < 3; ++r) {
      int n = rng.uniform_int(1, cap);
      SlotSet q = sorted_sample(rng, all, n);
      for (int c = 0; c < 3; ++c) out.sets[r][c] = q;
    }
  };

  switch (pair.position) {
    case RuleKind::kConstant:
      fill_constant_rows();
      return out;
    case RuleKind::kDistributeThree: {
      for (int tries = 0; tries < kMaxSampleRetries; ++tries) {
        std::array<SlotSet, 3> family;
        std::array<int, 3> sizes{};
        if (pair.number == RuleKind::kConstant) {
          int s = rng.uniform_int(1, std::min(cap, m - 1));
          sizes = {s, s, s};
        } else {  // distribute-three on number as well
          while (true) {
            sizes = {rng.uniform_int(1, cap), rng.uniform_int(1, cap), rng.uniform_int(1, cap)};
            std::set<int> distinct(sizes.begin(), sizes.end());
            if (distinct.size() == 3 && d3_triple_ok(sizes)) break;
          }
        }
        family[0] = sorted_sample(rng, all, sizes[0]);
        family[1] = sorted_sample(rng, all, sizes[1]);
        family[2] = sorted_sample(rng, all, sizes[2]);
        if (family[0] == family[1] || family[0] == family[2] || family[1] == family[2]) continue;
        // No rotation may read as union or complement of the other two.
        bool tainted = false;
        for (int r = 0; r < 3 && !tainted; ++r) {
          const SlotSet& x = family[static_cast<std::size_t>(r % 3)];
          const SlotSet& y = family[static_cast<std::size_t>((r + 1) % 3)];
          const SlotSet& z = family[static_cast<std::size_t>((r + 2) % 3)];
          if (z == set_union(x, y) || z == set_difference(x, y)) tainted = true;
        }
        if (tainted) continue;
        for (int r = 0; r < 3; ++r) {
          for (int c = 0; c < 3; ++c) {
            out.sets[r][c] = family[static_cast<std::size_t>((r + c) % 3)];
          }
        }
        return out;
      }
      throw GenError("position distribute-three sampling failed");
    }
    case RuleKind::kPositionUnion: {
      for (int r = 0; r < 3; ++r) {
        if (pair.number == RuleKind::kArithmeticPlus) {
          int a, b;
          do {
            a = rng.uniform_int(1, cap - 1);
            b = rng.uniform_int(1, std::min(cap - a, m - a));
          } while (a == 1 && b == 2);  // counts (1,2,3) would also read as a progression
          SlotSet p1 = sorted_sample(rng, all, a);
          SlotSet p2 = sorted_sample(rng, complement_pool(p1, m), b);
          out.sets[r][0] = p1;
          out.sets[r][1] = p2;
          out.sets[r][2] = set_union(p1, p2);
        } else {  // progression +1: overlap keeps counts at (n, n+1, n+2)
          int n = rng.uniform_int(2, std::min(cap - 2, m - 2));
          SlotSet p1 = sorted_sample(rng, all, n);
          SlotSet overlap = sorted_sample(rng, p1, n - 1);
          SlotSet fresh = sorted_sample(rng, complement_pool(p1, m), 2);
          SlotSet p2 = set_union(overlap, fresh);
          out.sets[r][0] = p1;
          out.sets[r][1] = p2;
          out.sets[r][2] = set_union(p1, p2);
        }
      }
      return out;
    }
    case RuleKind::kPositionComplement: {
      for (int r = 0; r < 3; ++r) {
        if (pair.number == RuleKind::kArithmeticMinus) {
          int a, b;
          do {
            a = rng.uniform_int(2, cap);
            b = rng.uniform_int(1, a - 1);
          } while (a == 3 && b == 2);  // counts (3,2,1) would also read as a progression
          SlotSet p1 = sorted_sample(rng, all, a);
          SlotSet p2 = sorted_sample(rng, p1, b);
          out.sets[r][0] = p1;
          out.sets[r][1] = p2;
          out.sets[r][2] = set_difference(p1, p2);
        } else {  // progression -1 via two shared slots and n-3 outside ones
          int hi = std::min(cap, (m + 3) / 2);
          int n = rng.uniform_int(4, hi);
          SlotSet p1 = sorted_sample(rng, all, n);
          SlotSet shared = sorted_sample(rng, p1, 2);
          SlotSet outside = sorted_sample(rng, complement_pool(p1, m), n - 3);
          SlotSet p2 = set_union(shared, outside);
          out.sets[r][0] = p1;
          out.sets[r][1] = p2;
          out.sets[r][2] = set_difference(p1, p2);
        }
      }
      return out;
    }
    default:
      throw GenError("unsupported position rule kind");
  }
}

// Per-row value triples for shape/size/color, one value per panel unless the
// per-slot constant mode is active.
std::array<std::array<int, 3>, 3> sample_value_rows(RuleKind kind, const std::vector<int>& range,
                                                    Rng& rng) {
  std::array<std::array<int, 3>, 3> rows{};
  int lo = range.front();
  int hi = range.back();
  switch (kind) {
    case RuleKind::kConstant:
      for (int r = 0; r < 3; ++r) {
        int v = rng.pick(range);
        rows[r] = {v, v, v};
      }
      return rows;
    case RuleKind::kProgressionPlus1:
      for (int r = 0; r < 3; ++r) {
        int v;
        do {
          v = rng.uniform_int(lo, hi - 2);
        } while (v == 1);  // (1,2,3) would also read as a sum
        rows[r] = {v, v + 1, v + 2};
      }
      return rows;
    case RuleKind::kProgressionMinus1:
      for (int r = 0; r < 3; ++r) {
        int v;
        do {
          v = rng.uniform_int(lo + 2, hi);
        } while (v == 3);  // (3,2,1) would also read as a difference
        rows[r] = {v, v - 1, v - 2};
      }
      return rows;
    case RuleKind::kArithmeticPlus:
      for (int r = 0; r < 3; ++r) {
        int v1, v2;
        do {
          v1 = rng.uniform_int(std::max(lo, 1), hi - 1);
          v2 = rng.uniform_int(std::max(lo, 1), hi - v1);
        } while (v1 == 1 && v2 == 2);
        rows[r] = {v1, v2, v1 + v2};
      }
      return rows;
    case RuleKind::kArithmeticMinus:
      for (int r = 0; r < 3; ++r) {
        int v1, v2;
        do {
          v1 = rng.uniform_int(std::max(lo, 2), hi);
          v2 = rng.uniform_int(std::max(lo, 1), v1 - 1);
        } while (v1 == 3 && v2 == 2);
        rows[r] = {v1, v2, v1 - v2};
      }
      return rows;
    case RuleKind::kDistributeThree: {
      for (int tries = 0; tries < kMaxSampleRetries; ++tries) {
        std::array<int, 3> triple = {rng.pick(range), rng.pick(range), rng.pick(range)};
        std::set<int> distinct(triple.begin(), triple.end());
        if (distinct.size() != 3 || !d3_triple_ok(triple)) continue;
        for (int r = 0; r < 3; ++r) rows[r] = rotation(triple, r);
        return rows;
      }
      throw GenError("value distribute-three sampling failed");
    }
    default:
      throw GenError("unsupported value rule kind");
  }
}

// Values per slot for the per-slot constant mode: stable across a row,
// resampled per row, pairwise distinct whenever the range is large enough.
std::map<int, int> per_slot_values(const SlotSet& slots, const std::vector<int>& range, Rng& rng) {
  std::vector<int> pool = range;
  rng.shuffle(pool);
  std::map<int, int> out;
  std::size_t next = 0;
  for (int slot : slots) {
    if (next >= pool.size()) {
      next = 0;
      rng.shuffle(pool);
    }
    out[slot] = pool[next++];
  }
  return out;
}

struct ComponentCells {
  std::array<std::array<ComponentPanel, 3>, 3> cell;
};

ComponentCells realize_component(Layout layout, int component, const ComponentPlan& plan,
                                 Rng& rng) {
  int m = slot_count(layout, component);
  PairPlan pair{plan.kind[attr_index(Attribute::kNumber)],
                plan.kind[attr_index(Attribute::kPosition)]};
  RowSets sets = sample_position_sets(pair, m, rng);

  std::vector<int> shape_range = allowed_shape_ranks(layout, component);
  std::vector<int> size_range = allowed_sizes(layout, component);
  std::vector<int> color_range = allowed_colors(layout, component);

  std::array<std::array<int, 3>, 3> shape_rows{}, size_rows{}, color_rows{};
  std::array<std::map<int, int>, 3> shape_slots, size_slots, color_slots, angle_slots;

  bool shape_per_slot = plan.per_slot[attr_index(Attribute::kShape)];
  bool size_per_slot = plan.per_slot[attr_index(Attribute::kSize)];
  bool color_per_slot = plan.per_slot[attr_index(Attribute::kColor)];

  if (!shape_per_slot) {
    shape_rows = sample_value_rows(plan.kind[attr_index(Attribute::kShape)], shape_range, rng);
  }
  if (!size_per_slot) {
    size_rows = sample_value_rows(plan.kind[attr_index(Attribute::kSize)], size_range, rng);
  }
  if (!color_per_slot) {
    color_rows = sample_value_rows(plan.kind[attr_index(Attribute::kColor)], color_range, rng);
  }
  for (int r = 0; r < 3; ++r) {
    // Per-slot tables key off the union of the row's slots; with the
    // per-slot mode the sets are constant so this is exactly that set.
    SlotSet row_slots = set_union(set_union(sets.sets[r][0], sets.sets[r][1]), sets.sets[r][2]);
    if (shape_per_slot) shape_slots[r] = per_slot_values(row_slots, shape_range, rng);
    if (size_per_slot) size_slots[r] = per_slot_values(row_slots, size_range, rng);
    if (color_per_slot) color_slots[r] = per_slot_values(row_slots, color_range, rng);
    std::vector<int> angle_range = {0, 1, 2, 3, 4, 5, 6, 7};
    angle_slots[r] = per_slot_values(row_slots, angle_range, rng);
  }

  ComponentCells out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      ComponentPanel panel;
      for (int slot : sets.sets[r][c]) {
        Entity e;
        e.slot = slot;
        e.shape = shape_from_rank(shape_per_slot ? shape_slots[r][slot] : shape_rows[r][c]);
        e.size_level = size_per_slot ? size_slots[r][slot] : size_rows[r][c];
        e.color_level = color_per_slot ? color_slots[r][slot] : color_rows[r][c];
        e.angle_level = angle_slots[r][slot];
        panel.entities.push_back(e);
      }
      out.cell[r][c] = std::move(panel);
    }
  }
  return out;
}

std::string panel_fingerprint(const Panel& p) { return panel_to_json(p).dump(); }

bool breaks_some_rule(const Puzzle& p, const Panel& candidate) {
  for (const auto& rule : p.rules) {
    if (!rule_holds(p, rule, candidate)) return true;
  }
  return false;
}

Panel perturb_panel(const Puzzle& p, const Panel& answer, int ops, Rng& rng) {
  Panel panel = answer;
  for (int k = 0; k < ops; ++k) {
    int c = rng.uniform_int(0, component_count(p.layout) - 1);
    auto& comp = panel.components[static_cast<std::size_t>(c)];
    int m = slot_count(p.layout, c);
    std::vector<int> shapes = allowed_shape_ranks(p.layout, c);
    std::vector<int> sizes = allowed_sizes(p.layout, c);
    std::vector<int> colors = allowed_colors(p.layout, c);

    std::vector<std::string> ops_pool = {"shape"};
    if (sizes.size() > 1) ops_pool.push_back("size");
    if (colors.size() > 1) ops_pool.push_back("color");
    SlotSet used = slot_set(comp);
    std::vector<int> free_slots = complement_pool(used, m);
    if (!free_slots.empty() && static_cast<int>(used.size()) < 9) ops_pool.push_back("add");
    if (comp.entities.size() >= 2) ops_pool.push_back("remove");
    if (!free_slots.empty() && !comp.entities.empty()) ops_pool.push_back("move");

    const std::string& op = rng.pick(ops_pool);
    int idx = rng.uniform_int(0, static_cast<int>(comp.entities.size()) - 1);
    Entity& target = comp.entities[static_cast<std::size_t>(idx)];
    if (op == "shape") {
      int cur = edge_rank(target.shape);
      int next;
      do {
        next = rng.pick(shapes);
      } while (next == cur);
      target.shape = shape_from_rank(next);
    } else if (op == "size") {
      int next;
      do {
        next = rng.pick(sizes);
      } while (next == target.size_level);
      target.size_level = next;
    } else if (op == "color") {
      int next;
      do {
        next = rng.pick(colors);
      } while (next == target.color_level);
      target.color_level = next;
    } else if (op == "add") {
      Entity fresh = target;
      fresh.slot = rng.pick(free_slots);
      comp.entities.push_back(fresh);
    } else if (op == "remove") {
      comp.entities.erase(comp.entities.begin() + idx);
    } else {  // move
      target.slot = rng.pick(free_slots);
    }
    std::sort(comp.entities.begin(), comp.entities.end(),
              [](const Entity& a, const Entity& b) { return a.slot < b.slot; });
  }
  return panel;
}

void build_candidates(Puzzle& p, const Panel& answer, Rng& rng) {
  std::set<std::string> seen;
  seen.insert(panel_fingerprint(answer));
  std::vector<Panel> distractors;
  int stale = 0;
  while (static_cast<int>(distractors.size()) < 7) {
    int ops = 1 + (static_cast<int>(distractors.size()) % 2);
    Panel cand = perturb_panel(p, answer, ops, rng);
    std::string fp = panel_fingerprint(cand);
    if (seen.count(fp) || !breaks_some_rule(p, cand)) {
      if (++stale > kMaxSampleRetries) throw GenError("distractor sampling stalled");
      continue;
    }
    seen.insert(fp);
    distractors.push_back(std::move(cand));
  }
  int answer_pos = rng.uniform_int(0, 7);
  p.candidates.clear();
  std::size_t next = 0;
  for (int i = 0; i < 8; ++i) {
    if (i == answer_pos) {
      p.candidates.push_back(answer);
    } else {
      p.candidates.push_back(distractors[next++]);
    }
  }
  p.correct_index = answer_pos + 1;
}

std::vector<RuleSpec> plan_to_rules(const std::vector<ComponentPlan>& plans) {
  std::vector<RuleSpec> rules;
  for (std::size_t c = 0; c < plans.size(); ++c) {
    for (Attribute attr : kAllAttributes) {
      rules.push_back({static_cast<int>(c), attr, plans[c].kind[attr_index(attr)]});
    }
  }
  return rules;
}

}  // namespace

std::vector<RuleSpec> sample_rules(Layout layout, Rng& rng) {
  return plan_to_rules(sample_plan(layout, rng));
}

Puzzle generate_puzzle(Layout layout, std::uint64_t master_seed, int index) {
  std::uint64_t child = derive_seed(master_seed, static_cast<std::uint64_t>(index));
  Rng rng(child);
  std::string id = std::string(to_string(layout)) + "-";
  {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%05d", index);
    id += buf;
  }

  for (int attempt = 0; attempt < kMaxPuzzleAttempts; ++attempt) {
    try {
      std::vector<ComponentPlan> plans = sample_plan(layout, rng);
      Puzzle p;
      p.id = id;
      p.layout = layout;
      p.seed = child;
      p.rules = plan_to_rules(plans);

      std::vector<ComponentCells> cells;
      cells.reserve(plans.size());
      for (std::size_t c = 0; c < plans.size(); ++c) {
        cells.push_back(realize_component(layout, static_cast<int>(c), plans[c], rng));
      }

      Panel answer;
      p.context.clear();
      for (int r = 0; r < 3; ++r) {
        for (int col = 0; col < 3; ++col) {
          Panel panel;
          for (auto& comp : cells) panel.components.push_back(comp.cell[r][col]);
          if (r == 2 && col == 2) {
            answer = std::move(panel);
          } else {
            p.context.push_back(std::move(panel));
          }
        }
      }

      build_candidates(p, answer, rng);

      if (!validate_puzzle(p).ok()) continue;
      VerifyReport check = verify_rules(p);
      if (!check.ok || check.passing_candidates != 1) continue;
      return p;
    } catch (const GenError&) {
      continue;
    }
  }
  throw GenError("failed to generate a consistent puzzle for layout " +
                 std::string(to_string(layout)));
}

std::vector<Puzzle> generate_dataset(const GeneratorConfig& config) {
  std::vector<Puzzle> out;
  for (Layout layout : config.layouts) {
    // Offsetting the seed stream by layout keeps each layout's puzzles
    // stable when other layouts are added or removed from the config.
    std::uint64_t base = static_cast<std::uint64_t>(layout) << 20;
    for (int i = 0; i < config.puzzles_per_layout; ++i) {
      out.push_back(generate_puzzle(layout, config.seed,
                                    static_cast<int>(base) + i));
      out.back().id = std::string(to_string(layout)) + "-" + [&] {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%05d", i);
        return std::string(buf);
      }();
    }
  }
  return out;
}

void write_puzzle_manifest(const std::string& path, const std::vector<Puzzle>& puzzles) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& p : puzzles) {
    out << puzzle_to_json(p).dump() << '\n';
  }
}

std::vector<Puzzle> read_puzzle_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<Puzzle> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(puzzle_from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace ravenkit
