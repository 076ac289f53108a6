#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <set>

#include "ravenkit/gen.hpp"
#include "ravenkit/verify.hpp"

using namespace ravenkit;

namespace {

const std::vector<Layout> kAllLayouts = {
    Layout::kCenterSingle, Layout::kGrid2x2,      Layout::kGrid3x3, Layout::kLeftRight,
    Layout::kUpDown,       Layout::kOutInSingle, Layout::kOutInGrid};

}  // namespace

TEST_CASE("generation is deterministic in seed and index") {
  for (Layout l : kAllLayouts) {
    Puzzle a = generate_puzzle(l, 77, 4);
    Puzzle b = generate_puzzle(l, 77, 4);
    CHECK(puzzle_to_json(a) == puzzle_to_json(b));
    Puzzle c = generate_puzzle(l, 77, 5);
    CHECK(puzzle_to_json(a) != puzzle_to_json(c));
    Puzzle d = generate_puzzle(l, 78, 4);
    CHECK(puzzle_to_json(a) != puzzle_to_json(d));
  }
}

TEST_CASE("generated puzzles are structurally valid and uniquely solvable") {
  for (Layout l : kAllLayouts) {
    for (int i = 0; i < 8; ++i) {
      Puzzle p = generate_puzzle(l, 2024, i);
      CHECK(validate_puzzle(p).ok());
      VerifyReport report = verify_rules(p);
      CHECK(report.ok);
      CHECK(report.passing_candidates == 1);
    }
  }
}

TEST_CASE("rule annotations cover every attribute once per component") {
  for (Layout l : kAllLayouts) {
    Puzzle p = generate_puzzle(l, 5, 0);
    int comps = component_count(l);
    CHECK(static_cast<int>(p.rules.size()) == 5 * comps);
    std::set<std::pair<int, Attribute>> seen;
    for (const RuleSpec& r : p.rules) {
      CHECK(r.kind != RuleKind::kNoClearRule);
      CHECK(seen.insert({r.component, r.attribute}).second);
    }
    CHECK(static_cast<int>(seen.size()) == 5 * comps);
  }
}

TEST_CASE("rule variety appears across a seed sweep") {
  std::set<RuleKind> kinds;
  for (int i = 0; i < 40; ++i) {
    for (const RuleSpec& r : generate_puzzle(Layout::kGrid3x3, 31, i).rules) {
      kinds.insert(r.kind);
    }
  }
  CHECK(kinds.count(RuleKind::kConstant) == 1);
  CHECK(kinds.count(RuleKind::kDistributeThree) == 1);
  CHECK(kinds.size() >= 5);
}

TEST_CASE("dataset generation honors config and names puzzles per layout") {
  GeneratorConfig config;
  config.seed = 9;
  config.layouts = {Layout::kCenterSingle, Layout::kLeftRight};
  config.puzzles_per_layout = 3;
  std::vector<Puzzle> puzzles = generate_dataset(config);
  REQUIRE(puzzles.size() == 6);
  CHECK(puzzles[0].id == "center_single-00000");
  CHECK(puzzles[2].id == "center_single-00002");
  CHECK(puzzles[3].id == "left_right-00000");
  std::set<std::string> ids;
  for (const Puzzle& p : puzzles) CHECK(ids.insert(p.id).second);
}

TEST_CASE("manifest round trip") {
  GeneratorConfig config;
  config.seed = 11;
  config.layouts = {Layout::kGrid2x2};
  config.puzzles_per_layout = 4;
  std::vector<Puzzle> puzzles = generate_dataset(config);
  const char* path = "gen_test_manifest.jsonl";
  write_puzzle_manifest(path, puzzles);
  std::vector<Puzzle> loaded = read_puzzle_manifest(path);
  std::remove(path);
  REQUIRE(loaded.size() == puzzles.size());
  for (std::size_t i = 0; i < puzzles.size(); ++i) {
    CHECK(puzzle_to_json(loaded[i]) == puzzle_to_json(puzzles[i]));
  }
}

TEST_CASE("xml export imports back to the same puzzle") {
  for (Layout l : kAllLayouts) {
    Puzzle p = generate_puzzle(l, 13, 2);
    std::vector<std::string> warnings;
    Puzzle q = import_raven_xml(export_raven_xml(p), &warnings);
    CHECK(warnings.empty());
    CHECK(puzzle_to_json(q) == puzzle_to_json(p));
  }
}

TEST_CASE("xml import failures are typed") {
  Puzzle p = generate_puzzle(Layout::kCenterSingle, 13, 0);
  std::string xml = export_raven_xml(p);

  CHECK_THROWS_AS(import_raven_xml("<Puzzle><unclosed"), ParseError);
  CHECK_THROWS_AS(import_raven_xml("<NotAPuzzle/>"), SchemaError);

  std::string missing = xml;
  auto ctx = missing.find("<Context>");
  REQUIRE(ctx != std::string::npos);
  auto ctx_end = missing.find("</Context>") + std::string("</Context>").size();
  missing.erase(ctx, ctx_end - ctx);
  CHECK_THROWS_AS(import_raven_xml(missing), SchemaError);

  std::string bad_shape = xml;
  auto tri = bad_shape.find("shape=\"");
  REQUIRE(tri != std::string::npos);
  auto quote = bad_shape.find('"', tri + 7);
  bad_shape.replace(tri + 7, quote - tri - 7, "blob");
  CHECK_THROWS_AS(import_raven_xml(bad_shape), ValueError);

  std::string bad_size = xml;
  auto size = bad_size.find("size=\"");
  REQUIRE(size != std::string::npos);
  quote = bad_size.find('"', size + 6);
  bad_size.replace(size + 6, quote - size - 6, "99");
  CHECK_THROWS_AS(import_raven_xml(bad_size), ValueError);
}

TEST_CASE("xml import reports unknown elements as warnings") {
  Puzzle p = generate_puzzle(Layout::kCenterSingle, 13, 1);
  std::string xml = export_raven_xml(p);
  auto pos = xml.find("<Context>");
  REQUIRE(pos != std::string::npos);
  xml.insert(pos, "<Extra/>");
  std::vector<std::string> warnings;
  Puzzle q = import_raven_xml(xml, &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("Extra") != std::string::npos);
  CHECK(puzzle_to_json(q) == puzzle_to_json(p));
}

TEST_CASE("independent rule check rejects a corrupted puzzle") {
  Puzzle p = generate_puzzle(Layout::kGrid3x3, 21, 0);
  REQUIRE(verify_rules(p).ok);
  // Swapping the solution for a distractor must break unique solvability.
  int wrong = p.correct_index == 1 ? 2 : 1;
  std::swap(p.candidates[static_cast<std::size_t>(p.correct_index - 1)],
            p.candidates[static_cast<std::size_t>(wrong - 1)]);
  VerifyReport report = verify_rules(p);
  CHECK_FALSE(report.ok);
}
