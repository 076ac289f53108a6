#pragma once
// Puzzle generator: samples a compatible rule tuple per component, realizes
// the 3x3 matrix, and builds a candidate set whose answer is the unique
// panel satisfying every rule.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ravenkit/rng.hpp"
#include "ravenkit/scene.hpp"

namespace ravenkit {

struct GenError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GeneratorConfig {
  std::uint64_t seed = 0;
  std::vector<Layout> layouts = {Layout::kCenterSingle};
  int puzzles_per_layout = 10;
};

std::vector<RuleSpec> sample_rules(Layout, Rng&);

Puzzle generate_puzzle(Layout, std::uint64_t master_seed, int index);
std::vector<Puzzle> generate_dataset(const GeneratorConfig&);

void write_puzzle_manifest(const std::string& path, const std::vector<Puzzle>&);
std::vector<Puzzle> read_puzzle_manifest(const std::string& path);

// XML interchange. Import failures are typed: ParseError for malformed
// markup, SchemaError for structural problems, ValueError for tokens or
// numbers outside the domain.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValueError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string export_raven_xml(const Puzzle&);
Puzzle import_raven_xml(const std::string& xml_text,
                        std::vector<std::string>* warnings = nullptr);

}  // namespace ravenkit
