#pragma once
// Logical-chain construction: the per-attribute DAG of sub-questions from
// single panels up to the final answer, plus prior-sentence reformatting
// and prompt assembly.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ravenkit/question.hpp"
#include "ravenkit/scene.hpp"

namespace ravenkit {

enum class Stage { kSinglePanel, kTwoPanels, kOneRow, kTwoRows, kFinal };

std::string to_string(Stage);
std::optional<Stage> stage_from_string(const std::string&);

struct ChainNode {
  std::string node_id;
  Stage stage = Stage::kSinglePanel;
  std::string attribute;  // attribute token, empty for final nodes
  int component = 0;
  std::vector<int> panels;  // context cells the node's image shows
  std::vector<std::string> deps;
  QAItem qa;
};

struct Chain {
  std::string puzzle_id;
  Layout layout = Layout::kCenterSingle;
  std::vector<ChainNode> nodes;  // stored in a valid topological order

  const ChainNode* find(const std::string& node_id) const;
};

struct ChainBuildResult {
  std::optional<Chain> chain;
  std::string unsat_reason;  // set when the chain cannot be built
};

ChainBuildResult build_chain(const Puzzle&, const TemplateRegistry&, std::uint64_t seed,
                             const QuestionOptions& = {});

// Rewrites a dependency's answer as a declarative prior sentence phrased
// relative to the dependent question's image frame.
std::string reformat_prior(const ChainNode& dep, const ChainNode& target,
                           const std::string& dep_answer, const TemplateRegistry&);

// Scene-arrangement sentence prepended for split layouts; empty otherwise.
std::string extra_setting_sentence(Layout);

enum class PromptVariant { kVanilla, kHtml, kDocument };

std::optional<PromptVariant> prompt_variant_from_string(const std::string&);

std::string build_prompt(const QAItem&, const std::vector<std::string>& priors, PromptVariant,
                         const std::string& extra_setting);

Json chain_to_json(const Chain&);
Chain chain_from_json(const Json&);
void write_chain_manifest(const std::string& path, const std::vector<Chain>&);
std::vector<Chain> read_chain_manifest(const std::string& path);

}  // namespace ravenkit
