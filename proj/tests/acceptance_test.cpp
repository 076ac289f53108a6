// Acceptance gate for the whole toolkit. Eleven end-to-end criteria cover
// score calibration, dependency weighting, call budgets, generator validity,
// interrogation agreement, chain shape, prompt and prior text, determinism,
// and random baselines. Each criterion prints exactly one PASS/FAIL line.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "ravenkit/chain.hpp"
#include "ravenkit/gen.hpp"
#include "ravenkit/harness.hpp"
#include "ravenkit/mseval.hpp"
#include "ravenkit/question.hpp"
#include "ravenkit/render.hpp"
#include "ravenkit/rng.hpp"
#include "ravenkit/scene.hpp"
#include "ravenkit/verify.hpp"

using namespace ravenkit;

namespace {

// Pinned tolerances. Scores that are exact identities get the tight bounds;
// statistical accuracy checks get percentage points.
constexpr double kTolStageScore = 1e-9;
constexpr double kTolNodeScore = 1e-6;
constexpr double kTolIdentity = 1e-12;
constexpr double kTolWeightSum = 1e-9;
constexpr double kTolCmiZero = 1e-9;
constexpr double kTolCmiFixture = 1e-6;
constexpr double kCmiFixtureNats = 0.192744757021758;  // I(A;B) of rows (.8,.2)/(.2,.8)
constexpr double kAccuracyPoints = 2.0;
constexpr double kUniformRunSeconds = 60.0;
constexpr double kGeneratorSeconds = 120.0;

// Collects a criterion's checks so the binary can print one summary line
// whatever the mix of passes and failures.
struct Criterion {
  int id;
  std::string what;
  int checked = 0;
  int failed = 0;
  std::vector<std::string> details;

  void expect(bool ok, const std::string& detail) {
    ++checked;
    if (ok) return;
    ++failed;
    if (details.size() < 5) details.push_back(detail);
  }

  void finish(double seconds = -1.0) {
    if (seconds >= 0.0) {
      std::printf("[criterion %2d] %s  %s (%d checks, %.1fs)\n", id,
                  failed == 0 ? "PASS" : "FAIL", what.c_str(), checked, seconds);
    } else {
      std::printf("[criterion %2d] %s  %s (%d checks)\n", id, failed == 0 ? "PASS" : "FAIL",
                  what.c_str(), checked);
    }
    for (const std::string& d : details) std::printf("    failed: %s\n", d.c_str());
    std::fflush(stdout);
    CHECK_MESSAGE(failed == 0, "criterion ", id, ": ", failed, " of ", checked,
                  " checks failed");
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const TemplateRegistry& reg() { return default_template_registry(); }

const std::vector<Layout> kAllLayouts = {
    Layout::kCenterSingle, Layout::kGrid2x2,  Layout::kGrid3x3, Layout::kLeftRight,
    Layout::kUpDown,       Layout::kOutInSingle, Layout::kOutInGrid};

// Large single-layout corpus shared by the agreement and baseline criteria.
const std::vector<Puzzle>& center_corpus() {
  static const std::vector<Puzzle> corpus = [] {
    GeneratorConfig cfg;
    cfg.seed = 777;
    cfg.layouts = {Layout::kCenterSingle};
    cfg.puzzles_per_layout = 1000;
    return generate_dataset(cfg);
  }();
  return corpus;
}

const std::vector<QAItem>& center_items() {
  static const std::vector<QAItem> items = [] {
    std::vector<QAItem> all;
    const std::vector<Puzzle>& corpus = center_corpus();
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      std::vector<QAItem> qs = generate_direct(corpus[i], reg(), derive_seed(777, i));
      all.insert(all.end(), qs.begin(), qs.end());
    }
    return all;
  }();
  return items;
}

struct ChainSet {
  std::vector<Puzzle> puzzles;
  std::vector<Chain> chains;
};

// Builds `count` chains, advancing the puzzle stream past unsatisfiable
// draws the same way the command-line tool does.
ChainSet build_chain_set(Layout layout, std::uint64_t seed, int count) {
  ChainSet set;
  int attempts = 0;
  while (static_cast<int>(set.chains.size()) < count && attempts < count * 200) {
    Puzzle p = generate_puzzle(layout, seed, attempts);
    ++attempts;
    ChainBuildResult result = build_chain(p, reg(), seed);
    if (!result.chain) continue;
    set.puzzles.push_back(std::move(p));
    set.chains.push_back(std::move(*result.chain));
  }
  return set;
}

const ChainSet& center_chains() {
  static const ChainSet set = build_chain_set(Layout::kCenterSingle, 888, 50);
  return set;
}

ChainSet head_of(const ChainSet& set, int count) {
  ChainSet out;
  out.puzzles.assign(set.puzzles.begin(), set.puzzles.begin() + count);
  out.chains.assign(set.chains.begin(), set.chains.begin() + count);
  return out;
}

const ChainNode* node_in(const Chain& chain, const std::string& node_id) {
  return chain.find(node_id);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), ("cannot open " + path).c_str());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Two-node chain over a real puzzle, small enough to script every reply:
// a two-choice count question feeding a two-choice comparison.
struct MiniChain {
  Puzzle puzzle;
  Chain chain;
  std::string dep_item;
  std::string target_item;
};

MiniChain make_mini_chain() {
  MiniChain m;
  m.puzzle = center_corpus()[0];
  const std::string& pid = m.puzzle.id;

  ChainNode dep;
  dep.node_id = "dep";
  dep.stage = Stage::kSinglePanel;
  dep.attribute = "number";
  dep.component = 0;
  dep.panels = {0};
  dep.qa.qa_id = pid + ":dep";
  dep.qa.puzzle_id = pid;
  dep.qa.configuration = "1P-B";
  dep.qa.attribute = "number";
  dep.qa.template_id = "count_objects_1p";
  dep.qa.component = 0;
  dep.qa.image_key = "1p_0";
  dep.qa.panels = {0};
  dep.qa.question = "How many objects are in the panel?";
  dep.qa.choice_labels = {"A", "B"};
  dep.qa.choice_texts = {"1", "2"};
  dep.qa.gt_label = "A";
  dep.qa.gt_text = "1";

  ChainNode target;
  target.node_id = "tgt";
  target.stage = Stage::kTwoPanels;
  target.attribute = "number";
  target.component = 0;
  target.panels = {0, 1};
  target.deps = {"dep"};
  target.qa.qa_id = pid + ":tgt";
  target.qa.puzzle_id = pid;
  target.qa.configuration = "2P";
  target.qa.attribute = "number";
  target.qa.template_id = "compare_count_2p";
  target.qa.component = 0;
  target.qa.image_key = "2p_0_1";
  target.qa.panels = {0, 1};
  target.qa.question = "Does the left panel contain the same number of objects as the right panel?";
  target.qa.choice_labels = {"A", "B"};
  target.qa.choice_texts = {"The same", "Fewer"};
  target.qa.gt_label = "A";
  target.qa.gt_text = "The same";

  m.chain.puzzle_id = pid;
  m.chain.layout = Layout::kCenterSingle;
  m.chain.nodes = {std::move(dep), std::move(target)};
  m.dep_item = pid + ":dep";
  m.target_item = pid + ":tgt";
  return m;
}

const EvalRecord& record_for_node(const std::vector<EvalRecord>& records,
                                  const std::string& node_id) {
  for (const EvalRecord& r : records) {
    if (r.node_id == node_id) return r;
  }
  REQUIRE_MESSAGE(false, ("no record for node " + node_id).c_str());
  return records.front();
}

}  // namespace

TEST_CASE("criterion 1: chance-level answers score 1.00 at every stage") {
  Criterion c{1, "uniform answers hold the stage score at 1.00 across a 50-chain run"};
  auto t0 = std::chrono::steady_clock::now();

  const ChainSet& set = center_chains();
  c.expect(set.chains.size() == 50, "expected 50 chains, built " +
                                        std::to_string(set.chains.size()));

  UniformAdapter uniform;
  RunOptions opt;
  opt.concurrency = 8;
  std::vector<EvalRecord> records = run_chain(set.puzzles, set.chains, uniform, opt);
  c.expect(records.size() == 50u * 36u,
           "expected 1800 records, got " + std::to_string(records.size()));
  for (const EvalRecord& r : records) {
    c.expect(r.mseval.available, r.item_id + ": score unavailable");
    c.expect(std::fabs(r.mseval.score - 1.0) <= kTolStageScore,
             r.item_id + ": score " + std::to_string(r.mseval.score));
  }

  std::map<std::string, int> expected_n = {{"single_panel", 750},
                                           {"two_panels", 500},
                                           {"one_row", 250},
                                           {"two_rows", 250},
                                           {"final", 50}};
  std::vector<SummaryRow> rows = summarize_by(records, "stage");
  c.expect(rows.size() == 5, "expected 5 stage rows");
  for (const SummaryRow& row : rows) {
    c.expect(expected_n.count(row.key) == 1 && expected_n[row.key] == row.n,
             "stage " + row.key + " has n " + std::to_string(row.n));
    c.expect(std::fabs(row.mseval_mean - 1.0) <= kTolStageScore,
             "stage " + row.key + " mean " + std::to_string(row.mseval_mean));
  }

  double secs = seconds_since(t0);
  c.expect(secs < kUniformRunSeconds, "run took " + std::to_string(secs) + "s");
  c.finish(secs);
}

TEST_CASE("criterion 2: a perfect model reaches the choice-count ceiling") {
  Criterion c{2, "an always-right model scores 4.00 on four-choice nodes and 2.00 chainless"};

  ChainSet set = head_of(center_chains(), 10);
  OracleAdapter oracle(1.0);
  RunOptions opt;
  opt.concurrency = 8;
  std::vector<EvalRecord> records = run_chain(set.puzzles, set.chains, oracle, opt);
  c.expect(records.size() == 360, "expected 360 records");

  std::map<std::string, std::size_t> choice_count;
  for (const Chain& chain : set.chains) {
    for (const ChainNode& node : chain.nodes) {
      choice_count[chain.puzzle_id + ":" + node.node_id] = node.qa.choice_texts.size();
    }
  }

  int all_four_nodes = 0;
  for (const EvalRecord& r : records) {
    c.expect(r.correct, r.item_id + ": not answered correctly");
    c.expect(r.mseval.available, r.item_id + ": score unavailable");
    bool all_four = r.choice_labels.size() == 4;
    for (const std::string& dep_id : r.mseval.dep_ids) {
      all_four = all_four && choice_count.at(r.puzzle_id + ":" + dep_id) == 4;
    }
    if (!all_four) continue;
    ++all_four_nodes;
    c.expect(std::fabs(r.mseval.score - 4.0) <= kTolNodeScore,
             r.item_id + ": score " + std::to_string(r.mseval.score));
  }
  c.expect(all_four_nodes >= 20,
           "only " + std::to_string(all_four_nodes) + " all-four-choice nodes seen");

  // A lone two-choice question has no dependencies, so the ceiling is 2.00.
  const std::vector<QAItem>& items = center_items();
  std::map<std::string, std::size_t> puzzle_index;
  for (std::size_t i = 0; i < center_corpus().size(); ++i) {
    puzzle_index[center_corpus()[i].id] = i;
  }
  bool found = false;
  for (const QAItem& item : items) {
    if (item.choice_labels.size() != 2) continue;
    found = true;
    std::vector<Puzzle> one = {center_corpus()[puzzle_index.at(item.puzzle_id)]};
    RunOptions direct_opt;
    std::vector<EvalRecord> direct = run_direct(one, {item}, oracle, direct_opt);
    c.expect(direct.size() == 1, "expected one record for the chainless item");
    c.expect(std::fabs(direct[0].mseval.score - 2.0) <= kTolNodeScore,
             "chainless two-choice score " + std::to_string(direct[0].mseval.score));
    c.expect(direct[0].correct, "chainless item answered wrong");
    break;
  }
  c.expect(found, "no two-choice item in the corpus");
  c.finish();
}

TEST_CASE("criterion 3: dependency weights are normalized and self-dominant") {
  Criterion c{3, "weights sum to one with the node itself dominant; mutual information is exact"};

  MiniChain m = make_mini_chain();
  std::vector<Puzzle> puzzles = {m.puzzle};
  std::vector<Chain> chains = {m.chain};
  RunOptions opt;
  const std::vector<std::string> letters = {"A", "B"};

  // The base call is left unscripted, so the model's own answer rows are
  // uniform and the self entropy is the ln(k) ceiling on any dependency CMI.
  Rng rng(4242);
  for (int trial = 0; trial < 200; ++trial) {
    ScriptedAdapter model;
    double r1 = 0.05 + 0.9 * rng.uniform_double();
    double r2 = 0.05 + 0.9 * rng.uniform_double();
    model.script(ScriptedAdapter::key(m.target_item, "dep", "1"),
                 ScriptedAdapter::reply_for_probs(letters, {r1, 1.0 - r1}));
    model.script(ScriptedAdapter::key(m.target_item, "dep", "2"),
                 ScriptedAdapter::reply_for_probs(letters, {r2, 1.0 - r2}));
    std::vector<EvalRecord> records = run_chain(puzzles, chains, model, opt);
    for (const EvalRecord& r : records) {
      double sum = 0.0;
      for (double w : r.mseval.weights) sum += w;
      c.expect(std::fabs(sum - 1.0) <= kTolWeightSum,
               "trial " + std::to_string(trial) + ": weights sum " + std::to_string(sum));
    }
    const EvalRecord& target = record_for_node(records, "tgt");
    c.expect(target.mseval.weights.size() == 2 && target.mseval.cmis.size() == 2,
             "trial " + std::to_string(trial) + ": weight vector misaligned");
    c.expect(target.mseval.weights[0] >= target.mseval.weights[1],
             "trial " + std::to_string(trial) + ": self weight not maximal");
  }

  // Sweeps that ignore the dependency answer carry no information.
  {
    ScriptedAdapter model;
    model.script(ScriptedAdapter::key(m.target_item, "dep", "1"),
                 ScriptedAdapter::reply_for_probs(letters, {0.7, 0.3}));
    model.script(ScriptedAdapter::key(m.target_item, "dep", "2"),
                 ScriptedAdapter::reply_for_probs(letters, {0.7, 0.3}));
    std::vector<EvalRecord> records = run_chain(puzzles, chains, model, opt);
    const EvalRecord& target = record_for_node(records, "tgt");
    c.expect(std::fabs(target.mseval.cmis[1]) <= kTolCmiZero,
             "independent sweeps gave CMI " + std::to_string(target.mseval.cmis[1]));
  }

  // A fully coupled two-by-two sweep lands on the closed-form value.
  {
    ScriptedAdapter model;
    model.script(ScriptedAdapter::key(m.target_item, "dep", "1"),
                 ScriptedAdapter::reply_for_probs(letters, {0.8, 0.2}));
    model.script(ScriptedAdapter::key(m.target_item, "dep", "2"),
                 ScriptedAdapter::reply_for_probs(letters, {0.2, 0.8}));
    std::vector<EvalRecord> records = run_chain(puzzles, chains, model, opt);
    const EvalRecord& target = record_for_node(records, "tgt");
    c.expect(std::fabs(target.mseval.cmis[1] - kCmiFixtureNats) <= kTolCmiFixture,
             "coupled sweeps gave CMI " + std::to_string(target.mseval.cmis[1]));
    c.expect(target.mseval.dep_ids == std::vector<std::string>{"dep"},
             "unexpected dependency list");
  }
  c.finish();
}

TEST_CASE("criterion 4: without dependencies the score is the calibrated probability") {
  Criterion c{4, "dependency-free scores equal p/eps and a lone weight is exactly one"};

  Rng rng(55);
  for (int trial = 0; trial < 1000; ++trial) {
    int k = rng.uniform_int(2, 8);
    std::vector<double> logits;
    logits.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) logits.push_back(rng.uniform_double() * 6.0 - 3.0);
    std::vector<double> probs = softmax(logits);
    std::size_t gt = static_cast<std::size_t>(rng.uniform_int(0, k - 1));
    double p = probs[gt];
    double eps = 1.0 / static_cast<double>(k);

    std::vector<double> weights = softmax_weights({entropy_nats(probs)});
    c.expect(weights.size() == 1 && weights[0] == 1.0,
             "trial " + std::to_string(trial) + ": lone weight not exactly one");
    double score = mseval_score({p}, {eps}, weights);
    c.expect(std::fabs(score - p / eps) <= kTolIdentity,
             "trial " + std::to_string(trial) + ": score " + std::to_string(score) +
                 " vs " + std::to_string(p / eps));
  }

  // The runner applies the same identity to isolated items.
  std::vector<Puzzle> one = {center_corpus()[0]};
  std::vector<QAItem> items = generate_direct(one[0], reg(), derive_seed(777, 0));
  items.resize(3);
  UniformAdapter uniform;
  RunOptions opt;
  std::vector<EvalRecord> records = run_direct(one, items, uniform, opt);
  for (const EvalRecord& r : records) {
    c.expect(std::fabs(r.mseval.score - r.p_gt / r.epsilon) <= kTolIdentity,
             r.item_id + ": direct score drifted from p/eps");
  }
  c.finish();
}

TEST_CASE("criterion 5: the call budget is one sweep per dependency answer plus one") {
  Criterion c{5, "measured calls per node equal the dependency answer count plus the base call"};

  ChainSet set = head_of(center_chains(), 3);
  UniformAdapter uniform;
  InstrumentedAdapter instrumented(uniform);
  RunOptions opt;
  opt.concurrency = 4;
  std::vector<EvalRecord> records = run_chain(set.puzzles, set.chains, instrumented, opt);
  c.expect(records.size() == 108, "expected 108 records");

  int expected_total = 0;
  int row_nodes_with_five_four_choice_deps = 0;
  for (const Chain& chain : set.chains) {
    std::map<std::string, const ChainNode*> by_id;
    for (const ChainNode& node : chain.nodes) by_id[node.node_id] = &node;
    for (const ChainNode& node : chain.nodes) {
      std::vector<int> dep_counts;
      bool five_four = node.deps.size() == 5;
      for (const std::string& dep_id : node.deps) {
        int k = static_cast<int>(by_id.at(dep_id)->qa.choice_texts.size());
        dep_counts.push_back(k);
        five_four = five_four && k == 4;
      }
      int expected = cmi_call_budget(dep_counts);
      expected_total += expected;
      int actual = instrumented.calls_for(node.qa.qa_id);
      c.expect(actual == expected, node.qa.qa_id + ": " + std::to_string(actual) +
                                       " calls, expected " + std::to_string(expected));
      if (node.stage == Stage::kOneRow && five_four) {
        ++row_nodes_with_five_four_choice_deps;
        c.expect(actual == 21, node.qa.qa_id + ": row node made " + std::to_string(actual) +
                                   " calls, expected exactly 21");
      }
    }
  }
  c.expect(instrumented.total_calls() == expected_total,
           "total calls " + std::to_string(instrumented.total_calls()) + ", expected " +
               std::to_string(expected_total));
  c.expect(row_nodes_with_five_four_choice_deps >= 3,
           "no row nodes with five four-choice dependencies seen");
  c.finish();
}

TEST_CASE("criterion 6: generated puzzles verify with a unique solution") {
  Criterion c{6, "1000 puzzles across all layouts verify with exactly one fitting candidate"};
  auto t0 = std::chrono::steady_clock::now();

  for (int i = 0; i < 1000; ++i) {
    Layout layout = kAllLayouts[static_cast<std::size_t>(i) % kAllLayouts.size()];
    Puzzle p = generate_puzzle(layout, 99, i / 7);
    ValidationReport vr = validate_puzzle(p);
    c.expect(vr.ok(), p.id + ": structural validation failed");
    VerifyReport report = verify_rules(p);
    c.expect(report.ok, p.id + ": rule verification failed");
    c.expect(report.passing_candidates == 1,
             p.id + ": " + std::to_string(report.passing_candidates) + " candidates fit");
  }

  double secs = seconds_since(t0);
  c.expect(secs < kGeneratorSeconds, "generation took " + std::to_string(secs) + "s");
  c.finish(secs);
}

TEST_CASE("criterion 7: questions agree with direct struct interrogation") {
  Criterion c{7, "500+ questions per configuration match the brute-force interrogator"};

  std::map<std::string, int> per_config;
  auto check_items = [&](const Puzzle& p, const std::vector<QAItem>& items) {
    for (const QAItem& item : items) {
      ++per_config[item.configuration];
      std::optional<std::string> answer = brute_force_answer(p, item);
      c.expect(answer.has_value(), item.qa_id + ": interrogator could not answer");
      if (answer) {
        c.expect(*answer == item.gt_text,
                 item.qa_id + ": interrogator said '" + *answer + "', key says '" +
                     item.gt_text + "'");
      }
    }
  };

  const std::vector<Puzzle>& corpus = center_corpus();
  std::size_t cursor = 0;
  const std::vector<QAItem>& items = center_items();
  for (const Puzzle& p : corpus) {
    std::vector<QAItem> mine;
    while (cursor < items.size() && items[cursor].puzzle_id == p.id) {
      mine.push_back(items[cursor]);
      ++cursor;
    }
    check_items(p, mine);
  }
  c.expect(cursor == items.size(), "item stream not exhausted by the corpus walk");

  // A second corpus spreads the check across every layout.
  GeneratorConfig cfg;
  cfg.seed = 555;
  cfg.layouts = kAllLayouts;
  cfg.puzzles_per_layout = 72;
  std::vector<Puzzle> mixed = generate_dataset(cfg);
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    check_items(mixed[i], generate_direct(mixed[i], reg(), derive_seed(555, i)));
  }

  for (const char* config : {"1P-B", "1P-C", "2P", "1R", "2R", "Final"}) {
    c.expect(per_config[config] >= 500,
             std::string(config) + ": only " + std::to_string(per_config[config]) + " items");
  }
  c.finish();
}

TEST_CASE("criterion 8: chains ladder 3-2-1-1 per attribute into a five-input final") {
  Criterion c{8, "every layout yields 36-node, 55-edge components and ten runs score 360 nodes"};

  for (Layout layout : kAllLayouts) {
    ChainSet set = build_chain_set(layout, 31, 1);
    c.expect(set.chains.size() == 1,
             std::string(to_string(layout)) + ": no satisfiable puzzle found");
    if (set.chains.empty()) continue;
    const Chain& chain = set.chains[0];
    ChainShapeReport report = check_chain_shape(chain, set.puzzles[0]);
    c.expect(report.ok, std::string(to_string(layout)) + ": shape check failed");
    int parts = static_cast<int>(layout_parts(layout).size());
    c.expect(report.nodes == 36 * parts,
             std::string(to_string(layout)) + ": " + std::to_string(report.nodes) + " nodes");
    c.expect(report.edges == 55 * parts,
             std::string(to_string(layout)) + ": " + std::to_string(report.edges) + " edges");
  }

  // Stage census per attribute on a single-component chain.
  const Chain& chain = center_chains().chains[0];
  std::map<std::string, std::map<Stage, int>> census;
  for (const ChainNode& node : chain.nodes) {
    if (!node.attribute.empty()) census[node.attribute][node.stage] += 1;
  }
  c.expect(census.size() == 5, "expected 5 attributes in the census");
  for (const auto& [attr, stages] : census) {
    auto count = [&stages = stages](Stage s) {
      auto it = stages.find(s);
      return it == stages.end() ? 0 : it->second;
    };
    bool ladder = count(Stage::kSinglePanel) == 3 && count(Stage::kTwoPanels) == 2 &&
                  count(Stage::kOneRow) == 1 && count(Stage::kTwoRows) == 1;
    c.expect(ladder, attr + ": ladder is not 3-2-1-1");
  }
  const ChainNode* final_node = node_in(chain, "final");
  c.expect(final_node != nullptr && final_node->deps.size() == 5,
           "final node does not take five inputs");

  // Two-component layouts build one full ladder per part.
  ChainSet split = build_chain_set(Layout::kLeftRight, 31, 1);
  if (!split.chains.empty()) {
    const Chain& two = split.chains[0];
    const ChainNode* left = node_in(two, "final_left");
    const ChainNode* right = node_in(two, "final_right");
    c.expect(left != nullptr && left->deps.size() == 5, "final_left missing or malformed");
    c.expect(right != nullptr && right->deps.size() == 5, "final_right missing or malformed");
    c.expect(node_in(two, "final") == nullptr, "unexpected unsuffixed final node");
  } else {
    c.expect(false, "left_right: no satisfiable puzzle found");
  }

  ChainSet ten = head_of(center_chains(), 10);
  std::size_t nodes = 0;
  for (const Chain& ch : ten.chains) nodes += ch.nodes.size();
  c.expect(nodes == 360, "ten chains hold " + std::to_string(nodes) + " nodes");
  UniformAdapter uniform;
  RunOptions opt;
  opt.prior_mode = PriorMode::kNone;
  opt.concurrency = 8;
  std::vector<EvalRecord> records = run_chain(ten.puzzles, ten.chains, uniform, opt);
  c.expect(records.size() == 360,
           "ten-puzzle run produced " + std::to_string(records.size()) + " records");
  c.finish();
}

TEST_CASE("criterion 9: prior sentences and prompts match their fixtures byte for byte") {
  Criterion c{9, "reformatted priors, prompt endings, and scene sentences are byte-exact"};

  const Chain& chain = center_chains().chains[0];
  const TemplateRegistry& registry = reg();
  auto node = [&](const char* id) -> const ChainNode& {
    const ChainNode* n = node_in(chain, id);
    REQUIRE_MESSAGE(n != nullptr, id);
    return *n;
  };

  const ChainNode& cell0 = node("number_single_panel_1");
  const ChainNode& cell1 = node("number_single_panel_2");
  const ChainNode& pair01 = node("number_two_panels_1_2");
  const ChainNode& pair12 = node("number_two_panels_2_3");
  const ChainNode& row = node("number_one_row");
  const ChainNode& both = node("number_two_rows");
  const ChainNode& final_node = node("final");

  auto pin = [&c](const std::string& got, const std::string& want, const char* what) {
    c.expect(got == want, std::string(what) + ": got \"" + got + "\"");
  };

  pin(reformat_prior(cell0, pair01, "1", registry), "There are 1 objects in the left panel.",
      "count prior, left of a pair");
  pin(reformat_prior(cell1, pair01, "2", registry), "There are 2 objects in the right panel.",
      "count prior, right of a pair");
  pin(reformat_prior(cell1, row, "2", registry), "There are 2 objects in the middle panel.",
      "count prior, middle of a row");
  pin(reformat_prior(pair01, row, "Fewer", registry),
      "The left panel has Fewer objects compared to the middle panel.",
      "pair comparison prior");
  pin(reformat_prior(pair12, row, "More", registry),
      "The middle panel has More objects compared to the right panel.",
      "pair comparison prior, second pair");
  pin(reformat_prior(row, both, "The number of objects remains constant.", registry),
      "The rule for the number of objects in the first row is: The number of objects remains "
      "constant.",
      "row rule prior");
  pin(reformat_prior(both, final_node, "The number of objects remains constant.", registry),
      "The rule for the number of objects in both rows is: The number of objects remains "
      "constant.",
      "both-rows rule prior");

  const ChainNode& where = node("position_single_panel_1");
  const ChainNode& pos_pair = node("position_two_panels_1_2");
  const ChainNode& pos_row = node("position_one_row");
  pin(reformat_prior(where, pos_pair, "center", registry),
      "There is a " + where.qa.binding.at("<S>") + " positioned in the left panel.",
      "position existence prior withholds the answer");
  pin(reformat_prior(pos_pair, pos_row, "Yes", registry),
      "The position of all the objects in the left panel is the same as the objects in the "
      "middle panel.",
      "position agreement prior");
  pin(reformat_prior(pos_pair, pos_row, "No", registry),
      "The position of all the objects in the left panel is not the same as the objects in "
      "the middle panel.",
      "position disagreement prior");

  // Prompt skeleton, with and without generated findings.
  QAItem qa;
  qa.question = "How many objects are in the panel?";
  qa.choice_labels = {"A", "B", "C", "D"};
  qa.choice_texts = {"1", "3", "2", "5"};
  pin(build_prompt(qa, {}, PromptVariant::kVanilla, ""),
      "Question: How many objects are in the panel? Please select one of the following: "
      "A: 1, B: 3, C: 2, D: 5. The answer should be one of A, B, C, D.",
      "bare prompt");
  pin(build_prompt(qa, {"There are 2 objects in the left panel."}, PromptVariant::kVanilla, ""),
      "Below is the information generated from the previous steps, please be aware that it "
      "may or may not contain errors: There are 2 objects in the left panel. Question: How "
      "many objects are in the panel? Please select one of the following: A: 1, B: 3, C: 2, "
      "D: 5. The answer should be one of A, B, C, D.",
      "prompt with findings");

  std::string final_prompt = build_prompt(final_node.qa, {}, PromptVariant::kVanilla, "");
  std::string final_suffix = "The answer should be one of 1, 2, 3, 4, 5, 6, 7, 8.";
  c.expect(final_prompt.size() >= final_suffix.size() &&
               final_prompt.rfind(final_suffix) == final_prompt.size() - final_suffix.size(),
           "final prompt does not end with the bare-label instruction");

  pin(extra_setting_sentence(Layout::kLeftRight),
      "The panel is divided into two sections by a vertical line, separating the left side "
      "from the right side, with objects possibly present in both sections.",
      "left-right scene sentence");
  pin(extra_setting_sentence(Layout::kUpDown),
      "The input panel is split by a horizontal line, separating the top side from the "
      "bottom side, with objects possibly present in both sections.",
      "up-down scene sentence");
  std::string out_in =
      "The panel is divided into two regions: an outer structure and an inner structure, with "
      "objects possibly present in both regions.";
  pin(extra_setting_sentence(Layout::kOutInSingle), out_in, "out-in scene sentence");
  pin(extra_setting_sentence(Layout::kOutInGrid), out_in, "out-in grid scene sentence");
  c.expect(extra_setting_sentence(Layout::kCenterSingle).empty() &&
               extra_setting_sentence(Layout::kGrid2x2).empty() &&
               extra_setting_sentence(Layout::kGrid3x3).empty(),
           "one-region layouts must not add a scene sentence");
  c.finish();
}

TEST_CASE("criterion 10: equal seeds and replays reproduce every byte") {
  Criterion c{10, "same-seed artifacts and replayed runs are byte-identical"};

  namespace fs = std::filesystem;
  fs::path tmp = fs::path("acceptance_tmp");
  fs::create_directories(tmp);

  GeneratorConfig cfg;
  cfg.seed = 313;
  cfg.layouts = kAllLayouts;
  cfg.puzzles_per_layout = 2;
  std::vector<Puzzle> first = generate_dataset(cfg);
  std::vector<Puzzle> second = generate_dataset(cfg);
  write_puzzle_manifest((tmp / "a.jsonl").string(), first);
  write_puzzle_manifest((tmp / "b.jsonl").string(), second);
  std::string manifest_a = slurp((tmp / "a.jsonl").string());
  c.expect(!manifest_a.empty(), "empty puzzle manifest");
  c.expect(manifest_a == slurp((tmp / "b.jsonl").string()),
           "same-seed puzzle manifests differ");

  std::vector<std::uint8_t> png_a = encode_png_gray8(render_image_key(first[0], "final"));
  std::vector<std::uint8_t> png_b = encode_png_gray8(render_image_key(second[0], "final"));
  c.expect(!png_a.empty() && png_a == png_b, "same-seed answer sheets differ");

  ChainBuildResult chain_a = build_chain(first[0], reg(), 424);
  ChainBuildResult chain_b = build_chain(second[0], reg(), 424);
  c.expect(chain_a.chain.has_value() == chain_b.chain.has_value(),
           "same-seed chain construction diverged");
  if (chain_a.chain && chain_b.chain) {
    c.expect(chain_to_json(*chain_a.chain).dump() == chain_to_json(*chain_b.chain).dump(),
             "same-seed chains serialize differently");
  }

  // Recording a run and replaying the log must reproduce the result files.
  ChainSet set = head_of(center_chains(), 2);
  RunOptions opt;
  opt.concurrency = 4;
  OracleAdapter oracle(0.7);
  RecordingAdapter recorder(oracle);
  std::vector<EvalRecord> live = run_chain(set.puzzles, set.chains, recorder, opt);
  recorder.save((tmp / "model.log").string());
  write_records_jsonl((tmp / "live.jsonl").string(), live);
  std::string live_stage = summary_tsv(summarize_by(live, "stage"));

  ReplayAdapter replay((tmp / "model.log").string());
  std::vector<EvalRecord> replayed = run_chain(set.puzzles, set.chains, replay, opt);
  write_records_jsonl((tmp / "replayed.jsonl").string(), replayed);
  c.expect(slurp((tmp / "live.jsonl").string()) == slurp((tmp / "replayed.jsonl").string()),
           "replayed record file differs from the live run");
  c.expect(live_stage == summary_tsv(summarize_by(replayed, "stage")),
           "replayed stage summary differs from the live run");

  std::error_code ec;
  fs::remove_all(tmp, ec);
  c.finish();
}

TEST_CASE("criterion 11: chance-level answers land on the random baseline") {
  Criterion c{11, "uniform accuracy tracks mean 1/choices per stage; the final baseline is 12.5"};

  const std::vector<Puzzle>& corpus = center_corpus();
  const std::vector<QAItem>& items = center_items();
  c.expect(items.size() >= 2000, "corpus holds only " + std::to_string(items.size()) + " items");

  // Batches bound the run's image cache; records concatenate unchanged.
  UniformAdapter uniform;
  RunOptions opt;
  opt.concurrency = 8;
  std::vector<EvalRecord> records;
  std::size_t cursor = 0;
  for (std::size_t start = 0; start < corpus.size(); start += 50) {
    std::size_t stop = std::min(corpus.size(), start + 50);
    std::vector<Puzzle> batch(corpus.begin() + static_cast<std::ptrdiff_t>(start),
                              corpus.begin() + static_cast<std::ptrdiff_t>(stop));
    std::set<std::string> ids;
    for (const Puzzle& p : batch) ids.insert(p.id);
    std::vector<QAItem> batch_items;
    while (cursor < items.size() && ids.count(items[cursor].puzzle_id)) {
      batch_items.push_back(items[cursor]);
      ++cursor;
    }
    std::vector<EvalRecord> part = run_direct(batch, batch_items, uniform, opt);
    records.insert(records.end(), part.begin(), part.end());
  }
  c.expect(records.size() == items.size(), "record count does not match the item count");

  std::vector<SummaryRow> rows = summarize_by(records, "stage");
  c.expect(rows.size() == 5, "expected 5 stage rows");
  bool saw_final = false;
  for (const SummaryRow& row : rows) {
    c.expect(std::fabs(row.accuracy - row.random_baseline) <= kAccuracyPoints,
             "stage " + row.key + ": accuracy " + std::to_string(row.accuracy) +
                 " vs baseline " + std::to_string(row.random_baseline));
    if (row.key == "final") {
      saw_final = true;
      c.expect(row.random_baseline == 12.5,
               "final baseline " + std::to_string(row.random_baseline) + " is not exactly 12.5");
      c.expect(row.n == 1000, "final row counts " + std::to_string(row.n) + " items");
    }
  }
  c.expect(saw_final, "no final stage row in the summary");
  c.finish();
}
