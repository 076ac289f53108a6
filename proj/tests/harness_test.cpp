#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>

#include "ravenkit/gen.hpp"
#include "ravenkit/harness.hpp"

using namespace ravenkit;

namespace {

const std::vector<std::string> kAbcd = {"A", "B", "C", "D"};

QueryContext ctx_for(const std::string& item, const std::string& gt = "A") {
  QueryContext ctx;
  ctx.run_id = "t";
  ctx.item_id = item;
  ctx.gt_label = gt;
  return ctx;
}

}  // namespace

TEST_CASE("letter parsing finds standalone labels") {
  CHECK(parse_letter("The answer is B.", kAbcd) == "B");
  CHECK(parse_letter("B", kAbcd) == "B");
  CHECK(parse_letter("b", kAbcd) == "B");
  CHECK(parse_letter("I think (C) fits best", kAbcd) == "C");
  CHECK(parse_letter("Answer: D", kAbcd) == "D");
  CHECK(parse_letter("", kAbcd) == std::nullopt);
  CHECK(parse_letter("No label here", kAbcd) == std::nullopt);

  // Both surrounding characters must be non-alphanumeric.
  CHECK(parse_letter("CAB", kAbcd) == std::nullopt);
  CHECK(parse_letter("cab", kAbcd) == std::nullopt);

  // An echoed instruction must not be read as an answer.
  CHECK(parse_letter("The answer should be one of A, B, C, D. I pick C.", kAbcd) == "C");

  // An uppercase label wins over a lowercase English word reading.
  CHECK(parse_letter("a fine choice is B", kAbcd) == "B");

  // Digit labels for the final question.
  std::vector<std::string> digits = {"1", "2", "3", "4", "5", "6", "7", "8"};
  CHECK(parse_letter("The answer is 7.", digits) == "7");
  CHECK(parse_letter("17", digits) == std::nullopt);
}

TEST_CASE("reply parsing prefers logits, then text, then gives up") {
  ModelReply logits;
  logits.raw_text = "irrelevant";
  logits.letter_logits = {{"A", 0.0}, {"B", 2.0}, {"C", 0.0}, {"D", 0.0}};
  ParsedAnswer a = parse_reply(logits, kAbcd);
  CHECK_FALSE(a.degenerate);
  CHECK(a.chosen == 1);
  CHECK(a.probs[1] > a.probs[0]);
  double sum = 0.0;
  for (double p : a.probs) sum += p;
  CHECK(std::abs(sum - 1.0) < 1e-12);

  // Labels missing from the logit map get a floor probability, not zero.
  ModelReply partial;
  partial.letter_logits = {{"A", 1.0}};
  ParsedAnswer b = parse_reply(partial, kAbcd);
  CHECK(b.chosen == 0);
  CHECK(b.probs[1] > 0.0);
  CHECK(b.probs[1] < 1e-9);

  ModelReply text;
  text.raw_text = "I choose C";
  ParsedAnswer c = parse_reply(text, kAbcd);
  CHECK_FALSE(c.degenerate);
  CHECK(c.chosen == 2);
  CHECK(c.probs[2] == 1.0);

  ModelReply nothing;
  nothing.raw_text = "shrug";
  ParsedAnswer d = parse_reply(nothing, kAbcd);
  CHECK(d.degenerate);
  CHECK(d.chosen == 0);
  for (double p : d.probs) CHECK(p == 0.25);
}

TEST_CASE("base64 encoding matches known vectors") {
  CHECK(base64_encode({}) == "");
  CHECK(base64_encode({'M'}) == "TQ==");
  CHECK(base64_encode({'M', 'a'}) == "TWE=");
  CHECK(base64_encode({'M', 'a', 'n'}) == "TWFu");
  CHECK(base64_encode({'l', 'i', 'g', 'h', 't', ' ', 'w', 'o', 'r', 'k', '.'}) ==
        "bGlnaHQgd29yay4=");
}

TEST_CASE("uniform adapter induces exact chance probabilities") {
  UniformAdapter uniform;
  ModelReply r = uniform.answer({}, "prompt", kAbcd, ctx_for("i1"));
  ParsedAnswer p = parse_reply(r, kAbcd);
  for (double v : p.probs) CHECK(v == 0.25);

  std::vector<std::string> two = {"A", "B"};
  ParsedAnswer q = parse_reply(uniform.answer({}, "prompt", two, ctx_for("i1")), two);
  for (double v : q.probs) CHECK(v == 0.5);
}

TEST_CASE("oracle adapter concentrates mass on the truth") {
  OracleAdapter sure(1.0);
  ParsedAnswer p = parse_reply(sure.answer({}, "prompt", kAbcd, ctx_for("i1", "C")), kAbcd);
  CHECK(p.probs[2] == 1.0);
  CHECK(p.chosen == 2);

  OracleAdapter mostly(0.7);
  ParsedAnswer q = parse_reply(mostly.answer({}, "x", kAbcd, ctx_for("i1", "B")), kAbcd);
  CHECK(std::abs(q.probs[1] - 0.7) < 1e-9);
  CHECK(std::abs(q.probs[0] - 0.1) < 1e-9);
  CHECK(q.chosen == 1);

  OracleAdapter never(0.0);
  ParsedAnswer z = parse_reply(never.answer({}, "x", kAbcd, ctx_for("i1", "B")), kAbcd);
  CHECK(z.probs[1] < 1e-9);
}

TEST_CASE("random adapter is deterministic per call identity") {
  RandomAdapter a(11);
  RandomAdapter b(11);
  QueryContext ctx = ctx_for("item-1");
  ModelReply r1 = a.answer({}, "prompt", kAbcd, ctx);
  ModelReply r2 = b.answer({}, "prompt", kAbcd, ctx);
  CHECK(r1.raw_text == r2.raw_text);
  CHECK(r1.letter_logits.empty());
  CHECK(parse_reply(r1, kAbcd).degenerate == false);

  // Different identity or different seed moves the answer eventually.
  RandomAdapter c(12);
  bool any_differs = false;
  for (int i = 0; i < 32; ++i) {
    QueryContext k = ctx_for("item-" + std::to_string(i));
    if (a.answer({}, "p", kAbcd, k).raw_text != c.answer({}, "p", kAbcd, k).raw_text) {
      any_differs = true;
    }
  }
  CHECK(any_differs);
}

TEST_CASE("scripted adapter replays programmed rows and falls back to uniform") {
  ScriptedAdapter scripted;
  scripted.script(ScriptedAdapter::key("i1", "", ""),
                  ScriptedAdapter::reply_for_probs(kAbcd, {0.7, 0.1, 0.1, 0.1}));
  QueryContext base = ctx_for("i1");
  ParsedAnswer p = parse_reply(scripted.answer({}, "x", kAbcd, base), kAbcd);
  CHECK(std::abs(p.probs[0] - 0.7) < 1e-9);

  QueryContext sweep = ctx_for("i1");
  sweep.dep_id = "d1";
  sweep.dep_answer = "2";
  ParsedAnswer q = parse_reply(scripted.answer({}, "x", kAbcd, sweep), kAbcd);
  for (double v : q.probs) CHECK(v == 0.25);
}

TEST_CASE("instrumented adapter counts calls per item") {
  UniformAdapter uniform;
  InstrumentedAdapter counted(uniform);
  for (int i = 0; i < 3; ++i) counted.answer({}, "x", kAbcd, ctx_for("a"));
  counted.answer({}, "x", kAbcd, ctx_for("b"));
  CHECK(counted.total_calls() == 4);
  CHECK(counted.calls_for("a") == 3);
  CHECK(counted.calls_for("b") == 1);
  CHECK(counted.calls_for("c") == 0);
  CHECK(counted.max_in_flight() == 1);
}

TEST_CASE("recording and replay round trip byte for byte") {
  OracleAdapter oracle(0.9);
  RecordingAdapter recorder(oracle);
  QueryContext c1 = ctx_for("i1", "B");
  QueryContext c2 = ctx_for("i2", "D");
  ModelReply r1 = recorder.answer({}, "prompt one", kAbcd, c1);
  ModelReply r2 = recorder.answer({}, "prompt two", kAbcd, c2);
  const char* path = "harness_test_replay.jsonl";
  recorder.save(path);

  ReplayAdapter replay(path);
  CHECK(replay.name() == "oracle");
  ModelReply s1 = replay.answer({}, "prompt one", kAbcd, c1);
  ModelReply s2 = replay.answer({}, "prompt two", kAbcd, c2);
  CHECK(s1.raw_text == r1.raw_text);
  CHECK(s1.letter_logits == r1.letter_logits);
  CHECK(s2.letter_logits == r2.letter_logits);

  // A changed prompt means the stored run no longer matches: fail loudly.
  CHECK_THROWS(replay.answer({}, "prompt three", kAbcd, c1));
  std::remove(path);
}

TEST_CASE("mode tokens round trip") {
  for (PriorMode m : {PriorMode::kNone, PriorMode::kGenerated, PriorMode::kGroundTruth}) {
    CHECK(prior_mode_from_string(to_string(m)) == m);
  }
  for (CmiConditioning c : {CmiConditioning::kGenerated, CmiConditioning::kGroundTruth}) {
    CHECK(cmi_conditioning_from_string(to_string(c)) == c);
  }
  CHECK(prior_mode_from_string("bogus") == std::nullopt);
  CHECK(cmi_conditioning_from_string("none") == std::nullopt);
}

namespace {

std::vector<Puzzle> small_dataset() {
  GeneratorConfig config;
  config.seed = 51;
  config.layouts = {Layout::kCenterSingle};
  config.puzzles_per_layout = 2;
  return generate_dataset(config);
}

std::vector<QAItem> items_for(const std::vector<Puzzle>& puzzles) {
  std::vector<QAItem> items;
  for (const Puzzle& p : puzzles) {
    auto per = generate_direct(p, default_template_registry(), 51);
    items.insert(items.end(), per.begin(), per.end());
  }
  return items;
}

std::vector<Chain> chains_for(const std::vector<Puzzle>& puzzles) {
  std::vector<Chain> chains;
  for (const Puzzle& p : puzzles) {
    auto result = build_chain(p, default_template_registry(), 51);
    REQUIRE(result.chain.has_value());
    chains.push_back(std::move(*result.chain));
  }
  return chains;
}

}  // namespace

TEST_CASE("direct runs score each item in isolation") {
  std::vector<Puzzle> puzzles = small_dataset();
  std::vector<QAItem> items = items_for(puzzles);
  UniformAdapter uniform;
  RunOptions options;
  options.run_id = "direct";
  std::vector<EvalRecord> records = run_direct(puzzles, items, uniform, options);
  REQUIRE(records.size() == items.size());
  check_record_uniqueness(records);
  for (const EvalRecord& r : records) {
    CHECK(r.run_id == "direct");
    CHECK(r.node_id.empty());
    CHECK(r.prior_mode == "none");
    CHECK(r.adapter == "uniform");
    CHECK_FALSE(r.stage.empty());
    CHECK(r.epsilon == 1.0 / static_cast<double>(r.choice_labels.size()));
    CHECK(r.p_gt == r.epsilon);
    CHECK(r.mseval.available);
    CHECK(r.mseval.score == 1.0);
    CHECK(r.mseval.calls == 1);
    CHECK(r.prompt.find("Question: ") != std::string::npos);
    CHECK(r.prompt.find(r.gt_label) != std::string::npos);
  }
}

TEST_CASE("chain runs respect dependency budgets and stay deterministic") {
  std::vector<Puzzle> puzzles = small_dataset();
  std::vector<Chain> chains = chains_for(puzzles);

  UniformAdapter uniform;
  InstrumentedAdapter counted(uniform);
  RunOptions options;
  options.run_id = "chain";
  options.concurrency = 4;
  std::vector<EvalRecord> records = run_chain(puzzles, chains, counted, options);
  REQUIRE(records.size() == chains.size() * 36);
  check_record_uniqueness(records);

  // Sweep budget: one base call plus one call per dependency answer.
  for (const Chain& chain : chains) {
    for (const ChainNode& node : chain.nodes) {
      int expected = 1;
      for (const std::string& dep : node.deps) {
        expected += static_cast<int>(chain.find(dep)->qa.choice_texts.size());
      }
      CHECK(counted.calls_for(chain.puzzle_id + ":" + node.node_id) == expected);
    }
  }

  // Concurrency runs whole chains in parallel but never oversubscribes.
  CHECK(counted.max_in_flight() <= 4);

  // The exact same run, serial, produces identical records.
  UniformAdapter uniform2;
  RunOptions serial = options;
  serial.concurrency = 1;
  std::vector<EvalRecord> again = run_chain(puzzles, chains, uniform2, serial);
  REQUIRE(again.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(eval_record_to_json(again[i]) == eval_record_to_json(records[i]));
  }
}

TEST_CASE("chain records carry prior text and per-node scores") {
  std::vector<Puzzle> puzzles = small_dataset();
  std::vector<Chain> chains = chains_for(puzzles);
  OracleAdapter oracle(1.0);
  RunOptions options;
  options.run_id = "oracle";
  std::vector<EvalRecord> records = run_chain(puzzles, chains, oracle, options);

  int finals = 0;
  for (const EvalRecord& r : records) {
    CHECK(r.correct);
    CHECK(r.p_gt == 1.0);
    CHECK(r.mseval.available);
    if (r.stage == "final") {
      ++finals;
      CHECK(r.epsilon == 0.125);
      CHECK(r.mseval.dep_ids.size() == 5);
      CHECK(r.prompt.find("Below is the information generated from the previous steps") !=
            std::string::npos);
      // All five two-row rules should be quoted in the final prompt.
      CHECK(r.prompt.find("The rule for the number of objects in both rows is:") !=
            std::string::npos);
      CHECK(r.prompt.find("The rule for the position of objects in both rows is:") !=
            std::string::npos);
    }
    REQUIRE(r.mseval.cmis.size() == r.mseval.dep_ids.size() + 1);
    REQUIRE(r.mseval.weights.size() == r.mseval.cmis.size());
    double sum = 0.0;
    for (double w : r.mseval.weights) sum += w;
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
  CHECK(finals == static_cast<int>(chains.size()));
}

TEST_CASE("prior mode none asks once and scores the node alone") {
  std::vector<Puzzle> puzzles = small_dataset();
  std::vector<Chain> chains = chains_for(puzzles);
  UniformAdapter uniform;
  InstrumentedAdapter counted(uniform);
  RunOptions options;
  options.prior_mode = PriorMode::kNone;
  std::vector<EvalRecord> records = run_chain(puzzles, chains, counted, options);
  CHECK(counted.total_calls() == static_cast<int>(records.size()));
  for (const EvalRecord& r : records) {
    CHECK(r.mseval.calls == 1);
    CHECK(r.mseval.dep_ids.empty());
    CHECK(r.mseval.score == 1.0);
    CHECK(r.prompt.find("Below is the information") == std::string::npos);
  }
}

TEST_CASE("strict mode rethrows adapter failures; lax mode marks degenerate") {
  class FailingAdapter : public ModelAdapter {
   public:
    std::string name() const override { return "failing"; }
    ModelReply answer(const std::vector<std::uint8_t>&, const std::string&,
                      const std::vector<std::string>&, const QueryContext&) override {
      throw std::runtime_error("boom");
    }
  };

  std::vector<Puzzle> puzzles = small_dataset();
  std::vector<QAItem> items = items_for(puzzles);
  items.resize(4);
  FailingAdapter failing;

  RunOptions lax;
  std::vector<EvalRecord> records = run_direct(puzzles, items, failing, lax);
  REQUIRE(records.size() == 4);
  for (const EvalRecord& r : records) {
    CHECK(r.degenerate);
    CHECK_FALSE(r.mseval.available);
    CHECK(r.raw_text.find("boom") != std::string::npos);
  }

  RunOptions strict;
  strict.strict = true;
  CHECK_THROWS_WITH_AS(run_direct(puzzles, items, failing, strict), "boom",
                       std::runtime_error);
}

TEST_CASE("records round trip through jsonl files") {
  std::vector<Puzzle> puzzles = small_dataset();
  std::vector<QAItem> items = items_for(puzzles);
  items.resize(6);
  OracleAdapter oracle(0.8);
  RunOptions options;
  std::vector<EvalRecord> records = run_direct(puzzles, items, oracle, options);

  const char* path = "harness_test_records.jsonl";
  write_records_jsonl(path, records);
  std::vector<EvalRecord> loaded = read_records_jsonl(path);
  std::remove(path);
  REQUIRE(loaded.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(eval_record_to_json(loaded[i]) == eval_record_to_json(records[i]));
  }
}

TEST_CASE("duplicate records are rejected") {
  EvalRecord r;
  r.run_id = "r";
  r.item_id = "i";
  r.prior_mode = "none";
  EvalRecord s = r;
  CHECK_THROWS(check_record_uniqueness({r, s}));
  s.prior_mode = "generated";
  CHECK_NOTHROW(check_record_uniqueness({r, s}));
}

TEST_CASE("summaries group by stage with exact chance baselines") {
  std::vector<EvalRecord> records;
  auto push = [&](const std::string& stage, int k, bool correct) {
    EvalRecord r;
    r.run_id = "s";
    r.item_id = "i" + std::to_string(records.size());
    r.prior_mode = "none";
    r.stage = stage;
    r.configuration = stage == "final" ? "Final" : "1P-B";
    r.attribute = "number";
    r.choice_labels.assign(static_cast<std::size_t>(k), "x");
    r.epsilon = 1.0 / k;
    r.correct = correct;
    r.mseval.available = true;
    r.mseval.score = 1.0;
    records.push_back(std::move(r));
  };
  push("single_panel", 4, true);
  push("single_panel", 4, false);
  push("final", 8, false);
  push("final", 8, false);

  std::vector<SummaryRow> rows = summarize_by(records, "stage");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].key == "single_panel");
  CHECK(rows[0].n == 2);
  CHECK(rows[0].accuracy == 50.0);
  CHECK(rows[0].random_baseline == 25.0);
  CHECK(rows[1].key == "final");
  CHECK(rows[1].accuracy == 0.0);
  CHECK(rows[1].random_baseline == 12.5);

  std::string tsv = summary_tsv(rows);
  CHECK(tsv.find("group\tn\taccuracy\trandom_baseline\tmseval_mean\tmseval_n") == 0);
  CHECK(tsv.find("single_panel\t2\t50.00\t25.00") != std::string::npos);

  CHECK_THROWS(summarize_by(records, "bogus"));

  std::string text = run_summary_text(records);
  CHECK(text.find("records: 4") != std::string::npos);
}
