// Command-line front end: dataset generation, chain construction, model
// evaluation, and verification.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ravenkit/chain.hpp"
#include "ravenkit/gen.hpp"
#include "ravenkit/harness.hpp"
#include "ravenkit/question.hpp"
#include "ravenkit/render.hpp"
#include "ravenkit/verify.hpp"

namespace fs = std::filesystem;
using namespace ravenkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerification = 2;
constexpr int kExitRuntime = 3;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Every run prints a hash of its resolved options so two invocations can be
// compared without diffing argv.
void print_config_hash(const std::string& command,
                       const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string blob = command + "\n";
  for (const auto& [k, v] : kv) blob += k + "=" + v + "\n";
  std::printf("config_hash: %s\n", hex64(fnv1a64(blob)).c_str());
}

const std::vector<std::string>& layout_tokens() {
  static const std::vector<std::string> tokens = {
      "center_single", "grid_2x2",      "grid_3x3",   "left_right",
      "up_down",       "out_in_single", "out_in_grid"};
  return tokens;
}

std::vector<Layout> resolve_layouts(const std::string& token) {
  std::vector<Layout> out;
  if (token == "all") {
    for (const std::string& t : layout_tokens()) out.push_back(*layout_from_string(t));
    return out;
  }
  std::optional<Layout> layout = layout_from_string(token);
  if (!layout) throw std::runtime_error("unknown layout " + token);
  out.push_back(*layout);
  return out;
}

void write_images_for(const std::string& images_dir, const Puzzle& p,
                      const std::set<std::string>& keys) {
  fs::create_directories(images_dir + "/" + p.id);
  for (const std::string& key : keys) {
    write_image_png(images_dir + "/" + p.id + "/" + key + ".png", render_image_key(p, key));
  }
}

std::vector<QAItem> read_qa_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<QAItem> items;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    items.push_back(qa_from_json(Json::parse(line)));
  }
  return items;
}

void write_qa_jsonl(const std::string& path, const std::vector<QAItem>& items) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const QAItem& qa : items) out << qa_to_json(qa).dump() << "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
}

struct GenerateArgs {
  std::uint64_t seed = 1;
  int count = 10;
  std::string layout = "all";
  std::string out;
  bool render = true;
  bool xml = false;
  int paraphrase_pool = 0;
};

int cmd_generate(const GenerateArgs& args) {
  print_config_hash("generate", {{"seed", std::to_string(args.seed)},
                                 {"count", std::to_string(args.count)},
                                 {"layout", args.layout},
                                 {"out", args.out},
                                 {"render", args.render ? "1" : "0"},
                                 {"xml", args.xml ? "1" : "0"},
                                 {"paraphrase_pool", std::to_string(args.paraphrase_pool)}});
  GeneratorConfig config;
  config.seed = args.seed;
  config.layouts = resolve_layouts(args.layout);
  config.puzzles_per_layout = args.count;
  std::vector<Puzzle> puzzles = generate_dataset(config);

  for (const Puzzle& p : puzzles) {
    ValidationReport structure = validate_puzzle(p);
    VerifyReport rules = verify_rules(p);
    if (!structure.ok() || !rules.ok) {
      std::fprintf(stderr, "puzzle %s failed verification\n", p.id.c_str());
      for (const Violation& v : structure.violations) {
        std::fprintf(stderr, "  %s: %s\n", v.code.c_str(), v.detail.c_str());
      }
      for (const std::string& f : rules.failures) std::fprintf(stderr, "  %s\n", f.c_str());
      return kExitVerification;
    }
  }

  fs::create_directories(args.out);
  write_puzzle_manifest(args.out + "/puzzles.jsonl", puzzles);

  const TemplateRegistry& registry = default_template_registry();
  QuestionOptions qopts;
  qopts.paraphrase_pool = args.paraphrase_pool;
  std::vector<QAItem> items;
  for (const Puzzle& p : puzzles) {
    std::vector<QAItem> per = generate_direct(p, registry, args.seed, qopts);
    items.insert(items.end(), per.begin(), per.end());
  }
  write_qa_jsonl(args.out + "/qa.jsonl", items);

  if (args.render) {
    for (const Puzzle& p : puzzles) {
      std::set<std::string> keys;
      for (const QAItem& qa : items) {
        if (qa.puzzle_id == p.id) keys.insert(qa.image_key);
      }
      write_images_for(args.out + "/images", p, keys);
    }
  }
  if (args.xml) {
    fs::create_directories(args.out + "/xml");
    for (const Puzzle& p : puzzles) {
      write_text_file(args.out + "/xml/" + p.id + ".xml", export_raven_xml(p));
    }
  }
  std::printf("wrote %zu puzzles and %zu questions to %s\n", puzzles.size(), items.size(),
              args.out.c_str());
  return kExitOk;
}

struct ChainArgs {
  std::uint64_t seed = 1;
  int count = 10;
  std::string layout = "center_single";
  std::string out;
  bool render = true;
  int paraphrase_pool = 0;
};

int cmd_chain(const ChainArgs& args) {
  print_config_hash("chain", {{"seed", std::to_string(args.seed)},
                              {"count", std::to_string(args.count)},
                              {"layout", args.layout},
                              {"out", args.out},
                              {"render", args.render ? "1" : "0"},
                              {"paraphrase_pool", std::to_string(args.paraphrase_pool)}});
  const TemplateRegistry& registry = default_template_registry();
  QuestionOptions qopts;
  qopts.paraphrase_pool = args.paraphrase_pool;

  std::vector<Puzzle> puzzles;
  std::vector<Chain> chains;
  int skipped = 0;
  for (Layout layout : resolve_layouts(args.layout)) {
    int built = 0;
    int attempts = 0;
    int budget = args.count * 50;
    while (built < args.count && attempts < budget) {
      Puzzle p = generate_puzzle(layout, args.seed, attempts);
      ++attempts;
      ChainBuildResult result = build_chain(p, registry, args.seed, qopts);
      if (!result.chain) {
        ++skipped;
        continue;
      }
      puzzles.push_back(std::move(p));
      chains.push_back(std::move(*result.chain));
      ++built;
    }
    if (built < args.count) {
      throw std::runtime_error("could not build " + std::to_string(args.count) +
                               " chains for layout " + std::string(to_string(layout)));
    }
  }

  fs::create_directories(args.out);
  write_puzzle_manifest(args.out + "/puzzles.jsonl", puzzles);
  write_chain_manifest(args.out + "/chains.jsonl", chains);
  if (args.render) {
    for (std::size_t i = 0; i < chains.size(); ++i) {
      std::set<std::string> keys;
      for (const ChainNode& node : chains[i].nodes) keys.insert(node.qa.image_key);
      write_images_for(args.out + "/images", puzzles[i], keys);
    }
  }
  std::printf("built %zu chains (%d puzzles skipped) in %s\n", chains.size(), skipped,
              args.out.c_str());
  return kExitOk;
}

struct EvalArgs {
  std::string puzzles;
  std::string qa;
  std::string chains;
  std::string out;
  std::string adapter = "uniform";
  double oracle_p = 1.0;
  std::uint64_t seed = 7;
  std::string run_id = "run";
  std::string prior_mode = "generated";
  std::string cmi_conditioning = "generated";
  std::string variant = "vanilla";
  int concurrency = 1;
  int limit = 0;
  bool strict = false;
  bool mseval = true;
  std::string images;
  std::string record_path;
  std::string replay_path;
  std::string base_url = "http://127.0.0.1:8000";
  std::string model = "default";
};

int cmd_eval(const EvalArgs& args) {
  print_config_hash(
      "eval", {{"puzzles", args.puzzles},
               {"qa", args.qa},
               {"chains", args.chains},
               {"out", args.out},
               {"adapter", args.adapter},
               {"oracle_p", std::to_string(args.oracle_p)},
               {"seed", std::to_string(args.seed)},
               {"run_id", args.run_id},
               {"prior_mode", args.prior_mode},
               {"cmi_conditioning", args.cmi_conditioning},
               {"variant", args.variant},
               {"concurrency", std::to_string(args.concurrency)},
               {"limit", std::to_string(args.limit)},
               {"strict", args.strict ? "1" : "0"},
               {"mseval", args.mseval ? "1" : "0"},
               {"images", args.images},
               {"record", args.record_path},
               {"replay", args.replay_path},
               {"base_url", args.base_url},
               {"model", args.model}});
  if (args.qa.empty() == args.chains.empty()) {
    throw std::runtime_error("pass exactly one of --qa or --chains");
  }

  RunOptions options;
  options.run_id = args.run_id;
  std::optional<PriorMode> prior = prior_mode_from_string(args.prior_mode);
  std::optional<CmiConditioning> cond = cmi_conditioning_from_string(args.cmi_conditioning);
  std::optional<PromptVariant> variant = prompt_variant_from_string(args.variant);
  if (!prior || !cond || !variant) throw std::runtime_error("bad mode or variant token");
  options.prior_mode = *prior;
  options.cmi_conditioning = *cond;
  options.variant = *variant;
  options.concurrency = args.concurrency;
  options.mseval = args.mseval;
  options.strict = args.strict;
  options.images_dir = args.images;

  std::unique_ptr<ModelAdapter> base;
  if (args.adapter == "uniform") {
    base = std::make_unique<UniformAdapter>();
  } else if (args.adapter == "oracle") {
    base = std::make_unique<OracleAdapter>(args.oracle_p);
  } else if (args.adapter == "random") {
    base = std::make_unique<RandomAdapter>(args.seed);
  } else if (args.adapter == "http") {
    HttpAdapterConfig config;
    config.base_url = args.base_url;
    config.model = args.model;
    base = std::make_unique<HttpAdapter>(config);
  } else if (args.adapter == "replay") {
    if (args.replay_path.empty()) throw std::runtime_error("--adapter replay needs --replay");
    base = std::make_unique<ReplayAdapter>(args.replay_path);
  } else {
    throw std::runtime_error("unknown adapter " + args.adapter);
  }

  std::unique_ptr<RecordingAdapter> recorder;
  ModelAdapter* adapter = base.get();
  if (!args.record_path.empty()) {
    recorder = std::make_unique<RecordingAdapter>(*base);
    adapter = recorder.get();
  }

  std::vector<Puzzle> puzzles = read_puzzle_manifest(args.puzzles);
  std::vector<EvalRecord> records;
  if (!args.qa.empty()) {
    std::vector<QAItem> items = read_qa_jsonl(args.qa);
    if (args.limit > 0 && static_cast<int>(items.size()) > args.limit) {
      items.resize(static_cast<std::size_t>(args.limit));
    }
    records = run_direct(puzzles, items, *adapter, options);
  } else {
    std::vector<Chain> chains = read_chain_manifest(args.chains);
    if (args.limit > 0 && static_cast<int>(chains.size()) > args.limit) {
      chains.resize(static_cast<std::size_t>(args.limit));
    }
    records = run_chain(puzzles, chains, *adapter, options);
  }

  fs::create_directories(args.out);
  write_records_jsonl(args.out + "/records.jsonl", records);
  write_text_file(args.out + "/by_stage.tsv", summary_tsv(summarize_by(records, "stage")));
  write_text_file(args.out + "/by_attribute.tsv",
                  summary_tsv(summarize_by(records, "attribute")));
  std::string summary = run_summary_text(records);
  write_text_file(args.out + "/summary.txt", summary);
  if (recorder) recorder->save(args.record_path);
  std::fputs(summary.c_str(), stdout);
  return kExitOk;
}

struct VerifyArgs {
  std::string puzzles;
  std::string qa;
  std::string chains;
};

int cmd_verify(const VerifyArgs& args) {
  print_config_hash("verify",
                    {{"puzzles", args.puzzles}, {"qa", args.qa}, {"chains", args.chains}});
  std::vector<Puzzle> puzzles = read_puzzle_manifest(args.puzzles);
  std::map<std::string, const Puzzle*> by_id;
  for (const Puzzle& p : puzzles) by_id[p.id] = &p;

  int failures = 0;
  auto report = [&](const std::string& what) {
    std::fprintf(stderr, "%s\n", what.c_str());
    ++failures;
  };

  for (const Puzzle& p : puzzles) {
    ValidationReport structure = validate_puzzle(p);
    for (const Violation& v : structure.violations) {
      report(p.id + ": " + v.code + ": " + v.detail);
    }
    VerifyReport rules = verify_rules(p);
    for (const std::string& f : rules.failures) report(p.id + ": " + f);
  }

  if (!args.qa.empty()) {
    for (const QAItem& qa : read_qa_jsonl(args.qa)) {
      auto it = by_id.find(qa.puzzle_id);
      if (it == by_id.end()) {
        report(qa.qa_id + ": unknown puzzle " + qa.puzzle_id);
        continue;
      }
      std::optional<std::string> answer = brute_force_answer(*it->second, qa);
      if (!answer) {
        report(qa.qa_id + ": no independent answer");
      } else if (*answer != qa.gt_text) {
        report(qa.qa_id + ": independent answer '" + *answer + "' != recorded '" + qa.gt_text +
               "'");
      }
    }
  }

  if (!args.chains.empty()) {
    for (const Chain& chain : read_chain_manifest(args.chains)) {
      auto it = by_id.find(chain.puzzle_id);
      if (it == by_id.end()) {
        report(chain.puzzle_id + ": chain for unknown puzzle");
        continue;
      }
      ChainShapeReport shape = check_chain_shape(chain, *it->second);
      for (const std::string& f : shape.failures) report(chain.puzzle_id + ": " + f);
      for (const ChainNode& node : chain.nodes) {
        std::optional<std::string> answer = brute_force_answer(*it->second, node.qa);
        if (!answer) {
          report(node.qa.qa_id + ": no independent answer");
        } else if (*answer != node.qa.gt_text) {
          report(node.qa.qa_id + ": independent answer '" + *answer + "' != recorded '" +
                 node.qa.gt_text + "'");
        }
      }
    }
  }

  if (failures > 0) {
    std::fprintf(stderr, "verification failed with %d finding(s)\n", failures);
    return kExitVerification;
  }
  std::printf("verified %zu puzzles\n", puzzles.size());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark synthesis and multi-stage evaluation for matrix reasoning"};
  app.set_config("--config", "", "Read options from an INI file");
  app.require_subcommand(1);

  std::vector<std::string> layout_choices = layout_tokens();
  layout_choices.insert(layout_choices.begin(), "all");

  GenerateArgs gen_args;
  CLI::App* gen = app.add_subcommand("generate", "Generate puzzles, questions, and images");
  gen->add_option("--seed", gen_args.seed, "Master seed");
  gen->add_option("--count", gen_args.count, "Puzzles per layout")->check(CLI::PositiveNumber);
  gen->add_option("--layout", gen_args.layout, "Layout token or 'all'")
      ->check(CLI::IsMember(layout_choices));
  gen->add_option("--out", gen_args.out, "Output directory")->required();
  gen->add_flag("--render,!--no-render", gen_args.render, "Write PNG stage images");
  gen->add_flag("--xml", gen_args.xml, "Also export puzzles as XML");
  gen->add_option("--paraphrase-pool", gen_args.paraphrase_pool,
                  "Limit paraphrases per template (0 = all)");

  ChainArgs chain_args;
  CLI::App* chain = app.add_subcommand("chain", "Generate puzzles with question chains");
  chain->add_option("--seed", chain_args.seed, "Master seed");
  chain->add_option("--count", chain_args.count, "Chains per layout")
      ->check(CLI::PositiveNumber);
  chain->add_option("--layout", chain_args.layout, "Layout token or 'all'")
      ->check(CLI::IsMember(layout_choices));
  chain->add_option("--out", chain_args.out, "Output directory")->required();
  chain->add_flag("--render,!--no-render", chain_args.render, "Write PNG stage images");
  chain->add_option("--paraphrase-pool", chain_args.paraphrase_pool,
                    "Limit paraphrases per template (0 = all)");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "Run a model over questions or chains");
  eval->add_option("--puzzles", eval_args.puzzles, "puzzles.jsonl manifest")->required();
  eval->add_option("--qa", eval_args.qa, "qa.jsonl of standalone questions");
  eval->add_option("--chains", eval_args.chains, "chains.jsonl manifest");
  eval->add_option("--out", eval_args.out, "Output directory")->required();
  eval->add_option("--adapter", eval_args.adapter, "Model adapter")
      ->check(CLI::IsMember({"uniform", "oracle", "random", "http", "replay"}));
  eval->add_option("--oracle-p", eval_args.oracle_p, "Oracle probability on the answer")
      ->check(CLI::Range(0.0, 1.0));
  eval->add_option("--seed", eval_args.seed, "Seed for the random adapter");
  eval->add_option("--run-id", eval_args.run_id, "Run identifier in records");
  eval->add_option("--prior-mode", eval_args.prior_mode, "none|generated|ground_truth")
      ->check(CLI::IsMember({"none", "generated", "ground_truth"}));
  eval->add_option("--cmi-conditioning", eval_args.cmi_conditioning,
                   "Answers held fixed during sweeps")
      ->check(CLI::IsMember({"generated", "ground_truth"}));
  eval->add_option("--variant", eval_args.variant, "Prompt variant")
      ->check(CLI::IsMember({"vanilla", "html", "document"}));
  eval->add_option("--concurrency", eval_args.concurrency, "Parallel model calls")
      ->check(CLI::PositiveNumber);
  eval->add_option("--limit", eval_args.limit, "Evaluate only the first N items or chains");
  eval->add_flag("--strict", eval_args.strict, "Fail the run on adapter errors");
  eval->add_flag("!--no-mseval", eval_args.mseval, "Skip dependency sweeps and scores");
  eval->add_option("--images", eval_args.images, "Pre-rendered images directory");
  eval->add_option("--record", eval_args.record_path, "Save every model reply to this log");
  eval->add_option("--replay", eval_args.replay_path, "Replay log for --adapter replay");
  eval->add_option("--base-url", eval_args.base_url, "HTTP adapter endpoint");
  eval->add_option("--model", eval_args.model, "HTTP adapter model name");

  VerifyArgs verify_args;
  CLI::App* verify = app.add_subcommand("verify", "Re-check puzzles, questions, and chains");
  verify->add_option("--puzzles", verify_args.puzzles, "puzzles.jsonl manifest")->required();
  verify->add_option("--qa", verify_args.qa, "qa.jsonl to check against the solver");
  verify->add_option("--chains", verify_args.chains, "chains.jsonl to check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(gen_args);
    if (chain->parsed()) return cmd_chain(chain_args);
    if (eval->parsed()) return cmd_eval(eval_args);
    if (verify->parsed()) return cmd_verify(verify_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
