#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "ravenkit/harness.hpp"
#include "ravenkit/render.hpp"

namespace ravenkit {

const char* to_string(PriorMode m) {
  switch (m) {
    case PriorMode::kNone:
      return "none";
    case PriorMode::kGenerated:
      return "generated";
    case PriorMode::kGroundTruth:
      return "ground_truth";
  }
  return "none";
}

const char* to_string(CmiConditioning c) {
  return c == CmiConditioning::kGenerated ? "generated" : "ground_truth";
}

std::optional<PriorMode> prior_mode_from_string(const std::string& s) {
  if (s == "none") return PriorMode::kNone;
  if (s == "generated") return PriorMode::kGenerated;
  if (s == "ground_truth") return PriorMode::kGroundTruth;
  return std::nullopt;
}

std::optional<CmiConditioning> cmi_conditioning_from_string(const std::string& s) {
  if (s == "generated") return CmiConditioning::kGenerated;
  if (s == "ground_truth") return CmiConditioning::kGroundTruth;
  return std::nullopt;
}

namespace {

std::string stage_token(const std::string& configuration) {
  if (configuration == "2P") return "two_panels";
  if (configuration == "1R") return "one_row";
  if (configuration == "2R") return "two_rows";
  if (configuration == "Final") return "final";
  return "single_panel";
}

// Runs fn(0..n-1) across a bounded worker pool; the first exception wins and
// stops the remaining work.
void parallel_for(std::size_t n, int concurrency,
                  const std::function<void(std::size_t)>& fn) {
  int workers = std::max(1, concurrency);
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  workers = std::min<int>(workers, static_cast<int>(n));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (!failed.load()) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          failed.store(true);
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

// Hands out the PNG for a (puzzle, image key) pair, rendering on demand or
// reading a pre-rendered file, and caches the bytes for the run.
class ImageProvider {
 public:
  ImageProvider(const std::vector<Puzzle>& puzzles, std::string images_dir)
      : dir_(std::move(images_dir)) {
    for (const Puzzle& p : puzzles) by_id_[p.id] = &p;
  }

  const Puzzle& puzzle(const std::string& puzzle_id) const {
    auto it = by_id_.find(puzzle_id);
    if (it == by_id_.end()) throw std::runtime_error("unknown puzzle " + puzzle_id);
    return *it->second;
  }

  std::vector<std::uint8_t> get(const std::string& puzzle_id, const std::string& image_key) {
    std::string cache_key = puzzle_id + "/" + image_key;
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(cache_key);
    if (it != cache_.end()) return it->second;
    std::vector<std::uint8_t> bytes;
    if (!dir_.empty()) {
      bytes = read_file_bytes(dir_ + "/" + puzzle_id + "/" + image_key + ".png");
    } else {
      bytes = encode_png_gray8(render_image_key(puzzle(puzzle_id), image_key));
    }
    cache_[cache_key] = bytes;
    return bytes;
  }

 private:
  std::string dir_;
  std::map<std::string, const Puzzle*> by_id_;
  std::mutex mu_;
  std::map<std::string, std::vector<std::uint8_t>> cache_;
};

struct CallResult {
  ParsedAnswer parsed;
  std::string raw_text;
};

CallResult ask(ModelAdapter& adapter, const std::vector<std::uint8_t>& image,
               const std::string& prompt, const QAItem& qa, const QueryContext& ctx,
               bool strict) {
  try {
    ModelReply reply = adapter.answer(image, prompt, qa.choice_labels, ctx);
    return {parse_reply(reply, qa.choice_labels), reply.raw_text};
  } catch (const std::exception& e) {
    if (strict) throw;
    CallResult out;
    out.parsed.probs.assign(qa.choice_labels.size(),
                            1.0 / static_cast<double>(qa.choice_labels.size()));
    out.parsed.chosen = 0;
    out.parsed.degenerate = true;
    out.raw_text = std::string("<error: ") + e.what() + ">";
    return out;
  }
}

std::size_t gt_index(const QAItem& qa) {
  for (std::size_t i = 0; i < qa.choice_labels.size(); ++i) {
    if (qa.choice_labels[i] == qa.gt_label) return i;
  }
  throw std::runtime_error("item " + qa.qa_id + " has no ground-truth label");
}

EvalRecord base_record(const QAItem& qa, const Puzzle& p, const RunOptions& options,
                       ModelAdapter& adapter, const std::string& prior_mode,
                       const std::string& prompt, const CallResult& call) {
  EvalRecord r;
  r.run_id = options.run_id;
  r.item_id = qa.qa_id;
  r.puzzle_id = qa.puzzle_id;
  r.stage = stage_token(qa.configuration);
  r.configuration = qa.configuration;
  r.attribute = qa.attribute;
  r.part = qa.part;
  r.layout = to_string(p.layout);
  r.prior_mode = prior_mode;
  r.cmi_conditioning = to_string(options.cmi_conditioning);
  r.variant = options.variant == PromptVariant::kVanilla
                  ? "vanilla"
                  : (options.variant == PromptVariant::kHtml ? "html" : "document");
  r.adapter = adapter.name();
  r.prompt = prompt;
  r.choice_labels = qa.choice_labels;
  r.choice_texts = qa.choice_texts;
  r.gt_label = qa.gt_label;
  r.answer_label = qa.choice_labels[call.parsed.chosen];
  r.answer_text = qa.choice_texts[call.parsed.chosen];
  r.raw_text = call.raw_text;
  r.correct = r.answer_label == qa.gt_label;
  r.degenerate = call.parsed.degenerate;
  r.p_gt = call.parsed.probs[gt_index(qa)];
  r.epsilon = 1.0 / static_cast<double>(qa.choice_labels.size());
  return r;
}

void finish_records(std::vector<EvalRecord>& records) {
  std::sort(records.begin(), records.end(), [](const EvalRecord& a, const EvalRecord& b) {
    if (a.item_id != b.item_id) return a.item_id < b.item_id;
    return a.prior_mode < b.prior_mode;
  });
  check_record_uniqueness(records);
}

}  // namespace

std::vector<EvalRecord> run_direct(const std::vector<Puzzle>& puzzles,
                                   const std::vector<QAItem>& items, ModelAdapter& adapter,
                                   const RunOptions& options) {
  ImageProvider images(puzzles, options.images_dir);
  std::vector<EvalRecord> records(items.size());
  parallel_for(items.size(), options.concurrency, [&](std::size_t i) {
    const QAItem& qa = items[i];
    const Puzzle& p = images.puzzle(qa.puzzle_id);
    std::string prompt = build_prompt(qa, {}, options.variant, extra_setting_sentence(p.layout));
    QueryContext ctx;
    ctx.run_id = options.run_id;
    ctx.item_id = qa.qa_id;
    ctx.prior_mode = "none";
    ctx.variant = options.variant == PromptVariant::kVanilla
                      ? "vanilla"
                      : (options.variant == PromptVariant::kHtml ? "html" : "document");
    ctx.gt_label = qa.gt_label;
    CallResult call = ask(adapter, images.get(qa.puzzle_id, qa.image_key), prompt, qa, ctx,
                          options.strict);
    EvalRecord r = base_record(qa, p, options, adapter, "none", prompt, call);
    if (options.mseval) {
      r.mseval.available = !r.degenerate;
      r.mseval.cmis = {entropy_nats(call.parsed.probs)};
      r.mseval.weights = {1.0};
      r.mseval.score = r.p_gt / r.epsilon;
      r.mseval.calls = 1;
    }
    records[i] = std::move(r);
  });
  finish_records(records);
  return records;
}

std::vector<EvalRecord> run_chain(const std::vector<Puzzle>& puzzles,
                                  const std::vector<Chain>& chains, ModelAdapter& adapter,
                                  const RunOptions& options) {
  ImageProvider images(puzzles, options.images_dir);
  const TemplateRegistry& registry = default_template_registry();
  std::vector<std::vector<EvalRecord>> per_chain(chains.size());

  parallel_for(chains.size(), options.concurrency, [&](std::size_t ci) {
    const Chain& chain = chains[ci];
    const Puzzle& p = images.puzzle(chain.puzzle_id);
    std::string extra = extra_setting_sentence(p.layout);
    std::string variant_token = options.variant == PromptVariant::kVanilla
                                    ? "vanilla"
                                    : (options.variant == PromptVariant::kHtml ? "html"
                                                                               : "document");
    std::map<std::string, const ChainNode*> node_by_id;
    std::map<std::string, std::string> generated_text;
    std::map<std::string, double> node_p_gt;
    std::map<std::string, double> node_epsilon;

    for (const ChainNode& node : chain.nodes) {
      const QAItem& qa = node.qa;
      node_by_id[node.node_id] = &node;

      auto dep_node = [&](const std::string& dep_id) -> const ChainNode& {
        auto it = node_by_id.find(dep_id);
        if (it == node_by_id.end()) {
          throw std::runtime_error("chain " + chain.puzzle_id + ": node " + node.node_id +
                                   " depends on undefined " + dep_id);
        }
        return *it->second;
      };
      auto conditioning_text = [&](const ChainNode& dep) -> const std::string& {
        if (options.cmi_conditioning == CmiConditioning::kGenerated) {
          return generated_text.at(dep.node_id);
        }
        return dep.qa.gt_text;
      };
      auto prior_answer_text = [&](const ChainNode& dep) -> const std::string& {
        if (options.prior_mode == PriorMode::kGenerated) {
          return generated_text.at(dep.node_id);
        }
        return dep.qa.gt_text;
      };

      std::vector<std::string> base_priors;
      if (options.prior_mode != PriorMode::kNone) {
        for (const std::string& dep_id : node.deps) {
          const ChainNode& dep = dep_node(dep_id);
          base_priors.push_back(reformat_prior(dep, node, prior_answer_text(dep), registry));
        }
      }
      std::string prompt = build_prompt(qa, base_priors, options.variant, extra);
      std::vector<std::uint8_t> image = images.get(chain.puzzle_id, qa.image_key);

      QueryContext ctx;
      ctx.run_id = options.run_id;
      ctx.item_id = qa.qa_id;
      ctx.node_id = node.node_id;
      ctx.prior_mode = to_string(options.prior_mode);
      ctx.variant = variant_token;
      ctx.gt_label = qa.gt_label;
      CallResult base = ask(adapter, image, prompt, qa, ctx, options.strict);

      generated_text[node.node_id] = qa.choice_texts[base.parsed.chosen];
      double eps = 1.0 / static_cast<double>(qa.choice_labels.size());
      double p_gt = base.parsed.probs[gt_index(qa)];
      node_p_gt[node.node_id] = p_gt;
      node_epsilon[node.node_id] = eps;

      EvalRecord r =
          base_record(qa, p, options, adapter, to_string(options.prior_mode), prompt, base);
      r.node_id = node.node_id;
      r.stage = to_string(node.stage);
      if (!node.attribute.empty()) r.attribute = node.attribute;

      if (options.mseval) {
        MsevalRow row;
        row.calls = 1;
        row.cmis = {entropy_nats(base.parsed.probs)};
        std::vector<double> probs_gt = {p_gt};
        std::vector<double> epsilons = {eps};

        if (options.prior_mode != PriorMode::kNone) {
          for (const std::string& dep_id : node.deps) {
            const ChainNode& dep = dep_node(dep_id);
            std::vector<std::vector<double>> conditionals;
            for (const std::string& swept : dep.qa.choice_texts) {
              std::vector<std::string> priors;
              for (const std::string& other_id : node.deps) {
                const ChainNode& other = dep_node(other_id);
                const std::string& text =
                    other_id == dep_id ? swept : conditioning_text(other);
                priors.push_back(reformat_prior(other, node, text, registry));
              }
              std::string sweep_prompt = build_prompt(qa, priors, options.variant, extra);
              QueryContext sweep_ctx = ctx;
              sweep_ctx.dep_id = dep.node_id;
              sweep_ctx.dep_answer = swept;
              CallResult sweep =
                  ask(adapter, image, sweep_prompt, qa, sweep_ctx, options.strict);
              conditionals.push_back(sweep.parsed.probs);
              row.calls += 1;
            }
            row.dep_ids.push_back(dep_id);
            row.cmis.push_back(cmi_nats(conditionals));
            probs_gt.push_back(node_p_gt.at(dep_id));
            epsilons.push_back(node_epsilon.at(dep_id));
          }
        }
        row.weights = softmax_weights(row.cmis);
        row.score = mseval_score(probs_gt, epsilons, row.weights);
        row.available = !base.parsed.degenerate;
        r.mseval = row;
      }
      per_chain[ci].push_back(std::move(r));
    }
  });

  std::vector<EvalRecord> records;
  for (std::vector<EvalRecord>& part : per_chain) {
    for (EvalRecord& r : part) records.push_back(std::move(r));
  }
  finish_records(records);
  return records;
}

}  // namespace ravenkit
