#pragma once
// Evaluation harness: the model-adapter interface, reference and transport
// adapters, the direct and chain runners, result records, and summaries.

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ravenkit/chain.hpp"
#include "ravenkit/mseval.hpp"
#include "ravenkit/question.hpp"
#include "ravenkit/scene.hpp"

namespace ravenkit {

// Identifies one model call. dep_id/dep_answer are set on sweep calls that
// substitute a dependency answer; gt_label exists for reference adapters
// (oracle and friends) and must be ignored by transports.
struct QueryContext {
  std::string run_id;
  std::string item_id;
  std::string node_id;
  std::string dep_id;
  std::string dep_answer;
  std::string prior_mode;
  std::string variant;
  std::string gt_label;
};

struct ModelReply {
  std::string raw_text;
  std::map<std::string, double> letter_logits;  // empty when only text came back
};

class ModelAdapter {
 public:
  virtual ~ModelAdapter() = default;
  virtual std::string name() const = 0;
  // Must be safe to call from several threads at once.
  virtual ModelReply answer(const std::vector<std::uint8_t>& image_png,
                            const std::string& prompt,
                            const std::vector<std::string>& letters,
                            const QueryContext& ctx) = 0;
};

// The model's answer distribution over an item's choice labels.
struct ParsedAnswer {
  std::vector<double> probs;
  std::size_t chosen = 0;
  bool degenerate = false;  // no logits and no parseable letter: uniform fallback
};

// Pulls the first standalone choice label out of free-form text, ignoring
// echoes of the "The answer should be one of ..." instruction. Accepts
// lowercase letters.
std::optional<std::string> parse_letter(const std::string& raw_text,
                                        const std::vector<std::string>& letters);

ParsedAnswer parse_reply(const ModelReply& reply, const std::vector<std::string>& letters);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);

// Equal logit on every label.
class UniformAdapter : public ModelAdapter {
 public:
  std::string name() const override { return "uniform"; }
  ModelReply answer(const std::vector<std::uint8_t>&, const std::string&,
                    const std::vector<std::string>& letters, const QueryContext&) override;
};

// Puts probability p on the ground-truth label and splits the rest evenly.
class OracleAdapter : public ModelAdapter {
 public:
  explicit OracleAdapter(double p) : p_(p) {}
  std::string name() const override { return "oracle"; }
  ModelReply answer(const std::vector<std::uint8_t>&, const std::string&,
                    const std::vector<std::string>& letters, const QueryContext& ctx) override;

 private:
  double p_;
};

// Uniformly random letter per call, deterministic in (seed, call identity),
// replied as plain text so the parse path is exercised.
class RandomAdapter : public ModelAdapter {
 public:
  explicit RandomAdapter(std::uint64_t seed) : seed_(seed) {}
  std::string name() const override { return "random"; }
  ModelReply answer(const std::vector<std::uint8_t>&, const std::string& prompt,
                    const std::vector<std::string>& letters, const QueryContext& ctx) override;

 private:
  std::uint64_t seed_;
};

// Scripted replies keyed by "item_id|dep_id|dep_answer"; unknown keys fall
// back to uniform logits.
class ScriptedAdapter : public ModelAdapter {
 public:
  static std::string key(const std::string& item_id, const std::string& dep_id,
                         const std::string& dep_answer);
  static ModelReply reply_for_probs(const std::vector<std::string>& letters,
                                    const std::vector<double>& probs);

  void script(const std::string& key, ModelReply reply);
  std::string name() const override { return "scripted"; }
  ModelReply answer(const std::vector<std::uint8_t>&, const std::string&,
                    const std::vector<std::string>& letters, const QueryContext& ctx) override;

 private:
  std::map<std::string, ModelReply> replies_;
};

// Counts calls per item and tracks the concurrency high-water mark.
class InstrumentedAdapter : public ModelAdapter {
 public:
  explicit InstrumentedAdapter(ModelAdapter& inner) : inner_(inner) {}
  std::string name() const override { return inner_.name(); }
  ModelReply answer(const std::vector<std::uint8_t>& image_png, const std::string& prompt,
                    const std::vector<std::string>& letters, const QueryContext& ctx) override;

  int total_calls() const { return total_.load(); }
  int max_in_flight() const { return max_in_flight_.load(); }
  int calls_for(const std::string& item_id) const;

 private:
  ModelAdapter& inner_;
  std::atomic<int> total_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
  mutable std::mutex mu_;
  std::map<std::string, int> per_item_;
};

// Records every reply of the wrapped adapter so a later run can be replayed
// byte for byte. Keys include a prompt hash, so replay breaks loudly if the
// prompts drift.
class RecordingAdapter : public ModelAdapter {
 public:
  explicit RecordingAdapter(ModelAdapter& inner) : inner_(inner) {}
  std::string name() const override { return inner_.name(); }
  ModelReply answer(const std::vector<std::uint8_t>& image_png, const std::string& prompt,
                    const std::vector<std::string>& letters, const QueryContext& ctx) override;
  void save(const std::string& path) const;

  static std::string key(const QueryContext& ctx, const std::string& prompt);

 private:
  ModelAdapter& inner_;
  mutable std::mutex mu_;
  std::map<std::string, ModelReply> log_;
};

class ReplayAdapter : public ModelAdapter {
 public:
  explicit ReplayAdapter(const std::string& path);
  // Reports the recorded adapter's name so replayed runs reproduce the
  // original result files byte for byte.
  std::string name() const override { return name_; }
  ModelReply answer(const std::vector<std::uint8_t>&, const std::string& prompt,
                    const std::vector<std::string>&, const QueryContext& ctx) override;

 private:
  std::string name_ = "replay";
  std::map<std::string, ModelReply> log_;
};

// Chat-completions transport. The key is read from the MODEL_API_KEY
// environment variable and never written anywhere.
struct HttpAdapterConfig {
  std::string base_url = "http://127.0.0.1:8000";
  std::string model = "default";
  std::string path = "/v1/chat/completions";
  double temperature = 0.0;
  int max_tokens = 64;
  int top_logprobs = 20;
  int max_retries = 3;
  int timeout_seconds = 120;
};

class HttpAdapter : public ModelAdapter {
 public:
  explicit HttpAdapter(HttpAdapterConfig config);
  std::string name() const override { return "http"; }
  ModelReply answer(const std::vector<std::uint8_t>& image_png, const std::string& prompt,
                    const std::vector<std::string>& letters, const QueryContext& ctx) override;

 private:
  HttpAdapterConfig config_;
  std::string api_key_;
};

enum class PriorMode { kNone, kGenerated, kGroundTruth };
enum class CmiConditioning { kGenerated, kGroundTruth };

const char* to_string(PriorMode);
const char* to_string(CmiConditioning);
std::optional<PriorMode> prior_mode_from_string(const std::string&);
std::optional<CmiConditioning> cmi_conditioning_from_string(const std::string&);

struct MsevalRow {
  bool available = false;
  double score = 0.0;
  std::vector<std::string> dep_ids;  // deps in edge order; self term comes first below
  std::vector<double> cmis;          // [self entropy, dep cmis...]
  std::vector<double> weights;       // aligned with cmis
  int calls = 0;
};

struct EvalRecord {
  std::string run_id;
  std::string item_id;
  std::string puzzle_id;
  std::string node_id;  // empty for direct items
  std::string stage;
  std::string configuration;
  std::string attribute;
  std::string part;
  std::string layout;
  std::string prior_mode;
  std::string cmi_conditioning;
  std::string variant;
  std::string adapter;
  std::string prompt;
  std::vector<std::string> choice_labels;
  std::vector<std::string> choice_texts;
  std::string gt_label;
  std::string answer_label;
  std::string answer_text;
  std::string raw_text;
  bool correct = false;
  bool degenerate = false;
  double p_gt = 0.0;
  double epsilon = 0.0;
  MsevalRow mseval;
};

Json eval_record_to_json(const EvalRecord&);
EvalRecord eval_record_from_json(const Json&);
void write_records_jsonl(const std::string& path, const std::vector<EvalRecord>&);
std::vector<EvalRecord> read_records_jsonl(const std::string& path);

// Throws when two records collide on (run_id, item_id, prior_mode).
void check_record_uniqueness(const std::vector<EvalRecord>&);

struct RunOptions {
  std::string run_id = "run";
  PriorMode prior_mode = PriorMode::kGenerated;
  CmiConditioning cmi_conditioning = CmiConditioning::kGenerated;
  PromptVariant variant = PromptVariant::kVanilla;
  int concurrency = 1;
  bool mseval = true;
  bool strict = false;       // rethrow adapter errors instead of marking degenerate
  std::string images_dir;    // read PNGs from disk instead of rendering
};

// Asks every item in isolation. Records come back sorted by item id.
std::vector<EvalRecord> run_direct(const std::vector<Puzzle>& puzzles,
                                   const std::vector<QAItem>& items, ModelAdapter&,
                                   const RunOptions&);

// Walks each chain in dependency order, feeding reformatted priors, and
// scores every node. Chains run in parallel; nodes within a chain do not.
std::vector<EvalRecord> run_chain(const std::vector<Puzzle>& puzzles,
                                  const std::vector<Chain>& chains, ModelAdapter&,
                                  const RunOptions&);

struct SummaryRow {
  std::string key;
  int n = 0;
  double accuracy = 0.0;         // percent
  double random_baseline = 0.0;  // percent, mean of 1/|choices|
  double mseval_mean = 0.0;      // over rows where mseval is available
  int mseval_n = 0;
};

// field is "stage", "configuration", or "attribute".
std::vector<SummaryRow> summarize_by(const std::vector<EvalRecord>&, const std::string& field);
std::string summary_tsv(const std::vector<SummaryRow>&);
std::string run_summary_text(const std::vector<EvalRecord>&);

}  // namespace ravenkit
