#pragma once
// Question engine: template registry, placeholder binding, the functional
// program executor, choice sampling, and surface-text realization.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ravenkit/rng.hpp"
#include "ravenkit/scene.hpp"

namespace ravenkit {

struct ProgramStep {
  std::string function;
  std::vector<std::string> args;
};

struct QuestionTemplate {
  std::string id;
  std::string configuration;  // 1P-B, 1P-C, 2P, 1R, 2R, Final
  std::string attribute;      // empty for the final template
  std::string pattern;
  std::vector<std::string> placeholders;
  std::vector<std::string> constraints;
  std::vector<ProgramStep> program;
  std::vector<std::string> answer_space;     // refs already resolved
  std::vector<std::string> dynamic_answers;  // offered only when ground truth
  std::vector<std::string> paraphrases;      // [0] is the canonical pattern
};

struct TemplateRegistry {
  std::vector<QuestionTemplate> templates;
  std::vector<std::string> position_vocabulary;
  std::vector<std::string> relative_position_space;
  // attribute token -> (rule kind token, sentence), in registry order
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> rule_sentences;
  std::string shape_note;

  const QuestionTemplate* find(const std::string& id) const;
  const std::string& rule_sentence(Attribute, RuleKind) const;
  std::optional<RuleKind> kind_of_sentence(Attribute, const std::string& sentence) const;
};

const std::string& default_template_registry_text();
TemplateRegistry load_template_registry(const std::string& json_text);
const TemplateRegistry& default_template_registry();

struct ExecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Binding = std::map<std::string, std::string>;

struct QAItem {
  std::string qa_id;
  std::string puzzle_id;
  std::string configuration;
  std::string attribute;
  std::string template_id;
  int component = 0;
  std::string part;  // part token for two-component layouts, else empty
  std::string image_key;
  std::vector<int> panels;  // context cells shown, in image order
  std::string question;
  std::vector<std::string> choice_labels;
  std::vector<std::string> choice_texts;
  std::string gt_label;
  std::string gt_text;
  Binding binding;
  std::vector<std::string> trace;
};

// Binds the template's placeholders against a concrete puzzle component.
// Entries already present in `pinned` are kept. Returns nullopt when the
// puzzle cannot satisfy the template's constraints.
std::optional<Binding> bind_placeholders(const QuestionTemplate&, const Puzzle&, int component,
                                         Rng&, const Binding& pinned = {});

struct ExecResult {
  std::string answer;
  std::vector<std::string> trace;
};

ExecResult exec_program(const QuestionTemplate&, const TemplateRegistry&, const Puzzle&,
                        int component, const Binding&);

struct ChoiceSet {
  std::vector<std::string> labels;
  std::vector<std::string> texts;
  std::string gt_label;
};

// Uniformly samples up to max_choices options including the ground truth,
// shuffles them, and labels them A, B, C, ...
ChoiceSet sample_choices(const std::string& gt, const std::vector<std::string>& space, Rng&,
                         int max_choices = 4);

// Choice construction for a bound question: applies dynamic answers and,
// for rule questions, drops distractor sentences that also hold on the
// question's rows so exactly one option is defensible.
ChoiceSet build_choices(const QuestionTemplate&, const TemplateRegistry&, const Puzzle&,
                        int component, const Binding&, const std::string& gt, Rng&);

struct QuestionOptions {
  int paraphrase_pool = 0;  // 0 = whole pool, 1 = canonical only, n = first n
};

std::string realize_question(const QuestionTemplate&, const TemplateRegistry&, const Puzzle&,
                             int component, const Binding&, int paraphrase_index);

std::vector<QAItem> generate_direct(const Puzzle&, const TemplateRegistry&, std::uint64_t seed,
                                    const QuestionOptions& = {});

std::string image_key_for(const std::string& configuration, const std::vector<int>& panels);
std::vector<int> panels_for_binding(const QuestionTemplate&, const Binding&);

Json qa_to_json(const QAItem&);
QAItem qa_from_json(const Json&);

}  // namespace ravenkit
