#include "ravenkit/chain.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace ravenkit {

std::string to_string(Stage s) {
  switch (s) {
    case Stage::kSinglePanel:
      return "single_panel";
    case Stage::kTwoPanels:
      return "two_panels";
    case Stage::kOneRow:
      return "one_row";
    case Stage::kTwoRows:
      return "two_rows";
    case Stage::kFinal:
      return "final";
  }
  return "single_panel";
}

std::optional<Stage> stage_from_string(const std::string& s) {
  if (s == "single_panel") return Stage::kSinglePanel;
  if (s == "two_panels") return Stage::kTwoPanels;
  if (s == "one_row") return Stage::kOneRow;
  if (s == "two_rows") return Stage::kTwoRows;
  if (s == "final") return Stage::kFinal;
  return std::nullopt;
}

const ChainNode* Chain::find(const std::string& node_id) const {
  for (const ChainNode& node : nodes) {
    if (node.node_id == node_id) return &node;
  }
  return nullptr;
}

namespace {

Stage stage_of_configuration(const std::string& cfg) {
  if (cfg == "2P") return Stage::kTwoPanels;
  if (cfg == "1R") return Stage::kOneRow;
  if (cfg == "2R") return Stage::kTwoRows;
  if (cfg == "Final") return Stage::kFinal;
  return Stage::kSinglePanel;
}

std::string node_name(const std::string& attr, Stage stage, const std::vector<int>& panels,
                      const std::string& part) {
  std::string id;
  switch (stage) {
    case Stage::kSinglePanel:
      id = attr + "_single_panel_" + std::to_string(panels.front() + 1);
      break;
    case Stage::kTwoPanels:
      id = attr + "_two_panels_" + std::to_string(panels[0] + 1) + "_" +
           std::to_string(panels[1] + 1);
      break;
    case Stage::kOneRow:
      id = attr + "_one_row";
      break;
    case Stage::kTwoRows:
      id = attr + "_two_rows";
      break;
    case Stage::kFinal:
      id = "final";
      break;
  }
  if (!part.empty()) id += "_" + part;
  return id;
}

}  // namespace

ChainBuildResult build_chain(const Puzzle& p, const TemplateRegistry& reg, std::uint64_t seed,
                             const QuestionOptions& opts) {
  struct Ladder {
    const char* attr;
    const char* one_panel;
    const char* two_panels;
    const char* one_row;
    const char* two_rows;
  };
  static const Ladder kLadders[] = {
      {"number", "count_objects_1p", "compare_count_2p", "rule_number_1r", "rule_number_2r"},
      {"position", "position_of_1p", "same_position_2p", "rule_position_1r",
       "rule_position_2r"},
      {"shape", "shape_at_1p", "compare_edges_2p", "rule_shape_1r", "rule_shape_2r"},
      {"size", "same_size_1p", "compare_size_2p", "rule_size_1r", "rule_size_2r"},
      {"color", "same_color_1p", "compare_color_2p", "rule_color_1r", "rule_color_2r"},
  };

  Chain chain;
  chain.puzzle_id = p.id;
  chain.layout = p.layout;
  std::uint64_t chain_seed = derive_seed(seed, fnv1a64(p.id));
  int comps = component_count(p.layout);
  int node_index = 0;
  std::string error;

  auto add_node = [&](const std::string& template_id, const std::string& attr, int component,
                      Binding pinned, std::vector<std::string> deps) -> bool {
    const QuestionTemplate* tmpl = reg.find(template_id);
    if (tmpl == nullptr) {
      error = "missing template " + template_id;
      return false;
    }
    Rng rng(derive_seed(chain_seed, static_cast<std::uint64_t>(node_index)));
    ++node_index;
    std::optional<Binding> b = bind_placeholders(*tmpl, p, component, rng, pinned);
    if (!b) {
      error = template_id + " cannot bind on component " + std::to_string(component);
      if (pinned.count("<P>") > 0) error += ", context cell " + pinned.at("<P>");
      return false;
    }

    ChainNode node;
    node.stage = stage_of_configuration(tmpl->configuration);
    node.attribute = attr;
    node.component = component;
    node.panels = panels_for_binding(*tmpl, *b);
    std::string part =
        comps > 1 ? to_string(layout_parts(p.layout)[static_cast<std::size_t>(component)])
                  : std::string();
    node.node_id = node_name(attr, node.stage, node.panels, part);
    node.deps = std::move(deps);

    QAItem qa;
    qa.qa_id = p.id + ":" + node.node_id;
    qa.puzzle_id = p.id;
    qa.configuration = tmpl->configuration;
    qa.attribute = tmpl->attribute;
    qa.template_id = tmpl->id;
    qa.component = component;
    if (comps > 1 && node.stage != Stage::kFinal) qa.part = part;
    qa.panels = node.panels;
    qa.image_key = image_key_for(tmpl->configuration, qa.panels);
    qa.binding = *b;

    ExecResult res = exec_program(*tmpl, reg, p, component, *b);
    qa.gt_text = res.answer;
    qa.trace = std::move(res.trace);
    ChoiceSet cs = build_choices(*tmpl, reg, p, component, *b, qa.gt_text, rng);
    qa.choice_labels = std::move(cs.labels);
    qa.choice_texts = std::move(cs.texts);
    qa.gt_label = cs.gt_label;
    int pool = static_cast<int>(tmpl->paraphrases.size());
    if (opts.paraphrase_pool > 0) pool = std::min(pool, opts.paraphrase_pool);
    int idx = pool > 1 ? rng.uniform_int(0, pool - 1) : 0;
    qa.question = realize_question(*tmpl, reg, p, component, *b, idx);

    node.qa = std::move(qa);
    chain.nodes.push_back(std::move(node));
    return true;
  };

  for (int c = 0; c < comps; ++c) {
    std::vector<std::string> two_row_ids;
    for (const Ladder& ladder : kLadders) {
      std::vector<std::string> single_ids;
      for (int cell = 0; cell < 3; ++cell) {
        if (!add_node(ladder.one_panel, ladder.attr, c, {{"<P>", std::to_string(cell)}}, {})) {
          return {std::nullopt, error};
        }
        single_ids.push_back(chain.nodes.back().node_id);
      }
      std::vector<std::string> pair_ids;
      for (auto [a, b] : {std::pair<int, int>{0, 1}, std::pair<int, int>{1, 2}}) {
        if (!add_node(ladder.two_panels, ladder.attr, c,
                      {{"<P>", std::to_string(a)}, {"<P2>", std::to_string(b)}},
                      {single_ids[static_cast<std::size_t>(a)],
                       single_ids[static_cast<std::size_t>(b)]})) {
          return {std::nullopt, error};
        }
        pair_ids.push_back(chain.nodes.back().node_id);
      }
      std::vector<std::string> row_deps = single_ids;
      row_deps.insert(row_deps.end(), pair_ids.begin(), pair_ids.end());
      if (!add_node(ladder.one_row, ladder.attr, c, {{"<ROW>", "0"}}, row_deps)) {
        return {std::nullopt, error};
      }
      std::string one_row_id = chain.nodes.back().node_id;
      if (!add_node(ladder.two_rows, ladder.attr, c, {}, {one_row_id})) {
        return {std::nullopt, error};
      }
      two_row_ids.push_back(chain.nodes.back().node_id);
    }
    if (!add_node("final", "", c, {}, two_row_ids)) return {std::nullopt, error};
  }
  return {std::move(chain), ""};
}

namespace {

std::string capitalized(std::string text) {
  if (!text.empty() && text[0] >= 'a' && text[0] <= 'z') {
    text[0] = static_cast<char>(text[0] - 'a' + 'A');
  }
  return text;
}

// Position of a dependency cell inside the target's panel list, as the
// reader of the target image would name it.
std::string frame_name(int cell, const std::vector<int>& frame) {
  auto it = std::find(frame.begin(), frame.end(), cell);
  if (it == frame.end()) {
    throw std::invalid_argument("prior cell " + std::to_string(cell) +
                                " is not shown in the target image");
  }
  std::size_t idx = static_cast<std::size_t>(it - frame.begin());
  if (frame.size() == 2) return idx == 0 ? "left" : "right";
  return idx == 0 ? "left" : (idx == 1 ? "middle" : "right");
}

std::string attribute_phrase(const std::string& attr) {
  if (attr == "number") return "number of objects";
  if (attr == "position") return "position of objects";
  if (attr == "shape") return "shape of objects";
  if (attr == "size") return "size of objects";
  if (attr == "color") return "color of objects";
  throw std::invalid_argument("no attribute phrase for " + attr);
}

}  // namespace

std::string reformat_prior(const ChainNode& dep, const ChainNode& target,
                           const std::string& dep_answer, const TemplateRegistry&) {
  const std::string& part = dep.qa.part;
  auto panel_ref = [&](int cell) {
    std::string r = "the " + frame_name(cell, target.panels) + " panel";
    if (!part.empty()) r = "the " + part + " part of " + r;
    return r;
  };

  const std::string& tid = dep.qa.template_id;
  const std::string& ans = dep_answer;

  if (tid == "count_objects_1p") {
    return capitalized("There are " + ans + " objects in " + panel_ref(dep.panels.at(0)) + ".");
  }
  if (tid == "position_of_1p") {
    return capitalized("There is a " + dep.qa.binding.at("<S>") + " positioned in " +
                       panel_ref(dep.panels.at(0)) + ".");
  }
  if (tid == "shape_at_1p") {
    std::string at;
    auto x = dep.qa.binding.find("<X>");
    if (x != dep.qa.binding.end() &&
        dep.qa.question.find(" at " + x->second) != std::string::npos) {
      at = " at " + x->second;
    }
    return capitalized("The shape of the object" + at + " in " + panel_ref(dep.panels.at(0)) +
                       " is " + ans + ".");
  }
  if (tid == "same_size_1p" || tid == "same_color_1p") {
    std::string what = tid == "same_size_1p" ? "size" : "color";
    std::string ref = panel_ref(dep.panels.at(0));
    if (ans == "Only one object") return capitalized("There is only one object in " + ref + ".");
    if (ans == "Yes") {
      return capitalized("All objects in " + ref + " are of the same " + what + ".");
    }
    return capitalized("Not all objects in " + ref + " are of the same " + what + ".");
  }

  if (tid == "compare_count_2p") {
    return capitalized(panel_ref(dep.panels.at(0)) + " has " + ans + " objects compared to " +
                       panel_ref(dep.panels.at(1)) + ".");
  }
  if (tid == "same_position_2p") {
    std::string verb = ans == "Yes" ? "is" : "is not";
    return capitalized("The position of all the objects in " + panel_ref(dep.panels.at(0)) +
                       " " + verb + " the same as the objects in " +
                       panel_ref(dep.panels.at(1)) + ".");
  }
  if (tid == "compare_edges_2p") {
    if (ans == "Not comparable") {
      return capitalized("The shapes of the objects within " + panel_ref(dep.panels.at(0)) +
                         " or " + panel_ref(dep.panels.at(1)) +
                         " are different from each other.");
    }
    return capitalized("The shape of all the objects in " + panel_ref(dep.panels.at(0)) +
                       " has " + ans + " edges compared to the objects in " +
                       panel_ref(dep.panels.at(1)) + ".");
  }
  if (tid == "compare_size_2p" || tid == "compare_color_2p") {
    std::string what = tid == "compare_size_2p" ? "size" : "color";
    if (ans == "Not comparable") {
      return capitalized("The " + what + "s of the objects within " +
                         panel_ref(dep.panels.at(0)) + " or " + panel_ref(dep.panels.at(1)) +
                         " are different from each other.");
    }
    return capitalized("The " + what + " of all the objects in " + panel_ref(dep.panels.at(0)) +
                       " is " + ans + " compared to the objects in " +
                       panel_ref(dep.panels.at(1)) + ".");
  }

  if (dep.stage == Stage::kOneRow) {
    std::string scope = part.empty() ? "" : " in the " + part + " part";
    std::string row = dep.panels.at(0) / 3 == 0 ? "the first row" : "the second row";
    return capitalized("The rule for the " + attribute_phrase(dep.attribute) + scope + " in " +
                       row + " is: " + ans);
  }
  if (dep.stage == Stage::kTwoRows) {
    std::string scope = part.empty() ? "" : " in the " + part + " part";
    return capitalized("The rule for the " + attribute_phrase(dep.attribute) + scope +
                       " in both rows is: " + ans);
  }
  throw std::invalid_argument("no prior form for template " + tid);
}

std::string extra_setting_sentence(Layout layout) {
  switch (layout) {
    case Layout::kLeftRight:
      return "The panel is divided into two sections by a vertical line, separating the left "
             "side from the right side, with objects possibly present in both sections.";
    case Layout::kUpDown:
      return "The input panel is split by a horizontal line, separating the top side from the "
             "bottom side, with objects possibly present in both sections.";
    case Layout::kOutInSingle:
    case Layout::kOutInGrid:
      return "The panel is divided into two regions: an outer structure and an inner "
             "structure, with objects possibly present in both regions.";
    default:
      return "";
  }
}

std::optional<PromptVariant> prompt_variant_from_string(const std::string& s) {
  if (s == "vanilla") return PromptVariant::kVanilla;
  if (s == "html") return PromptVariant::kHtml;
  if (s == "document") return PromptVariant::kDocument;
  return std::nullopt;
}

namespace {

constexpr const char* kPriorPreamble =
    "Below is the information generated from the previous steps, please be aware that it may "
    "or may not contain errors:";

bool bare_labels(const QAItem& qa) { return qa.choice_labels == qa.choice_texts; }

std::string choice_list(const QAItem& qa) {
  std::string out;
  for (std::size_t i = 0; i < qa.choice_labels.size(); ++i) {
    if (i > 0) out += ", ";
    if (bare_labels(qa)) {
      out += qa.choice_labels[i];
    } else {
      out += qa.choice_labels[i] + ": " + qa.choice_texts[i];
    }
  }
  return out;
}

std::string label_list(const QAItem& qa) {
  std::string out;
  for (std::size_t i = 0; i < qa.choice_labels.size(); ++i) {
    if (i > 0) out += ", ";
    out += qa.choice_labels[i];
  }
  return out;
}

std::string html_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string vanilla_prompt(const QAItem& qa, const std::vector<std::string>& priors,
                           const std::string& extra) {
  std::string text;
  if (!extra.empty()) text += extra + " ";
  if (!priors.empty()) {
    text += std::string(kPriorPreamble) + " ";
    for (const std::string& prior : priors) text += prior + " ";
  }
  text += "Question: " + qa.question + " Please select one of the following: " +
          choice_list(qa) + ". The answer should be one of " + label_list(qa) + ".";
  return text;
}

std::string html_prompt(const QAItem& qa, const std::vector<std::string>& priors,
                        const std::string& extra) {
  std::string heading = extra;
  if (!priors.empty()) {
    if (!heading.empty()) heading += " ";
    heading += kPriorPreamble;
  }
  if (heading.empty()) heading = "Question";

  std::string html = "<!DOCTYPE html>\n<html>\n<body>\n";
  html += "<h1>" + html_escape(heading) + "</h1>\n";
  if (!priors.empty()) {
    html += "<div>\n<h2>Panel Information</h2>\n<ul>\n";
    for (const std::string& prior : priors) html += "<li>" + html_escape(prior) + "</li>\n";
    html += "</ul>\n</div>\n";
  }
  html += "<div>\n<h2>Question</h2>\n";
  html += "<p>" + html_escape(qa.question) + " Please select one of the following:</p>\n<ul>\n";
  for (std::size_t i = 0; i < qa.choice_labels.size(); ++i) {
    std::string item = bare_labels(qa) ? qa.choice_labels[i]
                                       : qa.choice_labels[i] + ": " + qa.choice_texts[i];
    html += "<li>" + html_escape(item) + "</li>\n";
  }
  html += "</ul>\n";
  html += "<p>The answer should be one of " + html_escape(label_list(qa)) + ".</p>\n";
  html += "</div>\n</body>\n</html>";
  return html;
}

std::string document_prompt(const QAItem& qa, const std::vector<std::string>& priors,
                            const std::string& extra) {
  std::string text = "Visual Reasoning Worksheet\n\n";
  int section = 0;
  if (!extra.empty()) {
    text += "Section " + std::to_string(++section) + ". Scene\n" + extra + "\n\n";
  }
  if (!priors.empty()) {
    text += "Section " + std::to_string(++section) +
            ". Findings from previous steps (may or may not contain errors)\n";
    for (const std::string& prior : priors) text += "- " + prior + "\n";
    text += "\n";
  }
  text += "Section " + std::to_string(++section) + ". Question\n" + qa.question + "\n\n";
  text += "Section " + std::to_string(++section) + ". Options\n";
  for (std::size_t i = 0; i < qa.choice_labels.size(); ++i) {
    if (bare_labels(qa)) {
      text += qa.choice_labels[i] + "\n";
    } else {
      text += qa.choice_labels[i] + ": " + qa.choice_texts[i] + "\n";
    }
  }
  text += "\nThe answer should be one of " + label_list(qa) + ".";
  return text;
}

}  // namespace

std::string build_prompt(const QAItem& qa, const std::vector<std::string>& priors,
                         PromptVariant variant, const std::string& extra_setting) {
  switch (variant) {
    case PromptVariant::kVanilla:
      return vanilla_prompt(qa, priors, extra_setting);
    case PromptVariant::kHtml:
      return html_prompt(qa, priors, extra_setting);
    case PromptVariant::kDocument:
      return document_prompt(qa, priors, extra_setting);
  }
  return vanilla_prompt(qa, priors, extra_setting);
}

Json chain_to_json(const Chain& chain) {
  Json j;
  j["puzzle_id"] = chain.puzzle_id;
  j["layout"] = to_string(chain.layout);
  Json nodes = Json::array();
  for (const ChainNode& node : chain.nodes) {
    Json n;
    n["node_id"] = node.node_id;
    n["stage"] = to_string(node.stage);
    n["attribute"] = node.attribute;
    n["component"] = node.component;
    n["panels"] = node.panels;
    n["deps"] = node.deps;
    n["qa"] = qa_to_json(node.qa);
    nodes.push_back(std::move(n));
  }
  j["nodes"] = std::move(nodes);
  return j;
}

Chain chain_from_json(const Json& j) {
  Chain chain;
  chain.puzzle_id = j.at("puzzle_id").get<std::string>();
  std::optional<Layout> layout = layout_from_string(j.at("layout").get<std::string>());
  if (!layout) throw std::runtime_error("chain manifest: unknown layout");
  chain.layout = *layout;
  for (const Json& n : j.at("nodes")) {
    ChainNode node;
    node.node_id = n.at("node_id").get<std::string>();
    std::optional<Stage> stage = stage_from_string(n.at("stage").get<std::string>());
    if (!stage) throw std::runtime_error("chain manifest: unknown stage");
    node.stage = *stage;
    node.attribute = n.at("attribute").get<std::string>();
    node.component = n.at("component").get<int>();
    node.panels = n.at("panels").get<std::vector<int>>();
    node.deps = n.at("deps").get<std::vector<std::string>>();
    node.qa = qa_from_json(n.at("qa"));
    chain.nodes.push_back(std::move(node));
  }
  return chain;
}

void write_chain_manifest(const std::string& path, const std::vector<Chain>& chains) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const Chain& chain : chains) out << chain_to_json(chain).dump() << "\n";
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::vector<Chain> read_chain_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<Chain> chains;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    chains.push_back(chain_from_json(Json::parse(line)));
  }
  return chains;
}

}  // namespace ravenkit
