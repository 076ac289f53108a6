#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ravenkit/gen.hpp"
#include "ravenkit/scene.hpp"

namespace ravenkit {

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
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
      case '"':
        out += "&quot;";
        break;
      case '\'':
        out += "&apos;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

void write_panel(std::ostringstream& os, const Puzzle& p, const Panel& panel, int index,
                 const char* indent) {
  const std::vector<Part>& parts = layout_parts(p.layout);
  os << indent << "<Panel index=\"" << index << "\">\n";
  for (std::size_t c = 0; c < panel.components.size(); ++c) {
    os << indent << "  <Component index=\"" << c << "\" part=\"" << to_string(parts[c])
       << "\">\n";
    for (const Entity& e : panel.components[c].entities) {
      os << indent << "    <Entity slot=\"" << e.slot << "\" shape=\"" << to_string(e.shape)
         << "\" size=\"" << e.size_level << "\" color=\"" << e.color_level << "\" angle=\""
         << e.angle_level << "\"/>\n";
    }
    os << indent << "  </Component>\n";
  }
  os << indent << "</Panel>\n";
}

}  // namespace

std::string export_raven_xml(const Puzzle& p) {
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n";
  os << "<Puzzle id=\"" << xml_escape(p.id) << "\" layout=\"" << to_string(p.layout)
     << "\" seed=\"" << p.seed << "\">\n";
  os << "  <Context>\n";
  for (std::size_t i = 0; i < p.context.size(); ++i) {
    write_panel(os, p, p.context[i], static_cast<int>(i), "    ");
  }
  os << "  </Context>\n";
  os << "  <Candidates correct=\"" << p.correct_index << "\">\n";
  for (std::size_t i = 0; i < p.candidates.size(); ++i) {
    write_panel(os, p, p.candidates[i], static_cast<int>(i), "    ");
  }
  os << "  </Candidates>\n";
  os << "  <Rules>\n";
  for (const RuleSpec& rule : p.rules) {
    os << "    <Rule component=\"" << rule.component << "\" attribute=\""
       << to_string(rule.attribute) << "\" kind=\"" << to_string(rule.kind) << "\"/>\n";
  }
  os << "  </Rules>\n";
  os << "</Puzzle>\n";
  return os.str();
}

namespace {

using Ptree = boost::property_tree::ptree;

const Ptree& require_child(const Ptree& node, const std::string& name,
                           const std::string& where) {
  auto child = node.get_child_optional(name);
  if (!child) throw SchemaError(where + ": missing <" + name + ">");
  return *child;
}

std::string require_attr(const Ptree& node, const std::string& name, const std::string& where) {
  auto value = node.get_optional<std::string>("<xmlattr>." + name);
  if (!value) throw SchemaError(where + ": missing attribute '" + name + "'");
  return *value;
}

int int_attr(const Ptree& node, const std::string& name, const std::string& where, int lo,
             int hi) {
  std::string raw = require_attr(node, name, where);
  int value = 0;
  try {
    std::size_t used = 0;
    value = std::stoi(raw, &used);
    if (used != raw.size()) throw ValueError("");
  } catch (const std::exception&) {
    throw ValueError(where + ": attribute '" + name + "' is not an integer: '" + raw + "'");
  }
  if (value < lo || value > hi) {
    throw ValueError(where + ": attribute '" + name + "' out of range [" + std::to_string(lo) +
                     "," + std::to_string(hi) + "]: " + raw);
  }
  return value;
}

void warn_unknown(const Ptree& node, const std::vector<std::string>& known,
                  const std::string& where, std::vector<std::string>* warnings) {
  if (warnings == nullptr) return;
  for (const auto& [name, child] : node) {
    if (name == "<xmlattr>" || name == "<xmlcomment>") continue;
    bool ok = false;
    for (const std::string& k : known) ok = ok || name == k;
    if (!ok) warnings->push_back(where + ": ignoring unknown element <" + name + ">");
  }
}

Panel parse_panel(const Ptree& node, Layout layout, const std::string& where,
                  std::vector<std::string>* warnings) {
  Panel panel;
  const std::vector<Part>& parts = layout_parts(layout);
  panel.components.resize(parts.size());
  warn_unknown(node, {"Component"}, where, warnings);
  std::size_t seen = 0;
  for (const auto& [name, comp_node] : node) {
    if (name != "Component") continue;
    ++seen;
    std::string comp_where = where + "/Component";
    int index = int_attr(comp_node, "index", comp_where, 0, static_cast<int>(parts.size()) - 1);
    std::string part = require_attr(comp_node, "part", comp_where);
    if (part != to_string(parts[static_cast<std::size_t>(index)])) {
      throw ValueError(comp_where + ": part '" + part + "' does not belong to component " +
                       std::to_string(index));
    }
    ComponentPanel& cp = panel.components[static_cast<std::size_t>(index)];
    warn_unknown(comp_node, {"Entity"}, comp_where, warnings);
    for (const auto& [ename, entity_node] : comp_node) {
      if (ename != "Entity") continue;
      std::string entity_where = comp_where + "/Entity";
      Entity e;
      e.slot = int_attr(entity_node, "slot", entity_where, 0,
                        slot_count(layout, index) - 1);
      std::string shape = require_attr(entity_node, "shape", entity_where);
      std::optional<Shape> parsed = shape_from_string(shape);
      if (!parsed) throw ValueError(entity_where + ": unknown shape '" + shape + "'");
      e.shape = *parsed;
      e.size_level = int_attr(entity_node, "size", entity_where, 0, kSizeLevels - 1);
      e.color_level = int_attr(entity_node, "color", entity_where, 0, kColorLevels - 1);
      e.angle_level = int_attr(entity_node, "angle", entity_where, 0, kAngleLevels - 1);
      cp.entities.push_back(e);
    }
    std::sort(cp.entities.begin(), cp.entities.end(),
              [](const Entity& a, const Entity& b) { return a.slot < b.slot; });
  }
  if (seen != parts.size()) {
    throw SchemaError(where + ": has " + std::to_string(seen) + " components, want " +
                      std::to_string(parts.size()));
  }
  return panel;
}

std::vector<Panel> parse_panels(const Ptree& node, Layout layout, const std::string& where,
                                std::vector<std::string>* warnings) {
  std::vector<Panel> panels;
  for (const auto& [name, panel_node] : node) {
    if (name != "Panel") continue;
    std::string panel_where = where + "/Panel";
    int index = int_attr(panel_node, "index", panel_where, 0, 7);
    if (index != static_cast<int>(panels.size())) {
      throw SchemaError(panel_where + ": index " + std::to_string(index) +
                        " out of order, want " + std::to_string(panels.size()));
    }
    panels.push_back(parse_panel(panel_node, layout, panel_where, warnings));
  }
  if (panels.size() != 8) {
    throw SchemaError(where + ": has " + std::to_string(panels.size()) + " panels, want 8");
  }
  return panels;
}

}  // namespace

Puzzle import_raven_xml(const std::string& xml_text, std::vector<std::string>* warnings) {
  Ptree doc;
  try {
    std::istringstream is(xml_text);
    boost::property_tree::read_xml(is, doc);
  } catch (const boost::property_tree::xml_parser_error& e) {
    throw ParseError(std::string("malformed xml: ") + e.what());
  }

  const Ptree& root = require_child(doc, "Puzzle", "document");
  Puzzle p;
  p.id = require_attr(root, "id", "Puzzle");
  std::string layout = require_attr(root, "layout", "Puzzle");
  std::optional<Layout> parsed_layout = layout_from_string(layout);
  if (!parsed_layout) throw ValueError("Puzzle: unknown layout '" + layout + "'");
  p.layout = *parsed_layout;
  std::string seed = require_attr(root, "seed", "Puzzle");
  try {
    p.seed = std::stoull(seed);
  } catch (const std::exception&) {
    throw ValueError("Puzzle: seed is not an unsigned integer: '" + seed + "'");
  }

  warn_unknown(root, {"Context", "Candidates", "Rules"}, "Puzzle", warnings);
  p.context = parse_panels(require_child(root, "Context", "Puzzle"), p.layout, "Context",
                           warnings);
  const Ptree& candidates = require_child(root, "Candidates", "Puzzle");
  p.correct_index = int_attr(candidates, "correct", "Candidates", 1, 8);
  p.candidates = parse_panels(candidates, p.layout, "Candidates", warnings);

  const Ptree& rules = require_child(root, "Rules", "Puzzle");
  warn_unknown(rules, {"Rule"}, "Rules", warnings);
  for (const auto& [name, rule_node] : rules) {
    if (name != "Rule") continue;
    RuleSpec spec;
    spec.component = int_attr(rule_node, "component", "Rule", 0,
                              component_count(p.layout) - 1);
    std::string attr = require_attr(rule_node, "attribute", "Rule");
    std::optional<Attribute> parsed_attr = attribute_from_string(attr);
    if (!parsed_attr) throw ValueError("Rule: unknown attribute '" + attr + "'");
    spec.attribute = *parsed_attr;
    std::string kind = require_attr(rule_node, "kind", "Rule");
    std::optional<RuleKind> parsed_kind = rule_kind_from_string(kind);
    if (!parsed_kind) throw ValueError("Rule: unknown kind '" + kind + "'");
    spec.kind = *parsed_kind;
    p.rules.push_back(spec);
  }
  if (p.rules.size() != static_cast<std::size_t>(5 * component_count(p.layout))) {
    throw SchemaError("Rules: has " + std::to_string(p.rules.size()) + " rules, want " +
                      std::to_string(5 * component_count(p.layout)));
  }
  return p;
}

}  // namespace ravenkit
