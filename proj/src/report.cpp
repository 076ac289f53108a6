#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>
#include <tuple>

#include "ravenkit/harness.hpp"

namespace ravenkit {

Json eval_record_to_json(const EvalRecord& r) {
  Json j;
  j["run_id"] = r.run_id;
  j["item_id"] = r.item_id;
  j["puzzle_id"] = r.puzzle_id;
  j["node_id"] = r.node_id;
  j["stage"] = r.stage;
  j["configuration"] = r.configuration;
  j["attribute"] = r.attribute;
  j["part"] = r.part;
  j["layout"] = r.layout;
  j["prior_mode"] = r.prior_mode;
  j["cmi_conditioning"] = r.cmi_conditioning;
  j["variant"] = r.variant;
  j["adapter"] = r.adapter;
  j["prompt"] = r.prompt;
  j["choices"] = Json{{"labels", r.choice_labels}, {"texts", r.choice_texts}};
  j["gt_label"] = r.gt_label;
  j["answer_label"] = r.answer_label;
  j["answer_text"] = r.answer_text;
  j["raw_text"] = r.raw_text;
  j["correct"] = r.correct;
  j["degenerate"] = r.degenerate;
  j["p_gt"] = r.p_gt;
  j["epsilon"] = r.epsilon;
  j["mseval"] = Json{{"available", r.mseval.available}, {"score", r.mseval.score},
                     {"dep_ids", r.mseval.dep_ids},     {"cmis", r.mseval.cmis},
                     {"weights", r.mseval.weights},     {"calls", r.mseval.calls}};
  return j;
}

EvalRecord eval_record_from_json(const Json& j) {
  EvalRecord r;
  r.run_id = j.at("run_id").get<std::string>();
  r.item_id = j.at("item_id").get<std::string>();
  r.puzzle_id = j.at("puzzle_id").get<std::string>();
  r.node_id = j.at("node_id").get<std::string>();
  r.stage = j.at("stage").get<std::string>();
  r.configuration = j.at("configuration").get<std::string>();
  r.attribute = j.at("attribute").get<std::string>();
  r.part = j.at("part").get<std::string>();
  r.layout = j.at("layout").get<std::string>();
  r.prior_mode = j.at("prior_mode").get<std::string>();
  r.cmi_conditioning = j.at("cmi_conditioning").get<std::string>();
  r.variant = j.at("variant").get<std::string>();
  r.adapter = j.at("adapter").get<std::string>();
  r.prompt = j.at("prompt").get<std::string>();
  r.choice_labels = j.at("choices").at("labels").get<std::vector<std::string>>();
  r.choice_texts = j.at("choices").at("texts").get<std::vector<std::string>>();
  r.gt_label = j.at("gt_label").get<std::string>();
  r.answer_label = j.at("answer_label").get<std::string>();
  r.answer_text = j.at("answer_text").get<std::string>();
  r.raw_text = j.at("raw_text").get<std::string>();
  r.correct = j.at("correct").get<bool>();
  r.degenerate = j.at("degenerate").get<bool>();
  r.p_gt = j.at("p_gt").get<double>();
  r.epsilon = j.at("epsilon").get<double>();
  const Json& m = j.at("mseval");
  r.mseval.available = m.at("available").get<bool>();
  r.mseval.score = m.at("score").get<double>();
  r.mseval.dep_ids = m.at("dep_ids").get<std::vector<std::string>>();
  r.mseval.cmis = m.at("cmis").get<std::vector<double>>();
  r.mseval.weights = m.at("weights").get<std::vector<double>>();
  r.mseval.calls = m.at("calls").get<int>();
  return r;
}

void write_records_jsonl(const std::string& path, const std::vector<EvalRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const EvalRecord& r : records) out << eval_record_to_json(r).dump() << "\n";
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::vector<EvalRecord> read_records_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<EvalRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(eval_record_from_json(Json::parse(line)));
  }
  return records;
}

void check_record_uniqueness(const std::vector<EvalRecord>& records) {
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const EvalRecord& r : records) {
    if (!seen.emplace(r.run_id, r.item_id, r.prior_mode).second) {
      throw std::runtime_error("duplicate record for run " + r.run_id + ", item " + r.item_id +
                               ", prior mode " + r.prior_mode);
    }
  }
}

namespace {

struct Aggregate {
  int n = 0;
  int correct = 0;
  double chance_sum = 0.0;
  double mseval_sum = 0.0;
  int mseval_n = 0;
};

const std::string& field_value(const EvalRecord& r, const std::string& field) {
  if (field == "stage") return r.stage;
  if (field == "configuration") return r.configuration;
  if (field == "attribute") return r.attribute;
  throw std::invalid_argument("summarize_by: unknown field " + field);
}

// Stages and attributes have a natural reading order; anything else falls
// back to alphabetical after the known keys.
int key_order(const std::string& key) {
  static const std::vector<std::string> kOrder = {
      "single_panel", "two_panels", "one_row", "two_rows", "final",
      "1P-B",         "1P-C",       "2P",      "1R",       "2R",
      "Final",        "number",     "position", "shape",   "size",
      "color"};
  for (std::size_t i = 0; i < kOrder.size(); ++i) {
    if (kOrder[i] == key) return static_cast<int>(i);
  }
  return static_cast<int>(kOrder.size());
}

std::string format_double(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace

std::vector<SummaryRow> summarize_by(const std::vector<EvalRecord>& records,
                                     const std::string& field) {
  std::map<std::string, Aggregate> groups;
  for (const EvalRecord& r : records) {
    Aggregate& agg = groups[field_value(r, field)];
    agg.n += 1;
    agg.correct += r.correct ? 1 : 0;
    agg.chance_sum += r.epsilon;
    if (r.mseval.available) {
      agg.mseval_sum += r.mseval.score;
      agg.mseval_n += 1;
    }
  }
  std::vector<SummaryRow> rows;
  for (const auto& [key, agg] : groups) {
    SummaryRow row;
    row.key = key;
    row.n = agg.n;
    row.accuracy = 100.0 * static_cast<double>(agg.correct) / static_cast<double>(agg.n);
    row.random_baseline = (agg.chance_sum / static_cast<double>(agg.n)) * 100.0;
    row.mseval_n = agg.mseval_n;
    row.mseval_mean = agg.mseval_n > 0 ? agg.mseval_sum / static_cast<double>(agg.mseval_n) : 0.0;
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
    int oa = key_order(a.key);
    int ob = key_order(b.key);
    if (oa != ob) return oa < ob;
    return a.key < b.key;
  });
  return rows;
}

std::string summary_tsv(const std::vector<SummaryRow>& rows) {
  std::string out = "group\tn\taccuracy\trandom_baseline\tmseval_mean\tmseval_n\n";
  for (const SummaryRow& row : rows) {
    out += row.key + "\t" + std::to_string(row.n) + "\t" + format_double(row.accuracy, 2) +
           "\t" + format_double(row.random_baseline, 2) + "\t" +
           format_double(row.mseval_mean, 4) + "\t" + std::to_string(row.mseval_n) + "\n";
  }
  return out;
}

std::string run_summary_text(const std::vector<EvalRecord>& records) {
  if (records.empty()) return "no records\n";
  Aggregate all;
  int degenerate = 0;
  for (const EvalRecord& r : records) {
    all.n += 1;
    all.correct += r.correct ? 1 : 0;
    all.chance_sum += r.epsilon;
    degenerate += r.degenerate ? 1 : 0;
    if (r.mseval.available) {
      all.mseval_sum += r.mseval.score;
      all.mseval_n += 1;
    }
  }
  std::string out;
  out += "records: " + std::to_string(all.n) + "\n";
  out += "accuracy: " +
         format_double(100.0 * static_cast<double>(all.correct) / static_cast<double>(all.n), 2) +
         " (random baseline " + format_double(all.chance_sum / all.n * 100.0, 2) + ")\n";
  if (all.mseval_n > 0) {
    out += "mseval: " + format_double(all.mseval_sum / all.mseval_n, 4) + " over " +
           std::to_string(all.mseval_n) + " records (baseline 1.0000)\n";
  }
  out += "degenerate: " + std::to_string(degenerate) + "\n";
  return out;
}

}  // namespace ravenkit
