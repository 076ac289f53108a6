#include "ravenkit/mseval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ravenkit {

std::vector<double> softmax(const std::vector<double>& logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty input");
  double max = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - max);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

double entropy_nats(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double cmi_nats(const std::vector<std::vector<double>>& conditionals) {
  if (conditionals.empty()) throw std::invalid_argument("cmi_nats: no conditional rows");
  std::size_t cols = conditionals.front().size();
  if (cols == 0) throw std::invalid_argument("cmi_nats: empty conditional row");
  std::size_t n = conditionals.size();

  std::vector<std::vector<double>> rows;
  rows.reserve(n);
  for (const std::vector<double>& raw : conditionals) {
    if (raw.size() != cols) throw std::invalid_argument("cmi_nats: ragged conditional rows");
    double sum = 0.0;
    for (double v : raw) {
      if (v < 0.0) throw std::invalid_argument("cmi_nats: negative probability");
      sum += v;
    }
    std::vector<double> row(cols);
    for (std::size_t b = 0; b < cols; ++b) {
      row[b] = sum > 0.0 ? raw[b] / sum : 1.0 / static_cast<double>(cols);
    }
    rows.push_back(std::move(row));
  }

  double h_a = std::log(static_cast<double>(n));
  std::vector<double> marginal(cols, 0.0);
  double h_ab = 0.0;
  for (const std::vector<double>& row : rows) {
    for (std::size_t b = 0; b < cols; ++b) {
      double j = row[b] / static_cast<double>(n);
      marginal[b] += j;
      if (j > 0.0) h_ab -= j * std::log(j);
    }
  }
  return h_a + entropy_nats(marginal) - h_ab;
}

std::vector<double> softmax_weights(const std::vector<double>& cmis) { return softmax(cmis); }

double mseval_score(const std::vector<double>& probs_gt, const std::vector<double>& epsilons,
                    const std::vector<double>& weights) {
  if (probs_gt.size() != epsilons.size() || probs_gt.size() != weights.size()) {
    throw std::invalid_argument("mseval_score: mismatched lengths");
  }
  if (probs_gt.empty()) throw std::invalid_argument("mseval_score: empty inputs");
  double score = 0.0;
  for (std::size_t i = 0; i < probs_gt.size(); ++i) {
    if (epsilons[i] <= 0.0) throw std::invalid_argument("mseval_score: chance level must be positive");
    score += weights[i] * (probs_gt[i] / epsilons[i]);
  }
  return score;
}

int cmi_call_budget(const std::vector<int>& dep_choice_counts) {
  int calls = 1;
  for (int k : dep_choice_counts) {
    if (k <= 0) throw std::invalid_argument("cmi_call_budget: choice counts must be positive");
    calls += k;
  }
  return calls;
}

std::size_t argmax_index(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("argmax_index: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace ravenkit
