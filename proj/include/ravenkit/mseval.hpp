#pragma once
// Multi-stage evaluation arithmetic: softmax, entropies, conditional mutual
// information between a question and its dependencies, dependency weighting,
// and the calibrated stage score.

#include <cstddef>
#include <vector>

namespace ravenkit {

// Numerically stable softmax; logits may be any finite values.
std::vector<double> softmax(const std::vector<double>& logits);

// Shannon entropy in nats; zero-probability entries contribute zero.
double entropy_nats(const std::vector<double>& probs);

// Mutual information in nats of the joint p(a, b) = cond[a][b] / |A| built
// by sweeping dependency answers uniformly. Each row is the model's answer
// distribution given one dependency answer; rows are renormalized.
double cmi_nats(const std::vector<std::vector<double>>& conditionals);

// Softmax over the dependency CMIs (self entropy first, by convention of the
// caller); the result is the weight vector over D_t plus the node itself.
std::vector<double> softmax_weights(const std::vector<double>& cmis);

// Weighted calibrated score: sum of w_i * p_i / eps_i where p_i is the
// model's probability on the ground truth and eps_i the chance level.
double mseval_score(const std::vector<double>& probs_gt, const std::vector<double>& epsilons,
                    const std::vector<double>& weights);

// Model calls needed to score one node: one sweep call per dependency answer
// plus the base call.
int cmi_call_budget(const std::vector<int>& dep_choice_counts);

// Index of the largest value; the first one wins ties.
std::size_t argmax_index(const std::vector<double>& values);

}  // namespace ravenkit
