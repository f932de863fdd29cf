#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace cpda {

/// Finite value set of one feature together with its prior probabilities.
struct ValueDomain {
  std::vector<double> values;
  std::vector<double> priors;
};

/// A classifier over n discrete features, used for exact (enumerated) analyses.
struct FeatureProblem {
  std::size_t n_features = 0;
  std::function<double(std::span<const double>)> predictor;
  std::vector<ValueDomain> domains;
};

/// Throws InvalidArgument when domains are empty, sizes disagree, or priors do not sum to 1.
void validate_problem(const FeatureProblem& p);

/// Prediction on a subset of the features alone, i.e. f(x_S) for the instance being explained.
using SubsetPredictor = std::function<double(std::span<const std::size_t>)>;

struct ContextualRelevance {
  double base = 0.0;
  /// context[i] = f(x) - f(x_i): relevance of every feature except i.
  std::vector<double> context;
  /// relevance[i] = sum over j != i of context[j] / (n - 1).
  std::vector<double> relevance;
};

/// Contextual prediction difference on a feature vector. Requires at least two features.
ContextualRelevance cpda_features(const FeatureProblem& p, std::span<const double> x,
                                  const SubsetPredictor& subset_predictor);

/// r_i = f(x) - sum_k prior(v_k) * f(x with x_i = v_k), enumerated exactly. The number of
/// predictor evaluations is bounded by `budget`; EnumerationBudgetExceeded otherwise.
std::vector<double> pda_features_exact(const FeatureProblem& p, std::span<const double> x,
                                       std::size_t budget = 1'000'000);

}  // namespace cpda
