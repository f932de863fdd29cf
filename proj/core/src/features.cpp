#include "cpda/features.hpp"

#include <cmath>
#include <string>

#include "cpda/errors.hpp"

namespace cpda {

void validate_problem(const FeatureProblem& p) {
  if (!p.predictor) throw InvalidArgument("feature problem has no predictor");
  if (p.domains.size() != p.n_features) {
    throw InvalidArgument("feature problem needs one value domain per feature");
  }
  for (std::size_t i = 0; i < p.domains.size(); ++i) {
    const auto& d = p.domains[i];
    if (d.values.empty() || d.values.size() != d.priors.size()) {
      throw InvalidArgument("feature " + std::to_string(i) + " has an empty or ragged domain");
    }
    double total = 0.0;
    for (double q : d.priors) {
      if (!(q >= 0.0)) throw InvalidArgument("negative prior on feature " + std::to_string(i));
      total += q;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw InvalidArgument("priors of feature " + std::to_string(i) + " sum to " +
                            std::to_string(total));
    }
  }
}

ContextualRelevance cpda_features(const FeatureProblem& p, std::span<const double> x,
                                  const SubsetPredictor& subset_predictor) {
  const std::size_t n = p.n_features;
  if (n < 2) throw InvalidArgument("contextual relevance needs at least two features");
  if (x.size() != n) throw InvalidArgument("feature vector length does not match the problem");
  if (!p.predictor || !subset_predictor) throw InvalidArgument("missing predictor");

  ContextualRelevance out;
  out.base = p.predictor(x);
  out.context.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t single[] = {i};
    out.context[i] = out.base - subset_predictor(single);
  }

  // Each context term is shared equally among the n - 1 features it covers.
  const double share = static_cast<double>(n - 1);
  out.relevance.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) out.relevance[i] += out.context[j] / share;
    }
  }
  return out;
}

std::vector<double> pda_features_exact(const FeatureProblem& p, std::span<const double> x,
                                       std::size_t budget) {
  validate_problem(p);
  if (x.size() != p.n_features) {
    throw InvalidArgument("feature vector length does not match the problem");
  }
  std::size_t evaluations = 1;
  for (const auto& d : p.domains) evaluations += d.values.size();
  if (evaluations > budget) {
    throw EnumerationBudgetExceeded("exact marginalization needs " + std::to_string(evaluations) +
                                    " evaluations, budget is " + std::to_string(budget));
  }

  const double base = p.predictor(x);
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> r(p.n_features);
  for (std::size_t i = 0; i < p.n_features; ++i) {
    const auto& d = p.domains[i];
    double marginal = 0.0;
    for (std::size_t k = 0; k < d.values.size(); ++k) {
      probe[i] = d.values[k];
      marginal += d.priors[k] * p.predictor(probe);
    }
    probe[i] = x[i];
    r[i] = base - marginal;
  }
  return r;
}

}  // namespace cpda
