#pragma once

#include <vector>

#include "goldiprox/model.hpp"

namespace goldiprox {

// Finite hypothesis space over a finite input alphabet. Verification gadget
// for the information-theoretic scorers: every quantity is computed by exact
// enumeration, no approximation anywhere.
//
// Probability space: (hypothesis h, one label per input), with
// p(h, labels) = prior(h) * prod_x p(label_x | x, h). Observations are
// label-assignment events, so conditioning is idempotent: observing the same
// (x, y) twice changes nothing, and contradictory observations have zero
// probability.
struct ExactBayesModel {
  std::vector<Matrix> hypotheses;  // each [num_inputs x num_classes], rows sum to 1
  Vector prior;                    // over hypotheses, sums to 1

  Index num_hypotheses() const { return static_cast<Index>(hypotheses.size()); }
  Index num_inputs() const { return hypotheses.empty() ? 0 : hypotheses.front().rows(); }
  Index num_classes() const { return hypotheses.empty() ? 0 : hypotheses.front().cols(); }
  void validate() const;  // tolerance 1e-12 on the stochasticity constraints
};

struct Observation {
  Index input = 0;
  Index label = 0;
};

// Bayes rule over hypotheses. Throws std::runtime_error when every
// hypothesis assigns zero probability to the observations.
Vector exact_posterior(const ExactBayesModel& model, const std::vector<Observation>& observations);

// Joint pointwise entropy h(query | conditioning) =
//   -log sum_h p(h|conditioning) prod_{(x,y) in query} p(y|x,h),
// with observations already pinned by the conditioning contributing factor 1.
double joint_pointwise_entropy(const ExactBayesModel& model,
                               const std::vector<Observation>& conditioning,
                               const std::vector<Observation>& query);

// Realized information gained about the validation labels from observing the
// candidate: h(y_val | x_val, d_t) - h(y_val | x_val, d_t, candidate).
double ppig_forward(const ExactBayesModel& model, const std::vector<Observation>& d_t,
                    const std::vector<Observation>& val_pairs, Observation candidate);

// Same quantity via the symmetry of pointwise mutual information:
// h(y | x, d_t) - h(y | x, x_val, y_val, d_t).
double ppig_symmetric(const ExactBayesModel& model, const std::vector<Observation>& d_t,
                      const std::vector<Observation>& val_pairs, Observation candidate);

// The production approximation: drop d_t from the second term, giving
// h(y | x, d_t) - h(y | x, x_val, y_val), i.e. current loss minus
// irreducible loss. Coincides with ppig_symmetric when d_t is empty.
double ppig_reducible_approx(const ExactBayesModel& model, const std::vector<Observation>& d_t,
                             const std::vector<Observation>& val_pairs, Observation candidate);

// Expected predictive information gain I[Y_val; Y | x_val, x, d_t], computed
// by enumerating every joint label assignment (guard: <= 1e6 outcomes).
// Non-negative up to float error; equals the predictive-weighted mean of
// ppig_forward over all outcomes.
double epig_expected(const ExactBayesModel& model, const std::vector<Observation>& d_t,
                     const std::vector<Index>& val_inputs, Index candidate_input);

}  // namespace goldiprox
