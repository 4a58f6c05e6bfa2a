#include "goldiprox/exact_bayes.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace goldiprox {

void ExactBayesModel::validate() const {
  if (hypotheses.empty()) throw std::invalid_argument("ExactBayesModel: no hypotheses");
  if (prior.size() != num_hypotheses())
    throw std::invalid_argument("ExactBayesModel: prior length != hypothesis count");
  if (std::abs(prior.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("ExactBayesModel: prior does not sum to 1");
  for (Index h = 0; h < num_hypotheses(); ++h) {
    if (prior(h) < 0.0) throw std::invalid_argument("ExactBayesModel: negative prior mass");
    const Matrix& table = hypotheses[static_cast<std::size_t>(h)];
    if (table.rows() != num_inputs() || table.cols() != num_classes())
      throw std::invalid_argument("ExactBayesModel: inconsistent table shapes");
    for (Index x = 0; x < table.rows(); ++x) {
      if (table.row(x).minCoeff() < 0.0)
        throw std::invalid_argument("ExactBayesModel: negative probability entry");
      if (std::abs(table.row(x).sum() - 1.0) > 1e-12)
        throw std::invalid_argument("ExactBayesModel: label table row does not sum to 1");
    }
  }
}

namespace {

using ObsMap = std::map<Index, Index>;

// Event semantics: duplicates collapse; a contradiction means the observed
// event set has probability zero under every hypothesis.
ObsMap to_obs_map(const ExactBayesModel& model, const std::vector<Observation>& observations) {
  ObsMap out;
  for (const Observation& o : observations) {
    if (o.input < 0 || o.input >= model.num_inputs())
      throw std::invalid_argument("exact_bayes: observation input out of range");
    if (o.label < 0 || o.label >= model.num_classes())
      throw std::invalid_argument("exact_bayes: observation label out of range");
    const auto [it, inserted] = out.emplace(o.input, o.label);
    if (!inserted && it->second != o.label)
      throw std::runtime_error("exact_bayes: contradictory observations (zero-probability evidence)");
  }
  return out;
}

Vector posterior_from_map(const ExactBayesModel& model, const ObsMap& observations) {
  Vector post = model.prior;
  for (Index h = 0; h < model.num_hypotheses(); ++h) {
    double lik = 1.0;
    for (const auto& [x, y] : observations) lik *= model.hypotheses[static_cast<std::size_t>(h)](x, y);
    post(h) *= lik;
  }
  const double z = post.sum();
  if (z <= 0.0)
    throw std::runtime_error("exact_bayes: zero-probability evidence (all-hypothesis likelihood 0)");
  return post / z;
}

// Probability of the query assignment given a posterior and the conditioning
// map; inputs already pinned by the conditioning contribute factor 1 when
// consistent and make the event impossible otherwise.
double predictive_probability(const ExactBayesModel& model, const Vector& posterior,
                              const ObsMap& conditioning, const ObsMap& query) {
  std::vector<std::pair<Index, Index>> effective;
  for (const auto& [x, y] : query) {
    const auto it = conditioning.find(x);
    if (it != conditioning.end()) {
      if (it->second != y) return 0.0;
      continue;
    }
    effective.emplace_back(x, y);
  }
  if (effective.empty()) return 1.0;  // fully pinned by the conditioning
  double p = 0.0;
  for (Index h = 0; h < model.num_hypotheses(); ++h) {
    double prod = posterior(h);
    for (const auto& [x, y] : effective) prod *= model.hypotheses[static_cast<std::size_t>(h)](x, y);
    p += prod;
  }
  return p;
}

std::vector<Observation> concat(const std::vector<Observation>& a, const std::vector<Observation>& b) {
  std::vector<Observation> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

Vector exact_posterior(const ExactBayesModel& model, const std::vector<Observation>& observations) {
  model.validate();
  return posterior_from_map(model, to_obs_map(model, observations));
}

double joint_pointwise_entropy(const ExactBayesModel& model,
                               const std::vector<Observation>& conditioning,
                               const std::vector<Observation>& query) {
  const ObsMap cond = to_obs_map(model, conditioning);
  const ObsMap q = to_obs_map(model, query);
  const Vector post = posterior_from_map(model, cond);
  const double p = predictive_probability(model, post, cond, q);
  if (p <= 0.0) throw std::runtime_error("exact_bayes: query has zero probability given conditioning");
  return -std::log(p);
}

double ppig_forward(const ExactBayesModel& model, const std::vector<Observation>& d_t,
                    const std::vector<Observation>& val_pairs, Observation candidate) {
  return joint_pointwise_entropy(model, d_t, val_pairs) -
         joint_pointwise_entropy(model, concat(d_t, {candidate}), val_pairs);
}

double ppig_symmetric(const ExactBayesModel& model, const std::vector<Observation>& d_t,
                      const std::vector<Observation>& val_pairs, Observation candidate) {
  return joint_pointwise_entropy(model, d_t, {candidate}) -
         joint_pointwise_entropy(model, concat(d_t, val_pairs), {candidate});
}

double ppig_reducible_approx(const ExactBayesModel& model, const std::vector<Observation>& d_t,
                             const std::vector<Observation>& val_pairs, Observation candidate) {
  return joint_pointwise_entropy(model, d_t, {candidate}) -
         joint_pointwise_entropy(model, val_pairs, {candidate});
}

double epig_expected(const ExactBayesModel& model, const std::vector<Observation>& d_t,
                     const std::vector<Index>& val_inputs, Index candidate_input) {
  model.validate();
  const Index k = model.num_classes();
  double outcomes = static_cast<double>(k);
  for (std::size_t i = 0; i < val_inputs.size(); ++i) outcomes *= static_cast<double>(k);
  if (outcomes > 1e6)
    throw std::invalid_argument("epig_expected: joint outcome enumeration exceeds 1e6");

  const ObsMap cond = to_obs_map(model, d_t);
  const Vector post = posterior_from_map(model, cond);

  // Mixed-radix counter over (val label assignment, candidate label).
  std::vector<Index> assignment(val_inputs.size(), 0);
  double epig = 0.0;
  while (true) {
    ObsMap val_map;
    bool consistent = true;
    for (std::size_t i = 0; i < val_inputs.size() && consistent; ++i) {
      const auto [it, inserted] = val_map.emplace(val_inputs[i], assignment[i]);
      if (!inserted && it->second != assignment[i]) consistent = false;
    }
    if (consistent) {
      const double p_val = predictive_probability(model, post, cond, val_map);
      if (p_val > 0.0) {
        for (Index y = 0; y < k; ++y) {
          ObsMap joint = val_map;
          const auto [it, inserted] = joint.emplace(candidate_input, y);
          if (!inserted && it->second != y) continue;
          const double p_joint = predictive_probability(model, post, cond, joint);
          if (p_joint <= 0.0) continue;
          const double p_y =
              predictive_probability(model, post, cond, ObsMap{{candidate_input, y}});
          epig += p_joint * std::log(p_joint / (p_val * p_y));
        }
      }
    }
    // advance counter
    std::size_t pos = 0;
    while (pos < assignment.size()) {
      if (++assignment[pos] < k) break;
      assignment[pos] = 0;
      ++pos;
    }
    if (pos == assignment.size()) break;
    if (assignment.empty()) break;
  }
  return epig;
}

}  // namespace goldiprox
