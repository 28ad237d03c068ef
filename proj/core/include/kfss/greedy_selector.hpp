#pragma once

#include <vector>

#include "kfss/system_model.hpp"

namespace kfss {

struct CandidateCost {
  int sensor = 0;
  double cost = 0.0;
};

/// Record of one greedy run.
///   step_costs[k]      J(z_k), k = 0..q (k = 0 is the no-sensor cost)
///   deltas[k]          step_costs[k + 1] - step_costs[k]
///   candidate_costs[k] J(S_k + {i}) for every candidate i at step k
struct GreedyTrace {
  std::vector<int> picks;
  std::vector<double> step_costs;
  std::vector<double> deltas;
  std::vector<std::vector<CandidateCost>> candidate_costs;
  std::vector<Matrix> step_sigmas;

  int budget() const { return static_cast<int>(picks.size()); }
  Selection selection(int sensor_count) const;
};

/// A-priori covariance greedy selection: q rounds, each adding the unchosen
/// sensor that minimizes trace(Sigma(S + {i})). Ties go to the lowest index.
/// With workers > 1 the candidates of one round are solved concurrently; the
/// argmin is reduced in index order so the picks do not depend on `workers`.
GreedyTrace greedy_select(CostEvaluator& evaluator, int q, int workers = 1);
GreedyTrace greedy_select(const SystemModel& model, int q, int workers = 1);

/// J(z_greedy) = step_costs[q].
double greedy_cost(const GreedyTrace& trace);

}  // namespace kfss
