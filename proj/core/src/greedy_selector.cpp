#include "kfss/greedy_selector.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <string>
#include <thread>

namespace kfss {

namespace {

// Evaluates every candidate of one round; results land at their own slots.
std::vector<CandidateCost> evaluate_candidates(CostEvaluator& evaluator,
                                               const Selection& current,
                                               const std::vector<int>& candidates,
                                               int workers) {
  std::vector<CandidateCost> out(candidates.size());
  auto run = [&](std::size_t k) {
    out[k] = {candidates[k], evaluator.cost(current.with(candidates[k]))};
  };
  const std::size_t threads =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), candidates.size());
  if (threads <= 1) {
    for (std::size_t k = 0; k < candidates.size(); ++k) run(k);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < candidates.size(); k = next++) {
        try {
          run(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace

Selection GreedyTrace::selection(int sensor_count) const {
  return Selection::from_indices(sensor_count, picks, std::max<int>(1, budget()));
}

GreedyTrace greedy_select(CostEvaluator& evaluator, int q, int workers) {
  const SystemModel& model = evaluator.model();
  const int total = model.sensor_count();
  if (q < 1 || q > total) {
    throw Error(ErrorCode::kBudgetExceedsSensors,
                "budget q = " + std::to_string(q) + " must lie in [1, " +
                    std::to_string(total) + "]");
  }

  GreedyTrace trace;
  Selection current = Selection::from_indices(total, {}, q);
  const CostedSelection base = evaluator.evaluate(current);
  trace.step_costs.push_back(base.cost);
  trace.step_sigmas.push_back(base.sigma);

  for (int step = 0; step < q; ++step) {
    std::vector<int> candidates;
    for (int i = 0; i < total; ++i) {
      if (!current.contains(i)) candidates.push_back(i);
    }
    std::vector<CandidateCost> costs =
        evaluate_candidates(evaluator, current, candidates, workers);

    // Strict < keeps the lowest index on exact ties.
    std::size_t best = 0;
    for (std::size_t k = 1; k < costs.size(); ++k) {
      if (costs[k].cost < costs[best].cost) best = k;
    }
    const int pick = costs[best].sensor;
    current = current.with(pick);
    const CostedSelection chosen = evaluator.evaluate(current);

    trace.picks.push_back(pick);
    trace.deltas.push_back(chosen.cost - trace.step_costs.back());
    trace.step_costs.push_back(chosen.cost);
    trace.step_sigmas.push_back(chosen.sigma);
    trace.candidate_costs.push_back(std::move(costs));
  }
  return trace;
}

GreedyTrace greedy_select(const SystemModel& model, int q, int workers) {
  CostEvaluator evaluator(model);
  return greedy_select(evaluator, q, workers);
}

double greedy_cost(const GreedyTrace& trace) {
  return trace.step_costs.empty() ? 0.0 : trace.step_costs.back();
}

}  // namespace kfss
