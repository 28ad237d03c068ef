#include "kfss/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "kfss/random.hpp"

namespace kfss {

void GeneratorConfig::validate() const {
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::kInvalidConfig, msg); };
  if (n < 1) bad("n must be positive");
  if (sensor_count < 1) bad("sensor_count must be positive");
  if (q < 1 || q > sensor_count) bad("q must satisfy 1 <= q <= sensor_count");
  if (!(radius_lo > 0.0 && radius_lo <= radius_hi && radius_hi < 1.0)) {
    bad("spectral radius range must satisfy 0 < lo <= hi < 1");
  }
  if (!(w_regularizer > 0.0)) bad("w_regularizer must be positive");
  if (!(v_lo > 0.0 && v_lo <= v_hi)) bad("v range must satisfy 0 < lo <= hi");
}

SystemModel generate_random_system(const GeneratorConfig& cfg, std::uint64_t index) {
  cfg.validate();
  Rng rng(cfg.seed, index);
  const int n = cfg.n;

  Matrix raw(n, n);
  double rho = 0.0;
  // A draw with rho(raw) == 0 is a measure-zero event; redraw if it happens.
  while (!(rho > 0.0)) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) raw(i, j) = rng.uniform(-1.0, 1.0);
    }
    rho = spectral_radius(raw);
  }
  const double target = rng.uniform(cfg.radius_lo, cfg.radius_hi);
  Matrix a = raw * (target / rho);

  Matrix g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  }
  Matrix w = symmetrize(g * g.transpose()) + cfg.w_regularizer * Matrix::Identity(n, n);

  std::vector<Sensor> sensors;
  sensors.reserve(static_cast<std::size_t>(cfg.sensor_count));
  for (int s = 0; s < cfg.sensor_count; ++s) {
    Matrix c(1, n);
    for (int j = 0; j < n; ++j) c(0, j) = rng.normal();
    Matrix v(1, 1);
    v(0, 0) = rng.uniform(cfg.v_lo, cfg.v_hi);
    sensors.push_back({std::move(c), std::move(v)});
  }
  return build_model(std::move(a), std::move(w), std::move(sensors));
}

std::uint64_t cell_seed(std::uint64_t base, int sensor_count) {
  std::uint64_t state =
      base ^ (static_cast<std::uint64_t>(sensor_count) * 0x9e3779b97f4a7c15ULL);
  return splitmix64(state);
}

OptimalResult brute_force_optimal(CostEvaluator& evaluator, int q, std::uint64_t cap) {
  const int total = evaluator.model().sensor_count();
  if (q < 1 || q > total) {
    throw Error(ErrorCode::kBudgetExceedsSensors,
                "budget q = " + std::to_string(q) + " must lie in [1, " +
                    std::to_string(total) + "]");
  }
  const std::uint64_t count = binomial(total, q);
  if (count > cap) {
    std::ostringstream os;
    os << "C(" << total << ", " << q << ") = " << count
       << " subsets exceeds the enumeration cap of " << cap
       << "; use fewer sensors or a smaller budget";
    throw Error(ErrorCode::kTooManySubsets, os.str());
  }
  std::vector<int> best_idx;
  double best = std::numeric_limits<double>::infinity();
  for_each_combination(total, q, [&](const std::vector<int>& idx) {
    const double cost = evaluator.cost(Selection::from_indices(total, idx, q));
    if (cost < best) {
      best = cost;
      best_idx = idx;
    }
    return true;
  });
  return {Selection::from_indices(total, best_idx, q), best};
}

OptimalResult brute_force_optimal(const SystemModel& model, int q, std::uint64_t cap) {
  CostEvaluator evaluator(model);
  return brute_force_optimal(evaluator, q, cap);
}

RatioResult performance_ratio(CostEvaluator& evaluator, int q, std::uint64_t cap) {
  RatioResult out;
  out.greedy = greedy_select(evaluator, q);
  out.optimal = brute_force_optimal(evaluator, q, cap);
  out.ratio = greedy_cost(out.greedy) / out.optimal.cost;
  return out;
}

RatioResult performance_ratio(const SystemModel& model, int q, std::uint64_t cap) {
  CostEvaluator evaluator(model);
  return performance_ratio(evaluator, q, cap);
}

SystemRecord evaluate_system(const GeneratorConfig& cfg, std::uint64_t index,
                             std::uint64_t cap) {
  SystemRecord rec;
  rec.index = index;
  const auto start = std::chrono::steady_clock::now();
  try {
    const SystemModel model = generate_random_system(cfg, index);
    CostEvaluator evaluator(model);
    const RatioResult ratio = performance_ratio(evaluator, cfg.q, cap);
    const BoundReport bounds = improved_ratio_bound(evaluator, cfg.q, MMode::kLyapunov, cap);
    const OptimalityCertificate cert = optimality_certificate(model);
    rec.r = ratio.ratio;
    rec.greedy_cost = greedy_cost(ratio.greedy);
    rec.opt_cost = ratio.optimal.cost;
    rec.greedy_picks = ratio.greedy.picks;
    rec.opt_picks = ratio.optimal.selection.order();
    rec.r_old = bounds.r_old;
    rec.r_new = bounds.r_new;
    rec.r_corollary = bounds.r_corollary;
    rec.trace_sigma0 = bounds.trace_sigma0;
    rec.certified = cert.applies;
    rec.ok = true;
  } catch (const Error& e) {
    rec.ok = false;
    rec.error = std::string(to_string(e.code())) + ": " + e.what();
  }
  rec.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  rec.over_budget = rec.seconds > kSystemBudgetSeconds;
  return rec;
}

namespace {

bool exceeds(double r, double bound) {
  return r > bound + kRatioTol * std::max(1.0, std::abs(bound));
}

}  // namespace

CampaignStats compute_stats(const std::vector<SystemRecord>& records) {
  CampaignStats s;
  double sum = 0.0;
  std::vector<double> ratios;
  for (const SystemRecord& rec : records) {
    if (!rec.ok) {
      ++s.num_failed;
      continue;
    }
    ratios.push_back(rec.r);
    sum += rec.r;
    for (int k = 0; k < 5; ++k) {
      if (rec.r < CampaignStats::kThresholds[k]) ++s.b[k];
    }
    if (rec.r < 2.0) {
      ++s.bins[0];
    } else if (rec.r >= 10.0) {
      ++s.above_10;
    } else {
      for (int k = 1; k < 5; ++k) {
        if (rec.r < CampaignStats::kThresholds[k]) {
          ++s.bins[k];
          break;
        }
      }
    }
    s.max_ratio = std::max(s.max_ratio, rec.r);
    if (rec.certified) ++s.certificate_hits;
    if (exceeds(rec.r, rec.r_new.value_or(rec.r_old))) ++s.rnew_violations;
    if (exceeds(rec.r, rec.r_old)) ++s.rold_violations;
  }
  s.num_systems = static_cast<int>(ratios.size());
  if (s.num_systems > 0) {
    s.mean_ratio = sum / s.num_systems;
    double var = 0.0;
    for (double r : ratios) var += (r - s.mean_ratio) * (r - s.mean_ratio);
    var /= s.num_systems;
    s.cv_ratio = std::sqrt(var) / s.mean_ratio;
  }
  return s;
}

CampaignResult collect_campaign(const GeneratorConfig& cfg, int num_systems, int workers,
                                std::uint64_t cap) {
  cfg.validate();
  if (num_systems < 0) throw Error(ErrorCode::kInvalidConfig, "num_systems must be >= 0");
  CampaignResult out;
  out.config = cfg;
  out.records.resize(static_cast<std::size_t>(num_systems));

  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < num_systems; i = next++) {
      out.records[static_cast<std::size_t>(i)] =
          evaluate_system(cfg, static_cast<std::uint64_t>(i), cap);
    }
  };
  const int threads = std::clamp(workers, 1, std::max(num_systems, 1));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  out.stats = compute_stats(out.records);
  return out;
}

bool CampaignResult::failed() const {
  const std::size_t total = records.size();
  return total > 0 && static_cast<std::size_t>(stats.num_failed) * 100 > total;
}

CampaignResult run_campaign(const GeneratorConfig& cfg, int num_systems, int workers,
                            std::uint64_t cap) {
  CampaignResult out = collect_campaign(cfg, num_systems, workers, cap);
  if (out.failed()) {
    std::ostringstream os;
    os << out.stats.num_failed << " of " << num_systems
       << " systems failed (more than 1%)";
    throw Error(ErrorCode::kCampaignFailed, os.str());
  }
  return out;
}

double AuditReport::rnew_violation_rate() const {
  return rnew_available == 0 ? 0.0 : static_cast<double>(rnew_violations) / rnew_available;
}

double AuditReport::rnew_le_rold_rate() const {
  return rnew_available == 0
             ? 1.0
             : static_cast<double>(rnew_available - rnew_above_rold) / rnew_available;
}

AuditReport bound_audit(const std::vector<SystemRecord>& records, double tolerance) {
  AuditReport rep;
  auto over = [tolerance](double x, double bound) {
    return x > bound + tolerance * std::max(1.0, std::abs(bound));
  };
  for (const SystemRecord& rec : records) {
    if (!rec.ok) continue;
    ++rep.num_records;
    if (over(rec.r, rec.r_old)) {
      ++rep.rold_violations;
      rep.rold_offenders.push_back(rec.index);
    }
    if (!rec.r_new) continue;
    ++rep.rnew_available;
    if (over(rec.r, *rec.r_new)) {
      ++rep.rnew_violations;
      rep.rnew_offenders.push_back(rec.index);
    }
    if (over(*rec.r_new, rec.r_old)) {
      ++rep.rnew_above_rold;
      rep.ordering_offenders.push_back(rec.index);
    }
  }
  return rep;
}

}  // namespace kfss
