#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kfss/bound_engine.hpp"
#include "kfss/greedy_selector.hpp"
#include "kfss/system_model.hpp"

namespace kfss {

/// Random-ensemble parameters. Each system is a deterministic function of
/// (seed, index):
///   A = target_radius * raw / rho(raw), raw_ij ~ U[-1, 1],
///       target_radius ~ U[radius_lo, radius_hi]
///   W = G G^T + w_regularizer * I,      G_ij ~ N(0, 1)
///   sensor i: C_i = one row of N(0, 1) entries, V_i = v_i ~ U[v_lo, v_hi]
struct GeneratorConfig {
  int n = 5;
  int sensor_count = 10;
  int q = 4;
  double radius_lo = 0.5;
  double radius_hi = 0.99;
  double w_regularizer = 0.1;
  double v_lo = 0.01;
  double v_hi = 1.0;
  std::uint64_t seed = 20240601;

  /// Throws Error(kInvalidConfig) describing the first bad field.
  void validate() const;
};

SystemModel generate_random_system(const GeneratorConfig& cfg, std::uint64_t index);

/// Seed for the campaign cell with `sensor_count` sensors, so cells of one
/// sweep draw independent systems: splitmix64 of base ^ (sensor_count * phi64).
std::uint64_t cell_seed(std::uint64_t base, int sensor_count);

struct OptimalResult {
  Selection selection;
  double cost = 0.0;
};

/// Exact minimizer of J over all q-subsets; ties go to the lexicographically
/// first subset. Throws kTooManySubsets when C(|Q|, q) > cap.
OptimalResult brute_force_optimal(CostEvaluator& evaluator, int q,
                                  std::uint64_t cap = kEnumerationCap);
OptimalResult brute_force_optimal(const SystemModel& model, int q,
                                  std::uint64_t cap = kEnumerationCap);

struct RatioResult {
  double ratio = 1.0;  // J(z_greedy) / J(z_opt)
  GreedyTrace greedy;
  OptimalResult optimal;
};

RatioResult performance_ratio(CostEvaluator& evaluator, int q,
                              std::uint64_t cap = kEnumerationCap);
RatioResult performance_ratio(const SystemModel& model, int q,
                              std::uint64_t cap = kEnumerationCap);

struct SystemRecord {
  std::uint64_t index = 0;
  bool ok = false;
  std::string error;
  double r = 0.0;
  double r_old = 0.0;
  std::optional<double> r_new;
  double r_corollary = 0.0;
  bool certified = false;
  double greedy_cost = 0.0;
  double opt_cost = 0.0;
  double trace_sigma0 = 0.0;
  std::vector<int> greedy_picks;
  std::vector<int> opt_picks;
  double seconds = 0.0;
  bool over_budget = false;
};

/// Ratio aggregates over the successful records.
///   b[k]       systems with r < 2, 4, 6, 8, 10 (cumulative)
///   bins[k]    systems with r in [1,2), [2,4), [4,6), [6,8), [8,10)
///   above_10   systems with r >= 10 (so b(10) + a(10) = num_systems)
struct CampaignStats {
  static constexpr int kThresholds[5] = {2, 4, 6, 8, 10};

  int num_systems = 0;
  int num_failed = 0;
  std::uint64_t b[5] = {0, 0, 0, 0, 0};
  std::uint64_t bins[5] = {0, 0, 0, 0, 0};
  std::uint64_t above_10 = 0;
  double mean_ratio = 0.0;
  double cv_ratio = 0.0;  // population standard deviation / mean
  double max_ratio = 0.0;
  int certificate_hits = 0;
  int rnew_violations = 0;
  int rold_violations = 0;
};

struct CampaignResult {
  GeneratorConfig config;
  std::vector<SystemRecord> records;  // sorted by index
  CampaignStats stats;

  /// More than 1% of the systems errored.
  bool failed() const;
};

inline constexpr double kRatioTol = 1e-6;
inline constexpr double kSystemBudgetSeconds = 10.0;

/// Full per-system pipeline: greedy, brute force, bounds, certificate.
SystemRecord evaluate_system(const GeneratorConfig& cfg, std::uint64_t index,
                             std::uint64_t cap = kEnumerationCap);

CampaignStats compute_stats(const std::vector<SystemRecord>& records);

/// Evaluates systems 0..num_systems-1 over `workers` threads. Individual
/// failures are recorded and never thrown.
CampaignResult collect_campaign(const GeneratorConfig& cfg, int num_systems, int workers,
                                std::uint64_t cap = kEnumerationCap);

/// collect_campaign, then throws kCampaignFailed when more than 1% fail.
CampaignResult run_campaign(const GeneratorConfig& cfg, int num_systems, int workers,
                            std::uint64_t cap = kEnumerationCap);

struct AuditReport {
  int num_records = 0;
  int rold_violations = 0;   // r > r_old + tol
  int rnew_violations = 0;   // r > r_new + tol
  int rnew_above_rold = 0;   // r_new > r_old + tol
  int rnew_available = 0;
  std::vector<std::uint64_t> rold_offenders;
  std::vector<std::uint64_t> rnew_offenders;
  std::vector<std::uint64_t> ordering_offenders;

  double rnew_violation_rate() const;
  double rnew_le_rold_rate() const;
};

AuditReport bound_audit(const std::vector<SystemRecord>& records,
                        double tolerance = kRatioTol);

}  // namespace kfss
