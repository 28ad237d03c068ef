#pragma once

// Performance-ratio bounds for greedy sensor selection on stable systems.
//
// Upper bound on any selection's cost:
//   trace Sigma(0) <= kappa(P)^2 trace(W) / (1 - sigma_1(D)^2),  D = P A P^-1
// Lower bound on the optimal cost:
//   J(z_opt) >= n sigma_n(A)^2 / (lambda_1(W^-1) + lambda1_max) + trace(W)
// The baseline ratio bound r_old is the quotient of the two. The improved
// bound subtracts a greedy-specific term (q - 1) u / (1 + c) built from the
// guaranteed cost reduction of every greedy round.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kfss/combinatorics.hpp"
#include "kfss/system_model.hpp"

namespace kfss {

enum class MMode {
  // trace(M) = trace Sigma(0).
  kLyapunov,
  // trace(M) = max over single sensors of J({i}).
  kEnumerateFirstPick,
};

std::string_view to_string(MMode mode);

struct ZhangUpperBound {
  double trace_sigma0 = 0.0;
  double eq8_upper = 0.0;
  Matrix transform;           // P
  double transform_sigma_max = 0.0;
  double transform_sigma_min = 0.0;
  double dynamics_sigma_max = 0.0;  // sigma_1(P A P^-1)
};

/// lambda1_max: largest lambda_1(R(z)) over all selections with |z| <= q.
/// Exact when C(|Q|, q) <= cap, otherwise lambda_1(R_all) (flagged surrogate).
struct Lambda1Max {
  double value = 0.0;
  bool surrogate = false;
};

struct BoundReport {
  MMode m_mode = MMode::kLyapunov;
  int q = 0;

  double trace_sigma0 = 0.0;
  double eq8_upper = 0.0;
  double opt_lower = 0.0;
  double r_old = 0.0;
  std::string r_old_formula = "eq8_upper / opt_lower";

  double m_trace = 0.0;
  double u = 0.0;
  double c = 0.0;
  // trace(A^-1 (M - W) A^-T A B) with the trailing A kept; diagnostic only.
  std::optional<double> c_literal;
  double b = 0.0;
  double lambda1_max = 0.0;
  bool lambda1_surrogate = false;
  double greedy_upper = 0.0;

  // Closed-form improved ratio; absent when A is numerically singular.
  std::optional<double> r_new;
  // greedy_upper / opt_lower, assembled from the components above.
  std::optional<double> r_new_assembled;
  bool r_new_discrepancy = false;

  double r_corollary = 0.0;
  bool corollary_degenerate = false;
  bool singular_a = false;

  /// r_new when available, otherwise the r_old fallback.
  double effective_r_new() const { return r_new.value_or(r_old); }
};

/// Inputs of the corollary's improvement term, exposed so the expression can
/// be probed in isolation.
struct CorollaryTerms {
  int n = 0;
  int q = 0;
  double r_all_norm = 0.0;    // ||R_all||_2
  double trace_sigma0 = 0.0;
  double w_inv_norm = 0.0;    // ||W^-1||_2
  double lambda1_max = 0.0;
  double b = 0.0;
  double trace_w = 0.0;
  double sigma_min_a = 0.0;   // sigma_n(A)
};

struct CorollaryBound {
  double value = 0.0;
  bool degenerate = false;  // sigma_n(A) = 0: improvement dropped
};

struct OptimalityCertificate {
  bool applies = false;
  std::vector<std::string> reasons;
  // S_i^2 / V_ii per sensor, filled when every sensor has a single output.
  std::vector<double> singular_ratios;
  // Sensor indices sorted so singular_ratios is non-decreasing.
  std::vector<int> ratio_order;
  bool totally_ordered = false;
};

/// Angle tolerance (radians, small-angle) for colinearity of C_i rows.
inline constexpr double kColinearityTol = 1e-8;
/// sigma_n(A) <= kSingularDynamicsTol * sigma_1(A) counts as singular.
inline constexpr double kSingularDynamicsTol = 1e-12;

ZhangUpperBound zhang_upper_bound(const SystemModel& model);

Lambda1Max max_information_eigenvalue(const SystemModel& model, int q,
                                      std::uint64_t cap = kEnumerationCap);

/// b = min trace(R_i) over single sensors, skipping zero-information sensors
/// unless every sensor carries none.
double min_single_sensor_trace(const SystemModel& model);

double optimal_cost_lower_bound(const SystemModel& model, int q,
                                std::uint64_t cap = kEnumerationCap);

double zhang_ratio_bound(const SystemModel& model, int q,
                         std::uint64_t cap = kEnumerationCap);

BoundReport improved_ratio_bound(CostEvaluator& evaluator, int q,
                                 MMode mode = MMode::kLyapunov,
                                 std::uint64_t cap = kEnumerationCap);
BoundReport improved_ratio_bound(const SystemModel& model, int q,
                                 MMode mode = MMode::kLyapunov,
                                 std::uint64_t cap = kEnumerationCap);

double corollary_improvement(const CorollaryTerms& terms);

CorollaryBound corollary_ratio_bound(const SystemModel& model, int q,
                                     std::uint64_t cap = kEnumerationCap);

OptimalityCertificate optimality_certificate(const SystemModel& model);

}  // namespace kfss
