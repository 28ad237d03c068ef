#include "kfss/bound_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace kfss {

std::string_view to_string(MMode mode) {
  switch (mode) {
    case MMode::kLyapunov: return "lyapunov";
    case MMode::kEnumerateFirstPick: return "enumerate_first_pick";
  }
  return "unknown";
}

namespace {

void require_budget(const SystemModel& model, int q) {
  if (q < 1 || q > model.sensor_count()) {
    throw Error(ErrorCode::kBudgetExceedsSensors,
                "budget q = " + std::to_string(q) + " must lie in [1, " +
                    std::to_string(model.sensor_count()) + "]");
  }
}

// Quantities shared by every bound.
struct Ingredients {
  int n = 0;
  double trace_w = 0.0;
  double lambda_min_w = 0.0;
  double w_inv_norm = 0.0;  // lambda_1(W^-1) = ||W^-1||_2
  double sigma_max_a = 0.0;
  double sigma_min_a = 0.0;
  bool singular_a = false;
  Lambda1Max lambda1;
  double b = 0.0;
  double r_all_norm = 0.0;
};

Ingredients gather(const SystemModel& model, int q, std::uint64_t cap) {
  Ingredients in;
  in.n = model.state_dim();
  in.trace_w = model.w().trace();
  in.lambda_min_w = min_eigenvalue(model.w());
  in.w_inv_norm = 1.0 / in.lambda_min_w;
  const SpectralSummary sa = spectral_summary(model.a());
  in.sigma_max_a = sa.sigma_max;
  in.sigma_min_a = sa.sigma_min;
  in.singular_a = sa.sigma_min <= kSingularDynamicsTol * sa.sigma_max;
  in.lambda1 = max_information_eigenvalue(model, q, cap);
  in.b = min_single_sensor_trace(model);
  in.r_all_norm = std::max(0.0, max_eigenvalue(model.information_all()));
  return in;
}

double lower_bound_from(const Ingredients& in) {
  return in.n * in.sigma_min_a * in.sigma_min_a /
             (in.w_inv_norm + in.lambda1.value) +
         in.trace_w;
}

}  // namespace

ZhangUpperBound zhang_upper_bound(const SystemModel& model) {
  ZhangUpperBound out;
  out.trace_sigma0 = solve_discrete_lyapunov(model.a(), model.w()).sigma.trace();
  out.transform = stabilizing_transform(model.a());
  const SpectralSummary sp = spectral_summary(out.transform);
  out.transform_sigma_max = sp.sigma_max;
  out.transform_sigma_min = sp.sigma_min;
  const Matrix d = out.transform * model.a() * out.transform.inverse();
  out.dynamics_sigma_max = spectral_summary(d).sigma_max;
  const double kappa = sp.sigma_max / sp.sigma_min;
  out.eq8_upper = kappa * kappa * model.w().trace() /
                  (1.0 - out.dynamics_sigma_max * out.dynamics_sigma_max);
  return out;
}

Lambda1Max max_information_eigenvalue(const SystemModel& model, int q,
                                      std::uint64_t cap) {
  require_budget(model, q);
  Lambda1Max out;
  const int total = model.sensor_count();
  if (binomial(total, q) > cap) {
    out.value = max_eigenvalue(model.information_all());
    out.surrogate = true;
    return out;
  }
  // lambda_1(R) grows with the selection, so q-subsets attain the maximum.
  const int n = model.state_dim();
  double best = 0.0;
  Matrix r(n, n);
  for_each_combination(total, q, [&](const std::vector<int>& idx) {
    r.setZero();
    for (int i : idx) r += model.information(i);
    best = std::max(best, max_eigenvalue(r));
    return true;
  });
  out.value = best;
  return out;
}

double min_single_sensor_trace(const SystemModel& model) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < model.sensor_count(); ++i) {
    const double t = model.information(i).trace();
    if (t > 0.0) best = std::min(best, t);
  }
  return std::isfinite(best) ? best : 0.0;
}

double optimal_cost_lower_bound(const SystemModel& model, int q, std::uint64_t cap) {
  return lower_bound_from(gather(model, q, cap));
}

double zhang_ratio_bound(const SystemModel& model, int q, std::uint64_t cap) {
  const Ingredients in = gather(model, q, cap);
  return zhang_upper_bound(model).eq8_upper / lower_bound_from(in);
}

double corollary_improvement(const CorollaryTerms& t) {
  if (t.q <= 1 || t.sigma_min_a <= 0.0) return 0.0;
  const double f1 = 1.0 / (1.0 + t.r_all_norm * t.trace_sigma0);
  const double f2 = 1.0 / ((t.w_inv_norm + t.r_all_norm) * (t.w_inv_norm + t.r_all_norm));
  const double f3 = t.b / (t.n / (t.w_inv_norm + t.lambda1_max) +
                           t.trace_w / (t.sigma_min_a * t.sigma_min_a));
  return (t.q - 1) * f1 * f2 * f3;
}

namespace {

CorollaryBound corollary_from(const Ingredients& in, int q, double r_old,
                              double trace_sigma0) {
  CorollaryBound out;
  if (in.singular_a) {
    out.value = r_old;
    out.degenerate = true;
    return out;
  }
  CorollaryTerms t;
  t.n = in.n;
  t.q = q;
  t.r_all_norm = in.r_all_norm;
  t.trace_sigma0 = trace_sigma0;
  t.w_inv_norm = in.w_inv_norm;
  t.lambda1_max = in.lambda1.value;
  t.b = in.b;
  t.trace_w = in.trace_w;
  t.sigma_min_a = in.sigma_min_a;
  out.value = r_old - corollary_improvement(t);
  return out;
}

}  // namespace

CorollaryBound corollary_ratio_bound(const SystemModel& model, int q, std::uint64_t cap) {
  const Ingredients in = gather(model, q, cap);
  const ZhangUpperBound upper = zhang_upper_bound(model);
  return corollary_from(in, q, upper.eq8_upper / lower_bound_from(in),
                        upper.trace_sigma0);
}

BoundReport improved_ratio_bound(CostEvaluator& evaluator, int q, MMode mode,
                                 std::uint64_t cap) {
  const SystemModel& model = evaluator.model();
  require_budget(model, q);
  const Ingredients in = gather(model, q, cap);
  const ZhangUpperBound upper = zhang_upper_bound(model);
  const int total = model.sensor_count();

  BoundReport rep;
  rep.m_mode = mode;
  rep.q = q;
  rep.trace_sigma0 = evaluator.cost(Selection::from_indices(total, {}, q));
  rep.eq8_upper = upper.eq8_upper;
  rep.opt_lower = lower_bound_from(in);
  rep.r_old = rep.eq8_upper / rep.opt_lower;
  rep.b = in.b;
  rep.lambda1_max = in.lambda1.value;
  rep.lambda1_surrogate = in.lambda1.surrogate;
  rep.singular_a = in.singular_a;

  if (mode == MMode::kLyapunov) {
    rep.m_trace = rep.trace_sigma0;
  } else {
    double worst = 0.0;
    for (int i = 0; i < total; ++i) {
      worst = std::max(worst, evaluator.cost(Selection::from_indices(total, {i}, q)));
    }
    rep.m_trace = worst;
  }

  // B_zK = B_zR = R_all (it dominates every single-sensor and every q-sensor
  // information matrix when noise is uncorrelated).
  const Matrix& r_all = model.information_all();
  const Matrix w_inv = spd_inverse(model.w());
  const double floor_eig = 1.0 / max_eigenvalue(w_inv + r_all);  // lambda_min((W^-1+R)^-1)
  rep.u = in.sigma_min_a * in.sigma_min_a * floor_eig * floor_eig * rep.b;

  const Matrix sigma0 = evaluator.evaluate(Selection::from_indices(total, {}, q)).sigma;
  const double trace_sigma0_r = (sigma0 * r_all).trace();
  const double lw = in.w_inv_norm + rep.lambda1_max;

  const CorollaryBound cor = corollary_from(in, q, rep.r_old, rep.trace_sigma0);
  rep.r_corollary = cor.value;
  rep.corollary_degenerate = cor.degenerate;

  if (in.singular_a) {
    // The c candidate needs A^-1; the improvement is dropped and r_old stands.
    rep.c = 0.0;
    rep.u = 0.0;
    rep.greedy_upper = rep.m_trace;
    return rep;
  }

  // M - W with M = Sigma(0) (it dominates Sigma(z_k) for every k in either
  // M mode, which is what the c candidate needs).
  const Eigen::PartialPivLU<Matrix> a_lu(model.a());
  const Matrix a_inv = a_lu.inverse();
  const Matrix core = a_inv * (sigma0 - model.w()) * a_inv.transpose();
  rep.c = std::max(0.0, (core * r_all).trace());
  rep.c_literal = (core * model.a() * r_all).trace();

  const double step_gain = rep.u / (1.0 + rep.c);
  rep.greedy_upper = rep.m_trace - (q - 1) * step_gain;
  rep.r_new_assembled = rep.greedy_upper / rep.opt_lower;

  const double improvement =
      (q - 1) * in.sigma_min_a * in.sigma_min_a * floor_eig * floor_eig * lw * rep.b /
      ((1.0 + trace_sigma0_r) *
       (in.n * in.sigma_min_a * in.sigma_min_a + in.trace_w * lw));
  rep.r_new = rep.r_old - improvement;
  rep.r_new_discrepancy = std::abs(*rep.r_new - *rep.r_new_assembled) > 1e-6;
  return rep;
}

BoundReport improved_ratio_bound(const SystemModel& model, int q, MMode mode,
                                 std::uint64_t cap) {
  CostEvaluator evaluator(model);
  return improved_ratio_bound(evaluator, q, mode, cap);
}

OptimalityCertificate optimality_certificate(const SystemModel& model) {
  OptimalityCertificate cert;
  const int total = model.sensor_count();

  bool single_row = true;
  for (int i = 0; i < total; ++i) {
    if (model.sensor(i).output_dim() != 1) {
      single_row = false;
      cert.reasons.push_back("sensor " + std::to_string(i) + " has " +
                             std::to_string(model.sensor(i).output_dim()) +
                             " outputs; C_i must be a single row");
    }
  }

  bool colinear = true;
  if (single_row) {
    cert.singular_ratios.resize(static_cast<std::size_t>(total));
    Vector reference;
    int reference_index = -1;
    for (int i = 0; i < total; ++i) {
      const Sensor& s = model.sensor(i);
      const Vector row = s.c.row(0).transpose();
      const double norm = row.norm();
      // Only nonzero singular value of a row vector is its norm.
      cert.singular_ratios[static_cast<std::size_t>(i)] = norm * norm / s.v(0, 0);
      if (norm == 0.0) continue;
      const Vector dir = row / norm;
      if (reference_index < 0) {
        reference = dir;
        reference_index = i;
        continue;
      }
      const double gap = std::min((dir - reference).norm(), (dir + reference).norm());
      if (gap > kColinearityTol) {
        colinear = false;
        std::ostringstream os;
        os << "C_" << i << " is not colinear with C_" << reference_index
           << " (direction gap " << gap << "); column spaces of C_i^T C_i differ";
        cert.reasons.push_back(os.str());
      }
    }
    cert.ratio_order.resize(static_cast<std::size_t>(total));
    std::iota(cert.ratio_order.begin(), cert.ratio_order.end(), 0);
    std::stable_sort(cert.ratio_order.begin(), cert.ratio_order.end(), [&](int x, int y) {
      return cert.singular_ratios[static_cast<std::size_t>(x)] <
             cert.singular_ratios[static_cast<std::size_t>(y)];
    });
  }
  cert.applies = single_row && colinear;

  double scale = 1.0;
  for (int i = 0; i < total; ++i) {
    scale = std::max(scale, max_eigenvalue(model.information(i)));
  }
  cert.totally_ordered = true;
  for (int i = 0; i < total && cert.totally_ordered; ++i) {
    for (int j = i + 1; j < total; ++j) {
      if (psd_compare(model.information(i), model.information(j), tol::kPsd * scale) ==
          PsdOrdering::kIncomparable) {
        cert.totally_ordered = false;
        break;
      }
    }
  }
  if (cert.applies && !cert.totally_ordered) {
    cert.applies = false;
    cert.reasons.push_back("information matrices failed the direct total-order check");
  }
  return cert;
}

}  // namespace kfss
