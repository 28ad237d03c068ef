#include "kfss/system_model.hpp"

#include <algorithm>
#include <sstream>
#include <string>

namespace kfss {

SystemModel build_model(Matrix a, Matrix w, std::vector<Sensor> sensors) {
  std::vector<Violation> violations;
  auto fail = [&](ErrorCode code, std::string msg) {
    violations.push_back({code, std::move(msg)});
  };

  const bool a_ok = a.rows() == a.cols() && a.rows() > 0 && a.allFinite();
  if (!a.allFinite()) fail(ErrorCode::kNonFinite, "A contains NaN or Inf");
  if (a.rows() != a.cols() || a.rows() == 0) {
    fail(ErrorCode::kDimensionMismatch, "A must be a non-empty square matrix");
  }
  const Eigen::Index n = a.rows();

  bool w_ok = false;
  if (!w.allFinite()) {
    fail(ErrorCode::kNonFinite, "W contains NaN or Inf");
  } else if (w.rows() != n || w.cols() != n) {
    fail(ErrorCode::kDimensionMismatch, "W must be n x n");
  } else if (!is_symmetric(w) || !is_positive_definite(w)) {
    fail(ErrorCode::kNotPositiveDefiniteW,
         "W must be symmetric positive definite (state-noise covariance)");
  } else {
    w_ok = true;
  }

  if (a_ok) {
    const double rho = spectral_radius(a);
    if (rho >= 1.0 - tol::kStabilityMargin) {
      std::ostringstream os;
      os << "A has spectral radius " << rho << " >= 1; only stable systems are supported";
      fail(ErrorCode::kUnstable, os.str());
    }
  }

  bool sensors_ok = true;
  Eigen::Index total_rows = 0;
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    const Sensor& s = sensors[i];
    const std::string tag = "sensor " + std::to_string(i) + ": ";
    if (!s.c.allFinite() || !s.v.allFinite()) {
      fail(ErrorCode::kNonFinite, tag + "C_i or V_i contains NaN or Inf");
      sensors_ok = false;
      continue;
    }
    if (s.c.rows() == 0 || s.c.cols() != n) {
      fail(ErrorCode::kDimensionMismatch, tag + "C_i must have n columns and >= 1 row");
      sensors_ok = false;
      continue;
    }
    if (s.v.rows() != s.c.rows() || s.v.cols() != s.c.rows()) {
      fail(ErrorCode::kDimensionMismatch, tag + "V_i must be s_i x s_i");
      sensors_ok = false;
      continue;
    }
    if (!is_symmetric(s.v) || !is_positive_definite(s.v)) {
      fail(ErrorCode::kNotPositiveDefiniteV,
           tag + "V_i must be symmetric positive definite");
      sensors_ok = false;
      continue;
    }
    total_rows += s.c.rows();
  }

  if (a_ok && sensors_ok) {
    Matrix stacked(total_rows, n);
    Eigen::Index row = 0;
    for (const Sensor& s : sensors) {
      stacked.middleRows(row, s.c.rows()) = s.c;
      row += s.c.rows();
    }
    if (!is_detectable(a, stacked)) {
      fail(ErrorCode::kUndetectable, "(A, C) is not detectable");
    }
  }
  if (a_ok && w_ok && !is_stabilizable(a, symmetric_sqrt(w))) {
    fail(ErrorCode::kUnstabilizable, "(A, W^1/2) is not stabilizable");
  }

  if (!violations.empty()) throw ModelValidationError(std::move(violations));

  SystemModel model;
  model.information_all_ = Matrix::Zero(n, n);
  model.information_.reserve(sensors.size());
  for (const Sensor& s : sensors) {
    Eigen::LLT<Matrix> llt(symmetrize(s.v));
    Matrix r = symmetrize(s.c.transpose() * llt.solve(s.c));
    model.information_all_ += r;
    model.information_.push_back(std::move(r));
  }
  model.a_ = std::move(a);
  model.w_ = symmetrize(w);
  model.sensors_ = std::move(sensors);
  return model;
}

// ---- Selection ----

namespace {

void validate_budget(int count, int budget, int sensor_count) {
  if (budget < count || budget > std::max(sensor_count, 0) ||
      (sensor_count > 0 && budget < 1)) {
    std::ostringstream os;
    os << "selection budget " << budget << " must satisfy " << count
       << " <= q <= " << sensor_count << " and q >= 1";
    throw Error(ErrorCode::kInvalidSelection, os.str());
  }
}

int default_budget(int count, int sensor_count) {
  return sensor_count == 0 ? 0 : std::max(count, 1);
}

}  // namespace

Selection Selection::from_indices(int sensor_count, const std::vector<int>& indices,
                                  int budget) {
  if (sensor_count < 0) {
    throw Error(ErrorCode::kInvalidSelection, "negative sensor count");
  }
  Selection sel;
  sel.mask_.assign(static_cast<std::size_t>(sensor_count), false);
  for (int i : indices) {
    if (i < 0 || i >= sensor_count) {
      throw Error(ErrorCode::kInvalidSelection,
                  "sensor index " + std::to_string(i) + " out of range");
    }
    if (sel.mask_[static_cast<std::size_t>(i)]) {
      throw Error(ErrorCode::kInvalidSelection,
                  "sensor index " + std::to_string(i) + " selected twice");
    }
    sel.mask_[static_cast<std::size_t>(i)] = true;
  }
  sel.order_ = indices;
  sel.count_ = static_cast<int>(indices.size());
  sel.budget_ = budget < 0 ? default_budget(sel.count_, sensor_count) : budget;
  validate_budget(sel.count_, sel.budget_, sensor_count);
  return sel;
}

Selection Selection::from_mask(const std::vector<bool>& mask, int budget) {
  Selection sel;
  sel.mask_ = mask;
  sel.count_ = static_cast<int>(std::count(mask.begin(), mask.end(), true));
  const int sensor_count = static_cast<int>(mask.size());
  sel.budget_ = budget < 0 ? default_budget(sel.count_, sensor_count) : budget;
  validate_budget(sel.count_, sel.budget_, sensor_count);
  return sel;
}

Selection Selection::empty(int sensor_count) {
  return from_indices(sensor_count, {});
}

Selection Selection::all(int sensor_count) {
  return from_mask(std::vector<bool>(static_cast<std::size_t>(sensor_count), true));
}

std::vector<int> Selection::indices() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(count_));
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    if (mask_[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

Selection Selection::with(int i) const {
  if (i < 0 || i >= sensor_count() || contains(i)) {
    throw Error(ErrorCode::kInvalidSelection,
                "cannot add sensor " + std::to_string(i) + " to selection");
  }
  Selection next = *this;
  next.mask_[static_cast<std::size_t>(i)] = true;
  next.order_.push_back(i);
  ++next.count_;
  next.budget_ = std::max(next.budget_, next.count_);
  return next;
}

// ---- cost ----

Matrix sensor_information_matrix(const SystemModel& model, const Selection& sel) {
  if (sel.sensor_count() != model.sensor_count()) {
    throw Error(ErrorCode::kInvalidSelection, "selection size does not match model");
  }
  const int n = model.state_dim();
  Matrix r = Matrix::Zero(n, n);
  for (int i = 0; i < model.sensor_count(); ++i) {
    if (sel.contains(i)) r += model.information(i);
  }
  return r;
}

void stacked_measurement(const SystemModel& model, const Selection& sel,
                         Matrix& c_z, Matrix& v_z) {
  if (sel.sensor_count() != model.sensor_count()) {
    throw Error(ErrorCode::kInvalidSelection, "selection size does not match model");
  }
  Eigen::Index rows = 0;
  for (int i = 0; i < model.sensor_count(); ++i) {
    if (sel.contains(i)) rows += model.sensor(i).c.rows();
  }
  c_z.resize(rows, model.state_dim());
  v_z = Matrix::Zero(rows, rows);
  Eigen::Index row = 0;
  for (int i = 0; i < model.sensor_count(); ++i) {
    if (!sel.contains(i)) continue;
    const Sensor& s = model.sensor(i);
    const Eigen::Index s_rows = s.c.rows();
    c_z.middleRows(row, s_rows) = s.c;
    v_z.block(row, row, s_rows, s_rows) = s.v;
    row += s_rows;
  }
}

CostedSelection evaluate_cost(const SystemModel& model, const Selection& sel,
                              const DareOptions& options) {
  Matrix c_z;
  Matrix v_z;
  stacked_measurement(model, sel, c_z, v_z);
  CovarianceSolution sol = solve_dare(model.a(), model.w(), c_z, v_z, options);
  CostedSelection out{sel, std::move(sol.sigma), 0.0, sol.diagnostics};
  out.cost = out.sigma.trace();
  return out;
}

CostEvaluator::CostEvaluator(const SystemModel& model, DareOptions options)
    : model_(model), options_(options) {
  // The model was validated on construction (stable A, PD W and V_i), which
  // makes every selection feasible.
  options_.check_feasibility = false;
}

CostedSelection CostEvaluator::evaluate(const Selection& sel) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(sel.mask());
    if (it != cache_.end()) {
      ++hits_;
      return CostedSelection{sel, it->second.sigma, it->second.cost,
                             it->second.diagnostics};
    }
  }
  CostedSelection fresh = evaluate_cost(model_, sel, options_);
  std::lock_guard<std::mutex> lock(mutex_);
  cache_.try_emplace(sel.mask(), Entry{fresh.sigma, fresh.cost, fresh.diagnostics});
  return fresh;
}

std::size_t CostEvaluator::cache_size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.size();
}

std::size_t CostEvaluator::cache_hits() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return hits_;
}

void CostEvaluator::clear_cache() {
  std::lock_guard<std::mutex> lock(mutex_);
  cache_.clear();
  hits_ = 0;
}

}  // namespace kfss
