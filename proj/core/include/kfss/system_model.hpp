#pragma once

#include <cstddef>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "kfss/matrix_kernel.hpp"

namespace kfss {

/// One candidate sensor: y = C x + v with v ~ N(0, V). C is s x n, V is s x s.
struct Sensor {
  Matrix c;
  Matrix v;

  int output_dim() const { return static_cast<int>(c.rows()); }
};

/// A validated sensor-selection instance. Sensor noise is uncorrelated across
/// sensors by construction: each sensor owns its own V block.
class SystemModel {
 public:
  const Matrix& a() const { return a_; }
  const Matrix& w() const { return w_; }
  const std::vector<Sensor>& sensors() const { return sensors_; }
  const Sensor& sensor(int i) const { return sensors_.at(static_cast<std::size_t>(i)); }
  int state_dim() const { return static_cast<int>(a_.rows()); }
  int sensor_count() const { return static_cast<int>(sensors_.size()); }

  /// Per-sensor information matrix R_i = C_i^T V_i^-1 C_i (precomputed).
  const Matrix& information(int i) const {
    return information_.at(static_cast<std::size_t>(i));
  }
  /// R_all = sum_i R_i = C^T V^-1 C over every sensor.
  const Matrix& information_all() const { return information_all_; }

 private:
  friend SystemModel build_model(Matrix a, Matrix w, std::vector<Sensor> sensors);
  SystemModel() = default;

  Matrix a_;
  Matrix w_;
  std::vector<Sensor> sensors_;
  std::vector<Matrix> information_;
  Matrix information_all_;
};

/// Validates and assembles a model. Throws ModelValidationError listing every
/// violated condition (dimensions, stability, definiteness of W and each V_i,
/// detectability of (A, C), stabilizability of (A, W^1/2)).
SystemModel build_model(Matrix a, Matrix w, std::vector<Sensor> sensors);

/// Indicator vector z over the sensor set plus the pick order, if any.
class Selection {
 public:
  /// Selection of `indices` (in that pick order) out of `sensor_count`.
  /// `budget` defaults to the number of indices (at least 1 when possible).
  static Selection from_indices(int sensor_count, const std::vector<int>& indices,
                                int budget = -1);
  static Selection from_mask(const std::vector<bool>& mask, int budget = -1);
  static Selection empty(int sensor_count);
  static Selection all(int sensor_count);

  const std::vector<bool>& mask() const { return mask_; }
  const std::vector<int>& order() const { return order_; }
  int budget() const { return budget_; }
  int sensor_count() const { return static_cast<int>(mask_.size()); }
  int size() const { return count_; }
  bool contains(int i) const { return mask_.at(static_cast<std::size_t>(i)); }
  /// Selected indices in ascending order.
  std::vector<int> indices() const;
  Selection with(int i) const;

 private:
  std::vector<bool> mask_;
  std::vector<int> order_;
  int budget_ = 0;
  int count_ = 0;
};

struct CostedSelection {
  Selection selection;
  Matrix sigma;
  double cost = 0.0;  // trace(sigma)
  SolveDiagnostics diagnostics;
};

/// R(z) = sum over selected i of C_i^T V_i^-1 C_i; zero for an empty z.
Matrix sensor_information_matrix(const SystemModel& model, const Selection& sel);

/// Stacked measurement matrix C_z and block-diagonal V_z of the selection.
void stacked_measurement(const SystemModel& model, const Selection& sel,
                         Matrix& c_z, Matrix& v_z);

/// J(z) = trace(Sigma(z)) with Sigma(z) the steady-state a-priori covariance.
CostedSelection evaluate_cost(const SystemModel& model, const Selection& sel,
                              const DareOptions& options = {});

/// Cost evaluation with a per-session cache keyed by the selection mask.
/// Safe for concurrent use: the cache is guarded by a mutex and solves run
/// outside the lock.
class CostEvaluator {
 public:
  explicit CostEvaluator(const SystemModel& model, DareOptions options = {});

  const SystemModel& model() const { return model_; }

  CostedSelection evaluate(const Selection& sel);
  double cost(const Selection& sel) { return evaluate(sel).cost; }

  std::size_t cache_size() const;
  std::size_t cache_hits() const;
  void clear_cache();

 private:
  struct Entry {
    Matrix sigma;
    double cost;
    SolveDiagnostics diagnostics;
  };

  const SystemModel& model_;
  DareOptions options_;
  mutable std::mutex mutex_;
  std::unordered_map<std::vector<bool>, Entry> cache_;
  std::size_t hits_ = 0;
};

}  // namespace kfss
