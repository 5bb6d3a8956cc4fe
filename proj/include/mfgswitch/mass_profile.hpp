#pragma once

// Piecewise-constant functions on [0, T]: value v_j on [b_j, b_{j+1}) and a
// separate terminal value at t = T. All operations are exact on pieces.

#include <cstddef>
#include <span>
#include <vector>

namespace mfg {

class StepProfile {
 public:
  StepProfile() = default;
  /// breakpoints: 0 = b_0 < ... < b_K = T; values.size() == K.
  StepProfile(std::vector<double> breakpoints, std::vector<double> values, double terminal);

  static StepProfile constant(double horizon, double value);
  static StepProfile constant(double horizon, double value, double terminal);

  const std::vector<double>& breakpoints() const noexcept { return breaks_; }
  const std::vector<double>& values() const noexcept { return values_; }
  double terminal() const noexcept { return terminal_; }
  double horizon() const noexcept { return breaks_.back(); }
  std::size_t piece_count() const noexcept { return values_.size(); }

  /// Value at t; the terminal value when t == T.
  double at(double t) const;

  /// Adjacent pieces with identical values merged.
  StepProfile simplified() const;

  double max_value() const;
  double min_value() const;

 private:
  std::vector<double> breaks_{0.0, 1.0};
  std::vector<double> values_{0.0};
  double terminal_ = 0.0;
};

/// Union of the breakpoints of several profiles on the same horizon.
std::vector<double> merged_breakpoints(std::span<const StepProfile* const> profiles);

/// Exact integral over [a, b]. Throws BadInterval if a > b or outside [0, T].
double time_integral(const StepProfile& f, double a, double b);
double time_integral(const StepProfile& f);

double l2_distance(const StepProfile& f, const StepProfile& g);
double sup_distance(const StepProfile& f, const StepProfile& g);

/// alpha * f + beta * g on the merged partition.
StepProfile linear_combination(double alpha, const StepProfile& f, double beta, const StepProfile& g);

/// One profile per node (2^N entries) plus the conserved total.
class MassField {
 public:
  MassField() = default;
  MassField(std::vector<StepProfile> profiles, double total_mass);

  /// Every node holds its initial mass for the whole horizon.
  static MassField constant(double horizon, std::span<const double> node_masses);

  std::size_t size() const noexcept { return profiles_.size(); }
  const StepProfile& operator[](std::size_t node) const { return profiles_.at(node); }
  const std::vector<StepProfile>& profiles() const noexcept { return profiles_; }
  double total_mass() const noexcept { return total_; }
  double horizon() const { return profiles_.front().horizon(); }

  /// Per-node values at t = 0.
  std::vector<double> initial_masses() const;
  std::size_t max_piece_count() const;
  /// Checks 0 <= rho_p(t) <= M_total within tol.
  bool within_bounds(double tol = 0.0) const;

 private:
  std::vector<StepProfile> profiles_;
  double total_ = 0.0;
};

/// Root-sum-square of the per-node L2 distances. Throws DimensionMismatch.
double field_l2_distance(const MassField& a, const MassField& b);
/// Largest per-piece absolute difference, terminal values included.
double field_sup_distance(const MassField& a, const MassField& b);

/// (1 - eta) a + eta b.
MassField blend(const MassField& a, const MassField& b, double eta);

/// |sum_p rho_p(t) - M_total| <= tol at every piece midpoint of the merged
/// partition and at t = T. Sums run in node order.
bool check_conservation(const MassField& rho, double tol);
/// Largest conservation defect found by the same scan.
double conservation_defect(const MassField& rho);

/// Quantum q = 2^(e - 52) with total in [2^(e-1), 2^e). Non-negative
/// multiples of q not exceeding 2 * total add exactly in binary64.
double mass_quantum(double total);
double quantize_nearest(double x, double quantum);
double quantize_down(double x, double quantum);

}  // namespace mfg
