#include "mfgswitch/mass_profile.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfgswitch/errors.hpp"

namespace mfg {

StepProfile::StepProfile(std::vector<double> breakpoints, std::vector<double> values, double terminal)
    : breaks_(std::move(breakpoints)), values_(std::move(values)), terminal_(terminal) {
  if (breaks_.size() < 2 || values_.size() + 1 != breaks_.size()) {
    throw Error(ErrorCode::InvalidArgument, "a profile needs K >= 1 pieces and K + 1 breakpoints");
  }
  if (breaks_.front() != 0.0) throw Error(ErrorCode::InvalidArgument, "first breakpoint must be 0");
  for (std::size_t i = 0; i + 1 < breaks_.size(); ++i) {
    if (!(breaks_[i] < breaks_[i + 1])) {
      throw Error(ErrorCode::InvalidArgument, "breakpoints must be strictly increasing");
    }
  }
}

StepProfile StepProfile::constant(double horizon, double value) {
  return constant(horizon, value, value);
}

StepProfile StepProfile::constant(double horizon, double value, double terminal) {
  if (!(horizon > 0.0)) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
  return StepProfile({0.0, horizon}, {value}, terminal);
}

double StepProfile::at(double t) const {
  if (t < 0.0 || t > horizon()) throw Error(ErrorCode::OutOfRange, "time outside [0, T]");
  if (t == horizon()) return terminal_;
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), t);
  return values_[static_cast<std::size_t>(it - breaks_.begin()) - 1];
}

StepProfile StepProfile::simplified() const {
  std::vector<double> b{breaks_.front()};
  std::vector<double> v{values_.front()};
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (values_[i] != v.back()) {
      b.push_back(breaks_[i]);
      v.push_back(values_[i]);
    }
  }
  b.push_back(breaks_.back());
  return StepProfile(std::move(b), std::move(v), terminal_);
}

double StepProfile::max_value() const {
  return std::max(*std::max_element(values_.begin(), values_.end()), terminal_);
}

double StepProfile::min_value() const {
  return std::min(*std::min_element(values_.begin(), values_.end()), terminal_);
}

std::vector<double> merged_breakpoints(std::span<const StepProfile* const> profiles) {
  std::vector<double> all;
  for (const StepProfile* p : profiles) {
    all.insert(all.end(), p->breakpoints().begin(), p->breakpoints().end());
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

double time_integral(const StepProfile& f, double a, double b) {
  if (a > b) throw Error(ErrorCode::BadInterval, "a > b");
  if (a < 0.0 || b > f.horizon()) throw Error(ErrorCode::BadInterval, "interval outside [0, T]");
  const auto& br = f.breakpoints();
  const auto& v = f.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double lo = std::max(a, br[i]);
    const double hi = std::min(b, br[i + 1]);
    if (hi > lo) sum += v[i] * (hi - lo);
  }
  return sum;
}

double time_integral(const StepProfile& f) { return time_integral(f, 0.0, f.horizon()); }

namespace {

void require_same_horizon(const StepProfile& f, const StepProfile& g) {
  if (f.horizon() != g.horizon()) throw Error(ErrorCode::DimensionMismatch, "profiles on different horizons");
}

template <class Fn>
void for_each_merged_piece(const StepProfile& f, const StepProfile& g, Fn&& fn) {
  const StepProfile* both[] = {&f, &g};
  const auto br = merged_breakpoints(both);
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    const double mid = 0.5 * (br[i] + br[i + 1]);
    fn(br[i], br[i + 1], f.at(mid), g.at(mid));
  }
}

}  // namespace

double l2_distance(const StepProfile& f, const StepProfile& g) {
  require_same_horizon(f, g);
  double sum = 0.0;
  for_each_merged_piece(f, g, [&](double lo, double hi, double fv, double gv) {
    const double d = fv - gv;
    sum += d * d * (hi - lo);
  });
  return std::sqrt(sum);
}

double sup_distance(const StepProfile& f, const StepProfile& g) {
  require_same_horizon(f, g);
  double worst = std::abs(f.terminal() - g.terminal());
  for_each_merged_piece(f, g, [&](double, double, double fv, double gv) {
    worst = std::max(worst, std::abs(fv - gv));
  });
  return worst;
}

StepProfile linear_combination(double alpha, const StepProfile& f, double beta, const StepProfile& g) {
  require_same_horizon(f, g);
  const StepProfile* both[] = {&f, &g};
  auto br = merged_breakpoints(both);
  std::vector<double> values;
  values.reserve(br.size() - 1);
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    const double mid = 0.5 * (br[i] + br[i + 1]);
    values.push_back(alpha * f.at(mid) + beta * g.at(mid));
  }
  return StepProfile(std::move(br), std::move(values), alpha * f.terminal() + beta * g.terminal())
      .simplified();
}

MassField::MassField(std::vector<StepProfile> profiles, double total_mass)
    : profiles_(std::move(profiles)), total_(total_mass) {
  if (profiles_.empty()) throw Error(ErrorCode::InvalidArgument, "a mass field needs at least one node");
  const std::size_t n = profiles_.size();
  if ((n & (n - 1)) != 0) throw Error(ErrorCode::DimensionMismatch, "node count must be 2^N");
  for (const auto& p : profiles_) {
    if (p.horizon() != profiles_.front().horizon()) {
      throw Error(ErrorCode::DimensionMismatch, "profiles on different horizons");
    }
  }
}

MassField MassField::constant(double horizon, std::span<const double> node_masses) {
  std::vector<StepProfile> profiles;
  double total = 0.0;
  for (double m : node_masses) {
    profiles.push_back(StepProfile::constant(horizon, m));
    total += m;
  }
  return MassField(std::move(profiles), total);
}

std::vector<double> MassField::initial_masses() const {
  std::vector<double> out;
  for (const auto& p : profiles_) out.push_back(p.values().front());
  return out;
}

std::size_t MassField::max_piece_count() const {
  std::size_t best = 0;
  for (const auto& p : profiles_) best = std::max(best, p.simplified().piece_count());
  return best;
}

bool MassField::within_bounds(double tol) const {
  for (const auto& p : profiles_) {
    if (p.min_value() < -tol || p.max_value() > total_ + tol) return false;
  }
  return true;
}

double field_l2_distance(const MassField& a, const MassField& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "fields over different networks");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = l2_distance(a[k], b[k]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

double field_sup_distance(const MassField& a, const MassField& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "fields over different networks");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, sup_distance(a[k], b[k]));
  return worst;
}

MassField blend(const MassField& a, const MassField& b, double eta) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "fields over different networks");
  std::vector<StepProfile> out;
  out.reserve(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out.push_back(linear_combination(1.0 - eta, a[k], eta, b[k]));
  return MassField(std::move(out), (1.0 - eta) * a.total_mass() + eta * b.total_mass());
}

double conservation_defect(const MassField& rho) {
  std::vector<const StepProfile*> ptrs;
  for (const auto& p : rho.profiles()) ptrs.push_back(&p);
  const auto br = merged_breakpoints(ptrs);
  double worst = 0.0;
  auto scan = [&](double t) {
    double sum = 0.0;
    for (const auto& p : rho.profiles()) sum += p.at(t);
    worst = std::max(worst, std::abs(sum - rho.total_mass()));
  };
  for (std::size_t i = 0; i + 1 < br.size(); ++i) scan(0.5 * (br[i] + br[i + 1]));
  scan(br.back());
  return worst;
}

bool check_conservation(const MassField& rho, double tol) { return conservation_defect(rho) <= tol; }

double mass_quantum(double total) {
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw Error(ErrorCode::InvalidArgument, "total mass must be positive and finite");
  }
  int e = 0;
  std::frexp(total, &e);
  return std::ldexp(1.0, e - 52);
}

double quantize_nearest(double x, double quantum) { return std::nearbyint(x / quantum) * quantum; }

double quantize_down(double x, double quantum) { return std::floor(x / quantum) * quantum; }

}  // namespace mfg
