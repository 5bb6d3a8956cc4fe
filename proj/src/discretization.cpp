#include "mfgswitch/discretization.hpp"

#include <algorithm>
#include <cmath>

#include "mfgswitch/errors.hpp"

namespace mfg {

EpsPartition::EpsPartition(double horizon, int m, int grid_divisor)
    : horizon_(horizon), m_(m), divisor_(grid_divisor) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw Error(ErrorCode::InvalidArgument, "T must be positive");
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "m must be >= 1");
  if (grid_divisor < 1) throw Error(ErrorCode::InvalidArgument, "grid_divisor must be >= 1");
}

int EpsPartition::index_of(double t) const noexcept {
  if (t < 0.0 || t > horizon_) return -1;
  const int k = static_cast<int>(std::nearbyint(t / horizon_ * m_));
  return node(k) == t ? k : -1;
}

std::vector<double> round_instant(double tau, const EpsPartition& part) {
  const double T = part.horizon();
  if (!(tau >= 0.0 && tau <= T)) throw Error(ErrorCode::OutOfRange, "tau outside [0, T]");
  const double x = tau / T * part.m();
  const double slack = 1e-12 * part.m();
  const double k = std::nearbyint(x);
  if (std::abs(x - k) <= slack) return {part.node(static_cast<int>(k))};
  const int lo = static_cast<int>(std::floor(x));
  const double frac = x - lo;
  if (std::abs(frac - 0.5) <= slack) return {part.node(lo), part.node(lo + 1)};
  return {part.node(frac < 0.5 ? lo : lo + 1)};
}

std::vector<int> round_grid_index(int j, const EpsPartition& part) {
  const int gd = part.grid_divisor();
  if (j < 0 || j > part.m() * gd) throw Error(ErrorCode::OutOfRange, "grid index outside [0, T]");
  const int lo = j / gd;
  const int r2 = 2 * (j % gd);
  if (r2 == 0) return {lo};
  if (r2 == gd) return {lo, lo + 1};
  return {r2 < gd ? lo : lo + 1};
}

std::vector<EpsPair> eps_argmin_map(const ValueTable& table, const EpsPartition& part, const Node& p, int k) {
  const int gd = part.grid_divisor();
  if (table.grid().steps() != part.m() * gd || table.grid().horizon() != part.horizon()) {
    throw Error(ErrorCode::DimensionMismatch, "value grid does not refine the partition");
  }
  if (k < 0 || k > part.m()) throw Error(ErrorCode::OutOfRange, "decision instant not on the partition");
  const auto& pairs = argmin_map(table, p, k * gd);
  std::vector<EpsPair> out;
  auto add = [&](const Node& q, int idx, double source) {
    EpsPair e{q, idx, part.node(idx), source, false};
    if (idx <= k) {
      e.node_index = k + 1;
      e.tau = part.node(k + 1);
      e.bumped = true;
    }
    out.push_back(e);
  };
  for (std::size_t a = 0; a < pairs.size(); ++a) {
    const auto& pr = pairs[a];
    if (pr.grid_index >= 0) {
      for (int idx : round_grid_index(pr.grid_index, part)) add(pr.successor, idx, pr.tau);
      // A run of adjacent tied instants for one successor spans an interval.
      std::size_t b = a;
      while (b + 1 < pairs.size() && pairs[b + 1].successor == pr.successor &&
             pairs[b + 1].grid_index == pairs[b].grid_index + 1) {
        ++b;
      }
      if (b > a) {
        const int first = pr.grid_index / gd;
        const int last = (pairs[b].grid_index + gd - 1) / gd;
        for (int idx = first; idx <= last; ++idx) add(pr.successor, idx, pr.tau);
      }
    } else {
      for (double t : round_instant(pr.tau, part)) add(pr.successor, part.index_of(t), pr.tau);
    }
  }
  std::sort(out.begin(), out.end(), [](const EpsPair& x, const EpsPair& y) {
    return x.successor.id() != y.successor.id() ? x.successor.id() < y.successor.id() : x.node_index < y.node_index;
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const EpsPair& x, const EpsPair& y) {
                          return x.successor == y.successor && x.node_index == y.node_index;
                        }),
            out.end());
  return out;
}

}  // namespace mfg
