#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mfgswitch/cost_model.hpp"
#include "mfgswitch/mass_profile.hpp"

namespace testing_support {

inline mfg::CostParams uniform_params(int N, double T, double a = 1.0) {
  mfg::CostParams p;
  p.num_targets = N;
  p.horizon = T;
  p.weights.assign(std::size_t{1} << N, a);
  return p;
}

inline mfg::CostParams random_params(int N, double T, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.2, 2.0);
  mfg::CostParams p = uniform_params(N, T);
  for (double& w : p.weights) w = u(rng);
  return p;
}

inline std::vector<double> random_masses(int N, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<double> m(std::size_t{1} << N);
  for (double& x : m) x = u(rng);
  return m;
}

// Random two-piece profiles per node.
inline mfg::MassField random_field(int N, double T, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<mfg::StepProfile> prof;
  for (std::size_t k = 0; k < (std::size_t{1} << N); ++k) {
    const double cut = T * (0.1 + 0.8 * u(rng));
    prof.emplace_back(std::vector<double>{0.0, cut, T}, std::vector<double>{u(rng), u(rng)}, u(rng));
  }
  return mfg::MassField(std::move(prof), 1.0);
}

}  // namespace testing_support
