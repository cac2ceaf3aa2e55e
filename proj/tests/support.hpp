#pragma once

#include <cstddef>
#include <random>
#include <string>

#include "gpobs/matops.hpp"
#include "gpobs/plant.hpp"
#include "gpobs/scenario.hpp"

namespace support {

inline std::string data_path(const std::string& name) { return std::string(GPOBS_DATA_DIR) + "/" + name; }

inline gpobs::Scenario market() { return gpobs::load_scenario(data_path("market5.cfg")); }

inline gpobs::Matrix random_matrix(std::mt19937_64& gen, std::size_t r, std::size_t c, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  gpobs::Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = u(gen);
  return m;
}

inline gpobs::Vector random_vector(std::mt19937_64& gen, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  gpobs::Vector v(n);
  for (auto& x : v) x = u(gen);
  return v;
}

/// Global plant with random matrices and bounds. x0, w and v boxes have
/// random centers and widths in [0, max_width].
inline gpobs::PlantModel random_plant(std::mt19937_64& gen, std::size_t n, std::size_t m, double max_width = 1.0) {
  gpobs::PlantModel p;
  p.a = random_matrix(gen, n, n, -0.6, 0.6);
  p.c = random_matrix(gen, m, n, -1.0, 1.0);
  p.w = random_matrix(gen, n, n, -1.0, 1.0);
  p.v = random_matrix(gen, m, m, -1.0, 1.0);
  p.gamma = random_matrix(gen, 1 + n / 2, n, -1.0, 1.0);
  auto box = [&](std::size_t k) {
    gpobs::Vector c = random_vector(gen, k, -1.0, 1.0), w = random_vector(gen, k, 0.0, max_width);
    gpobs::Vector lo(k), hi(k);
    for (std::size_t i = 0; i < k; ++i) {
      lo[i] = c[i] - w[i] / 2;
      hi[i] = c[i] + w[i] / 2;
    }
    return gpobs::IntervalVector(lo, hi);
  };
  p.x0 = box(n);
  p.w_bounds = box(n);
  p.v_bounds = box(m);
  p.state_offsets = {0, n};
  p.output_offsets = {0, m};
  p.validate();
  return p;
}

/// Random plant and gain with rho(|A - LC|) and rho(|A|) below `limit`.
struct StableInstance {
  gpobs::PlantModel plant;
  gpobs::Matrix gain;
};

inline StableInstance random_stable_instance(std::mt19937_64& gen, std::size_t n, std::size_t m,
                                             double limit = 0.95, double max_width = 1.0) {
  for (;;) {
    StableInstance s{random_plant(gen, n, m, max_width), random_matrix(gen, n, m, -0.4, 0.4)};
    if (gpobs::spectral_radius_nonneg(gpobs::abs(s.plant.a)) >= limit) continue;
    const gpobs::Matrix f = s.plant.a - s.gain * s.plant.c;
    if (gpobs::spectral_radius_nonneg(gpobs::abs(f)) >= limit) continue;
    return s;
  }
}

/// Scalar plant with the given coefficients and centered noise boxes of the given widths.
inline gpobs::PlantModel scalar_plant(double a, double c, double w, double v, double dw, double dv,
                                      double x0_width = 0.0) {
  gpobs::PlantModel p;
  p.a = gpobs::Matrix{{a}};
  p.c = gpobs::Matrix{{c}};
  p.w = gpobs::Matrix{{w}};
  p.v = gpobs::Matrix{{v}};
  p.gamma = gpobs::Matrix{{1.0}};
  p.x0 = gpobs::IntervalVector({0.0}, {x0_width});
  p.w_bounds = gpobs::IntervalVector({-dw / 2}, {dw / 2});
  p.v_bounds = gpobs::IntervalVector({0.0}, {dv});
  p.state_offsets = {0, 1};
  p.output_offsets = {0, 1};
  p.validate();
  return p;
}

}  // namespace support
