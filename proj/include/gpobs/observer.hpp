#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "gpobs/matops.hpp"
#include "gpobs/plant.hpp"
#include "gpobs/random.hpp"

namespace gpobs {

enum class Provenance { synthesized, loaded_fixture, non_private };

std::string to_string(Provenance p);

/// Observer gain, perturbation factor and certified levels.
///
/// gamma bounds the width dynamics gain (stability inequality), eta the
/// center-deviation gain (privacy inequality); certificate holds the diagonal
/// of Q. A design that has not been certified carries infinite levels.
struct ObserverDesign {
  Matrix gain;
  double alpha = 1.0;
  double gamma = std::numeric_limits<double>::infinity();
  double eta = std::numeric_limits<double>::infinity();
  Vector certificate;
  Provenance provenance = Provenance::synthesized;

  double beta() const { return gamma * alpha; }
  /// Q L with Q = diag(certificate).
  Matrix scaled_gain() const;
  void validate(const PlantModel& plant) const;
};

ObserverDesign make_design(Matrix gain, double alpha, Provenance provenance = Provenance::synthesized);

/// One framer recursion with the splits of (A - LC), LV, W and Gamma cached.
class Framer {
 public:
  Framer(const PlantModel& plant, const Matrix& gain, double alpha);

  std::pair<Vector, Vector> step(std::span<const double> lo, std::span<const double> hi,
                                 std::span<const double> y) const;
  std::pair<Vector, Vector> output(std::span<const double> lo, std::span<const double> hi) const;

  const Matrix& closed_loop() const { return closed_loop_; }

 private:
  Matrix closed_loop_;
  MatrixSplit closed_split_;
  Matrix gain_;
  MatrixSplit gamma_split_;
  Vector offset_lo_;
  Vector offset_hi_;
};

std::pair<Vector, Vector> framer_step(const PlantModel& plant, const ObserverDesign& design,
                                      std::span<const double> x_lo, std::span<const double> x_hi,
                                      std::span<const double> y);

/// Framer history; step k holds the bounds that bracket x_k.
struct FramerTrajectory {
  std::vector<Vector> x_lo, x_hi;
  std::vector<Vector> z_lo, z_hi;
  std::vector<Vector> x_true, z_true;  // empty when no plant was co-simulated
  std::vector<Vector> y;

  std::size_t horizon() const noexcept { return x_lo.size(); }
  bool has_truth() const noexcept { return !x_true.empty(); }
  Vector x_width(std::size_t k) const { return sub(x_hi[k], x_lo[k]); }
  Vector z_width(std::size_t k) const { return sub(z_hi[k], z_lo[k]); }
};

inline constexpr std::size_t kMaxHorizon = 1'000'000;

struct NoiseDraw {
  Vector w;
  Vector v;  // effective measurement noise, perturbation included
};

class NoiseSource {
 public:
  virtual ~NoiseSource() = default;
  virtual Vector initial_state() = 0;
  virtual NoiseDraw draw(std::size_t step) = 0;
};

/// x0 ~ U[x0_lo, x0_hi], w_k ~ U[w_lo, w_hi]. The perturbation v^a_k is
/// uniform on [alpha v_lo - v_k, alpha v_hi - v_k], so v_k + v^a_k is uniform
/// on [alpha v_lo, alpha v_hi].
class UniformNoise final : public NoiseSource {
 public:
  UniformNoise(const PlantModel& plant, double alpha, std::uint64_t seed);
  Vector initial_state() override;
  NoiseDraw draw(std::size_t step) override;

 private:
  IntervalVector x0_, w_, v_;
  CounterRng x0_rng_, w_rng_, v_rng_;
};

class RecordedNoise final : public NoiseSource {
 public:
  RecordedNoise(Vector x0, std::vector<Vector> w, std::vector<Vector> v);
  Vector initial_state() override { return x0_; }
  NoiseDraw draw(std::size_t step) override;

 private:
  Vector x0_;
  std::vector<Vector> w_, v_;
};

/// Co-simulates plant and framer. Noise outside [w_lo, w_hi] or
/// [alpha v_lo, alpha v_hi] aborts with the step index.
FramerTrajectory simulate(const PlantModel& plant, const ObserverDesign& design, std::size_t horizon,
                          NoiseSource& noise);
FramerTrajectory simulate(const PlantModel& plant, const ObserverDesign& design, std::size_t horizon,
                          std::uint64_t seed);

/// Runs the framer on a given measurement sequence (no truth).
FramerTrajectory run_framer(const PlantModel& plant, const ObserverDesign& design, const std::vector<Vector>& ys);

/// The released set-valued map y -> [z_lo_k, z_hi_k].
std::vector<IntervalVector> mechanism(const PlantModel& plant, const ObserverDesign& design,
                                      const std::vector<Vector>& ys);

/// Autonomous width recursion e_{k+1} = |A - LC| e_k + [|W| |LV|] [dw; alpha dv],
/// e_0 = x0_hi - x0_lo; returns e_0 .. e_{horizon-1}.
std::vector<Vector> width_recursion(const PlantModel& plant, const Matrix& gain, double alpha, std::size_t horizon);

struct ContainmentCheck {
  bool ok = true;
  double worst_slack = std::numeric_limits<double>::infinity();  // min over bound - value
  std::size_t worst_step = 0;
};

ContainmentCheck check_containment(const FramerTrajectory& traj);

/// CSV with header `k,z_true_1,z_lo_1,z_hi_1,width_1,...`.
void write_trajectory_csv(std::ostream& out, const FramerTrajectory& traj);

}  // namespace gpobs
