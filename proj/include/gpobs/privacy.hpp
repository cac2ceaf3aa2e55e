#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gpobs/observer.hpp"
#include "gpobs/plant.hpp"

namespace gpobs {

enum class AdjacencyMode { boundary, interior, single_agent };

std::string to_string(AdjacencyMode mode);
AdjacencyMode parse_adjacency_mode(const std::string& text);

struct AdjacentPair {
  std::vector<Vector> y;
  std::vector<Vector> y_prime;
  std::vector<double> deviation;  // ||y_k - y'_k||_2
};

/// y comes from a seeded plant simulation under the design; y'_k = y_k + d_k
/// with d_k drawn per step on the adjacency stream.
AdjacentPair gen_adjacent(const PlantModel& plant, const ObserverDesign& design, std::size_t horizon,
                          std::uint64_t seed, double rho, AdjacencyMode mode, std::size_t agent = 0);

/// Largest l2 distance between a point of box a and a point of box b, by
/// enumerating every corner pair plus the centers. Dimension at most 8.
double max_corner_distance(const IntervalVector& a, const IntervalVector& b);

/// ||c_a - c_b||_2 + (||w_a||_2 + ||w_b||_2) / 2, an upper bound on the same distance.
double center_width_bound(const IntervalVector& a, const IntervalVector& b);

inline constexpr std::size_t kMaxCornerDim = 8;

struct AuditOptions {
  std::size_t pairs = 100;
  std::size_t horizon = 100;
  std::uint64_t seed = 0;
  AdjacencyMode mode = AdjacencyMode::boundary;
  std::size_t agent = 0;
};

struct AuditReport {
  std::size_t pairs = 0;
  std::size_t horizon = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double rho = 0.0;
  bool corner_exact = true;          // false when the center-plus-width bound was used
  std::vector<double> step_worst;    // max over pairs of e^eps * distance at step k
  std::vector<std::size_t> step_violations;
  double worst = 0.0;
  std::size_t worst_pair = 0;
  std::size_t worst_step = 0;
  std::size_t violations = 0;        // (pair, step) combinations above delta
  std::size_t violating_pairs = 0;
  double mean_final_width = 0.0;     // mean released width at the last step
};

AuditReport audit_guaranteed(const PlantModel& plant, const ObserverDesign& design, const PrivacyBudget& budget,
                             const AuditOptions& options);

std::string format_audit_report(const AuditReport& report);
/// CSV with header `k,worst_distance,delta,violations`.
void write_audit_csv(std::ostream& out, const AuditReport& report);

/// V extended to [V I] with the extra measurement-noise channels bounded by [-s, s].
PlantModel dp_augmented_plant(const PlantModel& plant, double scale);

/// Measurement noise of the base plant at alpha = 1 plus truncated-Laplace
/// input perturbation on [-s, s] with Laplace scale s / 2.
class DpNoise final : public NoiseSource {
 public:
  DpNoise(const PlantModel& plant, double scale, std::uint64_t seed);
  Vector initial_state() override { return base_.initial_state(); }
  NoiseDraw draw(std::size_t step) override;

 private:
  UniformNoise base_;
  double scale_;
  std::size_t outputs_;
  CounterRng rng_;
};

/// Runs the framer with the given gain (alpha = 1) on measurements perturbed
/// by DpNoise; the framer sees the enlarged bounds so containment holds.
FramerTrajectory dp_baseline(const PlantModel& plant, const Matrix& gain, double scale, std::size_t horizon,
                             std::uint64_t seed);

}  // namespace gpobs
