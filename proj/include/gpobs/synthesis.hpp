#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gpobs/hinf.hpp"
#include "gpobs/observer.hpp"
#include "gpobs/plant.hpp"

namespace gpobs {

/// Gain structure: entry label 0 keeps the entry at zero, entries sharing a
/// positive label share one search parameter.
Matrix unstructured_mask(std::size_t n, std::size_t m);
/// Label 1 on the diagonal, 2 on the off-diagonal support of A, 3 elsewhere.
/// Requires n == m.
Matrix pattern_mask(const PlantModel& plant);

struct SearchOptions {
  std::size_t max_sweeps = 20000;
  std::uint64_t seed = 0;
  std::size_t random_starts = 0;  // extra starts drawn from the seed
  std::optional<Matrix> mask;
  double alpha_min = 1e-3;
  double alpha_max = 1e3;
  double step_initial = 0.5;
  double step_final = 1e-6;
  double certificate_margin = 0.02;
  PrivacyLhsOptions lhs;
  std::vector<Matrix> extra_starts;

  void validate() const;
};

struct SynthesisProblem {
  PlantModel plant;
  std::optional<PrivacyBudget> budget;
  SearchOptions options;
};

enum class SynthesisStatus { certified, uncertified, infeasible_budget };

std::string to_string(SynthesisStatus s);

struct SynthesisResult {
  ObserverDesign design;
  SynthesisStatus status = SynthesisStatus::uncertified;
  std::vector<std::pair<std::size_t, double>> history;  // (sweep, best gamma_direct)
  double gamma_direct = 0.0;
  double eta_direct = 0.0;
  double spectral_radius = 0.0;
  double budget_bound = 0.0;
  double budget_lhs = 0.0;
  double budget_residual = 0.0;  // lhs - bound, <= 0 when satisfied
  bool has_budget = false;
  LmiReport stability;
  LmiReport privacy;
  std::size_t evaluations = 0;
};

SynthesisResult synth_nonprivate(const SynthesisProblem& problem);
SynthesisResult synth_private(const SynthesisProblem& problem);

/// Computes direct gains and recovers both certificates for a given gain.
SynthesisResult certify_design(const PlantModel& plant, const Matrix& gain, double alpha, Provenance provenance,
                               const std::optional<PrivacyBudget>& budget = std::nullopt,
                               const SearchOptions& options = {});

/// Fixture gain with certificates; throws Error(unstable) when rho(|A - LC|) >= 1.
ObserverDesign load_fixture_design(const PlantModel& plant, const Matrix& gain, double alpha);

struct DeltaSearch {
  double delta = 0.0;
  SynthesisResult result;
  std::size_t solves = 0;
};

/// Smallest delta (relative tolerance rel_tol) for which synth_private
/// returns a certified design, keeping epsilon and rho.
DeltaSearch minimal_feasible_delta(const SynthesisProblem& problem, double rel_tol = 1e-3);

/// Key: value report of levels, residuals and certificate eigenvalues.
std::string format_synthesis_report(const SynthesisResult& result);

}  // namespace gpobs
