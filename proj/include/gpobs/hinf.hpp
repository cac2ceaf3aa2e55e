#pragma once

#include <string>
#include <vector>

#include "gpobs/matops.hpp"
#include "gpobs/observer.hpp"
#include "gpobs/plant.hpp"

namespace gpobs {

/// Width dynamics e+ = A_tilde e + Lambda delta_lambda of the framer.
struct ErrorSystem {
  Matrix a_tilde;      // |A - LC|
  Matrix lambda;       // [|W| |LV|]
  Vector delta_lambda; // [delta_w; alpha delta_v]
  Vector delta_w;
  Vector delta_v;
};

ErrorSystem build_error_system(const PlantModel& plant, const Matrix& gain, double alpha);
ErrorSystem build_error_system(const PlantModel& plant, const ObserverDesign& design);

/// Exact l2 gain of the nonnegative width system, sigma_max((I - A_tilde)^-1 Lambda).
/// Throws Error(unstable) when rho(A_tilde) >= 1.
double gamma_direct(const ErrorSystem& err);

/// sigma_max((e^{i theta} I - F)^-1 B) through the real 2n x 2n augmentation.
double resolvent_gain(const Matrix& closed_loop, const Matrix& input, double theta);

struct FrequencySweep {
  std::size_t grid_points = 720;
  double refine_tolerance = 1e-6;
};

/// sup over theta in [0, pi] of the resolvent gain of (A - LC, L): the gain
/// from measurement deviations to framer-center deviations.
double eta_hinf(const Matrix& closed_loop, const Matrix& input, const FrequencySweep& sweep = {});
double eta_hinf(const PlantModel& plant, const Matrix& gain, const FrequencySweep& sweep = {});

enum class LmiKind { stability, privacy };

std::string to_string(LmiKind kind);

struct LmiReport {
  LmiKind which = LmiKind::stability;
  double level = 0.0;
  double min_eig = 0.0;
  bool feasible = false;
  Vector q;            // diagonal of Q
  Matrix scaled_gain;  // L_tilde
  std::size_t iterations = 0;
};

/// Block matrix [[Q, |QA - Lt C|, [Q|W| |Lt V|], 0], [*, Q, 0, I],
///               [*, *, gamma I, 0], [*, *, *, gamma I]].
Matrix stability_lmi_matrix(const PlantModel& plant, std::span<const double> q, const Matrix& scaled_gain,
                            double gamma);
/// Block matrix [[Q, QA - Lt C, Lt, 0], [*, Q, 0, I], [*, *, eta I, 0], [*, *, *, eta I]].
Matrix privacy_lmi_matrix(const PlantModel& plant, std::span<const double> q, const Matrix& scaled_gain,
                          double eta);

/// Q must be diagonal with positive entries; feasible iff min_eig > margin.
LmiReport check_stability_lmi(const PlantModel& plant, const Matrix& q, const Matrix& scaled_gain, double gamma,
                              double margin = kDefiniteMargin);
LmiReport check_privacy_lmi(const PlantModel& plant, const Matrix& q, const Matrix& scaled_gain, double eta,
                            double margin = kDefiniteMargin);

struct CertificateOptions {
  std::size_t iterations = 500;
  double margin = kDefiniteMargin;
};

/// Searches diagonal Q > 0 (with L_tilde = Q L) maximizing the minimum
/// eigenvalue of the chosen inequality at the given level.
LmiReport find_certificate(const PlantModel& plant, const Matrix& gain, LmiKind which, double level,
                           const CertificateOptions& options = {});

struct PrivacyLhsOptions {
  bool sigma_min = false;      // read the singular-value factors as sigma_min
  bool literal_alpha = false;  // keep the extra alpha factor in front of ||delta_lambda||
};

/// sigma(|Gamma|) gamma ||[dw; alpha dv]||_2 + sigma(Gamma) eta rho
double privacy_constraint_lhs(const PlantModel& plant, double gamma, double eta, double alpha, double rho,
                              const PrivacyLhsOptions& options = {});
double privacy_constraint_lhs(const PlantModel& plant, const ObserverDesign& design, const PrivacyBudget& budget,
                              const PrivacyLhsOptions& options = {});

/// Closed-form accuracy loss ||e^NP_k - e^GP_k||_inf of the released widths.
double accuracy_error(const PlantModel& plant, const ObserverDesign& np, const ObserverDesign& gp, std::size_t k);
double accuracy_steady(const PlantModel& plant, const ObserverDesign& np, const ObserverDesign& gp);
/// accuracy_error for k = 0 .. horizon-1 using incremental matrix powers.
std::vector<double> accuracy_series(const PlantModel& plant, const ObserverDesign& np, const ObserverDesign& gp,
                                    std::size_t horizon);

std::string format_lmi_report(const LmiReport& report);

}  // namespace gpobs
