#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stochdrive/kde.hpp"
#include "stochdrive/types.hpp"

namespace stochdrive {

// Joint law of one phase cluster's weight vectors: KDE marginals coupled by
// a Student-t copula. dof == +inf denotes the Gaussian-copula limit.
struct CopulaModel {
  PhaseLabel phase = PhaseLabel::SteadyFollowing;
  std::vector<KdeMarginal> marginals;
  Eigen::MatrixXd correlation;
  double dof = std::numeric_limits<double>::infinity();

  std::size_t dim() const { return marginals.size(); }
  bool gaussian() const { return std::isinf(dof); }
  // Symmetric, unit diagonal, positive definite, dof > 2.
  void validate() const;
  // Kendall tau implied by the correlation: (2/pi) asin(rho).
  Eigen::MatrixXd implied_kendall_tau() const;
};

// Candidate degrees of freedom: 2.5, 3, 4, ..., 30 and +inf.
std::vector<double> dof_grid();

// Kendall tau-b (tie-corrected), O(n^2).
double kendall_tau(std::span<const double> x, std::span<const double> y);

// Eigenvalue-clipped projection onto unit-diagonal positive definite
// matrices.
Eigen::MatrixXd nearest_correlation(const Eigen::MatrixXd& m,
                                    double min_eigenvalue = 1e-8);

// Mean log copula density of pseudo-observations (rows of u, values in
// (0,1)) under correlation R and the given dof (+inf for Gaussian).
double copula_log_likelihood(const Eigen::MatrixXd& u,
                             const Eigen::MatrixXd& correlation, double dof);

// Fits KDE marginals, inverts pairwise Kendall tau for the correlation and
// picks dof by maximum likelihood over dof_grid(). Throws FitError when
// the cluster has fewer than max(dim + 1, 5) members, mixes feature sets,
// or has a constant feature.
CopulaModel fit_copula(std::span<const WeightVector> weights,
                       BandwidthRule rule = BandwidthRule::Silverman);

// One draw using the caller's engine.
WeightVector sample_weight(const CopulaModel& model, std::mt19937_64& rng);
// n >= 1 draws; deterministic in seed.
std::vector<WeightVector> sample_weights(const CopulaModel& model,
                                         std::size_t n, std::uint64_t seed);

std::string format_copula(const CopulaModel& model);
CopulaModel parse_copula(std::string_view text);
void save_copula(const std::filesystem::path& path, const CopulaModel& model);
CopulaModel load_copula(const std::filesystem::path& path);

}  // namespace stochdrive
