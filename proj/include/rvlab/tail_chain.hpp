#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rvlab/estimators.hpp"
#include "rvlab/markov.hpp"
#include "rvlab/random.hpp"
#include "rvlab/rv_core.hpp"

namespace rvlab {

// Limit objects of a heavy-tailed chain: the spectral law Theta(x) of a single
// transition from x, the comparability function R(x), and one step of the tail
// chain (the limit of P(t z, t .) as t grows).
struct TailLimitModel {
  using DirectionSampler = std::function<Vector(const Vector&, RandomSource&)>;

  int dim = 0;
  double alpha = 1.0;
  DirectionSampler theta_of_x;
  std::function<double(const Vector&)> r_of_x;
  MarkovModel::Step z_step;
  // z_step is z -> A z for a random matrix A (exact homogeneity).
  bool linear = false;
  std::string descriptor;
};

// Tail chain z -> A z with Theta(x) ~ theta independent of x and R == 1.
TailLimitModel linear_tail_limits(MatrixLaw a, AngularLaw theta, double alpha);
// Limits of an RDE with bounded coefficients and regularly varying B: Theta(x)
// is the angular law of B, R == 1 and the tail chain multiplies by a fresh A.
TailLimitModel rde_tail_limits(const RdeModel& model);

std::vector<Vector> simulate_tail_chain(const TailLimitModel& model, const Vector& z0, std::size_t n,
                                        RandomSource& rng);

struct RhoStarEstimate {
  double value = 0.0;
  double se = 0.0;
  int directions_probed = 0;
  std::optional<int> k0;
  Vector argmax;

  bool contractive() const { return value < 1.0; }
};

// max over probed unit directions of the Monte Carlo mean of |z_step(theta)|^alpha.
// This is a lower bound for the supremum over the sphere. Throws HeavyMoment if
// the Hill index of |Z_1^theta| does not clear alpha. With a gauge margin
// epsilon, k0 is the least n with value^n < epsilon^alpha.
RhoStarEstimate estimate_rho_star(const TailLimitModel& model, int n_directions, std::size_t n_rep,
                                  RandomSource& rng, const std::vector<Vector>& extra_directions = {},
                                  std::optional<double> gauge_margin = std::nullopt);

struct MomentBoundCell {
  std::size_t theta_index = 0;
  int n = 0;
  double mean = 0.0;
  double se = 0.0;
  double bound = 0.0;
  bool exceeded = false;
};

struct MomentBoundReport {
  std::vector<MomentBoundCell> cells;
  std::size_t exceedances() const;
};

MomentBoundReport verify_z_moment_bound(const TailLimitModel& model, const RhoStarEstimate& rho,
                                        const std::vector<Vector>& theta_grid,
                                        const std::vector<int>& n_grid, std::size_t n_rep,
                                        RandomSource& rng);

struct SpectralSampleResult {
  EmpiricalAngularMeasure measure;
  double normalizer = 0.0;
  double normalizer_se = 0.0;
  std::size_t n_trajectories = 0;
  int truncation_j = -1;
  double truncation_bound = 0.0;
  std::vector<std::string> flags;
};

struct SpectralOptions {
  // Keep the j = 0 term of the Theta_n sum.
  bool include_j0 = true;
  // Multiply weights by 1{|Z| >= 1} as in the displayed normalizing constants.
  bool unit_indicator = false;
};

// Direct sampler of the spectral law of X_n^{x0}.
SpectralSampleResult sample_theta_n(const MarkovModel& chain, const TailLimitModel& limits,
                                    const Vector& x0, int n, std::size_t n_traj, Stream& rng,
                                    const SpectralOptions& options = {});

enum class ConeRestriction { cone, complement };

// Direct sampler of the spectral law of the stationary distribution restricted
// to the cone K_0 or its complement. Stationary states come from `stationary`.
SpectralSampleResult sample_theta_pi(const StationarySampler& stationary, const TailLimitModel& limits,
                                     const GaugeSet& k, const RhoStarEstimate& rho, int j_max,
                                     std::size_t n_traj, Stream& rng, ConeRestriction restriction,
                                     const SpectralOptions& options = {});

// Two estimates of C_2 = lim t P[|X_2| > a_t] for a chain started at x0 (which
// serves as the comparability reference point): the direct exceedance count,
// and E[R(X_1)] + R(x0) E[|Z_1^{Theta(x0)}|^alpha].
struct RecursionCheck {
  double t = 0.0;
  double a_t = 0.0;
  double direct = 0.0;
  double direct_se = 0.0;
  double exceedances = 0.0;
  double formula = 0.0;
  double formula_se = 0.0;
  double z_score() const;
};

RecursionCheck recursion_check_n2(const MarkovModel& chain, const TailLimitModel& limits,
                                  const Vector& x0, double t, std::size_t n, RandomSource& rng);

}  // namespace rvlab
