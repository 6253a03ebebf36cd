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

// Elements of the coefficient algebra: 1 x 1 for scalars, d x d for matrices.
// Innovations of the RDE pairing are d x (d + 1) blocks [A | B].
using Element = Matrix;

// Frobenius norm, so that flattened element directions live on the Euclidean
// unit sphere. It is submultiplicative and dominates the operator norm.
double element_norm(const Element& x);
// Largest singular value.
double operator_norm(const Element& x);
// Column-major flattening, used for spectral directions of elements.
Vector flatten(const Element& x);

// The coefficient recursion psi and its limit maps:
//   chi(v, n)  = lim t^-1 psi(t v, n)
//   zeta(m, u) = lim t^-1 psi(m, t u)
// combine(coefficient, innovation) is the series term.
struct PsiModel {
  using Binary = std::function<Element(const Element&, const Element&)>;

  Binary psi;
  Binary chi;
  Binary zeta;
  Binary combine;
  std::function<double(const Element&)> psi_star;
  double c_bound = 1.0;
  std::string descriptor;
};

// psi(m, n) = c m n on 1 x 1 elements.
PsiModel bilinear_scalar(double c);
// psi(m, n) = c m n on d x d matrices; psi*(n) = |c| |n|_op.
PsiModel matrix_bilinear(double c);
// Coefficients H (d x d), innovations [A | B]: psi(H, N) = H A, term H B,
// psi*(N) = |A|_op.
PsiModel rde_pair(int d);

// Regularly varying law of innovations together with the law of their
// spectral direction Theta_N, returned as a unit element.
struct InnovationLaw {
  using Sampler = std::function<Element(RandomSource&)>;

  int rows = 1;
  int cols = 1;
  double alpha = 1.0;
  Sampler sample;
  Sampler sample_direction;
  std::string descriptor;
};

// Vector law reshaped column-major into rows x cols (1 x 1 for scalars).
InnovationLaw innovation_from_regvar(const RegVarLaw& law, int rows, int cols);
// Vector law placed on the diagonal of a d x d matrix.
InnovationLaw diagonal_innovation(const RegVarLaw& law);
// Pairs [A | B] with bounded A and regularly varying B; Theta_N = [0 | Theta_B].
InnovationLaw rde_pair_innovation(MatrixLaw a, const RegVarLaw& b);
// Deterministic innovation n0, treated as having direction n0 / |n0|.
InnovationLaw constant_innovation(Element n0, double alpha);

enum class SeriesMode { adaptable, predictable };

struct Truncation {
  int max_terms = 1000;
  double tail_tol = 1e-10;
  // Multiplier of |M_n| (or |H_n|) in the remainder bound; see calibrate_truncation.
  double remainder_scale = 1.0;
};

struct SeriesModel {
  SeriesMode mode = SeriesMode::adaptable;
  PsiModel psi;
  InnovationLaw innovation;
  Element initial;
  Truncation truncation;

  SeriesModel(SeriesMode mode, PsiModel psi, InnovationLaw innovation, Element initial,
              Truncation truncation = {});
  // alpha / 2 for adaptable models, alpha for predictable ones.
  double tail_index() const;
  std::string describe() const;
};

// Sets truncation.remainder_scale to the 0.99-quantile of the Grey-type series
// S* = sum_j |N_j| prod_{k<j} psi*(N_k) from n simulated draws.
void calibrate_truncation(SeriesModel& model, std::size_t n, RandomSource& rng);

struct SeriesDraw {
  Element value;
  int n_terms = 0;
  double remainder_bound = 0.0;
  bool truncation_warning = false;
};

// S_M = sum_{j>=1} combine(M_j, N_j) with M_0 = initial, M_j = psi(M_{j-1}, N_j).
SeriesDraw sample_S_adaptable(const SeriesModel& model, RandomSource& rng);
// R = sum_{j>=1} combine(H_j, N_j) with H_1 = initial, H_{j+1} = psi(H_j, N_j).
SeriesDraw sample_R_predictable(const SeriesModel& model, RandomSource& rng);
// n draws of the model's series, trajectory i on substream i of a fork of rng.
std::vector<SeriesDraw> sample_series(const SeriesModel& model, std::size_t n, Stream& rng);

struct LimitProbe {
  Element coefficient;
  Element innovation;
};

struct LimitCheckRow {
  std::size_t probe = 0;
  double t = 0.0;
  double chi_error = 0.0;
  double zeta_error = 0.0;
};

struct LimitCheckReport {
  std::vector<LimitCheckRow> rows;
  std::vector<bool> chi_pass;   // per probe, at the largest t
  std::vector<bool> zeta_pass;
  bool passed() const;
};

LimitCheckReport chi_zeta_limit_check(const PsiModel& pm, const std::vector<LimitProbe>& probes,
                                      const std::vector<double>& t_grid, double tol);

struct GrowthReport {
  double max_growth_ratio = 0.0;   // max |psi(m,n)| / (C |m| (|n| + 1))
  double max_star_deficit = 0.0;   // max (|psi(m,n)| / |m|) - psi*(n)
  double max_star_ratio = 0.0;     // max psi*(n) / (C (|n| + 1))
  bool holds(double tolerance = 1e-9) const {
    return max_growth_ratio <= 1.0 + tolerance && max_star_deficit <= tolerance &&
           max_star_ratio <= 1.0 + tolerance;
  }
};

GrowthReport check_psi_growth(const PsiModel& pm, const std::vector<LimitProbe>& probes);

struct ContractivityResult {
  double exponent = 0.0;
  double estimate = 0.0;
  double se = 0.0;
  double hill_index = 0.0;  // of psi*(N); 0 when not estimable
  bool heavy_moment = false;
  bool passed = false;      // estimate + 3 se < 1 and no divergence
  std::string message;
};

// Monte Carlo estimate of E[psi*(N)^p]. A divergent moment is reported through
// heavy_moment rather than thrown.
ContractivityResult contractivity_check(const SeriesModel& model, double exponent, std::size_t n,
                                        RandomSource& rng);

enum class IndexVariant { previous, current };
enum class ThetaRWeighting { pooled, per_trajectory };

struct ThetaROptions {
  ThetaRWeighting weighting = ThetaRWeighting::pooled;
  // Reuse the series' own future innovations in the U-chain.
  bool coupled = true;
};

struct SpectralSeriesResult {
  EmpiricalAngularMeasure measure;
  double lambda_hat = 0.0;
  double lambda_se = 0.0;
  double tail_index_claimed = 0.0;
  std::size_t n_trajectories = 0;
  // Series index k of each emitted atom.
  std::vector<int> atom_terms;
  double truncation_proxy = 0.0;
  std::vector<std::string> flags;
};

// Spectral law of S_M: one atom per trajectory, term k chosen with probability
// w_k / W, w_k = |combine(zeta(M_{k-1}, Theta_k), Theta_k)|^{alpha/2}, carrying weight W.
SpectralSeriesResult sample_theta_SM(const SeriesModel& model, std::size_t n_traj, int j_max,
                                     Stream& rng, IndexVariant variant = IndexVariant::previous);

// Spectral law of R from the limit terms
//   Gamma_k = combine(H_k, Theta_k) + sum_{j>=1} combine(V_j, N_{k+j}),
//   V_1 = zeta(H_k, Theta_k), V_{j+1} = chi(V_j, N_{k+j}).
SpectralSeriesResult sample_theta_R(const SeriesModel& model, std::size_t n_traj, int k_max, int j_max,
                                    Stream& rng, const ThetaROptions& options = {});

}  // namespace rvlab
