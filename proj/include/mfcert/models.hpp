#pragma once

// Model families for log-densities f on R^n. Every family exposes f, its
// first partials, its cross partials and the strong-concavity constant kappa
// (f + kappa|x|^2/2 concave).

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mfcert/grid1d.hpp"
#include "mfcert/linalg.hpp"

namespace mfcert {

/// |V(x)| <= c1 exp(c2 x^2).
struct PotentialGrowth {
  double c1 = 0.0;
  double c2 = 0.0;
};

/// |K''(x)|^2 <= a exp(b |x|).
struct KernelGrowth {
  double a = 0.0;
  double b = 0.0;
};

struct ScalarPotential {
  std::string name;
  std::map<std::string, double> params;
  Fn1D eval, d1, d2;
  double kappa = 0.0;
  double mode = 0.0;  // argmax of V
  PotentialGrowth growth;
};

/// V(x) = -kappa (x - mu)^2 / 2.
ScalarPotential gaussian_well(double kappa, double mu = 0.0);
/// V(x) = -kappa (x - mu)^2 / 2 - lambda (x - mu)^4 / 4.
ScalarPotential quartic_well(double kappa, double lambda, double mu = 0.0);
/// s V; kappa scales with s.
ScalarPotential scaled(const ScalarPotential& v, double s);
/// V(x) + shift, used when a normalisation constant is removed.
ScalarPotential shifted(const ScalarPotential& v, double shift);

struct InteractionKernel {
  std::string name;
  std::map<std::string, double> params;
  Fn1D eval, d1, d2;
  KernelGrowth growth;
};

/// K(u) = -u^2/2.
InteractionKernel neg_quadratic_kernel();
/// K(u) = -sqrt(1 + u^2).
InteractionKernel neg_sqrt_kernel();
/// K(u) = -log cosh u.
InteractionKernel neg_logcosh_kernel();
InteractionKernel zero_kernel();
/// s K; the declared growth constant a scales with s^2.
InteractionKernel scaled(const InteractionKernel& k, double s);

/// Symmetric nonnegative coupling with zero diagonal plus its sparsity pattern.
class CouplingMatrix {
 public:
  struct Edge {
    std::size_t j;
    double weight;
  };

  /// Errors: InvalidModel when J is not square, symmetric within 1e-12,
  /// nonnegative, or has a nonzero diagonal.
  explicit CouplingMatrix(Matrix j);

  std::size_t size() const noexcept { return j_.rows(); }
  const Matrix& matrix() const noexcept { return j_; }
  double operator()(std::size_t i, std::size_t k) const noexcept { return j_(i, k); }
  const std::vector<Edge>& neighbors(std::size_t i) const noexcept { return adj_[i]; }
  /// Pairs i<j with J_ij > 0, in lexicographic order.
  const std::vector<std::pair<std::size_t, std::size_t>>& edges() const noexcept { return edges_; }

  double trace_j2() const noexcept;
  double max_row_sum_deviation(double target) const noexcept;

 private:
  Matrix j_;
  std::vector<std::vector<Edge>> adj_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
};

/// Adjacency matrices (0/1 entries, zero diagonal).
Matrix cycle_graph(std::size_t n);
Matrix complete_graph(std::size_t n);
/// Random simple d-regular graph: circulant start, then seeded double-edge swaps.
Matrix dregular_graph(std::size_t n, std::size_t d, std::uint64_t seed);
/// Block model: entry (i,j), i != j, is weights[block(i)][block(j)].
Matrix block_graph(const std::vector<std::size_t>& sizes, const Matrix& weights);
/// Divide every row by its sum (rows with zero sum are left alone).
Matrix row_normalized(const Matrix& a);

/// f(x) = sum_i V(x_i) + sum_{i<j} J_ij K(x_i - x_j).
struct PairwiseGibbs {
  ScalarPotential V;
  InteractionKernel K;
  CouplingMatrix J;
  std::size_t n() const noexcept { return J.size(); }
};

/// f(x) = -x^T A x / 2 + b^T x. A is positive definite unless
/// `concave_only` is set (allowed for control objectives, which get their
/// strong concavity from a reference measure).
struct QuadraticModel {
  Matrix A;
  std::vector<double> b;
  bool concave_only = false;
  std::size_t n() const noexcept { return A.rows(); }
};

/// Posterior of linear regression with i.i.d. prior exp(V):
/// f(beta) = sum V(beta_i) - |y - X beta|^2 / (2 sigma2).
struct BayesLinReg {
  Matrix X;  // rows = observations, cols = p
  std::vector<double> y;
  double sigma2 = 1.0;
  ScalarPotential prior;
  // Derived on construction.
  Matrix gram;               // X^T X
  std::vector<double> xty;   // X^T y
  double yty = 0.0;
  double kappa2 = 0.0;       // max(0, lambda_min(X^T X))
  std::size_t n() const noexcept { return X.cols(); }
};

/// Errors: InvalidModel.
BayesLinReg make_bayes(Matrix x, std::vector<double> y, double sigma2, ScalarPotential prior);

struct BlackBox {
  std::string name;
  std::size_t dim = 0;
  std::function<double(std::span<const double>)> f;
  std::function<double(std::span<const double>, std::size_t)> grad;
  std::function<double(std::span<const double>, std::size_t, std::size_t)> cross;
  /// Optional second derivative d^2 f / dx_i^2.
  std::function<double(std::span<const double>, std::size_t)> hess_diag;
  double kappa = 0.0;
  std::size_t n() const noexcept { return dim; }
};

/// f(x) = -x^T A x / 2 - s log sum_i exp(x_i); kappa = lambda_min(A).
BlackBox quadratic_lse_blackbox(const Matrix& a, double s);
/// Quadratic model exposed only through function handles.
BlackBox quadratic_blackbox(const Matrix& a, std::vector<double> b = {});

using Model = std::variant<PairwiseGibbs, QuadraticModel, BayesLinReg, BlackBox>;

std::size_t dimension(const Model& m);
std::string family_name(const Model& m);

/// Errors: NonFinite.
double eval_f(const Model& m, std::span<const double> x);
double partial_i(const Model& m, std::span<const double> x, std::size_t i);
/// i != j required.
double cross_ij(const Model& m, std::span<const double> x, std::size_t i, std::size_t j);
/// d^2 f / dx_i^2. Errors: InvalidModel for a black box without hess_diag.
double hess_ii(const Model& m, std::span<const double> x, std::size_t i);
std::vector<double> gradient(const Model& m, std::span<const double> x);

/// Strong-concavity constant. Errors: NotStronglyConcave if <= 0.
double kappa_of(const Model& m);
/// Same constant without the positivity check (0 for merely concave models).
double concavity_of(const Model& m);

/// Maximiser of f by gradient ascent with Armijo backtracking.
std::vector<double> find_mode(const Model& m);

/// s f, same family.
Model scale_model(const Model& m, double s);
/// f(x) - |x|^2 / (2 t): the Lebesgue form of f against the Gaussian gamma_t.
Model add_gaussian_reference(const Model& m, double t);

struct ValidationOptions {
  double window_sd = 12.0;
  std::size_t probe_points = 1001;
  std::size_t random_probes = 100;
  std::uint64_t seed = 0x5eed;
  /// Skip the |V| <= c1 exp(c2 x^2) gate (the growth hypothesis may be
  /// stronger than needed).
  bool allow_growth_override = false;
};

/// Probe-checks every invariant of the model family. Errors: InvalidModel,
/// NotStronglyConcave.
void validate(const Model& m, const ValidationOptions& opts = {});
void validate_potential(const ScalarPotential& v, double center, double halfwidth,
                        const ValidationOptions& opts);
void validate_kernel(const InteractionKernel& k, double range, const ValidationOptions& opts);

}  // namespace mfcert
