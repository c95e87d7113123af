#pragma once

// Time integration of M0 U' + M1 U + M2 V + A U = f, V' = U, from zero
// history, with energy accounting.

#include "evoel/discretization.hpp"
#include "evoel/material_laws.hpp"
#include "evoel/operator_blocks.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace evoel {

/// amplitude * exp(-((t - center) / width)^2) on [onset, end), zero elsewhere.
struct GaussianPulse {
  double amplitude = 1.0;
  double center = 0.0;
  double width = 1.0;
  double onset = 0.0;
  double end = std::numeric_limits<double>::infinity();

  double operator()(double t) const;
};

/// Sum of separable terms g_i(t) s_i.
class Forcing {
 public:
  using Temporal = std::function<double(double)>;

  void add(Temporal g, Vector spatial);
  Vector at(double t, Index size) const;
  bool empty() const { return terms_.empty(); }
  /// Same temporal profiles with every spatial vector replaced by m * s.
  Forcing mapped(const SparseMatrix& m) const;

 private:
  struct Term {
    Temporal g;
    Vector s;
  };
  std::vector<Term> terms_;
};

struct EvoProblem {
  BlockOperator m0, m1, m2, a;
  Forcing forcing;
  double horizon = 1.0;
  double onset = 0.0;
  /// Accept a selfadjoint but indefinite M2 (well-posed only for large rho).
  bool allow_indefinite_m2 = false;

  Index size() const { return m0.rows(); }
  /// Checks shapes, validity of (M0, M1, M2) and exact skewness of A.
  void check() const;
  /// Single-block problem from plain matrices.
  static EvoProblem from_matrices(const Matrix& m0, const Matrix& m1, const Matrix& m2, const Matrix& a);
};

enum class Scheme { midpoint, implicit_euler };

std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view name);

/// Factorizes the step matrix once and advances (U, V).
///
/// Spaces that A never couples with each other (the flux spaces of every zoo
/// model) enter K only through the pointwise coefficients, so K restricted to
/// them splits into small independent blocks. Those are inverted densely and
/// the sparse LU runs on the Schur complement over the remaining spaces. Falls
/// back to LU of the whole K when that restriction does not split.
class Stepper {
 public:
  Stepper(const EvoProblem& p, double dt, Scheme scheme, double residual_tol = 1e-12);

  double dt() const { return dt_; }
  Scheme scheme() const { return scheme_; }

  /// Midpoint: f is f(t + dt/2). Implicit Euler: f is f(t + dt).
  void step(Vector& u, Vector& v, const Vector& f);
  double last_residual() const { return last_residual_; }

  const SparseMatrix& m0() const { return m0_; }
  const SparseMatrix& m2() const { return m2_; }
  /// True if the local spaces were eliminated before factorizing.
  bool condensed() const { return condensed_; }

 private:
  bool try_condense(const BlockOperator& a);
  Vector solve(const Vector& rhs);

  SparseMatrix m0_, m1a_, m2_;
  SparseMatrix k_;
  Eigen::SparseLU<SparseMatrix> lu_;
  bool condensed_ = false;
  SparseMatrix keep_, local_;       // row selectors
  SparseMatrix k_kl_, k_lk_, local_inv_;
  double dt_;
  Scheme scheme_;
  double tol_;
  double last_residual_ = 0.0;
};

/// Single steps without a persistent factorization.
std::pair<Vector, Vector> step_midpoint(const EvoProblem& p, const Vector& u, const Vector& v, const Vector& f_half, double dt);
std::pair<Vector, Vector> step_implicit_euler(const EvoProblem& p, const Vector& u, const Vector& v, const Vector& f, double dt);

struct RunOptions {
  /// Store every k-th state (0: only the final one).
  Index store_every = 1;
  /// Called after every step with (k, t_k, U_k, V_k).
  std::function<void(Index, double, const Vector&, const Vector&)> observer;
};

struct Trajectory {
  double dt = 0.0;
  Index steps = 0;
  Scheme scheme = Scheme::midpoint;
  std::vector<Index> stored_steps;
  std::vector<Vector> states;       // U at stored steps
  std::vector<Vector> auxiliaries;  // V at stored steps
  std::vector<Vector> forcings;     // f(t_k) at stored steps
  // Per step k = 0..steps:
  std::vector<double> times;
  std::vector<double> energy_m0;
  std::vector<double> energy_m2;
  std::vector<double> work;            // scheme-consistent increment into step k
  std::vector<double> work_trapezoid;  // dt/2 (<U_{k-1}, f_{k-1}> + <U_k, f_k>)
  std::vector<double> state_norm;
  std::vector<double> solve_residual;
  /// First step with a nonzero state, or -1.
  Index first_nonzero_step = -1;

  double energy(Index k) const { return energy_m0[k] + energy_m2[k]; }
};

Trajectory run(const EvoProblem& p, double dt, Scheme scheme, const RunOptions& options = {});

/// 1/2 <U, M0 U> + 1/2 <V, M2 V>.
double energy(const EvoProblem& p, const Vector& u, const Vector& v);

enum class Quadrature { scheme, trapezoid };

/// |E(b) - E(a) - sum of work increments over (a, b]|.
double energy_balance_residual(const Trajectory& traj, Index k_a, Index k_b, Quadrature q = Quadrature::scheme);

/// Trapezoid quadrature of e^{-2 rho t} |phi(t)|^2 over the sample times,
/// returned as the square root.
double weighted_norm(const std::vector<double>& times, const std::vector<Vector>& values, double rho);
double weighted_norm(const std::vector<double>& times, const std::vector<double>& values, double rho);
double weighted_norm(const Trajectory& traj, double rho);
/// Causal cumulative trapezoid: result[0] = 0.
std::vector<Vector> antiderivative(const std::vector<double>& times, const std::vector<Vector>& values);
std::vector<double> antiderivative(const std::vector<double>& times, const std::vector<double>& values);

/// 1/2 <U0, M00 U0> + 1/2 <G X, M11^{-1} G X> where U0 is the kinetic block
/// of U, X the kinetic block of V and G = -A_{flux,kinetic}. Needs a
/// block-diagonal M0 on (kinetic, flux).
class BlockConservedQuantity {
 public:
  BlockConservedQuantity(const EvoProblem& p, const std::string& kinetic, const std::string& flux);
  double operator()(const Vector& u, const Vector& v) const;

 private:
  Index k_off_, k_dim_;
  SparseMatrix m00_, g_;
  Eigen::SimplicialLDLT<SparseMatrix> m11_;
};

}  // namespace evoel
