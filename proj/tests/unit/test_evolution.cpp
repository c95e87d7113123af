#include "evoel/error.hpp"
#include "evoel/evolution.hpp"
#include "evoel/model_zoo.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace evoel;
using evoel::testing::max_abs;
using evoel::testing::random_matrix;
using evoel::testing::random_spd;

namespace {

Matrix random_skew(std::mt19937_64& rng, Index n) {
  const Matrix b = random_matrix(rng, n, n);
  return b - b.transpose();
}

EvoProblem random_problem(std::mt19937_64& rng, Index n, bool with_m2) {
  EvoProblem p = EvoProblem::from_matrices(random_spd(rng, n), 0.3 * random_skew(rng, n),
                                           with_m2 ? Matrix(random_spd(rng, n)) : Matrix(Matrix::Zero(n, n)),
                                           random_skew(rng, n));
  p.horizon = 2.0;
  return p;
}

// Scalar problem u' + k v = F, v' = u from rest: v = F/k (1 - cos(w t)), u = F/w sin(w t).
EvoProblem scalar_oscillator(double k, double force, double horizon) {
  EvoProblem p = EvoProblem::from_matrices(Matrix::Ones(1, 1), Matrix::Zero(1, 1), Matrix::Constant(1, 1, k), Matrix::Zero(1, 1));
  p.forcing.add([force](double) { return force; }, Vector::Ones(1));
  p.horizon = horizon;
  return p;
}

double oscillator_error(Scheme s, double dt) {
  const double k = 4.0, force = 1.5, horizon = 1.0, w = 2.0;
  const Trajectory tr = run(scalar_oscillator(k, force, horizon), dt, s, {0, {}});
  return std::abs(tr.states.back()(0) - force / w * std::sin(w * horizon));
}

}  // namespace

TEST_CASE("gaussian pulse support") {
  const GaussianPulse g{2.0, 0.5, 0.1, 0.3, 0.8};
  CHECK(g(0.2999) == 0.0);
  CHECK(g(0.8) == 0.0);
  CHECK(g(0.5) == 2.0);
  CHECK(g(0.3) == doctest::Approx(2.0 * std::exp(-4.0)));
}

TEST_CASE("forcing terms sum and map") {
  Forcing f;
  f.add([](double t) { return t; }, Vector::Ones(2));
  f.add([](double) { return 2.0; }, Vector::Unit(2, 0));
  CHECK(f.at(0.5, 2) == Vector(Eigen::Vector2d(2.5, 0.5)));
  CHECK_THROWS_AS(f.at(0.5, 3), ShapeError);
  SparseMatrix m(1, 2);
  m.insert(0, 1) = 3.0;
  CHECK(f.mapped(m).at(1.0, 1)(0) == 3.0);
  CHECK(Forcing().empty());
}

TEST_CASE("problem preconditions") {
  std::mt19937_64 rng(40);
  EvoProblem p = random_problem(rng, 4, true);
  CHECK_NOTHROW(p.check());

  EvoProblem not_skew = EvoProblem::from_matrices(Matrix::Identity(2, 2), Matrix::Zero(2, 2), Matrix::Zero(2, 2),
                                                  Matrix::Identity(2, 2));
  CHECK_THROWS_AS(not_skew.check(), PreconditionError);

  EvoProblem indefinite = EvoProblem::from_matrices(Matrix::Identity(2, 2), Matrix::Zero(2, 2), Matrix(-Matrix::Identity(2, 2)),
                                                    Matrix::Zero(2, 2));
  CHECK_THROWS_AS(indefinite.check(), PreconditionError);
  indefinite.allow_indefinite_m2 = true;
  CHECK_NOTHROW(indefinite.check());

  EvoProblem bad_m0 = EvoProblem::from_matrices(Matrix(-Matrix::Identity(2, 2)), Matrix::Zero(2, 2), Matrix::Zero(2, 2),
                                                Matrix::Zero(2, 2));
  CHECK_THROWS_AS(run(bad_m0, 0.1, Scheme::midpoint), PreconditionError);
  CHECK_THROWS_AS(run(p, 3.0, Scheme::midpoint), std::invalid_argument);

  CHECK(scheme_from_string("implicit_euler") == Scheme::implicit_euler);
  CHECK(to_string(Scheme::midpoint) == "midpoint");
  CHECK_THROWS_AS(scheme_from_string("rk4"), std::invalid_argument);
}

TEST_CASE("midpoint step is the Cayley transform for M0 = 1") {
  std::mt19937_64 rng(41);
  const Index n = 5;
  const Matrix a = random_skew(rng, n);
  const EvoProblem p = EvoProblem::from_matrices(Matrix::Identity(n, n), Matrix::Zero(n, n), Matrix::Zero(n, n), a);
  const Vector u0 = testing::random_vector(rng, n);
  const double dt = 0.05;
  const auto [u1, v1] = step_midpoint(p, u0, Vector::Zero(n), Vector::Zero(n), dt);
  const Matrix id = Matrix::Identity(n, n);
  const Vector cayley = (id + 0.5 * dt * a).fullPivLu().solve((id - 0.5 * dt * a) * u0);
  CHECK(max_abs(u1 - cayley) <= 1e-14);
  CHECK(max_abs(v1 - 0.5 * dt * (u0 + u1)) <= 1e-15);
  CHECK(std::abs(u1.norm() - u0.norm()) <= 1e-14);

  const auto [ue, ve] = step_implicit_euler(p, u0, Vector::Zero(n), Vector::Zero(n), dt);
  CHECK(max_abs(ue - (id + dt * a).fullPivLu().solve(u0)) <= 1e-14);
  CHECK(ue.norm() < u0.norm());
  CHECK(max_abs(ve - dt * ue) <= 1e-16);
}

TEST_CASE("zero data keeps the state exactly zero") {
  std::mt19937_64 rng(42);
  const EvoProblem p = random_problem(rng, 6, true);
  const Trajectory tr = run(p, 0.1, Scheme::midpoint);
  CHECK(tr.first_nonzero_step == -1);
  for (const auto& s : tr.states) CHECK(s.isZero(0));
}

TEST_CASE("schemes converge to the closed-form oscillator at their orders") {
  const double em1 = oscillator_error(Scheme::midpoint, 0.02), em2 = oscillator_error(Scheme::midpoint, 0.01);
  CHECK(std::log2(em1 / em2) == doctest::Approx(2.0).epsilon(0.05));
  const double ee1 = oscillator_error(Scheme::implicit_euler, 0.02), ee2 = oscillator_error(Scheme::implicit_euler, 0.01);
  CHECK(std::log2(ee1 / ee2) == doctest::Approx(1.0).epsilon(0.1));
  CHECK(em2 < ee2);
}

TEST_CASE("constant forcing integrates exactly for u' = f") {
  EvoProblem p = EvoProblem::from_matrices(Matrix::Ones(1, 1), Matrix::Zero(1, 1), Matrix::Zero(1, 1), Matrix::Zero(1, 1));
  p.forcing.add([](double t) { return t < 0.5 ? 0.0 : 1.0; }, Vector::Ones(1));
  p.horizon = 1.0;
  const Trajectory tr = run(p, 0.125, Scheme::midpoint);
  CHECK(tr.states.back()(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(tr.first_nonzero_step == 5);
}

TEST_CASE("states vanish before the forcing onset") {
  std::mt19937_64 rng(43);
  for (Scheme s : {Scheme::midpoint, Scheme::implicit_euler}) {
    EvoProblem p = random_problem(rng, 6, true);
    const GaussianPulse g{1.0, 0.6, 0.1, 0.5};
    p.forcing.add(g, testing::random_vector(rng, 6));
    const double dt = 0.02;
    const Trajectory tr = run(p, dt, s);
    REQUIRE(tr.first_nonzero_step > 0);
    CHECK(tr.times[static_cast<std::size_t>(tr.first_nonzero_step)] >= 0.5 - 1e-12);
    for (std::size_t k = 0; k < tr.states.size(); ++k)
      if (tr.times[static_cast<std::size_t>(tr.stored_steps[k])] < 0.5) CHECK(tr.states[k].isZero(0));
  }
}

TEST_CASE("midpoint conserves energy after the pulse and balances the work") {
  std::mt19937_64 rng(44);
  EvoProblem p = random_problem(rng, 8, true);
  p.forcing.add(GaussianPulse{1.0, 0.2, 0.05, 0.0, 0.4}, testing::random_vector(rng, 8));
  p.horizon = 3.0;
  const Trajectory tr = run(p, 0.01, Scheme::midpoint, {0, {}});
  const Index k_off = 41;
  const double e = tr.energy(k_off);
  REQUIRE(e > 0);
  double drift = 0;
  for (Index k = k_off; k <= tr.steps; ++k) drift = std::max(drift, std::abs(tr.energy(k) - e));
  CHECK(drift / e <= 1e-12);
  CHECK(energy_balance_residual(tr, 0, tr.steps) <= 1e-12 * e);
  CHECK(energy_balance_residual(tr, 0, tr.steps, Quadrature::trapezoid) > 0.0);
  CHECK_THROWS_AS(energy_balance_residual(tr, 5, 2), std::out_of_range);

  const Vector u = tr.states.back(), v = tr.auxiliaries.back();
  CHECK(energy(p, u, v) == doctest::Approx(tr.energy(tr.steps)).epsilon(1e-13));
}

TEST_CASE("implicit Euler dissipates energy without forcing") {
  std::mt19937_64 rng(45);
  EvoProblem p = random_problem(rng, 6, true);
  p.forcing.add(GaussianPulse{1.0, 0.1, 0.05, 0.0, 0.2}, testing::random_vector(rng, 6));
  const Trajectory tr = run(p, 0.01, Scheme::implicit_euler);
  for (Index k = 21; k < tr.steps; ++k) CHECK(tr.energy(k + 1) <= tr.energy(k) * (1 + 1e-14));
  CHECK(tr.energy(tr.steps) < tr.energy(21));
}

TEST_CASE("trajectory bookkeeping") {
  std::mt19937_64 rng(46);
  EvoProblem p = random_problem(rng, 3, false);
  p.horizon = 1.0;
  p.forcing.add([](double) { return 1.0; }, Vector::Ones(3));
  Index calls = 0;
  RunOptions opts;
  opts.store_every = 3;
  opts.observer = [&](Index k, double t, const Vector&, const Vector&) {
    CHECK(k == calls);
    CHECK(t == doctest::Approx(0.1 * static_cast<double>(k)));
    ++calls;
  };
  const Trajectory tr = run(p, 0.1, Scheme::midpoint, opts);
  CHECK(calls == 11);
  CHECK(tr.steps == 10);
  CHECK(tr.stored_steps == std::vector<Index>{0, 3, 6, 9, 10});
  CHECK(tr.times.size() == 11);
  CHECK(tr.forcings.back() == Vector::Ones(3));
  for (double r : tr.solve_residual) CHECK(r <= 1e-12);

  const Trajectory last = run(p, 0.1, Scheme::midpoint, {0, {}});
  CHECK(last.stored_steps == std::vector<Index>{10});
  CHECK(max_abs(last.states[0] - tr.states.back()) == 0.0);
}

TEST_CASE("singular step matrices are reported") {
  const EvoProblem p = EvoProblem::from_matrices(Matrix::Zero(2, 2), Matrix::Zero(2, 2), Matrix::Zero(2, 2), Matrix::Zero(2, 2));
  CHECK_THROWS_AS(Stepper(p, 0.1, Scheme::midpoint), SolverError);
  CHECK_THROWS_AS(Stepper(p, -0.1, Scheme::midpoint), std::invalid_argument);
}

TEST_CASE("weighted norm and antiderivative quadrature") {
  const double rho = 1.5, horizon = 2.0;
  std::vector<double> t, ones;
  for (int k = 0; k <= 2000; ++k) {
    t.push_back(horizon * k / 2000.0);
    ones.push_back(1.0);
  }
  const double exact = std::sqrt((1 - std::exp(-2 * rho * horizon)) / (2 * rho));
  CHECK(weighted_norm(t, ones, rho) == doctest::Approx(exact).epsilon(1e-6));
  CHECK_THROWS_AS(weighted_norm(t, ones, 0.0), std::invalid_argument);

  std::vector<double> lin;
  for (double x : t) lin.push_back(3 * x + 1);
  const auto anti = antiderivative(t, lin);
  for (std::size_t k = 0; k < t.size(); k += 100) CHECK(anti[k] == doctest::Approx(1.5 * t[k] * t[k] + t[k]).epsilon(1e-13));
  CHECK(anti[0] == 0.0);

  // |d0^{-1} phi|_rho <= |phi|_rho / rho on a step signal
  std::vector<double> step;
  for (double x : t) step.push_back(x >= 0.3 && x < 0.9 ? 1.0 : 0.0);
  CHECK(weighted_norm(t, antiderivative(t, step), rho) <= weighted_norm(t, step, rho) / rho * 1.01);
}

TEST_CASE("block conserved quantity equals the energy for a gradient pair") {
  std::mt19937_64 rng(47);
  const std::vector<Space> s{{"k", 3}, {"f", 4}};
  EvoProblem p;
  p.m0 = BlockOperator::square(s);
  p.m0.set_block("k", "k", random_spd(rng, 3));
  p.m0.set_block("f", "f", random_spd(rng, 4));
  p.m1 = BlockOperator::square(s);
  p.m2 = BlockOperator::square(s);
  p.a = BlockOperator::square(s);
  const Matrix g = random_matrix(rng, 4, 3);
  p.a.set_block("f", "k", Matrix(-g));
  p.a.set_block("k", "f", Matrix(g.transpose()));
  Vector push = Vector::Zero(7);
  push.head(3).setOnes();
  p.forcing.add(GaussianPulse{1.0, 0.1, 0.05, 0.0, 0.2}, push);
  p.horizon = 2.0;
  const BlockConservedQuantity q(p, "k", "f");
  const Trajectory tr = run(p, 0.01, Scheme::midpoint);
  const double q0 = q(tr.states[21], tr.auxiliaries[21]);
  for (std::size_t k = 21; k < tr.states.size(); ++k) {
    CHECK(std::abs(q(tr.states[k], tr.auxiliaries[k]) - q0) <= 1e-10 * q0);
    CHECK(std::abs(q(tr.states[k], tr.auxiliaries[k]) - tr.energy(static_cast<Index>(k))) <= 1e-10 * q0);
  }
  p.m0.set_block("k", "f", Matrix(Matrix::Ones(3, 4)));
  CHECK_THROWS_AS(BlockConservedQuantity(p, "k", "f"), PreconditionError);
}

TEST_CASE("condensed step matches the plain factorization") {
  for (const char* name : {"cosserat", "micromorphic", "microstretch"}) {
    CAPTURE(name);
    ModelSpec s;
    s.name = name;
    s.grid = Grid(3, 0.25);
    const Model m = build(s);
    const EvoProblem& p = m.problem;
    const EvoProblem q =
        EvoProblem::from_matrices(p.m0.to_dense(), p.m1.to_dense(), p.m2.to_dense(), p.a.to_dense());
    for (Scheme scheme : {Scheme::midpoint, Scheme::implicit_euler}) {
      Stepper fast(p, 0.01, scheme), plain(q, 0.01, scheme);
      CHECK(fast.condensed());
      CHECK_FALSE(plain.condensed());
      std::mt19937_64 rng(48);
      Vector u1 = Vector::Zero(p.size()), v1 = u1, u2 = u1, v2 = u1;
      for (int k = 0; k < 5; ++k) {
        const Vector f = testing::random_vector(rng, p.size());
        fast.step(u1, v1, f);
        plain.step(u2, v2, f);
        CHECK(fast.last_residual() <= 1e-12);
      }
      CHECK(max_abs(Matrix(u1 - u2)) <= 1e-11 * max_abs(u2));
      CHECK(max_abs(Matrix(v1 - v2)) <= 1e-11 * max_abs(v2));
    }
  }
}
