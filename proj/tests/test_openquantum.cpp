// Copyright 2026 The qabo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "qabo/openquantum.hpp"

namespace qabo {
namespace {

PSpinSystem qa_system(int n) {
  PSpinSystem s;
  s.n_spins = n;
  return s;
}

Schedule real_schedule(std::vector<double> theta, double tf, Transform tr) {
  ScheduleSpec s;
  s.family = Family::Real;
  s.n_params = int(theta.size());
  s.t_final = tf;
  s.transform = tr;
  return Schedule(s, std::move(theta));
}

Eigen::MatrixXd random_symmetric(Eigen::Index n, Rng& rng) {
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) m(i, j) = m(j, i) = uniform(rng, -1, 1);
  }
  return m;
}

DensityMatrix random_density(Eigen::Index n, Rng& rng) {
  Eigen::MatrixXcd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = cplx(uniform(rng, -1, 1), uniform(rng, -1, 1));
  }
  DensityMatrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

// Dissipator and Lamb-shift commutator assembled operator by operator:
// one jump operator per ordered pair of distinct retained levels and one
// collective operator carrying the diagonal matrix elements.
DensityMatrix explicit_lindblad(const Eigen::MatrixXd& h, const Eigen::MatrixXd& a, Eigen::Index levels,
                                const OhmicBath& bath, const LambShiftTable* lamb, const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  const Eigen::VectorXd e = eig.eigenvalues();
  const Eigen::MatrixXcd v = eig.eigenvectors().cast<cplx>();
  const auto d = h.rows();
  const Eigen::MatrixXcd ac = a.cast<cplx>();
  DensityMatrix out = DensityMatrix::Zero(d, d);
  Eigen::MatrixXcd h_ls = Eigen::MatrixXcd::Zero(d, d);
  auto add = [&](const Eigen::MatrixXcd& l, double rate, double shift) {
    const Eigen::MatrixXcd ll = l.adjoint() * l;
    out += rate * (l * rho * l.adjoint() - 0.5 * (ll * rho + rho * ll));
    h_ls += shift * ll;
  };
  Eigen::MatrixXcd l0 = Eigen::MatrixXcd::Zero(d, d);
  for (Eigen::Index i = 0; i < levels; ++i) {
    const cplx aii = (v.col(i).adjoint() * ac * v.col(i))(0, 0);
    l0 += aii * v.col(i) * v.col(i).adjoint();
    for (Eigen::Index j = 0; j < levels; ++j) {
      if (i == j) continue;
      const cplx aij = (v.col(i).adjoint() * ac * v.col(j))(0, 0);
      const double w = e[j] - e[i];
      add(aij * v.col(i) * v.col(j).adjoint(), relaxation_rate(bath, w), lamb ? (*lamb)(w) : 0.0);
    }
  }
  add(l0, relaxation_rate(bath, 0.0), lamb ? (*lamb)(0.0) : 0.0);
  out += cplx(0, -1) * (h_ls * rho - rho * h_ls);
  return out;
}

// Principal value by subtracting the pole and integrating the smooth
// remainder with composite Simpson panels on each side of the kink at 0.
double lamb_shift_reference(const OhmicBath& bath, double omega) {
  const double big_l = 20.0 * bath.omega_c;
  const double g = relaxation_rate(bath, omega);
  auto f = [&](double x) {
    if (std::abs(x - omega) < 1e-12) {
      const double h = 1e-5;
      return -(relaxation_rate(bath, omega + h) - relaxation_rate(bath, omega - h)) / (2 * h);
    }
    return (relaxation_rate(bath, x) - g) / (omega - x);
  };
  auto simpson = [&](double a, double b, int panels) {
    const double h = (b - a) / panels;
    double acc = f(a) + f(b);
    for (int k = 1; k < panels; ++k) acc += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
  };
  const double body = simpson(-big_l, 0.0, 400000) + simpson(0.0, big_l, 400000);
  return (body + g * std::log((big_l + omega) / (big_l - omega))) / (2.0 * std::numbers::pi);
}

TEST(Bath, RelaxationRateLimitsAndKms) {
  const OhmicBath bath;
  EXPECT_DOUBLE_EQ(relaxation_rate(bath, 0.0), 2.0 * std::numbers::pi * bath.eta / bath.beta);
  EXPECT_NEAR(relaxation_rate(bath, 1e-7), relaxation_rate(bath, 0.0), 1e-9 * relaxation_rate(bath, 0.0) * 100);
  for (double w : {0.01, 0.3, 1.0, 2.5, 7.0, 20.0, 60.0}) {
    const double lhs = relaxation_rate(bath, -w);
    const double rhs = std::exp(-bath.beta * w) * relaxation_rate(bath, w);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::abs(rhs)) << w;
  }
  OhmicBath closed = bath;
  closed.eta = 0.0;
  for (double w : {-3.0, 0.0, 4.0}) {
    EXPECT_EQ(relaxation_rate(closed, w), 0.0);
  }
  closed.beta = -1;
  EXPECT_THROW(closed.validate(), InvalidArgument);
}

TEST(Bath, LambShiftMatchesSubtractedQuadrature) {
  const OhmicBath bath;
  for (double w : {0.0, 0.37, -2.2, 3.1, 10.3, -41.0}) {
    const double ref = lamb_shift_reference(bath, w);
    EXPECT_NEAR(lamb_shift(bath, w), ref, 1e-6 * std::abs(ref)) << w;
    EXPECT_TRUE(std::isfinite(lamb_shift(bath, w)));
  }
  OhmicBath closed = bath;
  closed.eta = 0.0;
  EXPECT_EQ(lamb_shift(closed, 1.3), 0.0);
}

TEST(Bath, LambShiftTableTracksDirectQuadrature) {
  const OhmicBath bath;
  const auto table = shared_lamb_table(bath);
  EXPECT_EQ(table, shared_lamb_table(bath));
  double scale = 0.0;
  for (double w = -30.0; w <= 30.0; w += 0.5) scale = std::max(scale, std::abs(lamb_shift(bath, w)));
  for (double w : {-25.3, -3.3, -0.05, -0.003, 0.0, 0.002, 0.71, 4.4, 19.9, 140.0, 700.0}) {
    EXPECT_NEAR((*table)(w), lamb_shift(bath, w), 1e-4 * scale) << w;
  }
}

TEST(Lindblad, DiagonalCouplingOnlyDephases) {
  const Eigen::MatrixXd h = Eigen::Vector3d(-1.0, 0.5, 2.0).asDiagonal();
  const Eigen::MatrixXd a = Eigen::Vector3d(1.0, -1.0, 3.0).asDiagonal();
  const auto set = build_lindblad_set(h, a, 30);
  ASSERT_EQ(set.levels, 3u);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      if (i != j) {
        EXPECT_EQ(set.coupling(i, j), 0.0);
      }
    }
  }
  EXPECT_DOUBLE_EQ(set.frequency(0, 2), 3.0);
}

TEST(Lindblad, OperatorsSumToCoupling) {
  Rng rng(5);
  const Eigen::MatrixXd h = random_symmetric(6, rng), a = random_symmetric(6, rng);
  const auto set = build_lindblad_set(h, a, 6);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(6, 6);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      const Eigen::MatrixXd op = set.op(i, j);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(op);
      EXPECT_LE((svd.singularValues().array() > 1e-12).count(), 1);
      sum += op;
    }
  }
  EXPECT_LT((sum - a).cwiseAbs().maxCoeff(), 1e-10);
  const auto truncated = build_lindblad_set(h, a, 4);
  EXPECT_EQ(truncated.levels, 4u);
  EXPECT_EQ(truncated.coupling.rows(), 4);
  EXPECT_THROW(build_lindblad_set(h, Eigen::MatrixXd::Zero(5, 5), 3), InvalidArgument);
}

TEST(Lindblad, DegenerateLevelsAreReproducible) {
  const PSpinModel m(qa_system(6));
  // Pure driver: equally spaced, and the coupling has equal frequencies.
  const Eigen::MatrixXd h = m.dense_hamiltonian(qa_weights(1.0));
  const Eigen::MatrixXd a = m.total_sz().asDiagonal();
  const auto one = build_lindblad_set(h, a, 30), two = build_lindblad_set(h, a, 30);
  EXPECT_EQ(one.eigenvectors, two.eigenvectors);
  for (Eigen::Index j = 0; j < one.eigenvectors.cols(); ++j) {
    Eigen::Index pivot = 0;
    one.eigenvectors.col(j).cwiseAbs().maxCoeff(&pivot);
    EXPECT_GT(one.eigenvectors(pivot, j), 0.0);
  }
}

TEST(Lindblad, RightHandSideMatchesExplicitOperatorSum) {
  Rng rng(21);
  OhmicBath bath;
  bath.eta = 0.05;
  const LambShiftTable table(bath, 801);
  for (Eigen::Index levels : {5, 3}) {
    const Eigen::MatrixXd h = 3.0 * random_symmetric(5, rng), a = random_symmetric(5, rng);
    const DensityMatrix rho = random_density(5, rng);
    const auto set = build_lindblad_set(h, a, std::size_t(levels));
    for (const LambShiftTable* lamb : {static_cast<const LambShiftTable*>(nullptr), &table}) {
      DensityMatrix got = DensityMatrix::Zero(5, 5);
      detail::add_open_system_terms(set, bath, lamb, 1e-9, rho, got);
      const DensityMatrix want = explicit_lindblad(h, a, levels, bath, lamb, rho);
      EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-12) << "levels=" << levels;
      EXPECT_NEAR(got.trace().real(), 0.0, 1e-13);
      EXPECT_LT((got - got.adjoint()).cwiseAbs().maxCoeff(), 1e-13);
    }
  }
}

TEST(Ame, PureDephasingOfTwoLevels) {
  // H = diag(-1, 1) with A = S_z commutes, so populations are frozen and
  // the coherence decays at 2 gamma(0) while rotating at the level splitting.
  OhmicBath bath;
  bath.eta = 0.02;
  const Eigen::MatrixXd h = Eigen::Vector2d(-1.0, 1.0).asDiagonal();
  const Eigen::MatrixXd a = Eigen::Vector2d(1.0, -1.0).asDiagonal();
  const LindbladSet set = build_lindblad_set(h, a, 2);
  const SparseReal hs = h.sparseView();
  auto rhs = [&](double, const DensityMatrix& y, DensityMatrix& dy) {
    dy.setZero(2, 2);
    detail::add_commutator(hs, y, dy);
    detail::add_open_system_terms(set, bath, nullptr, 1e-9, y, dy);
  };
  DensityMatrix rho(2, 2);
  rho << 0.7, cplx(0.3, 0.2), cplx(0.3, -0.2), 0.3;
  const double t = 2.5;
  IntegratorOptions opt;
  opt.rtol = 1e-11;
  opt.atol = 1e-13;
  const DensityMatrix out = integrate_piecewise(rhs, rho, 0.0, t, {}, opt);
  const double g0 = relaxation_rate(bath, 0.0);
  const cplx expect = rho(0, 1) * std::exp(cplx(-2.0 * g0, 2.0) * t);
  EXPECT_NEAR(out(0, 0).real(), 0.7, 1e-10);
  EXPECT_NEAR(out(1, 1).real(), 0.3, 1e-10);
  EXPECT_NEAR(std::abs(out(0, 1) - expect), 0.0, 1e-9);
}

TEST(Ame, UnitaryLimitMatchesClosedSystem) {
  OhmicBath closed;
  closed.eta = 0.0;
  {
    const PSpinModel m(qa_system(8));
    const AnnealingControls c{{real_schedule({0.3, 0.8}, 2.0, Transform::OneMinus)}};
    const double ref = fidelity(evolve(m, c, 2.0), m);
    EXPECT_NEAR(fidelity_mixed(evolve_ame(m, c, 2.0, closed), m), ref, 1e-6);
  }
  {
    PSpinSystem sys = qa_system(10);
    sys.mode = PSpinMode::ReverseAnnealing;
    const PSpinModel m(sys);
    const AnnealingControls c{{real_schedule({0.4, 0.7}, 5.0, Transform::Identity),
                               real_schedule({0.2, 0.3}, 5.0, Transform::Identity)}};
    const double ref = fidelity(evolve(m, c, 5.0), m);
    EXPECT_NEAR(fidelity_mixed(evolve_ame(m, c, 5.0, closed), m), ref, 1e-6);
  }
}

TEST(Ame, TraceAndHermiticityAlongTrajectory) {
  const PSpinModel m(qa_system(6));
  const AnnealingControls c{{real_schedule({0.5}, 3.0, Transform::OneMinus)}};
  OhmicBath bath;
  bath.eta = 1e-2;
  AmeOptions opt;
  double worst_trace = 0.0, worst_herm = 0.0;
  std::size_t calls = 0;
  opt.observer = [&](double, const DensityMatrix& rho) {
    worst_trace = std::max(worst_trace, std::abs(rho.trace() - 1.0));
    worst_herm = std::max(worst_herm, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
    ++calls;
  };
  const DensityMatrix rho = evolve_ame(m, c, 3.0, bath, opt);
  EXPECT_GT(calls, 3u);
  EXPECT_LT(worst_trace, 1e-8);
  EXPECT_LT(worst_herm, 1e-9);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(rho);
  EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-8);
  // The open run differs from the closed one.
  EXPECT_GT(std::abs(fidelity_mixed(rho, m) - fidelity(evolve(m, c, 3.0), m)), 1e-6);
}

TEST(Ame, RebuildStrategiesAgree) {
  const PSpinModel m(qa_system(5));
  const AnnealingControls c{{real_schedule({0.5}, 2.0, Transform::OneMinus)}};
  OhmicBath bath;
  bath.eta = 5e-3;
  AmeOptions per_step, per_stage;
  per_stage.rebuild = LindbladRebuild::PerStage;
  const double a = fidelity_mixed(evolve_ame(m, c, 2.0, bath, per_step), m);
  const double b = fidelity_mixed(evolve_ame(m, c, 2.0, bath, per_stage), m);
  // Freezing the operators over a step is first order in the step size.
  EXPECT_NEAR(a, b, 1e-3);
}

TEST(Ame, RejectsBangBang) {
  PSpinSystem sys = qa_system(3);
  sys.mode = PSpinMode::BangBang;
  ScheduleSpec bb;
  bb.family = Family::BangBang;
  bb.n_params = 1;
  const Schedule s(bb, std::vector<double>{1.0});
  EXPECT_THROW(evolve_ame(PSpinModel(sys), AnnealingControls{{s, s}}, 1.0, OhmicBath{}), InvalidArgument);
}

TEST(Ame, MixedFidelity) {
  const PSpinModel m(qa_system(4));
  DensityMatrix gs = DensityMatrix::Zero(5, 5);
  gs(0, 0) = 1.0;
  EXPECT_EQ(fidelity_mixed(gs, m), 1.0);
  EXPECT_DOUBLE_EQ(fidelity_mixed(DensityMatrix::Identity(5, 5) / 5.0, m), 0.2);
  const StateVector psi = initial_state(m);
  EXPECT_NEAR(fidelity_mixed(psi * psi.adjoint(), m), fidelity(psi, m), 1e-15);
}

}  // namespace
}  // namespace qabo
