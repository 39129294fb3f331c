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

// Adiabatic master equation with collective dephasing (A = S_z):
//
//   d rho/dt = -i [H(t) + H_LS(t), rho] + D[rho]
//
// The Lindblad operators L_ab = |E_a><E_a| A |E_b><E_b| live in the
// instantaneous eigenbasis of H(t), truncated to the lowest n_levels states.
// Because every L_ab is a scaled |a><b|, both the Lamb shift and the
// dissipator reduce to elementwise updates of rho in that eigenbasis:
//
//   transitions  b -> a   rate G_ab = gamma(w_ba) |A_ab|^2,  a != b
//   dephasing    rho_ij  *= -gamma(0) (A_ii - A_jj)^2 / 2
//   Lamb shift   h_b      = sum_{a != b} S(w_ba) |A_ab|^2 + S(0) A_bb^2
//
// with w_ba = E_b - E_a and the Ohmic rate
//
//   gamma(w) = 2 pi eta w exp(-|w| / w_c) / (1 - exp(-beta w)).

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qabo/error.hpp"
#include "qabo/integrator.hpp"
#include "qabo/pspin.hpp"

namespace qabo {

using DensityMatrix = Eigen::MatrixXcd;

struct OhmicBath {
  double eta = 1e-4;
  double beta = 0.6366;  // T = 12 mK with 1 energy unit = 1 rad/ns
  double omega_c = 8.0 * std::numbers::pi;

  void validate() const {
    if (!(eta >= 0.0)) throw InvalidArgument("bath coupling eta must be nonnegative");
    if (!(beta > 0.0)) throw InvalidArgument("bath inverse temperature beta must be positive");
    if (!(omega_c > 0.0)) throw InvalidArgument("bath cutoff omega_c must be positive");
  }
};

inline double relaxation_rate(const OhmicBath& bath, double omega) {
  if (bath.eta == 0.0) return 0.0;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (omega == 0.0) return two_pi * bath.eta / bath.beta;
  return two_pi * bath.eta * omega * std::exp(-std::abs(omega) / bath.omega_c) /
         (-std::expm1(-bath.beta * omega));
}

// S(w) = (1 / 2 pi) PV int_{-L}^{L} gamma(x) / (w - x) dx, L = cutoff * w_c.
// The pole is folded into a symmetric interval, which leaves a smooth
// integrand; gamma's kink at x = 0 is kept on a panel boundary.
inline double lamb_shift(const OhmicBath& bath, double omega, double cutoff_factor = 20.0) {
  bath.validate();
  if (bath.eta == 0.0) return 0.0;
  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  constexpr unsigned depth = 18;
  constexpr double tol = 1e-11;
  const double big_l = cutoff_factor * bath.omega_c;
  auto gamma = [&](double x) { return relaxation_rate(bath, x); };
  auto integrate = [&](auto&& f, double a, double b) {
    if (b <= a) return 0.0;
    double err = 0.0;
    const double v = Quad::integrate(f, a, b, depth, tol, &err);
    if (!std::isfinite(v)) throw Error("Lamb-shift quadrature failed at omega = " + std::to_string(omega));
    return v;
  };
  auto split_at = [&](auto&& f, double a, double b, double kink) {
    if (kink > a && kink < b) return integrate(f, a, kink) + integrate(f, kink, b);
    return integrate(f, a, b);
  };

  double total = 0.0;
  auto regular = [&](double x) { return gamma(x) / (omega - x); };
  if (std::abs(omega) < big_l) {
    const double delta = big_l - std::abs(omega);
    auto folded = [&](double u) { return (gamma(omega - u) - gamma(omega + u)) / u; };
    total += split_at(folded, 0.0, delta, std::abs(omega));
    if (omega > 0.0) total += split_at(regular, -big_l, omega - delta, 0.0);
    if (omega < 0.0) total += split_at(regular, omega + delta, big_l, 0.0);
  } else {
    total += split_at(regular, -big_l, big_l, 0.0);
  }
  return total / (2.0 * std::numbers::pi);
}

// Lamb shift tabulated over [-L, L] on a grid uniform in asinh(w), which
// puts most points near w = 0 where S has a logarithmic cusp; linear in
// between. Outside the grid it falls back to direct quadrature.
class LambShiftTable {
 public:
  explicit LambShiftTable(OhmicBath bath, std::size_t points = 4001, double cutoff_factor = 20.0)
      : bath_(bath), cutoff_factor_(cutoff_factor), half_width_(cutoff_factor * bath.omega_c) {
    bath_.validate();
    if (points < 3) throw InvalidArgument("Lamb-shift table needs at least 3 points");
    values_.resize(points);
    u_max_ = std::asinh(half_width_);
    step_ = 2.0 * u_max_ / double(points - 1);
    for (std::size_t i = 0; i < points; ++i) {
      const double w = i + 1 == points ? half_width_ : std::sinh(-u_max_ + step_ * double(i));
      values_[i] = lamb_shift(bath_, w, cutoff_factor_);
    }
  }

  double operator()(double omega) const {
    if (bath_.eta == 0.0) return 0.0;
    if (std::abs(omega) >= half_width_) return lamb_shift(bath_, omega, cutoff_factor_);
    const double x = (std::asinh(omega) + u_max_) / step_;
    const std::size_t k = std::min(static_cast<std::size_t>(x), values_.size() - 2);
    const double lo = std::sinh(-u_max_ + step_ * double(k));
    const double hi = std::sinh(-u_max_ + step_ * double(k + 1));
    const double w = (omega - lo) / (hi - lo);
    return values_[k] + w * (values_[k + 1] - values_[k]);
  }

  const OhmicBath& bath() const { return bath_; }

 private:
  OhmicBath bath_;
  double cutoff_factor_;
  double half_width_;
  double u_max_ = 0.0;
  double step_ = 0.0;
  std::vector<double> values_;
};

// Process-wide cache keyed by bath parameters; tables are immutable once built.
inline std::shared_ptr<const LambShiftTable> shared_lamb_table(const OhmicBath& bath) {
  static std::mutex mutex;
  static std::map<std::tuple<double, double, double>, std::shared_ptr<const LambShiftTable>> cache;
  const auto key = std::make_tuple(bath.eta, bath.beta, bath.omega_c);
  std::lock_guard lock(mutex);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, std::make_shared<const LambShiftTable>(bath)).first;
  return it->second;
}

// Instantaneous eigenbasis and coupling-operator matrix elements.
// L_ab = coupling(a, b) |E_a><E_b| for a, b < levels; its Bohr frequency is
// w_ba = E_b - E_a.
struct LindbladSet {
  Eigen::VectorXd energies;      // ascending, all levels
  Eigen::MatrixXd eigenvectors;  // columns match energies
  Eigen::MatrixXd coupling;      // levels x levels
  std::size_t levels = 0;

  double frequency(std::size_t a, std::size_t b) const {
    return energies[static_cast<Eigen::Index>(b)] - energies[static_cast<Eigen::Index>(a)];
  }

  Eigen::MatrixXd op(std::size_t a, std::size_t b) const {
    const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
    return coupling(ia, ib) * eigenvectors.col(ia) * eigenvectors.col(ib).transpose();
  }
};

// Eigenvalues ascending; each eigenvector's largest-magnitude component
// (first on ties) is made positive so the set is reproducible.
inline LindbladSet build_lindblad_set(const Eigen::MatrixXd& h, const Eigen::MatrixXd& a,
                                      std::size_t n_levels) {
  if (h.rows() != h.cols() || a.rows() != h.rows() || a.cols() != h.cols()) {
    throw InvalidArgument("Hamiltonian and coupling operator must be square and equal in size");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  if (eig.info() != Eigen::Success) throw Error("eigensolver failed while building Lindblad operators");
  LindbladSet set;
  set.energies = eig.eigenvalues();
  set.eigenvectors = eig.eigenvectors();
  for (Eigen::Index j = 0; j < set.eigenvectors.cols(); ++j) {
    Eigen::Index pivot = 0;
    set.eigenvectors.col(j).cwiseAbs().maxCoeff(&pivot);
    if (set.eigenvectors(pivot, j) < 0.0) set.eigenvectors.col(j) *= -1.0;
  }
  set.levels = std::min<std::size_t>(n_levels, static_cast<std::size_t>(h.rows()));
  const auto n = static_cast<Eigen::Index>(set.levels);
  const auto vn = set.eigenvectors.leftCols(n);
  set.coupling = vn.transpose() * a * vn;
  return set;
}

enum class LindbladRebuild { PerStep, PerStage };

inline IntegratorOptions ame_integrator_defaults() {
  IntegratorOptions o;
  o.rtol = 1e-7;
  o.atol = 1e-9;
  return o;
}

struct AmeOptions {
  std::size_t n_levels = 30;
  bool lamb_shift = true;
  LindbladRebuild rebuild = LindbladRebuild::PerStep;
  IntegratorOptions integrator = ame_integrator_defaults();
  // Tabulated Lamb shift; the process-wide cache is used when null.
  std::shared_ptr<const LambShiftTable> lamb_table;
  double positivity_tolerance = 1e-6;
  double degeneracy_tolerance = 1e-9;
  std::function<void(double, const DensityMatrix&)> observer;
};

namespace detail {

// Transition rates and level shifts of one Lindblad set.
struct OpenSystemRates {
  Eigen::MatrixXd rate;   // rate(a, b): b -> a, levels x levels
  Eigen::VectorXd decay;  // total outflow per level, zero past the retained levels
  Eigen::VectorXd shift;
  Eigen::VectorXd diag_a;
  double g0 = 0.0;
};

inline OpenSystemRates open_system_rates(const LindbladSet& set, const OhmicBath& bath, const LambShiftTable* lamb,
                                         double degeneracy_tol) {
  const auto d = set.energies.size();
  const auto n = static_cast<Eigen::Index>(set.levels);
  OpenSystemRates r;
  r.g0 = relaxation_rate(bath, 0.0);
  const double s0 = lamb ? (*lamb)(0.0) : 0.0;
  r.rate = Eigen::MatrixXd::Zero(n, n);
  r.decay = Eigen::VectorXd::Zero(d);
  r.shift = Eigen::VectorXd::Zero(d);
  r.diag_a = Eigen::VectorXd::Zero(d);
  for (Eigen::Index b = 0; b < n; ++b) {
    r.diag_a[b] = set.coupling(b, b);
    r.shift[b] = s0 * r.diag_a[b] * r.diag_a[b];
    for (Eigen::Index a = 0; a < n; ++a) {
      if (a == b) continue;
      const double w = set.frequency(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
      const bool degenerate = std::abs(w) < degeneracy_tol;
      const double weight = set.coupling(a, b) * set.coupling(a, b);
      r.rate(a, b) = weight * (degenerate ? r.g0 : relaxation_rate(bath, w));
      r.decay[b] += r.rate(a, b);
      if (lamb) r.shift[b] += weight * (degenerate ? s0 : (*lamb)(w));
    }
  }
  return r;
}

// Real matrix times complex matrix, as two real products.
inline Eigen::MatrixXcd mixed_product(const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows(), b.cols());
  out.real() = a * b.real();
  out.imag() = a * b.imag();
  return out;
}

inline Eigen::MatrixXcd mixed_product(const Eigen::MatrixXcd& a, const Eigen::Ref<const Eigen::MatrixXd>& b) {
  Eigen::MatrixXcd out(a.rows(), b.cols());
  out.real() = a.real() * b;
  out.imag() = a.imag() * b;
  return out;
}

// Dissipator plus Lamb-shift commutator for one Lindblad set, added to drho.
// Only rows/columns touching the retained levels are nonzero in the
// eigenbasis, so the basis changes cost O(levels * dim^2).
inline void add_open_system_terms(const LindbladSet& set, const OpenSystemRates& r, const DensityMatrix& rho,
                                  DensityMatrix& drho) {
  const auto d = rho.rows();
  const auto n = static_cast<Eigen::Index>(set.levels);
  const auto& v = set.eigenvectors;
  const auto vn = v.leftCols(n);

  // Rows 0..n-1 of rho in the eigenbasis.
  const Eigen::MatrixXcd rows = mixed_product(mixed_product(vn.transpose(), rho), v);

  Eigen::MatrixXcd m(n, d);
  const cplx minus_i(0.0, -1.0);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double da = r.diag_a[i] - r.diag_a[j];
      const double damp = 0.5 * (r.decay[i] + r.decay[j]) + 0.5 * r.g0 * da * da;
      m(i, j) = (minus_i * (r.shift[i] - r.shift[j]) - damp) * rows(i, j);
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    cplx gain = 0.0;
    for (Eigen::Index b = 0; b < n; ++b) gain += r.rate(i, b) * rows(b, b);
    m(i, i) += gain;
  }

  // Back to the lab frame: V M V^T with M Hermitian and nonzero only where
  // a row or column index is below n.
  drho += mixed_product(vn, mixed_product(m, v.transpose()));
  if (n < d) {
    const auto vm = v.rightCols(d - n);
    const Eigen::MatrixXcd lower = m.rightCols(d - n).adjoint();  // (d - n) x n
    drho += mixed_product(mixed_product(vm, lower), vn.transpose());
  }
}

inline void add_open_system_terms(const LindbladSet& set, const OhmicBath& bath, const LambShiftTable* lamb,
                                  double degeneracy_tol, const DensityMatrix& rho, DensityMatrix& drho) {
  add_open_system_terms(set, open_system_rates(set, bath, lamb, degeneracy_tol), rho, drho);
}

// drho += -i [H, rho] for a sparse real H.
inline void add_commutator(const SparseReal& h, const DensityMatrix& rho, DensityMatrix& drho) {
  const cplx minus_i(0.0, -1.0);
  DensityMatrix hr = h * rho;  // H rho
  // rho H = (H rho^dagger)^dagger = (H rho)^dagger for Hermitian rho.
  drho += minus_i * (hr - hr.adjoint());
}

}  // namespace detail

// Evolves |psi0><psi0| under the adiabatic master equation.
inline DensityMatrix evolve_ame(const PSpinModel& model, const AnnealingControls& controls,
                                double t_final, const OhmicBath& bath, const AmeOptions& opt = {}) {
  bath.validate();
  const auto mode = model.system().mode;
  if (mode == PSpinMode::BangBang) throw InvalidArgument("bang-bang protocols are not supported by the master equation");
  detail::check_controls(model, controls, t_final);

  const StateVector psi0 = initial_state(model);
  DensityMatrix rho = psi0 * psi0.adjoint();

  const bool open = bath.eta > 0.0;
  std::shared_ptr<const LambShiftTable> lamb = opt.lamb_table;
  if (open && opt.lamb_shift && !lamb) lamb = shared_lamb_table(bath);
  const LambShiftTable* lamb_ptr = (open && opt.lamb_shift) ? lamb.get() : nullptr;

  const Eigen::MatrixXd coupling = model.total_sz().asDiagonal();
  auto lindblad_at = [&](double t) {
    return build_lindblad_set(model.dense_hamiltonian(controls.weights(mode, t)), coupling, opt.n_levels);
  };
  std::optional<LindbladSet> frozen;
  std::optional<detail::OpenSystemRates> frozen_rates;

  auto rhs = [&](double t, const DensityMatrix& y, DensityMatrix& dy) {
    const SparseReal h = model.hamiltonian(controls.weights(mode, t));
    dy.setZero(y.rows(), y.cols());
    detail::add_commutator(h, y, dy);
    if (!open) return;
    if (opt.rebuild == LindbladRebuild::PerStage) {
      const LindbladSet set = lindblad_at(t);
      detail::add_open_system_terms(set, bath, lamb_ptr, opt.degeneracy_tolerance, y, dy);
    } else {
      detail::add_open_system_terms(*frozen, *frozen_rates, y, dy);
    }
  };
  auto observer = [&](double t, const DensityMatrix& y) {
    if (open && opt.rebuild == LindbladRebuild::PerStep && t < t_final) {
      frozen = lindblad_at(t);
      frozen_rates = detail::open_system_rates(*frozen, bath, lamb_ptr, opt.degeneracy_tolerance);
    }
    if (opt.observer) opt.observer(t, y);
  };
  const auto cuts = controls.breakpoints();
  rho = integrate_piecewise(rhs, std::move(rho), 0.0, t_final, cuts, opt.integrator, observer);

  const double trace = rho.trace().real();
  if (std::abs(trace - 1.0) > 1e-6) {
    throw IntegratorError("master equation lost trace: tr(rho) = " + std::to_string(trace), t_final);
  }
  const DensityMatrix herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(herm, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -opt.positivity_tolerance) {
    throw IntegratorError("density matrix lost positivity: min eigenvalue " +
                              std::to_string(eig.eigenvalues().minCoeff()),
                          t_final);
  }
  return rho;
}

inline double fidelity_mixed(const DensityMatrix& rho, const PSpinModel& model) {
  const auto g = static_cast<Eigen::Index>(model.ground_index());
  return std::clamp(rho(g, g).real(), 0.0, 1.0);
}

}  // namespace qabo
