#pragma once

// Two-photon amplitude matrix M (row = idler site, column = signal site)
// under frozen per-step hopping unitaries plus the SFWM pair source.

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "dynamics.hpp"
#include "errors.hpp"
#include "spectral.hpp"

namespace nlssh {

struct BiphotonState {
  Eigen::MatrixXcd amplitudes;

  static BiphotonState zero(int n) { return {Eigen::MatrixXcd::Zero(n, n)}; }
  int size() const { return static_cast<int>(amplitudes.rows()); }
  double frobenius_norm() const { return amplitudes.norm(); }
};

/// exp(-i H dz) from an existing eigendecomposition of H.
inline Eigen::MatrixXcd propagator(const SpectrumSnapshot& s, double dz) {
  const Eigen::VectorXd phase = -dz * s.eigenvalues;
  const Eigen::MatrixXd& v = s.eigenvectors;
  const Eigen::MatrixXd re = v * phase.array().cos().matrix().asDiagonal() * v.transpose();
  const Eigen::MatrixXd im = v * phase.array().sin().matrix().asDiagonal() * v.transpose();
  Eigen::MatrixXcd u(re.rows(), re.cols());
  u.real() = re;
  u.imag() = im;
  return u;
}

inline Eigen::MatrixXcd propagator(const HamiltonianMatrix& h, double dz) {
  return propagator(diagonalize(h), dz);
}

struct StepPropagators {
  Eigen::MatrixXcd idler;
  Eigen::MatrixXcd signal;
};

/// max |(U^dagger U - 1)_{jk}|
inline double unitarity_error(const Eigen::MatrixXcd& u) {
  const Eigen::MatrixXcd d = u.adjoint() * u - Eigen::MatrixXcd::Identity(u.rows(), u.cols());
  return d.cwiseAbs().maxCoeff();
}

/// M <- U_i M U_s^T - i gamma dz diag(alpha_j^2)
inline BiphotonState step_biphoton(const BiphotonState& m, const StepPropagators& props,
                                   const PumpState& pump, double gamma, double dz) {
  const auto n = m.amplitudes.rows();
  if (m.amplitudes.cols() != n || props.idler.rows() != n || props.idler.cols() != n ||
      props.signal.rows() != n || props.signal.cols() != n || pump.amplitudes.size() != n)
    throw ShapeError("step_biphoton: dimension mismatch");
  BiphotonState out;
  out.amplitudes.noalias() = props.idler * m.amplitudes * props.signal.transpose();
  const cplx source(0.0, -gamma * dz);
  for (Eigen::Index j = 0; j < n; ++j) {
    const cplx a = pump.amplitudes[j];
    out.amplitudes(j, j) += source * (a * a);
  }
  return out;
}

/// Marginal photon distribution, averaged over idler and signal:
/// p_j = (sum_k |m_jk|^2 + sum_k |m_kj|^2) / (2 ||M||_F^2). All zero when M = 0.
inline Eigen::VectorXd site_populations(const BiphotonState& m) {
  const Eigen::MatrixXd p = m.amplitudes.cwiseAbs2();
  const double total = p.sum();
  if (total <= 0.0) return Eigen::VectorXd::Zero(m.amplitudes.rows());
  return (p.rowwise().sum() + p.colwise().sum().transpose()) / (2.0 * total);
}

/// |phi_i^T M phi_s|^2 / ||M||_F^2, zero for an empty state.
inline double topological_weight(const BiphotonState& m, const Eigen::VectorXd& idler_mode,
                                 const Eigen::VectorXd& signal_mode) {
  if (idler_mode.size() != m.amplitudes.rows() || signal_mode.size() != m.amplitudes.cols())
    throw ShapeError("topological_weight: mode dimension mismatch");
  const double norm2 = m.amplitudes.squaredNorm();
  if (norm2 <= 0.0) return 0.0;
  const cplx amp = idler_mode.cast<cplx>().dot(m.amplitudes * signal_mode.cast<cplx>());
  return std::norm(amp) / norm2;
}

inline double topological_weight(const BiphotonState& m, const SpectrumSnapshot& signal,
                                 const SpectrumSnapshot& idler) {
  return topological_weight(m, idler.mode(ModeTag::zero), signal.mode(ModeTag::zero));
}

/// Zero mode plus whichever extremal modes are isolated.
inline std::vector<int> localized_mode_set(const SpectrumSnapshot& s) {
  std::vector<int> out{s.zero_index};
  for (auto t : {ModeTag::min, ModeTag::max}) {
    const int k = s.index(t);
    if (k != s.zero_index && s.is_isolated(k)) out.push_back(k);
  }
  return out;
}

/// Population in all (idler, signal) pairs drawn from the localized mode sets.
inline double extended_weight(const BiphotonState& m, const SpectrumSnapshot& signal,
                              const SpectrumSnapshot& idler) {
  const double norm2 = m.amplitudes.squaredNorm();
  if (norm2 <= 0.0) return 0.0;
  double w = 0.0;
  for (int a : localized_mode_set(idler))
    for (int b : localized_mode_set(signal))
      w += std::norm(idler.eigenvectors.col(a).cast<cplx>().dot(
          m.amplitudes * signal.eigenvectors.col(b).cast<cplx>()));
  return w / norm2;
}

/// Read-only view handed to evolve_biphoton observers at every step.
struct BiphotonStepView {
  int step;
  double z;
  const BiphotonState& state;
  const SpectrumSnapshot& signal;
  const SpectrumSnapshot& idler;
};

/// Runs the biphoton recursion from M = 0 along a pump trajectory. Step s uses
/// the signal/idler Hamiltonians and pump amplitudes of step s, frozen over dz.
/// The observer sees steps 0..n_steps with the spectra of that step.
template <class Observer>
void evolve_biphoton(const PumpTrajectory& trajectory, const Lattice& lattice,
                     const IntegratorSpec& spec, Observer&& observe) {
  const int n = lattice.n_sites();
  const double gamma = lattice.config().gamma;
  BiphotonState m = BiphotonState::zero(n);
  auto spectra = [&](int step) {
    return std::pair{diagonalize(trajectory.hamiltonian(step, Species::signal), step),
                     diagonalize(trajectory.hamiltonian(step, Species::idler), step)};
  };
  auto [sig, idl] = spectra(0);
  observe(BiphotonStepView{0, trajectory.states[0].z, m, sig, idl});
  for (int s = 0; s < trajectory.n_steps(); ++s) {
    const StepPropagators props{propagator(idl, spec.dz), propagator(sig, spec.dz)};
    m = step_biphoton(m, props, trajectory.states[static_cast<std::size_t>(s)], gamma, spec.dz);
    std::tie(sig, idl) = spectra(s + 1);
    observe(BiphotonStepView{s + 1, trajectory.states[static_cast<std::size_t>(s + 1)].z, m, sig, idl});
  }
}

/// Every per-step state. Memory grows as n_steps * n_sites^2; meant for small runs.
inline std::vector<BiphotonState> evolve_biphoton(const PumpTrajectory& trajectory,
                                                  const Lattice& lattice,
                                                  const IntegratorSpec& spec) {
  std::vector<BiphotonState> out;
  out.reserve(trajectory.states.size());
  evolve_biphoton(trajectory, lattice, spec,
                  [&](const BiphotonStepView& v) { out.push_back(v.state); });
  return out;
}

}  // namespace nlssh
