#pragma once

// Classical pump propagation along the waveguides:
//   i d(alpha)/dz = H(|alpha|^2) alpha
// with H the real-symmetric chain matrix of the pump couplings.

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "lattice.hpp"

namespace nlssh {

using cplx = std::complex<double>;

struct PumpState {
  Eigen::VectorXcd amplitudes;  // sqrt(W), storage offset j + N
  double z = 0.0;               // metres

  Eigen::VectorXd intensities() const { return amplitudes.cwiseAbs2(); }
  double total_intensity() const { return amplitudes.squaredNorm(); }
};

struct HamiltonianMatrix {
  Species species = Species::pump;
  Eigen::MatrixXd matrix;
};

/// Dense chain matrix: H(j, j+1) = H(j+1, j) = v_j, zero diagonal.
inline HamiltonianMatrix chain_hamiltonian(const CouplingProfile& p) {
  const int n = p.n_sites;
  HamiltonianMatrix h{p.species, Eigen::MatrixXd::Zero(n, n)};
  for (std::size_t b = 0; b < p.values.size(); ++b) {
    const int i = static_cast<int>(b);
    const int k = (i + 1) % n;
    h.matrix(i, k) = p.values[b];
    h.matrix(k, i) = p.values[b];
  }
  return h;
}

/// out = H x without materialising H.
inline void apply_chain(const CouplingProfile& p, const Eigen::VectorXcd& x, Eigen::VectorXcd& out) {
  const int n = p.n_sites;
  out.setZero(n);
  for (std::size_t b = 0; b < p.values.size(); ++b) {
    const int i = static_cast<int>(b);
    const int k = (i + 1) % n;
    out[i] += p.values[b] * x[k];
    out[k] += p.values[b] * x[i];
  }
}

/// One classical fourth-order Runge-Kutta step of dy/dz = rhs(y).
template <class Rhs>
Eigen::VectorXcd rk4_step(const Rhs& rhs, const Eigen::VectorXcd& y, double h) {
  const Eigen::VectorXcd k1 = rhs(y);
  const Eigen::VectorXcd k2 = rhs(y + (0.5 * h) * k1);
  const Eigen::VectorXcd k3 = rhs(y + (0.5 * h) * k2);
  const Eigen::VectorXcd k4 = rhs(y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

enum class IntegratorMethod { rk4_fixed };

/// max(v) * (dz / substeps) must stay below this.
inline constexpr double kStabilityLimit = 0.1;

/// Fixed-step RK4. Each recorded step of length dz is integrated with
/// `substeps` equal inner RK4 steps.
struct IntegratorSpec {
  IntegratorMethod method = IntegratorMethod::rk4_fixed;
  double dz = 2e-6;
  int n_steps = 1000;
  int substeps = 8;

  double inner_step() const { return dz / substeps; }

  void validate() const {
    if (!(dz > 0.0) || !std::isfinite(dz)) throw ParameterError("dz must be a positive length");
    if (n_steps < 0) throw ParameterError("n_steps must be >= 0");
    if (substeps < 1) throw ParameterError("substeps must be >= 1");
  }
};

inline PumpState inject_pump(const LatticeConfig& cfg, int site, double power) {
  if (!(power >= 0.0) || !std::isfinite(power))
    throw ParameterError("pump power must be >= 0 W, got " + std::to_string(power));
  PumpState s{Eigen::VectorXcd::Zero(cfg.n_sites), 0.0};
  s.amplitudes[site_offset(cfg, site)] = std::sqrt(power);
  return s;
}

inline HamiltonianMatrix species_hamiltonian(const PumpState& state, const Lattice& lattice,
                                             Species sp) {
  if (state.amplitudes.size() != lattice.n_sites())
    throw ShapeError("pump state size does not match lattice");
  return chain_hamiltonian(lattice.couplings(sp, state.intensities()));
}

inline HamiltonianMatrix pump_hamiltonian(const PumpState& state, const Lattice& lattice) {
  return species_hamiltonian(state, lattice, Species::pump);
}

/// Rejects runs whose worst-case pump coupling breaks the step guard.
inline void check_stability(const Lattice& lattice, const IntegratorSpec& spec, double power) {
  spec.validate();
  const double vh = lattice.coupling_bound(Species::pump, power) * spec.inner_step();
  if (!(vh < kStabilityLimit))
    throw ConfigurationError("stability guard: max(v) * dz / substeps = " + std::to_string(vh) +
                             " must be < " + std::to_string(kStabilityLimit) +
                             "; reduce integrator.dz_m or raise integrator.substeps");
}

inline PumpState step_pump(const PumpState& state, const IntegratorSpec& spec,
                           const Lattice& lattice) {
  spec.validate();
  if (state.amplitudes.size() != lattice.n_sites())
    throw ShapeError("pump state size does not match lattice");
  const double h = spec.inner_step();
  const double vmax = lattice.couplings(Species::pump, state.intensities()).max();
  if (!(vmax * h < kStabilityLimit))
    throw ConfigurationError("stability guard violated at z = " + std::to_string(state.z) +
                             " m: max(v) * h = " + std::to_string(vmax * h));

  Eigen::VectorXcd hx;
  auto rhs = [&](const Eigen::VectorXcd& a) -> Eigen::VectorXcd {
    apply_chain(lattice.couplings(Species::pump, a.cwiseAbs2()), a, hx);
    return cplx(0.0, -1.0) * hx;
  };
  PumpState next{state.amplitudes, state.z};
  for (int k = 0; k < spec.substeps; ++k) next.amplitudes = rk4_step(rhs, next.amplitudes, h);
  next.z = state.z + spec.dz;
  return next;
}

/// Pump states at steps 0..n_steps together with the instantaneous coupling
/// tables of all three species (signal/idler see the same pump intensities).
struct PumpTrajectory {
  std::vector<PumpState> states;
  std::array<std::vector<CouplingProfile>, 3> couplings;

  int n_steps() const { return static_cast<int>(states.size()) - 1; }

  const CouplingProfile& profile(int step, Species sp) const {
    return couplings[static_cast<std::size_t>(sp)].at(static_cast<std::size_t>(step));
  }
  HamiltonianMatrix hamiltonian(int step, Species sp) const {
    return chain_hamiltonian(profile(step, sp));
  }

  /// rows = step, columns = site offset.
  Eigen::MatrixXd intensity_map() const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(states.size()), states.front().amplitudes.size());
    for (std::size_t s = 0; s < states.size(); ++s)
      m.row(static_cast<Eigen::Index>(s)) = states[s].intensities().transpose();
    return m;
  }
};

inline PumpTrajectory evolve_pump(const PumpState& initial, const IntegratorSpec& spec,
                                  const Lattice& lattice) {
  spec.validate();
  check_stability(lattice, spec, initial.total_intensity());
  PumpTrajectory t;
  t.states.reserve(static_cast<std::size_t>(spec.n_steps) + 1);
  for (auto& c : t.couplings) c.reserve(static_cast<std::size_t>(spec.n_steps) + 1);

  auto record = [&](PumpState s) {
    const Eigen::VectorXd in = s.intensities();
    for (auto sp : kAllSpecies)
      t.couplings[static_cast<std::size_t>(sp)].push_back(lattice.couplings(sp, in));
    t.states.push_back(std::move(s));
  };
  record(initial);
  for (int k = 0; k < spec.n_steps; ++k) {
    PumpState next = step_pump(t.states.back(), spec, lattice);
    if (!next.amplitudes.allFinite())
      throw ConfigurationError("pump evolution produced non-finite amplitudes at step " +
                               std::to_string(k + 1));
    record(std::move(next));
  }
  return t;
}

/// Fraction of total intensity on sites |j| <= radius.
inline double defect_fraction(const Eigen::VectorXd& intensities, int radius = 2) {
  const double total = intensities.sum();
  if (total <= 0.0) return 0.0;
  const int n = static_cast<int>(intensities.size()) / 2;
  double inner = 0.0;
  for (int j = -radius; j <= radius; ++j) inner += intensities[j + n];
  return inner / total;
}

}  // namespace nlssh
