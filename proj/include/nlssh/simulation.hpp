#pragma once

// One complete run: pump evolution, biphoton recursion and per-step spectral
// diagnostics, reduced to scalar observables.

#include <optional>
#include <string_view>
#include <vector>

#include "biphoton.hpp"
#include "dynamics.hpp"
#include "lattice.hpp"
#include "spectral.hpp"

namespace nlssh {

/// Which zero modes the topological weight projects onto.
enum class ZeroModeSource {
  instantaneous,  // zero modes of each step's signal/idler Hamiltonians
  linear,         // zero modes of the zero-intensity Hamiltonians
};

enum class WeightDefinition { zero_pair, extended };

constexpr std::string_view to_string(ZeroModeSource s) {
  return s == ZeroModeSource::instantaneous ? "instantaneous" : "linear";
}
constexpr std::string_view to_string(WeightDefinition w) {
  return w == WeightDefinition::zero_pair ? "zero_pair" : "extended";
}

struct RunSettings {
  IntegratorSpec integrator;
  int injection_site = -1;
  double power = 30.0;  // W
  ZeroModeSource zero_modes = ZeroModeSource::instantaneous;
  WeightDefinition weight = WeightDefinition::zero_pair;
  double isolation_factor = kDefaultIsolationFactor;
};

struct StepObservables {
  int step = 0;
  double z = 0.0;
  double pump_total = 0.0;       // W
  double pump_defect_fraction = 0.0;
  double biphoton_defect_fraction = 0.0;
  double frob_norm = 0.0;
  double topo_weight = 0.0;
  double gap_top = 0.0;          // pump spectrum, 1/m
  int n_isolated = 0;            // pump spectrum
};

/// Everything the per-step observer may look at.
struct RunStepView {
  const StepObservables& observables;
  const PumpState& pump;
  const SpectrumSnapshot& pump_spectrum;
  const BiphotonStepView& biphoton;
};

inline double weight_of(const BiphotonState& m, const SpectrumSnapshot& signal,
                        const SpectrumSnapshot& idler, WeightDefinition def) {
  return def == WeightDefinition::zero_pair ? topological_weight(m, signal, idler)
                                            : extended_weight(m, signal, idler);
}

template <class Observer>
std::vector<StepObservables> simulate(const Lattice& lattice, const RunSettings& settings,
                                      Observer&& observe) {
  const PumpState initial = inject_pump(lattice.config(), settings.injection_site, settings.power);
  const PumpTrajectory trajectory = evolve_pump(initial, settings.integrator, lattice);

  std::optional<SpectrumSnapshot> linear_signal, linear_idler;
  if (settings.zero_modes == ZeroModeSource::linear) {
    linear_signal = diagonalize(chain_hamiltonian(lattice.linear_couplings(Species::signal)));
    linear_idler = diagonalize(chain_hamiltonian(lattice.linear_couplings(Species::idler)));
  }

  std::vector<StepObservables> out;
  out.reserve(trajectory.states.size());
  evolve_biphoton(trajectory, lattice, settings.integrator, [&](const BiphotonStepView& v) {
    const auto& pump = trajectory.states[static_cast<std::size_t>(v.step)];
    const SpectrumSnapshot ps =
        diagonalize(trajectory.hamiltonian(v.step, Species::pump), v.step, settings.isolation_factor);
    StepObservables o;
    o.step = v.step;
    o.z = v.z;
    const Eigen::VectorXd in = pump.intensities();
    o.pump_total = in.sum();
    o.pump_defect_fraction = defect_fraction(in);
    o.biphoton_defect_fraction = defect_fraction(site_populations(v.state));
    o.frob_norm = v.state.frobenius_norm();
    if (linear_signal)
      o.topo_weight = weight_of(v.state, *linear_signal, *linear_idler, settings.weight);
    else
      o.topo_weight = weight_of(v.state, v.signal, v.idler, settings.weight);
    o.gap_top = gap_top(ps);
    o.n_isolated = static_cast<int>(ps.isolated.size());
    out.push_back(o);
    observe(RunStepView{out.back(), pump, ps, v});
  });
  return out;
}

inline std::vector<StepObservables> simulate(const Lattice& lattice, const RunSettings& settings) {
  return simulate(lattice, settings, [](const RunStepView&) {});
}

}  // namespace nlssh
