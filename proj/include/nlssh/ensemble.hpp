#pragma once

// Power sweeps and disorder ensembles. Every cell is an independent run,
// seeded from its grid coordinates, so results do not depend on the number
// of workers or the order in which cells finish.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "lattice.hpp"
#include "seeding.hpp"
#include "simulation.hpp"

namespace nlssh {

/// Seed of one disorder realization: splitmix64 chain over
/// (base, bits(eta), bits(power), index).
inline std::uint64_t derive_seed(std::uint64_t base, double eta, double power,
                                 std::uint64_t index) {
  std::uint64_t h = splitmix64(base);
  h = mix_seed(h, double_bits(eta));
  h = mix_seed(h, double_bits(power));
  return mix_seed(h, index);
}

inline unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

/// Runs fn(i) for i in [0, n) on up to `workers` threads. fn must not throw.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
}

enum class Observable { topo_weight, gap_top, pump_intensity, biphoton_population };

inline constexpr std::array<Observable, 4> kAllObservables{
    Observable::topo_weight, Observable::gap_top, Observable::pump_intensity,
    Observable::biphoton_population};

constexpr std::string_view to_string(Observable o) {
  switch (o) {
    case Observable::topo_weight: return "topo_weight";
    case Observable::gap_top: return "gap_top";
    case Observable::pump_intensity: return "pump_intensity";
    case Observable::biphoton_population: return "biphoton_population";
  }
  return "?";
}

inline std::optional<Observable> parse_observable(std::string_view s) {
  for (auto o : kAllObservables)
    if (to_string(o) == s) return o;
  return std::nullopt;
}

/// pump_intensity and biphoton_population are reduced to the fraction found
/// on the defect region |j| <= 2.
inline double observable_value(const StepObservables& s, Observable o) {
  switch (o) {
    case Observable::topo_weight: return s.topo_weight;
    case Observable::gap_top: return s.gap_top;
    case Observable::pump_intensity: return s.pump_defect_fraction;
    case Observable::biphoton_population: return s.biphoton_defect_fraction;
  }
  return 0.0;
}

inline void check_power_grid(const std::vector<double>& powers) {
  if (powers.empty()) throw ParameterError("power grid is empty");
  for (std::size_t i = 0; i < powers.size(); ++i) {
    if (!(powers[i] >= 0.0) || !std::isfinite(powers[i]))
      throw ParameterError("powers must be finite and >= 0");
    if (i > 0 && !(powers[i] > powers[i - 1]))
      throw ParameterError("powers must be strictly increasing");
  }
}

struct SweepPlan {
  std::vector<double> powers;
  LatticeConfig lattice;
  RunSettings run;  // run.power is replaced per cell
  std::vector<Observable> observables{Observable::topo_weight, Observable::gap_top};

  void validate() const {
    check_power_grid(powers);
    lattice.validate();
    run.integrator.validate();
    if (observables.empty()) throw ParameterError("sweep needs at least one observable");
  }
};

/// A finished cell holds its per-step record; a failed one holds the reason.
struct CellResult {
  std::optional<std::vector<StepObservables>> steps;
  std::string error;

  bool ok() const { return steps.has_value(); }
};

inline CellResult run_cell(const Lattice& lattice, const RunSettings& settings) {
  try {
    return {simulate(lattice, settings), {}};
  } catch (const std::exception& e) {
    return {std::nullopt, e.what()};
  }
}

struct SweepResult {
  std::vector<double> powers;
  int n_steps = 0;
  std::vector<CellResult> cells;  // one per power

  /// Row of one observable for power index p; nullopt for a failed cell.
  std::optional<std::vector<double>> row(std::size_t p, Observable o) const {
    const auto& c = cells.at(p);
    if (!c.ok()) return std::nullopt;
    std::vector<double> r;
    r.reserve(c.steps->size());
    for (const auto& s : *c.steps) r.push_back(observable_value(s, o));
    return r;
  }
  bool all_ok() const {
    return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.ok(); });
  }
};

inline SweepResult run_power_sweep(const SweepPlan& plan, unsigned workers = default_workers()) {
  plan.validate();
  const Lattice lattice(plan.lattice);
  SweepResult r{plan.powers, plan.run.integrator.n_steps, std::vector<CellResult>(plan.powers.size())};
  parallel_for(plan.powers.size(), workers, [&](std::size_t i) {
    RunSettings s = plan.run;
    s.power = plan.powers[i];
    r.cells[i] = run_cell(lattice, s);
  });
  return r;
}

struct Stats {
  int n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased sample variance, 0 when n == 1
  double min = 0.0;
  double max = 0.0;

  double std_error() const { return n > 0 ? std::sqrt(variance / n) : 0.0; }
};

/// Two-pass mean and variance.
inline Stats summarize(std::span<const double> xs) {
  if (xs.empty()) throw DegenerateInputError("summarize: no samples");
  Stats s;
  s.n = static_cast<int>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / s.n;
  double ss = 0.0, comp = 0.0;
  for (double x : xs) {
    const double d = x - s.mean;
    ss += d * d;
    comp += d;
  }
  s.variance = s.n > 1 ? (ss - comp * comp / s.n) / (s.n - 1) : 0.0;
  if (s.variance < 0.0) s.variance = 0.0;
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  s.min = *lo;
  s.max = *hi;
  // rounding can leave the mean a hair outside [min, max] for equal samples
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

struct DisorderPlan {
  std::vector<double> etas{0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<double> powers{5.0, 15.0, 30.0, 50.0};
  int n_realizations = 20;
  std::uint64_t base_seed = 0;
  bool per_species = false;
  LatticeConfig lattice;
  RunSettings run;

  void validate() const {
    if (etas.empty()) throw ParameterError("disorder study needs at least one eta");
    for (double e : etas) check_eta(e);
    check_power_grid(powers);
    if (n_realizations < 1) throw ParameterError("n_realizations must be >= 1");
    lattice.validate();
    run.integrator.validate();
  }
};

struct AggregateCell {
  double eta = 0.0;
  double power = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> errors;         // one entry per failed realization
  std::optional<Stats> final_weight;       // over completed realizations
  std::vector<Stats> weight_per_step;      // empty if nothing completed
  std::vector<std::vector<double>> weights;  // completed realizations, per step

  int n_completed() const { return static_cast<int>(weights.size()); }
};

struct AggregateResult {
  std::vector<double> etas;
  std::vector<double> powers;
  int n_realizations = 0;
  int n_steps = 0;
  std::vector<AggregateCell> cells;  // eta-major

  const AggregateCell& at(std::size_t eta_index, std::size_t power_index) const {
    return cells.at(eta_index * powers.size() + power_index);
  }
  bool all_ok() const {
    return std::all_of(cells.begin(), cells.end(),
                       [](const AggregateCell& c) { return c.errors.empty(); });
  }
};

inline AggregateResult run_disorder_study(const DisorderPlan& plan,
                                          unsigned workers = default_workers()) {
  plan.validate();
  const std::size_t n_cells = plan.etas.size() * plan.powers.size();
  const auto n_real = static_cast<std::size_t>(plan.n_realizations);

  struct Task {
    std::uint64_t seed = 0;
    CellResult result;
  };
  std::vector<Task> tasks(n_cells * n_real);
  parallel_for(tasks.size(), workers, [&](std::size_t t) {
    const std::size_t cell = t / n_real, k = t % n_real;
    const double eta = plan.etas[cell / plan.powers.size()];
    const double power = plan.powers[cell % plan.powers.size()];
    tasks[t].seed = derive_seed(plan.base_seed, eta, power, k);
    try {
      const Lattice lattice(plan.lattice, make_disorder_set(eta, tasks[t].seed,
                                                            plan.lattice.n_bonds(), plan.per_species));
      RunSettings s = plan.run;
      s.power = power;
      tasks[t].result = run_cell(lattice, s);
    } catch (const std::exception& e) {
      tasks[t].result = {std::nullopt, e.what()};
    }
  });

  AggregateResult out{plan.etas, plan.powers, plan.n_realizations, plan.run.integrator.n_steps, {}};
  out.cells.resize(n_cells);
  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    AggregateCell& c = out.cells[cell];
    c.eta = plan.etas[cell / plan.powers.size()];
    c.power = plan.powers[cell % plan.powers.size()];
    for (std::size_t k = 0; k < n_real; ++k) {
      const Task& task = tasks[cell * n_real + k];
      c.seeds.push_back(task.seed);
      if (!task.result.ok()) {
        c.errors.push_back(task.result.error);
        continue;
      }
      std::vector<double> w;
      w.reserve(task.result.steps->size());
      for (const auto& s : *task.result.steps) w.push_back(s.topo_weight);
      c.weights.push_back(std::move(w));
    }
    if (c.weights.empty()) continue;
    const std::size_t n_steps = c.weights.front().size();
    std::vector<double> column(c.weights.size());
    for (std::size_t s = 0; s < n_steps; ++s) {
      for (std::size_t r = 0; r < c.weights.size(); ++r) column[r] = c.weights[r][s];
      c.weight_per_step.push_back(summarize(column));
    }
    c.final_weight = c.weight_per_step.back();
  }
  return out;
}

}  // namespace nlssh
