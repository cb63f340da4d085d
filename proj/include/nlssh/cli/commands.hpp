#pragma once

// Subcommands behind the nlssh executable. Each returns a process exit status:
// 0 when every requested cell finished, 1 on numeric failure, 2 on bad input.

#include <algorithm>
#include <exception>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "../biphoton.hpp"
#include "../dynamics.hpp"
#include "../ensemble.hpp"
#include "../simulation.hpp"
#include "../spectral.hpp"
#include "config.hpp"
#include "export.hpp"

namespace nlssh::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumeric = 1;
inline constexpr int kExitConfig = 2;

struct CommandOptions {
  unsigned workers = default_workers();
  std::ostream* log = &std::cerr;
};

using json = nlohmann::ordered_json;

/// Every parameter that influences results. The output directory and worker
/// count are deliberately absent: they never change artifact bytes.
inline json config_json(const RunConfig& c) {
  json lattice = {
      {"n_sites", c.lattice.n_sites},
      {"defect_kind", to_string(c.lattice.defect_kind)},
      {"boundary", to_string(c.lattice.boundary)},
      {"nonlinear_bonds", c.lattice.nonlinear_bonds},
      {"gamma", c.lattice.gamma},
  };
  for (auto sp : kAllSpecies) {
    const auto& s = c.lattice.of(sp);
    lattice[std::string(to_string(sp))] = {{"v_long", s.v_long}, {"v_short", s.v_short}, {"nu", s.nu}};
  }
  const auto& e = c.experiment;
  json exp = {{"mode", to_string(e.mode)}, {"injection_site", e.injection_site},
              {"isolation_factor", e.isolation_factor}};
  switch (e.mode) {
    case Mode::evolve:
      exp["power_w"] = e.power_w;
      exp["zero_modes"] = to_string(e.zero_modes);
      exp["weight"] = to_string(e.weight);
      exp["disorder_eta"] = e.disorder_eta;
      exp["per_species_disorder"] = e.per_species_disorder;
      exp["dump_biphoton_matrix"] = e.dump_biphoton_matrix;
      break;
    case Mode::spectrum:
      exp["power_w"] = e.power_w;
      exp["species"] = to_string(e.spectrum_species);
      exp["steps"] = e.spectrum_steps;
      exp["disorder_eta"] = e.disorder_eta;
      exp["per_species_disorder"] = e.per_species_disorder;
      break;
    case Mode::sweep: {
      exp["powers_w"] = e.powers_w;
      exp["zero_modes"] = to_string(e.zero_modes);
      exp["weight"] = to_string(e.weight);
      auto obs = json::array();
      for (auto o : e.observables) obs.push_back(to_string(o));
      exp["observables"] = obs;
      break;
    }
    case Mode::disorder:
      exp["powers_w"] = e.powers_w;
      exp["etas"] = e.etas;
      exp["n_realizations"] = e.n_realizations;
      exp["per_species_disorder"] = e.per_species_disorder;
      exp["zero_modes"] = to_string(e.zero_modes);
      exp["weight"] = to_string(e.weight);
      break;
  }
  return {
      {"lattice", lattice},
      {"integrator",
       {{"method", "rk4_fixed"}, {"dz_m", c.integrator.dz}, {"n_steps", c.integrator.n_steps},
        {"substeps", c.integrator.substeps}}},
      {"experiment", exp},
      {"seed", c.seed},
  };
}

inline std::string manifest_hash(const RunConfig& c) {
  const json core = {{"schema_version", kSchemaVersion},
                     {"tool", kToolName},
                     {"tool_version", kToolVersion},
                     {"config", config_json(c)}};
  return hex64(fnv1a64(core.dump()));
}

inline json manifest_head(const RunConfig& c) {
  return {{"schema_version", kSchemaVersion},
          {"tool", kToolName},
          {"tool_version", kToolVersion},
          {"manifest_hash", manifest_hash(c)},
          {"config", config_json(c)}};
}

inline void finish_manifest(ArtifactWriter& out, json manifest) {
  manifest["artifacts"] = artifacts_json(out.records());
  out.write("manifest.json", "manifest", manifest.dump(2) + "\n");
}

inline std::vector<std::string> step_columns(std::vector<std::string> lead, int n_steps) {
  for (int s = 0; s <= n_steps; ++s) lead.push_back("step_" + std::to_string(s));
  return lead;
}

/// Lattice for single runs, with optional disorder seeded like realization 0.
inline Lattice single_run_lattice(const RunConfig& c, json& manifest) {
  const auto& e = c.experiment;
  if (e.disorder_eta <= 0.0) return Lattice(c.lattice);
  const auto seed = derive_seed(c.seed, e.disorder_eta, e.power_w, 0);
  manifest["disorder_seed"] = seed;
  return Lattice(c.lattice, make_disorder_set(e.disorder_eta, seed, c.lattice.n_bonds(), e.per_species_disorder));
}

inline int cmd_evolve(const RunConfig& c, const CommandOptions& opt = {}) {
  json manifest = manifest_head(c);
  const Lattice lattice = single_run_lattice(c, manifest);
  const RunSettings settings = c.run_settings();
  const int half = c.lattice.half_width();

  CsvTable pump({"step", "z_m", "site", "intensity_w"});
  CsvTable pops({"step", "z_m", "site", "population"});
  CsvTable scalars({"step", "z_m", "frob_norm", "topo_weight"});
  std::optional<BiphotonState> last;
  try {
    simulate(lattice, settings, [&](const RunStepView& v) {
      const auto& o = v.observables;
      const Eigen::VectorXd in = v.pump.intensities();
      const Eigen::VectorXd p = site_populations(v.biphoton.state);
      for (Eigen::Index j = 0; j < in.size(); ++j) {
        const int site = static_cast<int>(j) - half;
        pump.cell(o.step).cell(o.z).cell(site).cell(in[j]).end_row();
        pops.cell(o.step).cell(o.z).cell(site).cell(p[j]).end_row();
      }
      scalars.cell(o.step).cell(o.z).cell(o.frob_norm).cell(o.topo_weight).end_row();
      if (c.experiment.dump_biphoton_matrix && o.step == settings.integrator.n_steps)
        last = v.biphoton.state;
    });
  } catch (const std::exception& e) {
    *opt.log << "evolve: numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }

  ArtifactWriter out(c.output_dir);
  out.write_csv("pump_intensity.csv", "pump_intensity", pump);
  out.write_csv("biphoton_population.csv", "biphoton_population", pops);
  out.write_csv("scalars.csv", "scalars", scalars);
  if (last) {
    out.write("biphoton_matrix.bin", "biphoton_matrix", biphoton_matrix_bytes(*last));
    manifest["biphoton_matrix"] = {{"step", settings.integrator.n_steps},
                                   {"rows", c.lattice.n_sites},
                                   {"cols", c.lattice.n_sites},
                                   {"layout", "row-major, row = idler site, col = signal site, "
                                              "little-endian float64 (re, im) pairs"}};
  }
  manifest["status"] = {{"ok", true}, {"failures", json::array()}};
  finish_manifest(out, std::move(manifest));
  return kExitOk;
}

inline int cmd_spectrum(const RunConfig& c, const CommandOptions& opt = {}) {
  json manifest = manifest_head(c);
  const Lattice lattice = single_run_lattice(c, manifest);
  const auto& e = c.experiment;
  const int half = c.lattice.half_width();

  std::set<int> steps(e.spectrum_steps.begin(), e.spectrum_steps.end());
  steps.insert(0);
  steps.insert(c.integrator.n_steps);

  CsvTable spectrum({"step", "mode_index", "eigenvalue_per_m", "is_isolated", "tag"});
  CsvTable vectors({"step", "tag", "site", "amplitude"});
  try {
    const PumpTrajectory traj =
        evolve_pump(inject_pump(c.lattice, e.injection_site, e.power_w), c.integrator, lattice);
    for (int step : steps) {
      const SpectrumSnapshot s = diagonalize(traj.hamiltonian(step, e.spectrum_species), step, e.isolation_factor);
      auto tag_of = [&](int k) -> std::string_view {
        for (auto t : {ModeTag::zero, ModeTag::max, ModeTag::min})
          if (s.index(t) == k) return to_string(t);
        return "";
      };
      for (int k = 0; k < s.size(); ++k)
        spectrum.cell(step).cell(k).cell(s.eigenvalues[k]).cell(s.is_isolated(k) ? 1 : 0).cell(tag_of(k)).end_row();
      for (auto t : {ModeTag::zero, ModeTag::max, ModeTag::min}) {
        const Eigen::VectorXd v = s.mode(t);
        for (Eigen::Index j = 0; j < v.size(); ++j)
          vectors.cell(step).cell(to_string(t)).cell(static_cast<int>(j) - half).cell(v[j]).end_row();
      }
    }
  } catch (const std::exception& ex) {
    *opt.log << "spectrum: numeric failure: " << ex.what() << "\n";
    return kExitNumeric;
  }
  ArtifactWriter out(c.output_dir);
  out.write_csv("spectrum.csv", "spectrum", spectrum);
  out.write_csv("eigenvectors.csv", "eigenvectors", vectors);
  manifest["status"] = {{"ok", true}, {"failures", json::array()}};
  finish_manifest(out, std::move(manifest));
  return kExitOk;
}

inline int cmd_sweep(const RunConfig& c, const CommandOptions& opt = {}) {
  SweepPlan plan;
  plan.powers = c.experiment.powers_w;
  plan.lattice = c.lattice;
  plan.run = c.run_settings();
  plan.observables = c.experiment.observables;
  const SweepResult r = run_power_sweep(plan, opt.workers);

  ArtifactWriter out(c.output_dir);
  for (auto o : plan.observables) {
    CsvTable t(step_columns({"power_w"}, r.n_steps));
    for (std::size_t p = 0; p < r.powers.size(); ++p) {
      t.cell(r.powers[p]);
      const auto row = r.row(p, o);
      for (int s = 0; s <= r.n_steps; ++s)
        t.cell(row ? std::optional<double>((*row)[static_cast<std::size_t>(s)]) : std::nullopt);
      t.end_row();
    }
    out.write_csv(std::string(to_string(o)) + "_heatmap.csv", std::string(to_string(o)), t);
  }
  json manifest = manifest_head(c);
  auto failures = json::array();
  for (std::size_t p = 0; p < r.cells.size(); ++p)
    if (!r.cells[p].ok()) {
      failures.push_back({{"power_w", r.powers[p]}, {"error", r.cells[p].error}});
      *opt.log << "sweep: cell P=" << r.powers[p] << " W failed: " << r.cells[p].error << "\n";
    }
  manifest["status"] = {{"ok", failures.empty()}, {"failures", failures}};
  finish_manifest(out, std::move(manifest));
  return failures.empty() ? kExitOk : kExitNumeric;
}

inline int cmd_disorder(const RunConfig& c, const CommandOptions& opt = {}) {
  DisorderPlan plan;
  plan.etas = c.experiment.etas;
  plan.powers = c.experiment.powers_w;
  plan.n_realizations = c.experiment.n_realizations;
  plan.base_seed = c.seed;
  plan.per_species = c.experiment.per_species_disorder;
  plan.lattice = c.lattice;
  plan.run = c.run_settings();
  const AggregateResult r = run_disorder_study(plan, opt.workers);

  CsvTable stats({"eta", "power_w", "n_requested", "n_completed", "mean_final_weight", "variance_final_weight",
                  "min_final_weight", "max_final_weight", "stderr_final_weight"});
  const auto lead = std::vector<std::string>{"eta", "power_w"};
  CsvTable mean(step_columns(lead, r.n_steps)), var(step_columns(lead, r.n_steps)),
      lo(step_columns(lead, r.n_steps)), hi(step_columns(lead, r.n_steps));
  json cells = json::array();
  auto failures = json::array();
  for (const auto& cell : r.cells) {
    const auto& f = cell.final_weight;
    stats.cell(cell.eta).cell(cell.power).cell(r.n_realizations).cell(cell.n_completed());
    stats.cell(f ? std::optional(f->mean) : std::nullopt)
        .cell(f ? std::optional(f->variance) : std::nullopt)
        .cell(f ? std::optional(f->min) : std::nullopt)
        .cell(f ? std::optional(f->max) : std::nullopt)
        .cell(f ? std::optional(f->std_error()) : std::nullopt)
        .end_row();
    for (auto* t : {&mean, &var, &lo, &hi}) t->cell(cell.eta).cell(cell.power);
    for (int s = 0; s <= r.n_steps; ++s) {
      const bool have = !cell.weight_per_step.empty();
      const Stats st = have ? cell.weight_per_step[static_cast<std::size_t>(s)] : Stats{};
      mean.cell(have ? std::optional(st.mean) : std::nullopt);
      var.cell(have ? std::optional(st.variance) : std::nullopt);
      lo.cell(have ? std::optional(st.min) : std::nullopt);
      hi.cell(have ? std::optional(st.max) : std::nullopt);
    }
    for (auto* t : {&mean, &var, &lo, &hi}) t->end_row();
    cells.push_back({{"eta", cell.eta}, {"power_w", cell.power}, {"seeds", cell.seeds}});
    for (const auto& err : cell.errors) {
      failures.push_back({{"eta", cell.eta}, {"power_w", cell.power}, {"error", err}});
      *opt.log << "disorder: cell eta=" << cell.eta << " P=" << cell.power << " W failed: " << err << "\n";
    }
  }
  ArtifactWriter out(c.output_dir);
  out.write_csv("disorder_stats.csv", "disorder_stats", stats);
  out.write_csv("weight_mean_heatmap.csv", "weight_mean", mean);
  out.write_csv("weight_variance_heatmap.csv", "weight_variance", var);
  out.write_csv("weight_min_heatmap.csv", "weight_min", lo);
  out.write_csv("weight_max_heatmap.csv", "weight_max", hi);
  json manifest = manifest_head(c);
  manifest["cells"] = cells;
  manifest["status"] = {{"ok", failures.empty()}, {"failures", failures}};
  finish_manifest(out, std::move(manifest));
  return failures.empty() ? kExitOk : kExitNumeric;
}

inline int run_command(const RunConfig& c, const CommandOptions& opt = {}) {
  std::filesystem::create_directories(c.output_dir);
  switch (c.experiment.mode) {
    case Mode::evolve: return cmd_evolve(c, opt);
    case Mode::spectrum: return cmd_spectrum(c, opt);
    case Mode::sweep: return cmd_sweep(c, opt);
    case Mode::disorder: return cmd_disorder(c, opt);
  }
  return kExitConfig;
}

}  // namespace nlssh::cli
