#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nlssh/cli/commands.hpp"
#include "nlssh/cli/config.hpp"

using namespace nlssh;
using namespace nlssh::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& row) {
  std::vector<std::string> out;
  std::stringstream ss(row);
  for (std::string c; std::getline(ss, c, ',');) out.push_back(c);
  if (!row.empty() && row.back() == ',') out.emplace_back();
  return out;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("nlssh_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string config_error(const std::string& yaml, const std::vector<Override>& ov = {}) {
  try {
    load_config_string(yaml, "cfg.yaml", ov);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const char* kSmall = R"(lattice:
  n_sites: 21
integrator:
  n_steps: 12
experiment:
  mode: evolve
  power_w: 30
seed: 4
)";

RunConfig small(const std::string& dir, const std::vector<Override>& extra = {}) {
  auto ov = extra;
  ov.push_back({"output.dir", dir});
  return load_config_string(kSmall, "small.yaml", ov);
}

CommandOptions quiet(unsigned workers = 1) {
  static std::ostringstream sink;
  return {workers, &sink};
}

}  // namespace

TEST(Config, DefaultsMatchReferenceSettings) {
  const auto c = load_config_string("experiment: {mode: evolve}\n");
  EXPECT_EQ(c.lattice.n_sites, 103);
  EXPECT_EQ(c.lattice.boundary, Boundary::periodic);
  EXPECT_EQ(c.lattice.of(Species::idler).v_short, 22162.0);
  EXPECT_EQ(c.integrator.dz, 2e-6);
  EXPECT_EQ(c.integrator.n_steps, 1000);
  EXPECT_EQ(c.experiment.injection_site, -1);
  EXPECT_EQ(c.experiment.power_w, 30.0);
  EXPECT_EQ(c.experiment.zero_modes, ZeroModeSource::instantaneous);
}

TEST(Config, FullDocumentParses) {
  const auto c = load_config_string(R"(lattice:
  n_sites: 51
  boundary: open
  defect_kind: long_long
  gamma: 100
  nu: 900
  signal: {v_long: 13000, v_short: 21000}
integrator: {method: rk4_fixed, dz_m: 1.0e-6, n_steps: 40, substeps: 4}
experiment:
  mode: sweep
  power_grid: {start: 0, stop: 10, step: 2.5}
  observables: [topo_weight, pump_intensity]
output: {dir: results}
seed: 18446744073709551615
)");
  EXPECT_EQ(c.lattice.n_sites, 51);
  EXPECT_EQ(c.lattice.boundary, Boundary::open);
  EXPECT_EQ(c.lattice.of(Species::pump).nu, 900.0);
  EXPECT_EQ(c.lattice.of(Species::signal).v_long, 13000.0);
  EXPECT_EQ(c.integrator.substeps, 4);
  EXPECT_EQ(c.experiment.powers_w, (std::vector<double>{0, 2.5, 5, 7.5, 10}));
  EXPECT_EQ(c.experiment.observables.size(), 2u);
  EXPECT_EQ(c.output_dir, "results");
  EXPECT_EQ(c.seed, 18446744073709551615ull);
}

TEST(Config, UnknownKeyNamesLineAndAcceptedKeys) {
  const auto msg = config_error("lattice:\n  n_sites: 21\n  n_site: 3\nexperiment: {mode: evolve}\n");
  EXPECT_NE(msg.find("cfg.yaml:3:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("lattice.n_site"), std::string::npos) << msg;
  EXPECT_NE(msg.find("accepted: n_sites"), std::string::npos) << msg;
}

TEST(Config, NegativePowerRejected) {
  const auto msg = config_error("experiment:\n  mode: evolve\n  power_w: -3\n");
  EXPECT_NE(msg.find("cfg.yaml:3:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("experiment.power_w"), std::string::npos) << msg;
  EXPECT_NE(msg.find(">= 0"), std::string::npos) << msg;
}

TEST(Config, EmptyPowerGridRejected) {
  EXPECT_NE(config_error("experiment:\n  mode: sweep\n  powers_w: []\n").find("experiment.powers_w"),
            std::string::npos);
  EXPECT_NE(config_error("experiment:\n  mode: sweep\n").find("powers_w"), std::string::npos);
  EXPECT_NE(config_error("experiment:\n  mode: sweep\n  powers_w: [5, 1]\n").find("increasing"),
            std::string::npos);
}

TEST(Config, OtherValidationErrors) {
  EXPECT_NE(config_error("lattice: {n_sites: 20}\nexperiment: {mode: evolve}\n").find("odd"), std::string::npos);
  EXPECT_NE(config_error("experiment: {mode: fly}\n").find("experiment.mode"), std::string::npos);
  EXPECT_NE(config_error("experiment: {mode: evolve, etas: [0.1]}\n").find("experiment.etas"), std::string::npos);
  EXPECT_NE(config_error("lattice: {pump: {v_long: 30000}}\nexperiment: {mode: evolve}\n").find("lattice.pump"),
            std::string::npos);
  EXPECT_NE(config_error("integrator: {dz_m: abc}\nexperiment: {mode: evolve}\n").find("integrator.dz_m"),
            std::string::npos);
  EXPECT_NE(config_error("experiment: {mode: evolve, injection_site: 60}\n").find("[-51, 51]"), std::string::npos);
  EXPECT_NE(config_error("bogus: 1\nexperiment: {mode: evolve}\n").find("bogus"), std::string::npos);
  EXPECT_NE(config_error("lattice: {}\n").find("experiment"), std::string::npos);
  EXPECT_NE(config_error("experiment: {mode: disorder, etas: [0.1, 1.5]}\n").find("experiment.etas[1]"),
            std::string::npos);
}

TEST(Config, SubcommandMustMatchMode) {
  EXPECT_THROW(load_config_string("experiment: {mode: evolve}\n", "x", {}, Mode::sweep), ConfigError);
  EXPECT_EQ(load_config_string("experiment: {power_w: 3}\n", "x", {}, Mode::evolve).experiment.mode, Mode::evolve);
}

TEST(Config, OverridesReplaceAndCreateKeys) {
  const auto c = load_config_string(kSmall, "small.yaml",
                                    {parse_override("lattice.n_sites=31"), parse_override("experiment.power_w=12.5"),
                                     parse_override("integrator.substeps=2"), parse_override("lattice.pump.nu=10"),
                                     parse_override("seed=9")});
  EXPECT_EQ(c.lattice.n_sites, 31);
  EXPECT_EQ(c.experiment.power_w, 12.5);
  EXPECT_EQ(c.integrator.substeps, 2);
  EXPECT_EQ(c.integrator.n_steps, 12);
  EXPECT_EQ(c.lattice.of(Species::pump).nu, 10.0);
  EXPECT_EQ(c.lattice.of(Species::signal).nu, 1078.0);
  EXPECT_EQ(c.seed, 9u);
}

TEST(Config, OverrideErrorsNameTheFlag) {
  const auto msg = config_error(kSmall, {parse_override("experiment.power_w=-1")});
  EXPECT_NE(msg.find("--set experiment.power_w"), std::string::npos) << msg;
  EXPECT_THROW(parse_override("lattice.n_sites"), ConfigError);
  EXPECT_NE(config_error(kSmall, {parse_override("seed.x=1")}).find("not a section"), std::string::npos);
}

TEST(Export, DoublesRoundTripWithSeventeenDigits) {
  for (double x : {0.1, 1.0 / 3.0, 2e-6, 47291.0, -1e-300, 0.0}) EXPECT_EQ(std::stod(format_double(x)), x);
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
}

TEST(Export, CsvTableLayout) {
  CsvTable t({"a", "b", "c"});
  t.cell(1).cell(0.5).cell(std::optional<double>{}).end_row();
  t.cell("x").cell(2).cell(3).end_row();
  EXPECT_EQ(t.text(), "a,b,c\n1,0.5,\nx,2,3\n");
  EXPECT_EQ(t.rows(), 2u);
}

TEST(Export, BiphotonMatrixLayout) {
  BiphotonState m = BiphotonState::zero(2);
  m.amplitudes(0, 1) = cplx(1.5, -2.0);
  const auto bytes = biphoton_matrix_bytes(m);
  ASSERT_EQ(bytes.size(), 4u * 16u);
  double re, im;
  std::memcpy(&re, bytes.data() + 16, 8);
  std::memcpy(&im, bytes.data() + 24, 8);
  EXPECT_EQ(re, 1.5);
  EXPECT_EQ(im, -2.0);
}

TEST(Evolve, WritesArtifactsWithSchemas) {
  const auto dir = scratch("evolve");
  const auto c = small(dir.string(), {{"experiment.dump_biphoton_matrix", "true"}});
  ASSERT_EQ(run_command(c, quiet()), kExitOk);
  for (auto f : {"pump_intensity.csv", "biphoton_population.csv", "scalars.csv", "manifest.json",
                 "biphoton_matrix.bin"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;

  const auto pump = lines(slurp(dir / "pump_intensity.csv"));
  EXPECT_EQ(pump[0], "step,z_m,site,intensity_w");
  EXPECT_EQ(pump.size(), 1u + 13u * 21u);
  EXPECT_EQ(split(pump[1])[2], "-10");
  const auto first = split(pump[1 + 9]);  // step 0, site -1
  EXPECT_EQ(first[2], "-1");
  EXPECT_EQ(std::stod(first[3]), 30.0);
  EXPECT_EQ(lines(slurp(dir / "biphoton_population.csv"))[0], "step,z_m,site,population");
  const auto scalars = lines(slurp(dir / "scalars.csv"));
  EXPECT_EQ(scalars[0], "step,z_m,frob_norm,topo_weight");
  EXPECT_EQ(scalars.size(), 14u);
  EXPECT_EQ(fs::file_size(dir / "biphoton_matrix.bin"), 21u * 21u * 16u);

  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(m["schema_version"], kSchemaVersion);
  EXPECT_EQ(m["manifest_hash"], manifest_hash(c));
  EXPECT_EQ(m["config"]["lattice"]["n_sites"], 21);
  EXPECT_EQ(m["config"]["lattice"]["pump"]["v_short"], 22118.0);
  EXPECT_EQ(m["config"]["experiment"]["power_w"], 30.0);
  EXPECT_EQ(m["config"]["integrator"]["dz_m"], 2e-6);
  EXPECT_EQ(m["config"]["seed"], 4);
  EXPECT_EQ(m["artifacts"].size(), 4u);
  for (const auto& a : m["artifacts"])
    EXPECT_EQ(a["fnv1a64"], hex64(fnv1a64(slurp(dir / a["file"].get<std::string>()))));
}

TEST(Evolve, RepeatedRunIsBitwiseIdentical) {
  const auto a = scratch("repeat_a"), b = scratch("repeat_b");
  ASSERT_EQ(run_command(small(a.string()), quiet()), kExitOk);
  ASSERT_EQ(run_command(small(b.string()), quiet()), kExitOk);
  for (auto f : {"pump_intensity.csv", "biphoton_population.csv", "scalars.csv", "manifest.json"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Evolve, ManifestHashTracksResolvedParameters) {
  const auto base = small("x");
  EXPECT_EQ(manifest_hash(base), manifest_hash(small("elsewhere")));
  EXPECT_NE(manifest_hash(base), manifest_hash(small("x", {{"experiment.power_w", "31"}})));
  EXPECT_NE(manifest_hash(base), manifest_hash(small("x", {{"seed", "5"}})));
}

TEST(Evolve, StabilityFailureGivesNumericExit) {
  const auto dir = scratch("unstable");
  const auto c = small(dir.string(), {{"integrator.substeps", "1"}, {"integrator.dz_m", "1e-5"}});
  EXPECT_EQ(run_command(c, quiet()), kExitNumeric);
}

TEST(Spectrum, WritesFirstAndLastStep) {
  const auto dir = scratch("spectrum");
  auto c = small(dir.string(), {{"experiment.mode", "spectrum"}, {"experiment.steps", "[5]"}});
  ASSERT_EQ(run_command(c, quiet()), kExitOk);
  const auto spec = lines(slurp(dir / "spectrum.csv"));
  EXPECT_EQ(spec[0], "step,mode_index,eigenvalue_per_m,is_isolated,tag");
  EXPECT_EQ(spec.size(), 1u + 3u * 21u);
  std::set<std::string> steps;
  int zero_tags = 0;
  for (std::size_t i = 1; i < spec.size(); ++i) {
    const auto row = split(spec[i]);
    steps.insert(row[0]);
    zero_tags += row[4] == "zero";
  }
  EXPECT_EQ(steps, (std::set<std::string>{"0", "5", "12"}));
  EXPECT_EQ(zero_tags, 3);
  const auto vec = lines(slurp(dir / "eigenvectors.csv"));
  EXPECT_EQ(vec[0], "step,tag,site,amplitude");
  EXPECT_EQ(vec.size(), 1u + 3u * 3u * 21u);
}

std::pair<int, int> isolated_first_last(double power) {
  const auto dir = scratch("spectrum_p" + std::to_string(static_cast<int>(power)));
  const auto c = load_config_string("experiment: {mode: spectrum}\n", "x",
                                    {{"output.dir", dir.string()}, {"experiment.power_w", std::to_string(power)}});
  EXPECT_EQ(run_command(c, quiet()), kExitOk);
  int first = 0, last = 0;
  for (const auto& l : lines(slurp(dir / "spectrum.csv"))) {
    const auto row = split(l);
    if (row[3] != "1") continue;
    (row[0] == "0" ? first : last) += 1;
  }
  return {first, last};
}

TEST(Spectrum, OneWattHasOnlyTheZeroModeIsolated) {
  EXPECT_EQ(isolated_first_last(1.0), std::make_pair(1, 1));
}

TEST(Spectrum, ThirtyWattsLastStepHasThreeIsolatedModes) {
  EXPECT_EQ(isolated_first_last(30.0).second, 3);
}

TEST(Spectrum, HundredWattZeroModePeaksOffDefect) {
  const auto dir = scratch("spectrum_p100");
  const auto c = load_config_string("experiment: {mode: spectrum, power_w: 100}\n", "x",
                                    {{"output.dir", dir.string()}});
  ASSERT_EQ(run_command(c, quiet()), kExitOk);
  std::map<int, double> prob;
  for (const auto& l : lines(slurp(dir / "eigenvectors.csv"))) {
    const auto row = split(l);
    if (row[0] == "1000" && row[1] == "zero") prob[std::stoi(row[2])] = std::pow(std::stod(row[3]), 2);
  }
  ASSERT_EQ(prob.size(), 103u);
  std::vector<std::pair<double, int>> order;
  for (auto [site, p] : prob) order.push_back({p, site});
  std::sort(order.rbegin(), order.rend());
  std::set<int> top;
  for (int k = 0; k < 4; ++k) top.insert(std::abs(order[k].second));
  EXPECT_EQ(top, (std::set<int>{2, 4})) << order[0].second << " " << order[1].second << " " << order[2].second
                                       << " " << order[3].second;
}

TEST(Sweep, ThreePowersGiveThreeRowHeatmaps) {
  const auto dir = scratch("sweep");
  auto c = small(dir.string(), {{"experiment", "{mode: sweep, powers_w: [1, 30, 100]}"}});
  ASSERT_EQ(run_command(c, quiet(2)), kExitOk);
  for (auto f : {"topo_weight_heatmap.csv", "gap_top_heatmap.csv"}) {
    const auto t = lines(slurp(dir / f));
    ASSERT_EQ(t.size(), 4u) << f;
    EXPECT_EQ(split(t[0]).size(), 2u + 12u);
    EXPECT_EQ(split(t[0])[0], "power_w");
    EXPECT_EQ(split(t[0])[13], "step_12");
    EXPECT_EQ(split(t[3])[0], "100");
  }
}

TEST(Sweep, IdenticalBytesForAnyWorkerCount) {
  const auto a = scratch("sweep_a"), b = scratch("sweep_b");
  const Override exp{"experiment", "{mode: sweep, powers_w: [0, 5, 20, 40], observables: "
                                   "[topo_weight, gap_top, pump_intensity, biphoton_population]}"};
  ASSERT_EQ(run_command(small(a.string(), {exp}), quiet(1)), kExitOk);
  ASSERT_EQ(run_command(small(b.string(), {exp}), quiet(4)), kExitOk);
  for (const auto& e : fs::directory_iterator(a))
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
}

TEST(Sweep, FailedCellsBecomeEmptyAndExitIsNonzero) {
  const auto dir = scratch("sweep_fail");
  auto c = small(dir.string(), {{"experiment", "{mode: sweep, powers_w: [10, 100000]}"}});
  EXPECT_EQ(run_command(c, quiet()), kExitNumeric);
  const auto t = lines(slurp(dir / "topo_weight_heatmap.csv"));
  ASSERT_EQ(t.size(), 3u);
  const auto bad = split(t[2]);
  ASSERT_EQ(bad.size(), 14u);
  for (std::size_t i = 1; i < bad.size(); ++i) EXPECT_EQ(bad[i], "");
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_FALSE(m["status"]["ok"].get<bool>());
  EXPECT_EQ(m["status"]["failures"].size(), 1u);
}

TEST(Disorder, StatisticsRowCountsRealizations) {
  const auto dir = scratch("disorder");
  auto c = small(dir.string(),
                 {{"experiment", "{mode: disorder, etas: [0.3], powers_w: [15], n_realizations: 20}"},
                  {"integrator.n_steps", "3"}});
  ASSERT_EQ(run_command(c, quiet(2)), kExitOk);
  const auto t = lines(slurp(dir / "disorder_stats.csv"));
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0], "eta,power_w,n_requested,n_completed,mean_final_weight,variance_final_weight,"
                  "min_final_weight,max_final_weight,stderr_final_weight");
  const auto row = split(t[1]);
  EXPECT_EQ(row[2], "20");
  EXPECT_EQ(row[3], "20");
  for (auto f : {"weight_mean_heatmap.csv", "weight_variance_heatmap.csv", "weight_min_heatmap.csv",
                 "weight_max_heatmap.csv"})
    EXPECT_EQ(lines(slurp(dir / f)).size(), 2u) << f;
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(m["cells"][0]["seeds"].size(), 20u);
  EXPECT_EQ(m["cells"][0]["seeds"][3].get<std::uint64_t>(), derive_seed(4, 0.3, 15.0, 3));
}
