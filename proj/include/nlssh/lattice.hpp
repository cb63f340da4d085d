#pragma once

// Defect SSH chain: bond taxonomy, per-species coupling tables,
// pump-dependent couplings on the nonlinear bonds, and off-diagonal disorder.
//
// Sites and bonds are indexed j in [-N, N] with n_sites = 2N + 1 and the
// defect at site 0. Bond j joins sites j and j + 1; with periodic boundaries
// bond N closes the ring between sites N and -N.

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "seeding.hpp"

namespace nlssh {

enum class Species { pump = 0, signal = 1, idler = 2 };
enum class DefectKind { long_long, short_short };
enum class Boundary { periodic, open };
enum class BondClass { L, S, N };

inline constexpr std::array<Species, 3> kAllSpecies{Species::pump, Species::signal,
                                                   Species::idler};

constexpr std::string_view to_string(Species s) {
  switch (s) {
    case Species::pump: return "pump";
    case Species::signal: return "signal";
    case Species::idler: return "idler";
  }
  return "?";
}

constexpr std::string_view to_string(DefectKind k) {
  return k == DefectKind::long_long ? "long_long" : "short_short";
}

constexpr std::string_view to_string(Boundary b) {
  return b == Boundary::periodic ? "periodic" : "open";
}

constexpr std::string_view to_string(BondClass c) {
  switch (c) {
    case BondClass::L: return "L";
    case BondClass::S: return "S";
    case BondClass::N: return "N";
  }
  return "?";
}

inline std::optional<Species> parse_species(std::string_view s) {
  for (auto sp : kAllSpecies)
    if (to_string(sp) == s) return sp;
  return std::nullopt;
}

/// Linear couplings (1/m) and nonlinear hopping coefficient (1/(W m)).
struct SpeciesCouplings {
  double v_long = 0.0;
  double v_short = 0.0;
  double nu = 0.0;
};

struct LatticeConfig {
  int n_sites = 103;
  DefectKind defect_kind = DefectKind::long_long;
  Boundary boundary = Boundary::periodic;
  // indexed by Species
  std::array<SpeciesCouplings, 3> species{{
      {14951.0, 22118.0, 1078.0},
      {13603.0, 21882.0, 1078.0},
      {14562.0, 22162.0, 1078.0},
  }};
  std::vector<int> nonlinear_bonds{-1, 0};
  double gamma = 120.0;  // SFWM coefficient, 1/(W m)

  int half_width() const { return n_sites / 2; }
  int n_bonds() const { return boundary == Boundary::periodic ? n_sites : n_sites - 1; }
  int first_bond() const { return -half_width(); }
  int last_bond() const { return boundary == Boundary::periodic ? half_width() : half_width() - 1; }

  const SpeciesCouplings& of(Species s) const { return species[static_cast<int>(s)]; }
  SpeciesCouplings& of(Species s) { return species[static_cast<int>(s)]; }

  bool is_nonlinear(int bond) const {
    return std::find(nonlinear_bonds.begin(), nonlinear_bonds.end(), bond) !=
           nonlinear_bonds.end();
  }

  void validate() const {
    if (n_sites < 7 || n_sites % 2 == 0)
      throw ParameterError("n_sites must be an odd integer >= 7, got " + std::to_string(n_sites));
    for (auto sp : kAllSpecies) {
      const auto& c = of(sp);
      const std::string name(to_string(sp));
      if (!(c.v_long > 0.0) || !(c.v_short > 0.0))
        throw ParameterError(name + ": v_long and v_short must be > 0");
      if (!(c.v_long < c.v_short))
        throw ParameterError(name + ": v_long must be < v_short");
      if (!(c.nu >= 0.0)) throw ParameterError(name + ": nu must be >= 0");
    }
    if (!(gamma >= 0.0)) throw ParameterError("gamma must be >= 0");
    for (int b : nonlinear_bonds)
      if (b < first_bond() || b > last_bond())
        throw ParameterError("nonlinear bond " + std::to_string(b) + " outside [" +
                             std::to_string(first_bond()) + ", " +
                             std::to_string(last_bond()) + "]");
  }
};

/// Storage offset of site j in [-N, N].
inline int site_offset(const LatticeConfig& cfg, int site) {
  const int n = cfg.half_width();
  if (site < -n || site > n)
    throw IndexError("site " + std::to_string(site) + " outside [" + std::to_string(-n) + ", " +
                     std::to_string(n) + "]");
  return site + n;
}

/// L/S class from the alternation pattern alone, ignoring the nonlinear set.
inline BondClass linear_bond_class(int bond, DefectKind kind) {
  BondClass c;
  if (bond == -1 || bond == 0)
    c = BondClass::L;
  else if (bond >= 1)
    c = (bond % 2 != 0) ? BondClass::S : BondClass::L;
  else
    c = (bond % 2 == 0) ? BondClass::S : BondClass::L;
  if (kind == DefectKind::short_short) c = (c == BondClass::L) ? BondClass::S : BondClass::L;
  return c;
}

inline BondClass classify_bond(int bond, const LatticeConfig& cfg) {
  const int n = cfg.half_width();
  if (bond < -n || bond > n)
    throw IndexError("bond " + std::to_string(bond) + " outside [" + std::to_string(-n) + ", " +
                     std::to_string(n) + "]");
  if (cfg.is_nonlinear(bond)) return BondClass::N;
  return linear_bond_class(bond, cfg.defect_kind);
}

/// Per-bond couplings of one species, bonds first_bond..last_bond.
struct CouplingProfile {
  Species species = Species::pump;
  Boundary boundary = Boundary::periodic;
  int n_sites = 0;
  std::vector<double> values;

  int half_width() const { return n_sites / 2; }
  int first_bond() const { return -half_width(); }
  int last_bond() const { return boundary == Boundary::periodic ? half_width() : half_width() - 1; }

  double at(int bond) const {
    if (bond < first_bond() || bond > last_bond())
      throw IndexError("bond " + std::to_string(bond) + " not present in profile");
    return values[static_cast<std::size_t>(bond - first_bond())];
  }
  double max() const { return *std::max_element(values.begin(), values.end()); }
  friend bool operator==(const CouplingProfile&, const CouplingProfile&) = default;
};

inline CouplingProfile base_couplings(const LatticeConfig& cfg, Species sp) {
  cfg.validate();
  const auto& c = cfg.of(sp);
  CouplingProfile p{sp, cfg.boundary, cfg.n_sites, {}};
  p.values.reserve(static_cast<std::size_t>(cfg.n_bonds()));
  for (int b = cfg.first_bond(); b <= cfg.last_bond(); ++b) {
    // nonlinear bonds carry their linear value in the zero-intensity limit
    const BondClass cls = linear_bond_class(b, cfg.defect_kind);
    p.values.push_back(cls == BondClass::S ? c.v_short : c.v_long);
  }
  return p;
}

/// Adds nu * (I_j + I_{j+1}) on each nonlinear bond j; other bonds pass through.
inline CouplingProfile effective_couplings(const CouplingProfile& base,
                                           const Eigen::VectorXd& intensities, double nu,
                                           const std::vector<int>& nonlinear_bonds) {
  if (intensities.size() != base.n_sites)
    throw ShapeError("intensity vector has " + std::to_string(intensities.size()) +
                     " sites, lattice has " + std::to_string(base.n_sites));
  CouplingProfile out = base;
  const int n = base.half_width();
  for (int b : nonlinear_bonds) {
    const int left = b + n;
    const int right = (b == n) ? 0 : b + 1 + n;
    out.values[static_cast<std::size_t>(b - base.first_bond())] +=
        nu * (intensities[left] + intensities[right]);
  }
  return out;
}

inline CouplingProfile effective_couplings(const CouplingProfile& base,
                                           const Eigen::VectorXd& intensities,
                                           const LatticeConfig& cfg) {
  return effective_couplings(base, intensities, cfg.of(base.species).nu, cfg.nonlinear_bonds);
}

/// Multiplicative off-diagonal disorder, one factor per bond in [1 - eta, 1 + eta].
struct DisorderRealization {
  double eta = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> multipliers;
};

inline void check_eta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0))
    throw ParameterError("disorder strength eta must lie in [0, 1], got " + std::to_string(eta));
}

/// Uniform multipliers from a 64-bit Mersenne twister; the float conversion
/// uses the top 53 bits so draws are identical across standard libraries.
inline DisorderRealization make_disorder(double eta, std::uint64_t seed, int n_bonds) {
  check_eta(eta);
  DisorderRealization r{eta, seed, {}};
  r.multipliers.reserve(static_cast<std::size_t>(n_bonds));
  std::mt19937_64 gen(seed);
  for (int b = 0; b < n_bonds; ++b) r.multipliers.push_back(1.0 - eta + 2.0 * eta * unit_interval(gen()));
  return r;
}

inline CouplingProfile apply_disorder(const CouplingProfile& profile,
                                      const DisorderRealization& realization) {
  check_eta(realization.eta);
  if (realization.multipliers.size() != profile.values.size())
    throw ShapeError("disorder realization has " + std::to_string(realization.multipliers.size()) +
                     " bonds, profile has " + std::to_string(profile.values.size()));
  CouplingProfile out = profile;
  for (std::size_t b = 0; b < out.values.size(); ++b) out.values[b] *= realization.multipliers[b];
  return out;
}

using DisorderSet = std::array<DisorderRealization, 3>;

/// One realization per species. Shared mode reuses the same factors for all
/// three (one fabrication gap per bond); independent mode reseeds per species.
inline DisorderSet make_disorder_set(double eta, std::uint64_t seed, int n_bonds,
                                     bool per_species = false) {
  DisorderSet set;
  for (auto sp : kAllSpecies) {
    const auto i = static_cast<std::size_t>(sp);
    const std::uint64_t s = per_species ? mix_seed(seed, i + 1) : seed;
    set[i] = make_disorder(eta, s, n_bonds);
  }
  return set;
}

/// Immutable lattice model: configuration, base tables, optional disorder.
class Lattice {
 public:
  explicit Lattice(LatticeConfig cfg, std::optional<DisorderSet> disorder = std::nullopt)
      : cfg_(std::move(cfg)), disorder_(std::move(disorder)) {
    cfg_.validate();
    for (auto sp : kAllSpecies) {
      base_[static_cast<std::size_t>(sp)] = base_couplings(cfg_, sp);
      if (disorder_) {
        const auto& d = (*disorder_)[static_cast<std::size_t>(sp)];
        if (static_cast<int>(d.multipliers.size()) != cfg_.n_bonds())
          throw ShapeError("disorder realization does not match lattice bond count");
      }
    }
  }

  const LatticeConfig& config() const { return cfg_; }
  int n_sites() const { return cfg_.n_sites; }
  const CouplingProfile& base(Species sp) const { return base_[static_cast<std::size_t>(sp)]; }
  const std::optional<DisorderSet>& disorder() const { return disorder_; }

  /// Pump-dependent couplings of one species, with disorder applied on top.
  CouplingProfile couplings(Species sp, const Eigen::VectorXd& intensities) const {
    auto p = effective_couplings(base(sp), intensities, cfg_);
    if (disorder_) p = apply_disorder(p, (*disorder_)[static_cast<std::size_t>(sp)]);
    return p;
  }

  /// Linear (zero-intensity) couplings including disorder.
  CouplingProfile linear_couplings(Species sp) const {
    return couplings(sp, Eigen::VectorXd::Zero(cfg_.n_sites));
  }

  /// Upper bound on any coupling of `sp` while total intensity is `power`
  /// (each nonlinear bond sees at most the full power).
  double coupling_bound(Species sp, double power) const {
    const auto& b = base(sp);
    const double nu = cfg_.of(sp).nu;
    double bound = 0.0;
    for (int bond = b.first_bond(); bond <= b.last_bond(); ++bond) {
      const auto i = static_cast<std::size_t>(bond - b.first_bond());
      double v = b.values[i] + (cfg_.is_nonlinear(bond) ? nu * power : 0.0);
      if (disorder_) v *= (*disorder_)[static_cast<std::size_t>(sp)].multipliers[i];
      bound = std::max(bound, v);
    }
    return bound;
  }

 private:
  LatticeConfig cfg_;
  std::optional<DisorderSet> disorder_;
  std::array<CouplingProfile, 3> base_;
};

}  // namespace nlssh
