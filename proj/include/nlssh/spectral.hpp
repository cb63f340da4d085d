#pragma once

// Spectra of instantaneous chain Hamiltonians: zero/extremal mode tagging,
// isolated-level detection, bulk winding number and mode diagnostics.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "dynamics.hpp"
#include "errors.hpp"

namespace nlssh {

enum class ModeTag { zero, max, min };

constexpr std::string_view to_string(ModeTag t) {
  switch (t) {
    case ModeTag::zero: return "zero";
    case ModeTag::max: return "max";
    case ModeTag::min: return "min";
  }
  return "?";
}

inline constexpr double kDefaultIsolationFactor = 5.0;

struct SpectrumSnapshot {
  int step = 0;
  Eigen::VectorXd eigenvalues;   // ascending, 1/m
  Eigen::MatrixXd eigenvectors;  // column k pairs with eigenvalues[k]; sign-fixed
  int zero_index = 0;
  std::vector<int> isolated;     // ascending mode indices
  double isolation_factor = kDefaultIsolationFactor;

  int size() const { return static_cast<int>(eigenvalues.size()); }
  int index(ModeTag t) const {
    switch (t) {
      case ModeTag::zero: return zero_index;
      case ModeTag::max: return size() - 1;
      case ModeTag::min: return 0;
    }
    return zero_index;
  }
  Eigen::VectorXd mode(ModeTag t) const { return eigenvectors.col(index(t)); }
  double eigenvalue(ModeTag t) const { return eigenvalues[index(t)]; }
  bool is_isolated(int k) const { return std::binary_search(isolated.begin(), isolated.end(), k); }
  /// Largest |eigenvalue|, i.e. the spectral norm of H.
  double norm() const {
    return size() == 0 ? 0.0 : std::max(std::abs(eigenvalues[0]), std::abs(eigenvalues[size() - 1]));
  }
};

/// Flips v so its largest-magnitude entry (first one on ties) is positive.
inline void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v[arg] < 0.0) v = -v;
}

/// Median of adjacent spacings of an ascending spectrum.
inline double median_spacing(const Eigen::VectorXd& ev) {
  std::vector<double> d(static_cast<std::size_t>(ev.size() - 1));
  for (Eigen::Index k = 0; k + 1 < ev.size(); ++k) d[static_cast<std::size_t>(k)] = ev[k + 1] - ev[k];
  std::sort(d.begin(), d.end());
  const std::size_t m = d.size() / 2;
  return d.size() % 2 ? d[m] : 0.5 * (d[m - 1] + d[m]);
}

/// Levels whose distance to the nearest neighbour exceeds factor x median spacing.
inline std::vector<int> isolated_modes(const Eigen::VectorXd& ascending, double factor) {
  if (!(factor > 1.0)) throw ParameterError("isolation factor must be > 1");
  const auto n = ascending.size();
  if (n < 5) throw DegenerateInputError("isolation needs at least 5 eigenvalues");
  const double threshold = factor * median_spacing(ascending);
  std::vector<int> out;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double below = k > 0 ? ascending[k] - ascending[k - 1] : INFINITY;
    const double above = k + 1 < n ? ascending[k + 1] - ascending[k] : INFINITY;
    if (std::min(below, above) > threshold) out.push_back(static_cast<int>(k));
  }
  return out;
}

inline std::vector<int> isolated_modes(const SpectrumSnapshot& s,
                                       double factor = kDefaultIsolationFactor) {
  return isolated_modes(s.eigenvalues, factor);
}

inline double gap_top(const Eigen::VectorXd& ascending) {
  const auto n = ascending.size();
  if (n < 2) throw DegenerateInputError("gap_top needs at least 2 eigenvalues");
  return ascending[n - 1] - ascending[n - 2];
}

inline double gap_top(const SpectrumSnapshot& s) { return gap_top(s.eigenvalues); }

/// Probability of v on sites |j| <= radius around the chain centre.
inline double central_density(const Eigen::VectorXd& v, int radius = 2) {
  const int c = static_cast<int>(v.size()) / 2;
  double d = 0.0;
  for (int j = std::max(0, c - radius); j <= std::min<int>(static_cast<int>(v.size()) - 1, c + radius); ++j)
    d += v[j] * v[j];
  return d;
}

/// Full diagonalisation of a real-symmetric chain matrix. The zero mode is the
/// level of smallest |lambda|; near-ties go to the mode denser at |j| <= 2.
inline SpectrumSnapshot diagonalize(const Eigen::MatrixXd& h, int step = 0,
                                    double isolation_factor = kDefaultIsolationFactor) {
  if (h.rows() != h.cols()) throw ShapeError("Hamiltonian must be square");
  if (h.rows() == 0) throw ShapeError("Hamiltonian is empty");
  if (!(h - h.transpose()).isZero(0.0)) throw ContractError("Hamiltonian is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  if (solver.info() != Eigen::Success) throw ContractError("eigensolver did not converge");

  SpectrumSnapshot s;
  s.step = step;
  s.isolation_factor = isolation_factor;
  s.eigenvalues = solver.eigenvalues();
  s.eigenvectors = solver.eigenvectors();
  for (Eigen::Index k = 0; k < s.eigenvectors.cols(); ++k) fix_sign(s.eigenvectors.col(k));

  const double tie = 1e-10 * std::max(s.norm(), 1e-300);
  double best = INFINITY;
  for (int k = 0; k < s.size(); ++k) best = std::min(best, std::abs(s.eigenvalues[k]));
  double best_density = -1.0;
  for (int k = 0; k < s.size(); ++k) {
    if (std::abs(s.eigenvalues[k]) > best + tie) continue;
    const double d = central_density(s.eigenvectors.col(k));
    if (d > best_density) {
      best_density = d;
      s.zero_index = k;
    }
  }
  if (s.size() >= 5) s.isolated = isolated_modes(s.eigenvalues, isolation_factor);
  return s;
}

inline SpectrumSnapshot diagonalize(const HamiltonianMatrix& h, int step = 0,
                                    double isolation_factor = kDefaultIsolationFactor) {
  return diagonalize(h.matrix, step, isolation_factor);
}

/// max_i |lambda_i + lambda_{n-1-i}|; zero for an exactly chiral spectrum.
inline double chiral_pairing_error(const Eigen::VectorXd& ascending) {
  double e = 0.0;
  const auto n = ascending.size();
  for (Eigen::Index i = 0; i < n; ++i) e = std::max(e, std::abs(ascending[i] + ascending[n - 1 - i]));
  return e;
}

struct WindingInput {
  double u = 0.0;  // intra-cell hopping
  double v = 0.0;  // inter-cell hopping
  int n_k = 256;
};

/// Phase winding of the bulk off-diagonal element h(k) = u + v e^{ik} over
/// one Brillouin zone, from principal-branch increments on an n_k grid.
inline int winding_number(const WindingInput& in) {
  if (!(in.u > 0.0) || !(in.v > 0.0)) throw ParameterError("hoppings u, v must be > 0");
  if (in.n_k < 64) throw ParameterError("n_k must be >= 64");
  if (in.u == in.v) throw GaplessError("u == v: bulk gap closes, winding undefined");
  const double pi = std::numbers::pi;
  auto h = [&](int m) {
    const double k = -pi + 2.0 * pi * m / in.n_k;
    return std::complex<double>(in.u) + in.v * std::polar(1.0, k);
  };
  double total = 0.0;
  std::complex<double> prev = h(0);
  for (int m = 1; m <= in.n_k; ++m) {
    const auto cur = h(m);
    total += std::arg(cur / prev);
    prev = cur;
  }
  return static_cast<int>(std::lround(total / (2.0 * pi)));
}

struct Overlap {
  double inner = 0.0;    // |<a|b>|
  double density = 0.0;  // sum_j |a_j| |b_j|
};

inline void require_unit(const Eigen::VectorXd& v, const char* what) {
  if (std::abs(v.norm() - 1.0) > 1e-8) throw ContractError(std::string(what) + " is not a unit vector");
}

inline Overlap overlap(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw ShapeError("overlap: dimension mismatch");
  require_unit(a, "overlap: mode_a");
  require_unit(b, "overlap: mode_b");
  return {std::abs(a.dot(b)), a.cwiseAbs().dot(b.cwiseAbs())};
}

inline Eigen::VectorXd localization_profile(const Eigen::VectorXd& mode) {
  require_unit(mode, "localization_profile: mode");
  return mode.cwiseAbs2();
}

/// Probability on the sublattice not containing the mode's peak site.
inline double sublattice_leakage(const Eigen::VectorXd& mode) {
  Eigen::Index peak = 0;
  mode.cwiseAbs().maxCoeff(&peak);
  double leak = 0.0;
  for (Eigen::Index j = 0; j < mode.size(); ++j)
    if ((j - peak) % 2 != 0) leak += mode[j] * mode[j];
  return leak;
}

}  // namespace nlssh
