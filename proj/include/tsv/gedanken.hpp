#pragma once

// Small closed models of four interference arguments: two-source
// intensity interference (HBT), two antennae in the foci of a mirrored
// ellipse with a dark spot, a Stern-Gerlach split that is recombined
// without trace, and a cat whose state is recorded by a witness.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "tsv/hilbert.hpp"

namespace tsv {

enum class Statistics { boson, fermion };

// Propagation amplitudes a_ij from creation point i to absorption point j.
struct HbtConfig {
  Complex a13;
  Complex a14;
  Complex a23;
  Complex a24;
  Statistics statistics;
};

/// |a13 a24 +- a14 a23|^2
inline double hbt_rate(const HbtConfig& cfg) {
  const double sign = cfg.statistics == Statistics::boson ? 1.0 : -1.0;
  return std::norm(cfg.a13 * cfg.a24 + sign * cfg.a14 * cfg.a23);
}

// ---------------------------------------------------------------------------
// Mirrored ellipse
// ---------------------------------------------------------------------------

struct EllipsoidConfig {
  double semi_major;
  double semi_minor;
  double wavenumber;
  std::size_t n_surface;
  // Dark arcs as [start, end) fractions of the perimeter, measured
  // counterclockwise from the vertex at (semi_major, 0).
  std::vector<std::pair<double, double>> dark_spot;
  // Electronically chosen relative phase, radians.
  double phase;
  // Weight surface elements by 1/sqrt(r1 r2) instead of uniformly.
  bool inverse_r_weighting = false;
  // Antennae moved this far outward from the foci along the major axis.
  // Zero is the focal configuration.
  double source_offset = 0.0;
};

struct EllipsoidResult {
  double rate_direct;
  double rate_interference;
  double total_rate;
  double emission_probability_shift;
  double dark_fraction;
};

inline constexpr std::size_t kMinSurfacePoints = 64;

namespace detail {

struct Point2 {
  double x;
  double y;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Points at arc-length fractions (j + 1/2) / n of the ellipse
// (a cos t, b sin t). Arc length is tabulated with Simpson's rule on a fine
// parameter grid and inverted by interpolation plus one Newton step.
inline std::vector<Point2> equal_arc_points(double a, double b, std::size_t n) {
  const auto speed = [&](double t) { return std::hypot(a * std::sin(t), b * std::cos(t)); };
  const std::size_t cells = 64 * n;
  const double dt = 2.0 * std::numbers::pi / double(cells);
  std::vector<double> cum(cells + 1, 0.0);
  for (std::size_t i = 0; i < cells; ++i) {
    const double t0 = double(i) * dt;
    cum[i + 1] = cum[i] + dt / 6.0 * (speed(t0) + 4.0 * speed(t0 + dt / 2.0) + speed(t0 + dt));
  }
  const double perimeter = cum.back();

  std::vector<Point2> out;
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double target = (double(j) + 0.5) / double(n) * perimeter;
    const auto it = std::upper_bound(cum.begin(), cum.end(), target);
    const auto cell = static_cast<std::size_t>(std::distance(cum.begin(), it)) - 1;
    double t = (double(cell) + (target - cum[cell]) / (cum[cell + 1] - cum[cell])) * dt;
    // Newton correction against the local linearization.
    const double t0 = double(cell) * dt;
    const double s_t = cum[cell] + (t - t0) / 6.0 * (speed(t0) + 4.0 * speed((t0 + t) / 2.0) + speed(t));
    t -= (s_t - target) / speed(t);
    out.push_back({a * std::cos(t), b * std::sin(t)});
  }
  return out;
}

inline bool is_dark(double s, const std::vector<std::pair<double, double>>& arcs) {
  for (const auto& [lo, hi] : arcs)
    if (s >= lo && s < hi) return true;
  return false;
}

}  // namespace detail

/// Two antennae near the foci of a 2D mirrored ellipse, photons absorbed at
/// the opposite focus.
///
/// Each surface element j carries a reflected path F1 -> P_j -> F2 with
/// amplitude w_j e^{i k L_j}. Alongside runs a reference assignment with unit
/// amplitude e^{i (2 k a - phase)}; the chosen phase shifts it relative to
/// the reflected paths. The direct rate sums intensities channel by channel:
/// the reference plus every surface element, dark or not. A dark element
/// absorbs and counts its photon, so it keeps its intensity but drops out of
/// the coherent reflected sum. The interference rate is the cross term
/// 2 Re(conj(reference) * sum_j w_j e^{i k L_j}) over lit elements.
///
/// In the focal configuration every L_j equals 2a, so
/// total / direct = 1 + (1 - f) cos(phase) for dark coverage f.
inline EllipsoidResult ellipsoid_experiment(const EllipsoidConfig& cfg) {
  if (!(cfg.semi_minor > 0.0) || !(cfg.semi_major > cfg.semi_minor))
    throw InvalidArgument("ellipsoid_experiment: degenerate ellipse (need semi_major > semi_minor > 0)");
  if (cfg.n_surface < kMinSurfacePoints) throw InvalidArgument("ellipsoid_experiment: n_surface must be >= 64");

  auto arcs = cfg.dark_spot;
  std::sort(arcs.begin(), arcs.end());
  double coverage = 0.0;
  for (std::size_t i = 0; i < arcs.size(); ++i) {
    const auto [lo, hi] = arcs[i];
    if (!(lo >= 0.0 && lo <= hi && hi <= 1.0)) throw InvalidArgument("ellipsoid_experiment: dark arc outside [0, 1]");
    if (i > 0 && lo < arcs[i - 1].second) throw InvalidArgument("ellipsoid_experiment: dark arcs overlap");
    coverage += hi - lo;
  }

  const double a = cfg.semi_major;
  const double focal = std::sqrt(a * a - cfg.semi_minor * cfg.semi_minor);
  const detail::Point2 src1{-focal - cfg.source_offset, 0.0};
  const detail::Point2 src2{focal + cfg.source_offset, 0.0};
  if (std::abs(src2.x) >= a) throw InvalidArgument("ellipsoid_experiment: antennae must lie inside the ellipse");

  const auto points = detail::equal_arc_points(a, cfg.semi_minor, cfg.n_surface);
  std::vector<double> weights(points.size(), 1.0);
  if (cfg.inverse_r_weighting)
    for (std::size_t j = 0; j < points.size(); ++j)
      weights[j] = 1.0 / std::sqrt(detail::distance(src1, points[j]) * detail::distance(points[j], src2));
  double wsum = 0.0;
  for (double w : weights) wsum += w;

  const Complex reference = std::polar(1.0, 2.0 * cfg.wavenumber * a - cfg.phase);
  // Kahan-compensated so the result does not drift with n_surface.
  Complex reflected{0.0, 0.0};
  Complex carry{0.0, 0.0};
  for (std::size_t j = 0; j < points.size(); ++j) {
    const double s = (double(j) + 0.5) / double(points.size());
    if (detail::is_dark(s, arcs)) continue;
    const double path = detail::distance(src1, points[j]) + detail::distance(points[j], src2);
    const Complex term = std::polar(weights[j] / wsum, cfg.wavenumber * path) - carry;
    const Complex next = reflected + term;
    carry = (next - reflected) - term;
    reflected = next;
  }

  EllipsoidResult out{};
  out.rate_direct = std::norm(reference) + 1.0;
  out.rate_interference = 2.0 * (std::conj(reference) * reflected).real();
  out.total_rate = out.rate_direct + out.rate_interference;
  out.emission_probability_shift = out.rate_interference / out.rate_direct;
  out.dark_fraction = coverage;
  return out;
}

// ---------------------------------------------------------------------------
// Stern-Gerlach loop and cat witness
// ---------------------------------------------------------------------------

namespace detail {

// Unitary on a qubit taking |0> to c|0> + sqrt(1 - |c|^2)|1>.
inline Unitary witness_rotation(Complex c) {
  const double s = std::sqrt(std::max(0.0, 1.0 - std::norm(c)));
  Eigen::MatrixXcd m(2, 2);
  m << c, -s, s, std::conj(c);
  return Unitary(std::move(m));
}

inline StateVector witness_state(Complex c) { return StateVector{c, std::sqrt(std::max(0.0, 1.0 - std::norm(c)))}; }

// |s, p> -> |s, p xor s> on spin (x) path.
inline Unitary path_split() {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(4, 4);
  m(0, 0) = m(1, 1) = 1.0;
  m(3, 2) = m(2, 3) = 1.0;
  return Unitary(std::move(m));
}

}  // namespace detail

struct SternGerlachResult {
  // Reduced spin state after recombination.
  Operator reduced_density;
  // Set when no witness is attached; the spin then returns in a pure state.
  std::optional<StateVector> output;
  // <input| rho |input>
  double return_fidelity;
};

/// Splits a spin-1/2 state into two paths along z and recombines them.
/// With a witness attached, a witness qubit is rotated to w1 on the lower
/// path (w0 = |0> on the upper one, <w0|w1> = witness_overlap) before the
/// paths merge, and the spin is read out from the reduced density.
inline SternGerlachResult stern_gerlach_recombine(const StateVector& input, bool with_witness,
                                                  Complex witness_overlap = 0.0) {
  if (input.dim() != 2) throw DimensionMismatch("stern_gerlach_recombine", 2, input.dim());
  if (std::abs(input.norm() - 1.0) > tol::kConstruction) throw InvalidArgument("stern_gerlach_recombine: input not normalized");
  if (std::abs(witness_overlap) > 1.0 + tol::kEquality) throw InvalidArgument("stern_gerlach_recombine: |witness_overlap| > 1");

  const Unitary split = detail::path_split();
  StateVector state = tensor(input, StateVector::basis(2, 0));
  state = apply(split, state);

  if (!with_witness) {
    state = apply(split, state);  // the split is its own inverse
    StateVector out{state[0], state[2]};
    const double fidelity = std::norm(inner(input, out));
    return SternGerlachResult{density(out), std::move(out), fidelity};
  }

  const std::size_t dims[] = {2, 2, 2};
  // Controlled on the path register: lower path (1) rotates the witness.
  const Operator record = tensor(Operator::identity(2), tensor(Projector::onto_basis(2, {0}), Operator::identity(2))) +
                          tensor(Operator::identity(2), tensor(Projector::onto_basis(2, {1}), detail::witness_rotation(witness_overlap)));
  state = tensor(state, StateVector::basis(2, 0));
  state = apply(record, state);
  state = apply(tensor(split, Operator::identity(2)), state);
  const Operator rho = partial_trace(density(state), 0, dims);
  const double fidelity = inner(input, apply(rho, input)).real();
  return SternGerlachResult{rho, std::nullopt, fidelity};
}

struct WitnessConfig {
  // <w_live|w_dead>
  Complex witness_overlap;
};

/// Coherence 2 |rho_01| of the cat after tracing out its witness.
inline double cat_witness_coherence(const WitnessConfig& cfg) {
  const Complex c = cfg.witness_overlap;
  if (std::abs(c) > 1.0 + tol::kEquality) throw InvalidArgument("cat_witness_coherence: |witness_overlap| > 1");
  const StateVector live = StateVector::basis(2, 0);
  const StateVector dead = StateVector::basis(2, 1);
  const StateVector w_live = StateVector::basis(2, 0);
  const StateVector w_dead = detail::witness_state(c);

  const StateVector cat((tensor(live, w_live).amps() + tensor(dead, w_dead).amps()) / std::sqrt(2.0));
  const Operator reduced = partial_trace(density(cat), 0, {2, 2});
  return 2.0 * std::abs(reduced(0, 1));
}

}  // namespace tsv
