#pragma once

// Macroscopic decision trees: exhaustive history enumeration, folding
// decision projectors into a final-state density matrix, and the decay of
// the initial/final overlap with the number of binary decisions.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Eigenvalues>

#include "tsv/hilbert.hpp"
#include "tsv/rng.hpp"
#include "tsv/two_boundary.hpp"

namespace tsv {

inline constexpr std::size_t kDefaultHistoryCap = std::size_t{1} << 20;

/// Unit-trace density operator: Hermitian, positive semidefinite.
class FinalDensity {
 public:
  explicit FinalDensity(Operator rho) : rho_(std::move(rho)) {
    if (!rho_.is_hermitian()) throw InvalidArgument("FinalDensity: not Hermitian");
    const double tr_err = std::abs(rho_.trace() - Complex(1.0));
    if (tr_err > tol::kConstruction) throw InvalidArgument("FinalDensity: trace differs from 1 by " + std::to_string(tr_err));
    if (min_eigenvalue() < -tol::kConstruction) throw InvalidArgument("FinalDensity: not positive semidefinite");
  }

  static FinalDensity pure(const StateVector& psi) { return FinalDensity(density(psi.normalized())); }
  static FinalDensity maximally_mixed(std::size_t dim) {
    return FinalDensity(Complex(1.0 / static_cast<double>(dim)) * Operator::identity(dim));
  }

  const Operator& rho() const noexcept { return rho_; }
  std::size_t dim() const noexcept { return rho_.dim(); }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho_.matrix(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

 private:
  Operator rho_;
};

/// S rho0 S^dagger / tr(...) with S the sum of the given projectors.
inline FinalDensity accumulate_final_density(std::span<const Projector> projections, const Operator& rho0) {
  if (projections.empty()) throw InvalidArgument("accumulate_final_density: no projections");
  const std::size_t d = rho0.dim();
  Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (const auto& p : projections) {
    if (p.dim() != d) throw DimensionMismatch("accumulate_final_density", d, p.dim());
    s += p.matrix();
  }
  Eigen::MatrixXcd rho = s * rho0.matrix() * s.adjoint();
  const double tr = rho.trace().real();
  if (!(tr > tol::kEquality)) throw InvalidArgument("accumulate_final_density: decisions annihilate the state");
  rho /= tr;
  // Restore exact Hermiticity lost to rounding before the structural check.
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return FinalDensity(Operator(std::move(rho)));
}

inline FinalDensity accumulate_final_density(std::initializer_list<Projector> projections, const Operator& rho0) {
  return accumulate_final_density(std::span<const Projector>(projections.begin(), projections.size()), rho0);
}

struct History {
  std::vector<std::size_t> outcomes;
  Complex amplitude;
  double probability;
};

/// All histories of `proc` in lexicographic outcome order, with amplitudes and
/// ABL probabilities. Throws EnumerationCapExceeded before doing any work if
/// the tuple count exceeds `cap`.
inline std::vector<History> enumerate_histories(const TwoBoundaryProcess& proc, std::size_t cap = kDefaultHistoryCap) {
  const std::size_t count = proc.schedule.history_count();
  if (count > cap) throw EnumerationCapExceeded(count, cap);

  std::vector<History> out;
  out.reserve(count);
  double total = 0.0;
  visit_histories(proc.initial, proc.schedule, [&](const std::vector<std::size_t>& outcomes, const Eigen::VectorXcd& psi) {
    const Complex amp = proc.final.amps().dot(psi);
    total += std::norm(amp);
    out.push_back(History{outcomes, amp, 0.0});
  });
  if (!(total > kImpossibleWeight)) throw ImpossiblePostSelection();
  for (auto& h : out) h.probability = std::norm(h.amplitude) / total;
  return out;
}

struct WeightedHistory {
  std::vector<std::size_t> outcomes;
  double probability;
};

/// Histories against a mixed final boundary. A maximally mixed final density
/// is the average over any complete final basis and reproduces forward Born
/// probabilities.
inline std::vector<WeightedHistory> enumerate_histories(const StateVector& initial, const Schedule& schedule,
                                                        const FinalDensity& final_density,
                                                        std::size_t cap = kDefaultHistoryCap) {
  const std::size_t count = schedule.history_count();
  if (count > cap) throw EnumerationCapExceeded(count, cap);
  const auto probs = history_probabilities(initial, schedule, final_density.rho());

  std::vector<WeightedHistory> out;
  out.reserve(count);
  std::size_t i = 0;
  visit_histories(initial, schedule, [&](const std::vector<std::size_t>& outcomes, const Eigen::VectorXcd&) {
    out.push_back(WeightedHistory{outcomes, probs[i++]});
  });
  return out;
}

struct DecisionRun {
  std::size_t n_decisions;
  std::size_t branching = 2;
  Rng rng;
};

struct OverlapScaling {
  // Index n-1 holds ln |<initial|final>|^2 for the first n decisions.
  std::vector<double> log_squared_overlap;
  // exp(least-squares slope of ln|<i|f>|^2 against n, through n = 0).
  double squared_base = 0.0;
  // Same fit for |<i|f>| itself; sqrt(squared_base).
  double amplitude_base = 0.0;
};

inline constexpr std::size_t kMaxOverlapDecisions = 30;

/// Initial boundary: every decision register in the uniform superposition of
/// its `branching` outcomes. Final boundary: every register in a seeded
/// random basis outcome. Both are product states, so the overlap is
/// accumulated factor by factor in the log domain.
inline OverlapScaling overlap_scaling_experiment(DecisionRun run) {
  if (run.n_decisions < 1 || run.n_decisions > kMaxOverlapDecisions)
    throw InvalidArgument("overlap_scaling_experiment: n_decisions must be in [1, 30]");
  if (run.branching < 2) throw InvalidArgument("overlap_scaling_experiment: branching must be >= 2");

  const std::size_t b = run.branching;
  const StateVector uniform(Eigen::VectorXcd::Constant(static_cast<Eigen::Index>(b), 1.0 / std::sqrt(double(b))));

  OverlapScaling out;
  double log_sq = 0.0;
  for (std::size_t n = 0; n < run.n_decisions; ++n) {
    const auto chosen = static_cast<std::size_t>(run.rng.uniform_index(b));
    log_sq += std::log(std::norm(inner(uniform, StateVector::basis(b, chosen))));
    out.log_squared_overlap.push_back(log_sq);
  }

  // Least squares through the origin: ln|<i|f>|^2 = 0 with no decisions.
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t n = 1; n <= run.n_decisions; ++n) {
    sxy += double(n) * out.log_squared_overlap[n - 1];
    sxx += double(n) * double(n);
  }
  const double slope = sxy / sxx;
  out.squared_base = std::exp(slope);
  out.amplitude_base = std::exp(0.5 * slope);
  return out;
}

}  // namespace tsv
