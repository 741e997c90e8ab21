#pragma once

// Two-state-vector engine: histories conditioned on an initial and a final
// boundary state, ABL probabilities, projection shifting and collapse.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <limits>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "tsv/hilbert.hpp"

namespace tsv {

// Total ABL weight at or below this is treated as an impossible post-selection
// (amplitudes of order 1e-12 are indistinguishable from rounding noise).
inline constexpr double kImpossibleWeight = tol::kEquality * tol::kEquality;

/// A complete set of pairwise orthogonal projectors.
class MeasurementEvent {
 public:
  explicit MeasurementEvent(std::vector<Projector> projectors) : projectors_(std::move(projectors)) {
    if (projectors_.empty()) throw InvalidArgument("MeasurementEvent: needs at least one projector");
    const std::size_t d = projectors_.front().dim();
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < projectors_.size(); ++i) {
      if (projectors_[i].dim() != d) throw DimensionMismatch("MeasurementEvent", d, projectors_[i].dim());
      sum += projectors_[i].matrix();
      for (std::size_t j = i + 1; j < projectors_.size(); ++j) {
        if (projectors_[j].dim() != d) throw DimensionMismatch("MeasurementEvent", d, projectors_[j].dim());
        const double overlap = (projectors_[i].matrix() * projectors_[j].matrix()).cwiseAbs().maxCoeff();
        if (overlap > tol::kConstruction) {
          throw InvalidArgument("MeasurementEvent: projectors " + std::to_string(i) + " and " +
                                std::to_string(j) + " are not orthogonal");
        }
      }
    }
    const double gap = (sum - Eigen::MatrixXcd::Identity(sum.rows(), sum.cols())).cwiseAbs().maxCoeff();
    if (gap > tol::kConstruction) throw InvalidArgument("MeasurementEvent: projectors do not sum to identity");
  }

  // {|0><0|, ..., |d-1><d-1|}
  static MeasurementEvent computational(std::size_t dim) {
    std::vector<Projector> ps;
    ps.reserve(dim);
    for (std::size_t k = 0; k < dim; ++k) ps.push_back(Projector::onto_basis(dim, {k}));
    return MeasurementEvent(std::move(ps));
  }

  // {P, I - P}
  static MeasurementEvent binary(const Projector& p) { return MeasurementEvent({p, p.complement()}); }

  std::size_t dim() const noexcept { return projectors_.front().dim(); }
  std::size_t size() const noexcept { return projectors_.size(); }
  const Projector& operator[](std::size_t k) const { return projectors_.at(k); }
  const std::vector<Projector>& projectors() const noexcept { return projectors_; }

 private:
  std::vector<Projector> projectors_;
};

/// Projective measurement in a Haar-random basis, its basis vectors dealt
/// round-robin into `outcomes` groups (so every group is nonempty).
inline MeasurementEvent random_measurement_event(std::size_t dim, std::size_t outcomes, Rng& rng) {
  if (outcomes == 0 || outcomes > dim) throw InvalidArgument("random_measurement_event: need 1 <= outcomes <= dim");
  const Unitary basis = random_unitary(dim, rng);
  const auto d = static_cast<Eigen::Index>(dim);
  std::vector<Eigen::MatrixXcd> groups(outcomes, Eigen::MatrixXcd::Zero(d, d));
  for (Eigen::Index j = 0; j < d; ++j) {
    const Eigen::VectorXcd v = basis.matrix().col(j);
    groups[static_cast<std::size_t>(j) % outcomes] += v * v.adjoint();
  }
  std::vector<Projector> ps;
  ps.reserve(outcomes);
  for (auto& g : groups) ps.emplace_back(Operator(std::move(g)));
  return MeasurementEvent(std::move(ps));
}

struct Evolve {
  Unitary unitary;
};

struct Measure {
  MeasurementEvent event;
};

using Step = std::variant<Evolve, Measure>;

inline std::size_t step_dim(const Step& s) {
  return std::visit(
      [](const auto& v) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, Evolve>)
          return v.unitary.dim();
        else
          return v.event.dim();
      },
      s);
}

/// Ordered interleaving of evolutions and measurement events, all of one dim.
class Schedule {
 public:
  explicit Schedule(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw InvalidArgument("Schedule: dim must be >= 1");
  }
  Schedule(std::size_t dim, std::vector<Step> steps) : Schedule(dim) {
    for (auto& s : steps) push(std::move(s));
  }

  Schedule& push(Step step) {
    if (step_dim(step) != dim_) throw DimensionMismatch("Schedule", dim_, step_dim(step));
    if (std::holds_alternative<Measure>(step)) ++n_measurements_;
    steps_.push_back(std::move(step));
    return *this;
  }
  Schedule& evolve(Unitary u) { return push(Evolve{std::move(u)}); }
  Schedule& measure(MeasurementEvent e) { return push(Measure{std::move(e)}); }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return steps_.size(); }
  std::size_t n_measurements() const noexcept { return n_measurements_; }
  const std::vector<Step>& steps() const noexcept { return steps_; }

  // Outcome count of each Measure step, in schedule order.
  std::vector<std::size_t> outcome_counts() const {
    std::vector<std::size_t> out;
    for (const auto& s : steps_)
      if (const auto* m = std::get_if<Measure>(&s)) out.push_back(m->event.size());
    return out;
  }

  // Number of outcome tuples; saturates at SIZE_MAX.
  std::size_t history_count() const {
    std::size_t n = 1;
    for (std::size_t c : outcome_counts()) {
      if (n > std::numeric_limits<std::size_t>::max() / c) return std::numeric_limits<std::size_t>::max();
      n *= c;
    }
    return n;
  }

 private:
  std::size_t dim_;
  std::size_t n_measurements_ = 0;
  std::vector<Step> steps_;
};

struct TwoBoundaryProcess {
  StateVector initial;
  StateVector final;
  Schedule schedule;

  TwoBoundaryProcess(StateVector initial_state, StateVector final_state, Schedule sched)
      : initial(std::move(initial_state)), final(std::move(final_state)), schedule(std::move(sched)) {
    if (initial.dim() != schedule.dim()) throw DimensionMismatch("TwoBoundaryProcess(initial)", initial.dim(), schedule.dim());
    if (final.dim() != schedule.dim()) throw DimensionMismatch("TwoBoundaryProcess(final)", final.dim(), schedule.dim());
  }
};

/// Runs `initial` through the schedule with the chosen projector at each
/// Measure step. The result is unnormalized: its norm squared is the
/// forward-only (Born) weight of the branch.
inline StateVector propagate(const StateVector& initial, const Schedule& schedule,
                             std::span<const std::size_t> outcomes) {
  if (initial.dim() != schedule.dim()) throw DimensionMismatch("propagate", initial.dim(), schedule.dim());
  if (outcomes.size() != schedule.n_measurements()) {
    throw InvalidArgument("propagate: expected " + std::to_string(schedule.n_measurements()) +
                          " outcomes, got " + std::to_string(outcomes.size()));
  }
  Eigen::VectorXcd psi = initial.amps();
  std::size_t next = 0;
  for (const auto& step : schedule.steps()) {
    if (const auto* ev = std::get_if<Evolve>(&step)) {
      psi = ev->unitary.matrix() * psi;
    } else {
      const auto& event = std::get<Measure>(step).event;
      const std::size_t k = outcomes[next++];
      if (k >= event.size()) {
        throw InvalidArgument("outcome index " + std::to_string(k) + " out of range for event with " +
                              std::to_string(event.size()) + " projectors");
      }
      psi = event[k].matrix() * psi;
    }
  }
  return StateVector(std::move(psi));
}

/// <final| ... U2 P_k U1 |initial>, steps applied in schedule order.
inline Complex history_amplitude(const TwoBoundaryProcess& proc, std::span<const std::size_t> outcomes) {
  return inner(proc.final, propagate(proc.initial, proc.schedule, outcomes));
}

inline Complex history_amplitude(const TwoBoundaryProcess& proc, std::initializer_list<std::size_t> outcomes) {
  return history_amplitude(proc, std::span<const std::size_t>(outcomes.begin(), outcomes.size()));
}

/// Depth-first walk of every outcome tuple in lexicographic order. Prefix
/// states are shared, so the cost is one matrix-vector product per tree node.
/// `visit(outcomes, chain_state)` receives the unnormalized end state.
template <class Visitor>
void visit_histories(const StateVector& initial, const Schedule& schedule, Visitor&& visit) {
  if (initial.dim() != schedule.dim()) throw DimensionMismatch("visit_histories", initial.dim(), schedule.dim());
  const auto& steps = schedule.steps();
  std::vector<std::size_t> outcomes;
  outcomes.reserve(schedule.n_measurements());

  std::function<void(std::size_t, const Eigen::VectorXcd&)> walk = [&](std::size_t at, const Eigen::VectorXcd& psi) {
    if (at == steps.size()) {
      visit(std::as_const(outcomes), psi);
      return;
    }
    if (const auto* ev = std::get_if<Evolve>(&steps[at])) {
      walk(at + 1, ev->unitary.matrix() * psi);
      return;
    }
    const auto& event = std::get<Measure>(steps[at]).event;
    for (std::size_t k = 0; k < event.size(); ++k) {
      outcomes.push_back(k);
      walk(at + 1, event[k].matrix() * psi);
      outcomes.pop_back();
    }
  };
  walk(0, initial.amps());
}

/// Sum over all outcome tuples of |history_amplitude|^2.
inline double total_weight(const TwoBoundaryProcess& proc) {
  double total = 0.0;
  visit_histories(proc.initial, proc.schedule, [&](const std::vector<std::size_t>&, const Eigen::VectorXcd& psi) {
    total += std::norm(proc.final.amps().dot(psi));
  });
  return total;
}

/// ABL probability: |amplitude(outcomes)|^2 over the sum of |amplitude|^2 for
/// all outcome tuples. Throws ImpossiblePostSelection when that sum vanishes.
inline double history_probability(const TwoBoundaryProcess& proc, std::span<const std::size_t> outcomes) {
  const double num = std::norm(history_amplitude(proc, outcomes));
  const double den = total_weight(proc);
  if (!(den > kImpossibleWeight)) throw ImpossiblePostSelection();
  return num / den;
}

inline double history_probability(const TwoBoundaryProcess& proc, std::initializer_list<std::size_t> outcomes) {
  return history_probability(proc, std::span<const std::size_t>(outcomes.begin(), outcomes.size()));
}

/// ABL probabilities for a mixed final boundary `final_density` (any positive
/// operator; need not be normalized). Each tuple gets weight psi^dagger rho psi
/// for its chain state psi. Lexicographic order. With rho = I this is the
/// ordinary forward Born distribution.
inline std::vector<double> history_probabilities(const StateVector& initial, const Schedule& schedule,
                                                 const Operator& final_density) {
  if (final_density.dim() != schedule.dim()) throw DimensionMismatch("history_probabilities", final_density.dim(), schedule.dim());
  std::vector<double> weights;
  double total = 0.0;
  visit_histories(initial, schedule, [&](const std::vector<std::size_t>&, const Eigen::VectorXcd& psi) {
    const double w = psi.dot(final_density.matrix() * psi).real();
    weights.push_back(w);
    total += w;
  });
  if (!(total > kImpossibleWeight)) throw ImpossiblePostSelection();
  for (double& w : weights) w /= total;
  return weights;
}

/// Moves a projector from between U1 and U2 to after U2:
/// U1 P U2 == U1 U2 P' with P' = U2^dagger P U2.
inline Projector shift_projection(const Projector& p, const Unitary& u2) {
  if (p.dim() != u2.dim()) throw DimensionMismatch("shift_projection", p.dim(), u2.dim());
  return Projector(Operator(u2.matrix().adjoint() * p.matrix() * u2.matrix()));
}

// P psi / ||P psi||
inline StateVector collapse(const StateVector& psi, const Projector& p) {
  if (psi.dim() != p.dim()) throw DimensionMismatch("collapse", psi.dim(), p.dim());
  Eigen::VectorXcd v = p.matrix() * psi.amps();
  const double n = v.norm();
  if (!(n > tol::kEquality)) throw EmptyBranch();
  return StateVector(v / n);
}

}  // namespace tsv
