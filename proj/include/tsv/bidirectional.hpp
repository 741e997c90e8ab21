#pragma once

// Bang/crunch universe with a forward-moving and a backward-moving epoch that
// meet at a common border state.
//
// Each epoch is a Schedule run in its own time direction: the forward one
// from |bang> up to the match point, the backward one from |crunch> down to
// it. A history picks one outcome per mirrored event pair, and the same
// projector is inserted on both sides. Its matched amplitude is
//
//   <B(crunch)| P_match |F(bang)>
//
// where F and B are the two chain states. P_match defaults to the identity.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <vector>

#include "tsv/hilbert.hpp"
#include "tsv/parallel.hpp"
#include "tsv/rng.hpp"
#include "tsv/two_boundary.hpp"

namespace tsv {

class BidirectionalUniverse {
 public:
  BidirectionalUniverse(StateVector bang, StateVector crunch, Schedule forward, Schedule backward,
                        std::optional<Projector> match = std::nullopt)
      : bang_(std::move(bang)),
        crunch_(std::move(crunch)),
        forward_(std::move(forward)),
        backward_(std::move(backward)),
        match_(match ? std::move(*match) : Projector(Operator::identity(forward_.dim()))) {
    const std::size_t d = forward_.dim();
    if (backward_.dim() != d) throw DimensionMismatch("BidirectionalUniverse(backward)", d, backward_.dim());
    if (bang_.dim() != d) throw DimensionMismatch("BidirectionalUniverse(bang)", d, bang_.dim());
    if (crunch_.dim() != d) throw DimensionMismatch("BidirectionalUniverse(crunch)", d, crunch_.dim());
    if (match_.dim() != d) throw DimensionMismatch("BidirectionalUniverse(match)", d, match_.dim());

    const auto fwd = measure_events(forward_);
    const auto bwd = measure_events(backward_);
    if (fwd.size() != bwd.size()) {
      throw InvalidArgument("BidirectionalUniverse: " + std::to_string(fwd.size()) + " forward events but " +
                            std::to_string(bwd.size()) + " backward events");
    }
    for (std::size_t i = 0; i < fwd.size(); ++i) {
      if (fwd[i]->size() != bwd[i]->size()) throw InvalidArgument("BidirectionalUniverse: mirrored events differ in outcome count");
      for (std::size_t k = 0; k < fwd[i]->size(); ++k)
        if (max_abs_diff((*fwd[i])[k], (*bwd[i])[k]) > tol::kConstruction)
          throw InvalidArgument("BidirectionalUniverse: mirrored event pair " + std::to_string(i) + " has different projectors");
    }
  }

  // Backward epoch is an exact copy of the forward one and crunch == bang.
  static BidirectionalUniverse mirrored(const StateVector& bang, const Schedule& forward,
                                        std::optional<Projector> match = std::nullopt) {
    return BidirectionalUniverse(bang, bang, forward, forward, std::move(match));
  }

  const StateVector& bang() const noexcept { return bang_; }
  const StateVector& crunch() const noexcept { return crunch_; }
  const Schedule& forward() const noexcept { return forward_; }
  const Schedule& backward() const noexcept { return backward_; }
  const Projector& match() const noexcept { return match_; }
  std::size_t dim() const noexcept { return forward_.dim(); }
  std::size_t n_pairs() const noexcept { return forward_.n_measurements(); }

 private:
  static std::vector<const MeasurementEvent*> measure_events(const Schedule& s) {
    std::vector<const MeasurementEvent*> out;
    for (const auto& step : s.steps())
      if (const auto* m = std::get_if<Measure>(&step)) out.push_back(&m->event);
    return out;
  }

  StateVector bang_;
  StateVector crunch_;
  Schedule forward_;
  Schedule backward_;
  Projector match_;
};

inline Complex matched_history_amplitude(const BidirectionalUniverse& u, std::span<const std::size_t> outcomes) {
  if (outcomes.size() != u.n_pairs()) {
    throw InvalidArgument("matched_history_amplitude: expected " + std::to_string(u.n_pairs()) + " outcomes, got " +
                          std::to_string(outcomes.size()));
  }
  const StateVector fwd = propagate(u.bang(), u.forward(), outcomes);
  const StateVector bwd = propagate(u.crunch(), u.backward(), outcomes);
  return bwd.amps().dot(u.match().matrix() * fwd.amps());
}

inline Complex matched_history_amplitude(const BidirectionalUniverse& u, std::initializer_list<std::size_t> outcomes) {
  return matched_history_amplitude(u, std::span<const std::size_t>(outcomes.begin(), outcomes.size()));
}

// Monte Carlo work is cut into fixed batches, batch i drawing from
// rng.split(i), so results do not depend on the worker count.
inline constexpr std::size_t kMonteCarloBatch = 1024;

struct BornEmergence {
  double theta;
  std::size_t samples;
  std::size_t up_count;
  double empirical_p;
  // cos^2(theta / 2)
  double born_p;
};

// Spin pointing at polar angle theta from "up".
inline StateVector spin_state(double theta) { return StateVector{std::cos(theta / 2.0), std::sin(theta / 2.0)}; }

/// Dominant-match selection in a mirrored universe.
///
/// Per sample: the spin (polar angle theta) starts next to an environment in
/// |0>, is measured along z, then a witness unitary sum_k |k><k| (x) V_k with
/// Haar-random V_k copies the result into the environment. Forward and
/// backward epochs are identical; the match projector is |border><border| for
/// a Haar-random border state. Up is selected when its matched weight is at
/// least the down weight. Returns the frequency of up.
inline BornEmergence born_emergence_experiment(double theta, std::size_t samples, const Rng& rng,
                                               std::size_t env_dim = 4, std::size_t threads = 1) {
  if (samples < 1) throw InvalidArgument("born_emergence_experiment: samples must be >= 1");
  if (env_dim < 1) throw InvalidArgument("born_emergence_experiment: env_dim must be >= 1");

  const std::size_t dim = 2 * env_dim;
  const StateVector bang = tensor(spin_state(theta), StateVector::basis(env_dim, 0));
  const MeasurementEvent spin_z({Projector(tensor(Projector::onto_basis(2, {0}), Operator::identity(env_dim))),
                                 Projector(tensor(Projector::onto_basis(2, {1}), Operator::identity(env_dim)))});

  const std::size_t n_batches = (samples + kMonteCarloBatch - 1) / kMonteCarloBatch;
  std::vector<std::size_t> ups(n_batches, 0);
  parallel_for(n_batches, threads, [&](std::size_t batch) {
    Rng stream = rng.split(batch);
    const std::size_t end = std::min(samples, (batch + 1) * kMonteCarloBatch);
    for (std::size_t s = batch * kMonteCarloBatch; s < end; ++s) {
      const Unitary v_up = random_unitary(env_dim, stream);
      const Unitary v_down = random_unitary(env_dim, stream);
      const Unitary witness(tensor(Projector::onto_basis(2, {0}), v_up) + tensor(Projector::onto_basis(2, {1}), v_down));
      const StateVector border = random_state(dim, stream);

      Schedule forward(dim);
      forward.measure(spin_z).evolve(witness);
      const auto universe = BidirectionalUniverse::mirrored(bang, forward, Projector::onto(border));
      const double w_up = matched_history_amplitude(universe, {0}).real();
      const double w_down = matched_history_amplitude(universe, {1}).real();
      if (w_up >= w_down) ++ups[batch];
    }
  });

  std::size_t up = 0;
  for (std::size_t c : ups) up += c;
  const double c = std::cos(theta / 2.0);
  return BornEmergence{theta, samples, up, double(up) / double(samples), c * c};
}

/// Gaussian log-weight model of the matching contributions: k candidates, each
/// with log10 weight ~ Normal(-h, sqrt(h)).
struct DominanceModel {
  double h;
  std::size_t k;
  Rng rng;
};

struct Dominance {
  std::size_t trials;
  std::size_t dominant;
  double fraction;
};

// Gap in log10 between the two largest weights that counts as dominance (100x).
inline constexpr double kDominanceLog10Gap = 2.0;

inline Dominance dominance_experiment(const DominanceModel& model, std::size_t trials, std::size_t threads = 1) {
  if (!(model.h > 0.0)) throw InvalidArgument("dominance_experiment: h must be > 0");
  if (model.k < 2) throw InvalidArgument("dominance_experiment: k must be >= 2");
  if (trials < 1) throw InvalidArgument("dominance_experiment: trials must be >= 1");

  const double sigma = std::sqrt(model.h);
  const std::size_t n_batches = (trials + kMonteCarloBatch - 1) / kMonteCarloBatch;
  std::vector<std::size_t> hits(n_batches, 0);
  parallel_for(n_batches, threads, [&](std::size_t batch) {
    Rng stream = model.rng.split(batch);
    std::vector<double> logw(model.k);
    const std::size_t end = std::min(trials, (batch + 1) * kMonteCarloBatch);
    for (std::size_t t = batch * kMonteCarloBatch; t < end; ++t) {
      for (double& w : logw) w = stream.normal(-model.h, sigma);
      std::partial_sort(logw.begin(), logw.begin() + 2, logw.end(), std::greater<>());
      if (logw[0] - logw[1] >= kDominanceLog10Gap) ++hits[batch];
    }
  });

  std::size_t dominant = 0;
  for (std::size_t c : hits) dominant += c;
  return Dominance{trials, dominant, double(dominant) / double(trials)};
}

// k = 2: the log10 gap is |N(0, 2h)|, so P(gap >= 2) = 2(1 - Phi(2 / sqrt(2h))) = erfc(1 / sqrt(h)).
inline double dominance_closed_form_k2(double h) { return std::erfc(kDominanceLog10Gap / (2.0 * std::sqrt(h))); }

struct CptAmplitudePair {
  Complex a;
  Complex a_prime;
};

/// |conj(a) a' - a conj(a')|, with CPT acting on an amplitude as complex
/// conjugation. Zero when both boundaries give the same amplitude.
inline double cpt_asymmetry(const CptAmplitudePair& pair) {
  return std::abs(std::conj(pair.a) * pair.a_prime - pair.a * std::conj(pair.a_prime));
}

}  // namespace tsv
