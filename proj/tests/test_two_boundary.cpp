#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <vector>

#include "tsv/two_boundary.hpp"

using namespace tsv;

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

StateVector plus() { return StateVector{kInvSqrt2, kInvSqrt2}; }

Schedule single_z() {
  Schedule s(2);
  s.measure(MeasurementEvent::computational(2));
  return s;
}

// Random process with 1..3 events, alternating with random unitaries.
TwoBoundaryProcess random_process(Rng& rng, std::size_t dim, std::size_t events) {
  Schedule s(dim);
  for (std::size_t e = 0; e < events; ++e) {
    s.evolve(random_unitary(dim, rng));
    s.measure(random_measurement_event(dim, 1 + rng.uniform_index(dim), rng));
  }
  s.evolve(random_unitary(dim, rng));
  return TwoBoundaryProcess(random_state(dim, rng), random_state(dim, rng), std::move(s));
}

double sum_all_probabilities(const TwoBoundaryProcess& proc) {
  const auto counts = proc.schedule.outcome_counts();
  std::vector<std::size_t> idx(counts.size(), 0);
  double total = 0.0;
  while (true) {
    total += history_probability(proc, idx);
    std::size_t k = idx.size();
    while (k > 0) {
      --k;
      if (++idx[k] < counts[k]) break;
      idx[k] = 0;
      if (k == 0) return total;
    }
    if (idx.empty()) return total;
  }
}

}  // namespace

TEST(MeasurementEvent, RejectsIncompleteAndOverlapping) {
  EXPECT_THROW(MeasurementEvent({Projector::onto_basis(2, {0})}), InvalidArgument);
  EXPECT_THROW(MeasurementEvent({Projector::onto_basis(2, {0}), Projector::onto(plus())}), InvalidArgument);
  EXPECT_THROW(MeasurementEvent({Projector::onto_basis(2, {0}), Projector::onto_basis(3, {1})}), DimensionMismatch);
  EXPECT_NO_THROW(MeasurementEvent::binary(Projector::onto(plus())));
}

TEST(Schedule, RejectsMixedDims) {
  Schedule s(2);
  EXPECT_THROW(s.evolve(Unitary::identity(3)), DimensionMismatch);
  EXPECT_THROW(TwoBoundaryProcess(StateVector::basis(3, 0), StateVector::basis(2, 0), Schedule(2)), DimensionMismatch);
}

TEST(HistoryAmplitude, DirectEvaluation) {
  const TwoBoundaryProcess proc(plus(), StateVector::basis(2, 0), single_z());
  EXPECT_NEAR(std::abs(history_amplitude(proc, {0}) - Complex(kInvSqrt2)), 0.0, 1e-15);
  EXPECT_EQ(history_amplitude(proc, {1}), Complex(0.0));
}

TEST(HistoryAmplitude, EvolveThenProject) {
  Schedule s(2);
  s.evolve(pauli_x()).measure(MeasurementEvent::computational(2));
  const TwoBoundaryProcess proc(StateVector::basis(2, 0), StateVector::basis(2, 0), s);
  EXPECT_EQ(history_amplitude(proc, {0}), Complex(0.0));
  EXPECT_THROW(history_amplitude(proc, {2}), InvalidArgument);
  EXPECT_THROW(history_amplitude(proc, {0, 0}), InvalidArgument);
}

TEST(HistoryProbability, PostSelectionCases) {
  const TwoBoundaryProcess to_up(plus(), StateVector::basis(2, 0), single_z());
  EXPECT_NEAR(history_probability(to_up, {0}), 1.0, 1e-15);
  EXPECT_NEAR(history_probability(to_up, {1}), 0.0, 1e-15);

  const TwoBoundaryProcess to_plus(plus(), plus(), single_z());
  EXPECT_NEAR(history_probability(to_plus, {0}), 0.5, 1e-15);
}

TEST(HistoryProbability, ThreeBoxAgainstBruteForce) {
  // Independent oracle on raw arrays: amplitudes <f|P|i> for P_A and I - P_A.
  const double s3 = 1.0 / std::sqrt(3.0);
  const std::array<double, 3> init{s3, s3, s3};
  const std::array<double, 3> fin{s3, s3, -s3};
  double amp_in_a = fin[0] * init[0];
  double amp_not_a = fin[1] * init[1] + fin[2] * init[2];
  const double oracle = amp_in_a * amp_in_a / (amp_in_a * amp_in_a + amp_not_a * amp_not_a);
  ASSERT_NEAR(oracle, 1.0, 1e-15);

  Schedule s(3);
  s.measure(MeasurementEvent::binary(Projector::onto_basis(3, {0})));
  const TwoBoundaryProcess proc(StateVector{s3, s3, s3}, StateVector{s3, s3, -s3}, s);
  EXPECT_NEAR(history_probability(proc, {0}), oracle, 1e-12);

  // Same pre/post selection also finds the particle in B with certainty.
  Schedule sb(3);
  sb.measure(MeasurementEvent::binary(Projector::onto_basis(3, {1})));
  const TwoBoundaryProcess proc_b(StateVector{s3, s3, s3}, StateVector{s3, s3, -s3}, sb);
  EXPECT_NEAR(history_probability(proc_b, {0}), 1.0, 1e-12);
}

TEST(HistoryProbability, ImpossiblePostSelectionThrows) {
  Schedule s(2);
  s.measure(MeasurementEvent::computational(2));
  const TwoBoundaryProcess proc(StateVector::basis(2, 0), StateVector::basis(2, 1), s);
  EXPECT_THROW(history_probability(proc, {0}), ImpossiblePostSelection);
}

TEST(HistoryProbability, NormalizationOverRandomProcesses) {
  Rng rng(31);
  for (int t = 0; t < 40; ++t) {
    const std::size_t dim = 2 + rng.uniform_index(5);
    const auto proc = random_process(rng, dim, 1 + rng.uniform_index(3));
    EXPECT_NEAR(sum_all_probabilities(proc), 1.0, 1e-10);
  }
}

TEST(HistoryProbability, MaximallyMixedFinalGivesBorn) {
  Rng rng(12);
  for (int t = 0; t < 20; ++t) {
    const std::size_t dim = 2 + rng.uniform_index(5);
    const auto u = random_unitary(dim, rng);
    const auto event = random_measurement_event(dim, 2, rng);
    const auto initial = random_state(dim, rng);
    Schedule s(dim);
    s.evolve(u).measure(event).evolve(random_unitary(dim, rng));
    const auto probs = history_probabilities(initial, s, Operator::identity(dim));
    const auto evolved = apply(u, initial);
    for (std::size_t k = 0; k < 2; ++k) {
      const double born = apply(event[k], evolved).norm() * apply(event[k], evolved).norm();
      EXPECT_NEAR(probs[k], born, 1e-10);
    }
  }
}

TEST(HistoryProbability, InsertingUUdaggerChangesNothing) {
  Rng rng(41);
  for (int t = 0; t < 20; ++t) {
    const std::size_t dim = 2 + rng.uniform_index(4);
    const auto proc = random_process(rng, dim, 2);
    const auto w = random_unitary(dim, rng);
    // Insert W, W^dagger right after the first step.
    Schedule padded(dim);
    const auto& steps = proc.schedule.steps();
    padded.push(steps[0]);
    padded.evolve(w).evolve(w.adjoint());
    for (std::size_t i = 1; i < steps.size(); ++i) padded.push(steps[i]);
    const TwoBoundaryProcess other(proc.initial, proc.final, padded);
    for (std::size_t a = 0; a < proc.schedule.outcome_counts()[0]; ++a)
      for (std::size_t b = 0; b < proc.schedule.outcome_counts()[1]; ++b)
        EXPECT_NEAR(history_probability(proc, {a, b}), history_probability(other, {a, b}), 1e-10);
  }
}

TEST(ShiftProjection, IdentityAndFlip) {
  const auto p = Projector::onto_basis(2, {0});
  EXPECT_LE(max_abs_diff(shift_projection(p, Unitary::identity(2)), p), 0.0);
  EXPECT_LE(max_abs_diff(shift_projection(p, pauli_x()), Projector::onto_basis(2, {1})), 0.0);
}

TEST(ShiftProjection, IdentityHoldsForRandomTriple) {
  Rng rng(3);
  const auto u1 = random_unitary(6, rng);
  const auto u2 = random_unitary(6, rng);
  const auto p = random_measurement_event(6, 2, rng)[0];
  const auto lhs = u1 * p * u2;
  const auto rhs = u1 * u2 * shift_projection(p, u2);
  EXPECT_LE(max_abs_diff(lhs, rhs), 1e-12);
}

TEST(ShiftProjection, PostponedProjectorGivesSameAmplitudes) {
  Rng rng(19);
  for (int t = 0; t < 20; ++t) {
    const std::size_t dim = 2 + rng.uniform_index(6);
    const auto u1 = random_unitary(dim, rng);
    const auto u2 = random_unitary(dim, rng);
    const auto event = random_measurement_event(dim, 2, rng);
    Schedule in_place(dim);
    in_place.evolve(u1).measure(event).evolve(u2);
    // Shifted: ket runs U1 then U2, so the projector moves past U2 as U2 P U2^dagger.
    std::vector<Projector> moved;
    for (const auto& p : event.projectors()) moved.push_back(shift_projection(p, u2.adjoint()));
    Schedule postponed(dim);
    postponed.evolve(u1).evolve(u2).measure(MeasurementEvent(moved));

    const auto i = random_state(dim, rng);
    const auto f = random_state(dim, rng);
    const TwoBoundaryProcess a(i, f, in_place), b(i, f, postponed);
    for (std::size_t k = 0; k < 2; ++k)
      EXPECT_NEAR(std::abs(history_amplitude(a, {k}) - history_amplitude(b, {k})), 0.0, 1e-12);
  }
}

TEST(Collapse, Cases) {
  const auto p0 = Projector::onto_basis(2, {0});
  EXPECT_LE(max_abs_diff(collapse(plus(), p0), StateVector::basis(2, 0)), 1e-15);
  EXPECT_LE(max_abs_diff(collapse(StateVector::basis(2, 0), p0), StateVector::basis(2, 0)), 0.0);
  EXPECT_THROW(collapse(StateVector::basis(2, 1), p0), EmptyBranch);
}
