#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ionraman/observables.hpp"
#include "test_support.hpp"

using namespace ionraman;

namespace {

double poisson_tail(double nbar, int n_from) {
  double p = std::exp(-nbar), below = 0.0;
  for (int n = 0; n < n_from; ++n) {
    below += p;
    p *= nbar / (n + 1.0);
  }
  return 1.0 - below;
}

double kolmogorov_to_poisson(const std::vector<double>& dist, double nbar) {
  double cdf = 0.0, ref = 0.0, p = std::exp(-nbar), worst = 0.0;
  for (std::size_t n = 0; n < dist.size(); ++n) {
    cdf += dist[n];
    ref += p;
    p *= nbar / (n + 1.0);
    worst = std::max(worst, std::abs(cdf - ref));
  }
  return worst;
}

}  // namespace

TEST(States, FockStateIsPureProjector) {
  const SystemSpace s(6, 2);
  const Operator rho = fock_state(s, 2, 1);
  EXPECT_EQ(rho(s.index(1, 2), s.index(1, 2)), Complex(1.0));
  EXPECT_NEAR(purity(rho), 1.0, 1e-15);
  EXPECT_EQ(p_down(rho, s), 0.0);
  EXPECT_EQ(p_up(rho, s), 1.0);
  EXPECT_EQ(mean_phonon(rho, s), 2.0);
}

TEST(States, CoherentMeanAndNorm) {
  const SystemSpace s(25, 2);
  const Operator rho = coherent_state(s, std::sqrt(3.0), 0);
  EXPECT_NEAR(rho.trace().real(), 1.0, 1e-14);
  EXPECT_NEAR(mean_phonon(rho, s), 3.0, 1e-9);
  EXPECT_NEAR(p_down(rho, s), 1.0, 1e-14);
  EXPECT_NEAR(purity(rho), 1.0, 1e-13);
}

TEST(States, CoherentPopulationsArePoissonian) {
  for (double nbar : {0.5, 1.0, 3.0, 8.0}) {
    const int n = default_fock_dim(nbar);
    const SystemSpace s(n, 2);
    const auto dist = phonon_distribution(coherent_state(s, std::sqrt(nbar), 0), s);
    // Renormalizing the truncated state moves the CDF by at most the tail mass.
    EXPECT_LE(kolmogorov_to_poisson(dist, nbar), poisson_tail(nbar, n) + 1e-14) << nbar;
  }
  const SystemSpace s(25, 2);
  EXPECT_LT(kolmogorov_to_poisson(phonon_distribution(coherent_state(s, std::sqrt(3.0), 0), s), 3.0), 1e-8);
}

TEST(States, CoherentTruncationGuard) {
  const SystemSpace s(15, 2);
  EXPECT_THROW(coherent_state(s, 2.0, 0), DimensionError);  // 4 + 14 >= 15
  EXPECT_NO_THROW(coherent_state(s, 1.0, 0));
  EXPECT_THROW(coherent_state(s, 1.0, 2), DimensionError);
}

TEST(States, CoherentPhaseEntersAmplitudes) {
  const SystemSpace s(20, 2);
  const StateVector c = coherent_amplitudes(s, std::polar(1.2, 0.5));
  EXPECT_NEAR(std::arg(c(3)), std::remainder(1.5, kTwoPi), 1e-12);
}

TEST(Observables, CoherenceConjugateSymmetry) {
  std::mt19937 rng(21);
  const SystemSpace s(5, 2);
  for (int k = 0; k < 10; ++k) {
    const Operator rho = test::random_density(s.dim(), rng);
    EXPECT_LT(std::abs(coherence_01(rho, s) - std::conj(coherence_10(rho, s))), 1e-14);
  }
}

TEST(Observables, CoherenceOfSuperposition) {
  const SystemSpace s(4, 2);
  const StateVector psi = normalized(basis_state(s, 0, 1) + kI * basis_state(s, 1, 1));
  const Operator rho = pure_density(psi);
  EXPECT_NEAR(std::abs(coherence_01(rho, s)), 0.5, 1e-15);
  EXPECT_NEAR(coherence_01(rho, s).imag(), -0.5, 1e-15);
  EXPECT_NEAR(p_down(rho, s) + p_up(rho, s), 1.0, 1e-15);
}

TEST(Observables, ThreeLevelPopulations) {
  const SystemSpace s(3, 3);
  const Operator rho = fock_state(s, 1, 2);
  EXPECT_EQ(p_down(rho, s), 0.0);
  EXPECT_EQ(p_up(rho, s), 0.0);
  EXPECT_EQ(mean_phonon(rho, s), 1.0);
}

TEST(Observables, MinEigenvalueAndHermiticity) {
  Operator rho = Operator::Zero(2, 2);
  rho(0, 0) = 1.2;
  rho(1, 1) = -0.2;
  EXPECT_NEAR(min_eigenvalue(rho), -0.2, 1e-15);
  rho(0, 1) = 0.1;
  EXPECT_NEAR(hermiticity_deviation(rho), 0.1, 1e-15);
}

TEST(Observables, DimensionChecks) {
  const SystemSpace s(4, 2);
  EXPECT_THROW(p_down(Operator::Identity(6, 6), s), DimensionError);
  EXPECT_THROW(coherence_01(Operator::Identity(6, 6), s), DimensionError);
}

TEST(Observables, CheckDensity) {
  const SystemSpace s(3, 2);
  EXPECT_NO_THROW(check_density(fock_state(s, 0, 0)));
  EXPECT_THROW(check_density(2.0 * fock_state(s, 0, 0)), Error);
  Operator bad = fock_state(s, 0, 0);
  bad(0, 1) = 0.1;
  EXPECT_THROW(check_density(bad), Error);
}
