#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "pcbo/acquisition.hpp"
#include "pcbo/errors.hpp"

using namespace pcbo;

TEST(BetaT, FirstIterationExample) {
  EXPECT_NEAR(beta_t(1, 2, 0.1), 2.0 * std::log(std::numbers::pi * std::numbers::pi / 0.3), 1e-12);
  // the commonly quoted 6.98714 is off in the fourth decimal
  EXPECT_NEAR(beta_t(1, 2, 0.1), 6.98714, 1e-3);
}

TEST(BetaT, MatchesExpandedForm) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  for (std::size_t t : {1u, 2u, 7u, 50u, 1000u}) {
    for (std::size_t d : {1u, 2u, 6u}) {
      for (double delta : {0.01, 0.1, 0.5, 0.99}) {
        const double want = 2.0 * std::log(pi2 / (3.0 * delta)) + (4.0 + d) * std::log(double(t));
        EXPECT_NEAR(beta_t(t, d, delta), want, 1e-12 * std::max(1.0, want));
      }
    }
  }
}

TEST(BetaT, RejectsBadArguments) {
  EXPECT_THROW(beta_t(0, 2, 0.1), InputError);
  EXPECT_THROW(beta_t(1, 0, 0.1), InputError);
  EXPECT_THROW(beta_t(1, 2, 0.0), InputError);
  EXPECT_THROW(beta_t(1, 2, 1.0), InputError);
}

TEST(ExplorationBeta, FixedUcbIgnoresIteration) {
  for (std::size_t t : {1u, 10u, 100u}) {
    EXPECT_EQ(exploration_beta(AcquisitionSpec::ucb(2.0), t, 3), 2.0);
  }
}

TEST(AcquisitionSpec, ValidateRanges) {
  EXPECT_THROW(AcquisitionSpec::gp_ucb(0.0).validate(), InputError);
  EXPECT_THROW(AcquisitionSpec::gp_ucb(1.5).validate(), InputError);
  EXPECT_THROW(AcquisitionSpec::ucb(0.0).validate(), InputError);
  EXPECT_THROW(AcquisitionSpec::ei(-0.1).validate(), InputError);
  EXPECT_NO_THROW(AcquisitionSpec::ei(0.0).validate());
}

TEST(AlphaUcb, Examples) {
  EXPECT_NEAR(alpha_ucb(0.0, 1.0, 2.0), std::sqrt(2.0), 1e-15);
  EXPECT_EQ(alpha_ucb(1.0, 0.0, 123.0), 1.0);
  EXPECT_NEAR(alpha_ucb(0.5, 0.2, 4.0), 0.9, 1e-15);
}

TEST(AlphaUcb, PositivelyHomogeneous) {
  for (double a : {0.1, 1.0, 3.5}) {
    for (double m : {-2.0, 0.0, 1.5}) {
      for (double s : {0.0, 0.3, 2.0}) {
        EXPECT_NEAR(alpha_ucb(a * m, a * s, 2.0), a * alpha_ucb(m, s, 2.0), 1e-12);
      }
    }
  }
}

TEST(AlphaEi, Examples) {
  EXPECT_NEAR(alpha_ei(0.0, 1.0, 0.0, 0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
  EXPECT_EQ(alpha_ei(2.0, 0.0, 1.0, 0.0), 1.0);
  const double want = static_cast<double>(-oracle::normal_cdf(-1.0L) + oracle::normal_pdf(-1.0L));
  EXPECT_NEAR(alpha_ei(0.0, 1.0, 1.0, 0.0), want, 1e-12);
  EXPECT_NEAR(want, 0.083315, 1e-6);
}

TEST(AlphaEi, MatchesQuadratureOracle) {
  for (double mean : {-1.0, 0.0, 0.4, 2.0}) {
    for (double sd : {0.05, 0.5, 1.0, 3.0}) {
      for (double xi : {0.0, 0.01, 0.3}) {
        const double want = static_cast<double>(oracle::expected_improvement(mean, sd, 0.5, xi));
        EXPECT_NEAR(alpha_ei(mean, sd, 0.5, xi), want, 1e-9) << mean << ' ' << sd << ' ' << xi;
      }
    }
  }
}

TEST(AlphaEi, NonNegativeAndZeroWithoutUncertainty) {
  for (double mean = -3.0; mean <= 3.0; mean += 0.25) {
    for (double sd : {0.0, 1e-8, 0.1, 1.0, 10.0}) {
      EXPECT_GE(alpha_ei(mean, sd, 0.0, 0.01), 0.0);
    }
    if (mean <= 0.01) {
      EXPECT_EQ(alpha_ei(mean, 0.0, 0.0, 0.01), 0.0);
    }
  }
}

TEST(AlphaEi, MonotoneInMeanAndStddev) {
  for (double sd : {0.0, 0.1, 1.0}) {
    double prev = -1.0;
    for (double mean = -4.0; mean <= 4.0; mean += 0.05) {
      const double v = alpha_ei(mean, sd, 0.0, 0.01);
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
  for (double mean : {-2.0, -0.5, 0.0, 0.01}) {
    double prev = -1.0;
    for (double sd = 0.0; sd <= 5.0; sd += 0.05) {
      const double v = alpha_ei(mean, sd, 0.0, 0.01);
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
}

TEST(NormalCdf, MatchesQuadrature) {
  for (double z = -8.0; z <= 8.0; z += 0.5) {
    EXPECT_NEAR(normal_cdf(z), static_cast<double>(oracle::normal_cdf(z)), 1e-12) << z;
  }
}

TEST(Score, PriorSurfaces) {
  KernelSpec k;
  k.output_scale = 1.0;
  const GpPosterior prior(Dataset(2), k);
  for (const Point& x : {Point{0.0, 0.0}, Point{0.3, 0.9}, Point{-5.0, 2.0}}) {
    EXPECT_NEAR(score(prior, AcquisitionSpec::ucb(2.0), x, 1, 0.0), std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(score(prior, AcquisitionSpec::ei(0.0), x, 1, 0.0),
                1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
    EXPECT_NEAR(score(prior, AcquisitionSpec::gp_ucb(0.1), x, 1, 0.0), std::sqrt(beta_t(1, 2, 0.1)),
                1e-12);
  }
  EXPECT_NEAR(std::sqrt(beta_t(1, 2, 0.1)), 2.643268, 1e-6);
}
