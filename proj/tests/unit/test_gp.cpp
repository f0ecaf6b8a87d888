#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "pcbo/errors.hpp"
#include "pcbo/gp.hpp"

using namespace pcbo;

namespace {

KernelSpec spec(KernelKind kind, double scale, double length, double noise) {
  KernelSpec s;
  s.kind = kind;
  s.output_scale = scale;
  s.length_scale = length;
  s.noise_variance = noise;
  return s;
}

struct RandomCase {
  Dataset data;
  KernelSpec kernel;
  std::vector<Point> queries;
};

RandomCase random_case(std::mt19937_64& gen, KernelKind kind) {
  std::uniform_int_distribution<int> nd(1, 20), dd(1, 4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = nd(gen), d = dd(gen);
  RandomCase c{Dataset(d), spec(kind, 0.5 + 2.0 * u(gen), 0.2 + 0.8 * u(gen), 1e-3 + 0.05 * u(gen)),
               {}};
  for (std::size_t i = 0; i < n; ++i) {
    Point x(d);
    for (auto& v : x) v = u(gen);
    c.data.add(x, 4.0 * u(gen) - 2.0);
  }
  for (int q = 0; q < 5; ++q) {
    Point x(d);
    for (auto& v : x) v = 1.2 * u(gen) - 0.1;
    c.queries.push_back(x);
  }
  return c;
}

oracle::Gp to_oracle(const Dataset& d, const KernelSpec& k) {
  oracle::Gp g;
  g.rbf_kernel = k.kind == KernelKind::rbf;
  g.scale = k.output_scale;
  g.length = k.length_scale;
  g.noise = k.noise_variance;
  g.x = d.inputs;
  g.y = d.outputs;
  return g;
}

}  // namespace

TEST(Kernel, IdentityCaseEqualsOutputScale) {
  for (auto kind : {KernelKind::matern25, KernelKind::rbf}) {
    const KernelSpec k = spec(kind, 2.5, 0.3, 0.0);
    const Point x = {0.1, -4.0, 3.0};
    EXPECT_DOUBLE_EQ(kernel_eval(k, x, x), 2.5);
  }
}

TEST(Kernel, RbfAtSqrtTwo) {
  const KernelSpec k = spec(KernelKind::rbf, 1.0, 1.0, 0.0);
  EXPECT_NEAR(kernel_eval(k, Point{0.0, 0.0}, Point{1.0, 1.0}), std::exp(-1.0), 1e-15);
}

TEST(Kernel, MaternAtUnitDistanceMatchesClosedForm) {
  const KernelSpec k = spec(KernelKind::matern25, 1.0, 1.0, 0.0);
  const double expected = static_cast<double>(oracle::matern25(1.0L));
  EXPECT_NEAR(kernel_eval(k, Point{0.0}, Point{1.0}), expected, 1e-15);
  EXPECT_NEAR(expected, 0.523994, 1e-6);
}

TEST(Kernel, DimensionMismatchThrows) {
  const KernelSpec k = spec(KernelKind::rbf, 1.0, 1.0, 0.0);
  EXPECT_THROW(kernel_eval(k, Point{0.0}, Point{0.0, 1.0}), InputError);
}

TEST(KernelSpec, ValidateRejectsBadValues) {
  EXPECT_THROW(spec(KernelKind::rbf, 0.0, 1.0, 0.0).validate(), InputError);
  EXPECT_THROW(spec(KernelKind::rbf, 1.0, -1.0, 0.0).validate(), InputError);
  EXPECT_THROW(spec(KernelKind::rbf, 1.0, 1.0, -1e-3).validate(), InputError);
}

TEST(Dataset, ValidateRejectsRaggedAndNonFinite) {
  Dataset d(2);
  d.inputs.push_back({0.0});
  d.outputs.push_back(1.0);
  EXPECT_THROW(d.validate(), InputError);
  Dataset e(1);
  e.inputs.push_back({0.0});
  e.outputs.push_back(std::nan(""));
  EXPECT_THROW(e.validate(), InputError);
}

TEST(Fit, EmptyDataGivesPrior) {
  const GpPosterior gp(Dataset(2), spec(KernelKind::matern25, 3.0, 0.5, 0.0));
  const Prediction p = gp.predict(Point{0.3, -7.0});
  EXPECT_EQ(p.mean, 0.0);
  EXPECT_EQ(p.variance, 3.0);
  EXPECT_EQ(gp.log_marginal_likelihood(), 0.0);
}

TEST(Fit, OnePointNoiselessInterpolates) {
  Dataset d(1);
  d.add({0.0}, 1.0);
  const GpPosterior gp(d, spec(KernelKind::rbf, 1.0, 1.0, 0.0));
  const Prediction at0 = predict(gp, Point{0.0});
  EXPECT_NEAR(at0.mean, 1.0, 1e-12);
  EXPECT_LE(at0.variance, 1e-8);
  const Prediction at1 = predict(gp, Point{1.0});
  EXPECT_NEAR(at1.mean, std::exp(-0.5), 1e-12);
  EXPECT_NEAR(at1.variance, 1.0 - std::exp(-1.0), 1e-12);
}

TEST(Fit, PredictDimensionMismatchThrows) {
  Dataset d(2);
  d.add({0.0, 0.0}, 1.0);
  const GpPosterior gp(d, spec(KernelKind::rbf, 1.0, 1.0, 0.0));
  EXPECT_THROW(gp.predict(Point{0.0}), InputError);
}

TEST(LogMarginalLikelihood, ScalarCases) {
  Dataset d(1);
  d.add({0.0}, 0.0);
  EXPECT_NEAR(log_marginal_likelihood(GpPosterior(d, spec(KernelKind::rbf, 1.0, 1.0, 0.0))),
              -0.5 * std::log(2.0 * std::numbers::pi), 1e-12);

  Dataset e(1);
  e.add({0.0}, 1.0);
  const double expected = -1.0 / 2.2 - 0.5 * std::log(1.1) - 0.5 * std::log(2.0 * std::numbers::pi);
  EXPECT_NEAR(GpPosterior(e, spec(KernelKind::rbf, 1.0, 1.0, 0.1)).log_marginal_likelihood(),
              expected, 1e-12);
  EXPECT_NEAR(expected, -1.421139, 1e-6);
}

TEST(Fit, FactorReconstructsCovariance) {
  std::mt19937_64 gen(5);
  for (auto kind : {KernelKind::matern25, KernelKind::rbf}) {
    const RandomCase c = random_case(gen, kind);
    const GpPosterior gp(c.data, c.kernel);
    const Eigen::MatrixXd& l = gp.factor();
    const Eigen::MatrixXd rebuilt = l * l.transpose();
    const oracle::Gp o = to_oracle(c.data, c.kernel);
    const oracle::Mat cm = o.c();
    for (std::size_t i = 0; i < c.data.size(); ++i) {
      for (std::size_t j = 0; j < c.data.size(); ++j) {
        const double want = static_cast<double>(cm[i][j]) + (i == j ? gp.applied_jitter() : 0.0);
        EXPECT_NEAR(rebuilt(i, j), want, 1e-8 * std::max(1.0, std::abs(want)));
      }
    }
  }
}

TEST(Fit, MatchesDenseOracleOnRandomData) {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const KernelKind kind = trial % 2 ? KernelKind::rbf : KernelKind::matern25;
    const RandomCase c = random_case(gen, kind);
    const GpPosterior gp(c.data, c.kernel);
    ASSERT_EQ(gp.applied_jitter(), 0.0);
    const oracle::Gp o = to_oracle(c.data, c.kernel);
    for (const Point& q : c.queries) {
      const Prediction p = gp.predict(q);
      const auto [m, v] = o.predict(q);
      EXPECT_NEAR(p.mean, static_cast<double>(m), 1e-8);
      EXPECT_NEAR(p.variance, static_cast<double>(v), 1e-8);
    }
    EXPECT_NEAR(gp.log_marginal_likelihood(), static_cast<double>(o.log_marginal_likelihood()),
                1e-8);
  }
}

TEST(Fit, InputBoxRescalesToUnitCube) {
  Dataset raw(2), unit(2);
  const Bounds box({10.0, 500.0}, {20.0, 600.0});
  const std::vector<Point> xs = {{12.0, 510.0}, {18.0, 580.0}, {15.0, 550.0}};
  const std::vector<double> ys = {1.0, -0.5, 2.0};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    raw.add(xs[i], ys[i]);
    unit.add(box.to_unit(xs[i]), ys[i]);
  }
  const KernelSpec k = spec(KernelKind::matern25, 1.5, 0.4, 1e-4);
  const GpPosterior scaled(raw, k, box), plain(unit, k);
  const Point q = {13.0, 590.0};
  EXPECT_NEAR(scaled.predict(q).mean, plain.predict(box.to_unit(q)).mean, 1e-12);
  EXPECT_NEAR(scaled.predict(q).variance, plain.predict(box.to_unit(q)).variance, 1e-12);
}

TEST(Fit, DuplicatePointsNeedJitter) {
  Dataset d(1);
  d.add({0.5}, 1.0);
  d.add({0.5}, 1.0);
  const GpPosterior gp(d, spec(KernelKind::rbf, 1.0, 1.0, 0.0));
  EXPECT_GT(gp.applied_jitter(), 0.0);
  EXPECT_NEAR(gp.predict(Point{0.5}).mean, 1.0, 1e-6);
}

TEST(Properties, VarianceBoundedByPrior) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    const RandomCase c = random_case(gen, trial % 2 ? KernelKind::rbf : KernelKind::matern25);
    const GpPosterior gp(c.data, c.kernel);
    for (const Point& q : c.queries) {
      const Prediction p = gp.predict(q);
      EXPECT_GE(p.variance, 0.0);
      EXPECT_LE(p.variance, c.kernel.output_scale + 1e-9);
    }
  }
}

TEST(Properties, ObservationNeverRaisesVarianceThere) {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const RandomCase c = random_case(gen, KernelKind::matern25);
    const GpPosterior before(c.data, c.kernel);
    const Point& q = c.queries.front();
    Dataset more = c.data;
    more.add(q, u(gen));
    const GpPosterior after(more, c.kernel);
    EXPECT_LE(after.predict(q).variance, before.predict(q).variance + 1e-12);
  }
}

TEST(Hallucination, MeanUnchangedVarianceReduced) {
  std::mt19937_64 gen(13);
  const RandomCase c = random_case(gen, KernelKind::matern25);
  const GpPosterior gp(c.data, c.kernel);
  const std::vector<Point> extra = {c.queries[0], c.queries[1]};
  const GpPosterior h = gp.with_hallucinated(extra);
  EXPECT_EQ(h.data().size(), c.data.size() + 2);
  for (const Point& q : c.queries) {
    EXPECT_NEAR(h.predict(q).mean, gp.predict(q).mean, 1e-8);
    EXPECT_LE(h.predict(q).variance, gp.predict(q).variance + 1e-12);
  }
  EXPECT_LE(h.predict(c.queries[0]).variance, c.kernel.noise_variance + 1e-9);
}

TEST(Hyperparameters, DegenerateDataReturnsDefault) {
  Dataset d(1);
  d.add({0.2}, 3.0);
  RandomStream rng(1);
  const KernelSpec def = spec(KernelKind::matern25, 2.0, 0.3, 1e-6);
  const HyperparameterFit fit = optimize_hyperparams(d, def, {}, 5, rng);
  EXPECT_EQ(fit.spec, def);
  EXPECT_FALSE(fit.warning);
}

TEST(Hyperparameters, NeverWorseThanDefaultAndWithinBounds) {
  std::mt19937_64 gen(14);
  for (int trial = 0; trial < 10; ++trial) {
    RandomCase c = random_case(gen, trial % 2 ? KernelKind::rbf : KernelKind::matern25);
    if (c.data.size() < 2) c.data.add(Point(c.data.dim, 0.5), 0.1);
    const double ref = output_reference(c.data.outputs);
    KernelSpec def = spec(c.kernel.kind, ref, 0.5, 1e-6 * ref);
    RandomStream rng(static_cast<std::uint64_t>(trial));
    const HyperparameterBounds b;
    const HyperparameterFit fit = optimize_hyperparams(c.data, def, b, 5, rng);
    const double lml_default = GpPosterior(c.data, def).log_marginal_likelihood();
    const double lml_fit = GpPosterior(c.data, fit.spec).log_marginal_likelihood();
    EXPECT_GE(lml_fit, lml_default - 1e-9);
    EXPECT_NEAR(fit.log_likelihood, lml_fit, 1e-6 * std::max(1.0, std::abs(lml_fit)));
    EXPECT_GE(fit.spec.length_scale, b.length_lower * (1 - 1e-12));
    EXPECT_LE(fit.spec.length_scale, b.length_upper * (1 + 1e-12));
    EXPECT_GE(fit.spec.output_scale, b.scale_lower_rel * ref * (1 - 1e-12));
    EXPECT_LE(fit.spec.output_scale, b.scale_upper_rel * ref * (1 + 1e-12));
    EXPECT_DOUBLE_EQ(fit.spec.noise_variance, b.noise_rel * ref);
  }
}

TEST(Hyperparameters, RecoversLengthScaleOfGeneratingKernel) {
  // 40 points of one draw from a Matern GP with length 0.5 on [0,1]
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  oracle::Gp truth;
  truth.length = 0.5;
  std::vector<Point> xs;
  for (int i = 0; i < 40; ++i) xs.push_back({u(gen)});
  truth.x = xs;
  truth.noise = 1e-8;
  const oracle::Mat l = oracle::cholesky(truth.c());
  std::vector<long double> zs(40);
  for (auto& v : zs) v = z(gen);
  Dataset d(1);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    long double f = 0;
    for (std::size_t j = 0; j <= i; ++j) f += l[i][j] * zs[j];
    d.add(xs[i], static_cast<double>(f));
  }
  RandomStream rng(3);
  const double ref = output_reference(d.outputs);
  const HyperparameterFit fit = optimize_hyperparams(
      d, spec(KernelKind::matern25, ref, 0.2, 1e-6 * ref), {}, 5, rng, Bounds({0.0}, {1.0}));
  EXPECT_GE(fit.spec.length_scale, 0.25);
  EXPECT_LE(fit.spec.length_scale, 1.0);
}

TEST(Hyperparameters, DeterministicForSeedAndWarmStart) {
  std::mt19937_64 gen(15);
  const RandomCase c = random_case(gen, KernelKind::matern25);
  const KernelSpec def = spec(KernelKind::matern25, 1.0, 0.5, 1e-6);
  RandomStream r1(8), r2(8);
  const auto a = optimize_hyperparams(c.data, def, {}, 5, r1, std::nullopt, c.kernel);
  const auto b = optimize_hyperparams(c.data, def, {}, 5, r2, std::nullopt, c.kernel);
  EXPECT_EQ(a.spec, b.spec);
  EXPECT_EQ(a.log_likelihood, b.log_likelihood);
}

TEST(SampleOnGrid, PriorSinglePointIsFirstNormal) {
  const GpPosterior prior(Dataset(1), spec(KernelKind::matern25, 1.0, 1.0, 0.0));
  RandomStream rng(31), replay(31);
  const std::vector<double> draw = sample_on_grid(prior, {{0.4}}, rng);
  ASSERT_EQ(draw.size(), 1u);
  EXPECT_DOUBLE_EQ(draw[0], replay.normal());
}

TEST(SampleOnGrid, NoiselessTrainingPointReturnsObservation) {
  Dataset d(1);
  d.add({0.2}, 1.7);
  d.add({0.8}, -0.4);
  const GpPosterior gp(d, spec(KernelKind::matern25, 1.0, 0.3, 0.0));
  RandomStream rng(4);
  const auto draw = sample_on_grid(gp, {{0.2}, {0.5}, {0.8}}, rng);
  EXPECT_NEAR(draw[0], 1.7, 1e-6);
  EXPECT_NEAR(draw[2], -0.4, 1e-6);
}

TEST(SampleOnGrid, SameSeedSameDraw) {
  Dataset d(2);
  d.add({0.1, 0.1}, 1.0);
  const GpPosterior gp(d, spec(KernelKind::rbf, 1.0, 0.4, 1e-6));
  std::vector<Point> grid;
  for (double a : {0.0, 0.5, 1.0}) {
    for (double b : {0.0, 0.5, 1.0}) grid.push_back({a, b});
  }
  RandomStream r1(77), r2(77);
  EXPECT_EQ(sample_on_grid(gp, grid, r1), sample_on_grid(gp, grid, r2));
}

TEST(SampleOnGrid, ReplaysDocumentedDrawFormula) {
  Dataset d(1);
  d.add({0.3}, 0.5);
  d.add({0.9}, -1.0);
  const KernelSpec k = spec(KernelKind::matern25, 1.3, 0.25, 0.0);
  const GpPosterior gp(d, k);
  std::vector<Point> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back({i / 10.0});  // includes noiseless 0.3 and 0.9

  const oracle::Gp o = to_oracle(d, k);
  const long double threshold = kDeterministicVarianceFraction * k.output_scale;
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (o.covariance(grid[i], grid[i]) > threshold) free.push_back(i);
  }
  EXPECT_EQ(free.size(), grid.size() - 2);
  oracle::Mat cov(free.size(), oracle::Vec(free.size()));
  for (std::size_t i = 0; i < free.size(); ++i) {
    for (std::size_t j = 0; j < free.size(); ++j) cov[i][j] = o.covariance(grid[free[i]], grid[free[j]]);
  }
  const oracle::Mat l = oracle::cholesky(cov);

  RandomStream rng(5), replay(5);
  const std::vector<double> draw = sample_on_grid(gp, grid, rng);
  std::vector<long double> zs(grid.size());
  for (auto& z : zs) z = replay.normal();
  for (std::size_t i = 0, r = 0; i < grid.size(); ++i) {
    long double want = o.predict(grid[i]).first;
    if (r < free.size() && free[r] == i) {
      for (std::size_t j = 0; j <= r; ++j) want += l[r][j] * zs[free[j]];
      ++r;
    }
    EXPECT_NEAR(draw[i], static_cast<double>(want), 1e-8) << "grid index " << i;
  }
}

TEST(SampleOnGrid, EmpiricalMomentsMatchPredict) {
  Dataset d(1);
  d.add({0.0}, 1.0);
  d.add({1.0}, 2.0);
  const GpPosterior gp(d, spec(KernelKind::matern25, 1.0, 0.5, 1e-4));
  const GridSampler sampler(gp, {{0.6}});
  RandomStream rng(2718);
  const int n = 5000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double v = sampler.draw(rng)[0];
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  const Prediction p = gp.predict(Point{0.6});
  EXPECT_NEAR(mean, p.mean, 0.05 * std::abs(p.mean));
  EXPECT_NEAR(var, p.variance, 0.05 * p.variance);
}

TEST(SampleOnGrid, EmptyGridThrows) {
  const GpPosterior prior(Dataset(1), spec(KernelKind::rbf, 1.0, 1.0, 0.0));
  RandomStream rng(1);
  EXPECT_THROW(sample_on_grid(prior, {}, rng), InputError);
}

TEST(OutputReference, FallbackOrder) {
  EXPECT_DOUBLE_EQ(output_reference(std::vector<double>{1.0, 3.0}), 1.0);
  EXPECT_DOUBLE_EQ(output_reference(std::vector<double>{2.0, 2.0}), 4.0);
  EXPECT_DOUBLE_EQ(output_reference(std::vector<double>{0.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(output_reference(std::vector<double>{}), 1.0);
}
