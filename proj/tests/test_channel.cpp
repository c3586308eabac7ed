// SPDX-License-Identifier: Apache-2.0

#include <risnp/channel.hpp>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include <map>
#include <sstream>

using namespace risnp;

namespace
{
    CMatrix random_matrix(Rng &rng, int rows, int cols)
    {
        CMatrix m(rows, cols);
        for (int c = 0; c < cols; ++c)
            for (int r = 0; r < rows; ++r)
                m(r, c) = complex_gaussian(rng);
        return m;
    }

    int numerical_rank(const CMatrix &m, double tol = 1e-9)
    {
        Eigen::JacobiSVD<CMatrix> svd(m);
        const auto &s = svd.singularValues();
        return static_cast<int>((s.array() > tol).count());
    }
} // namespace

TEST(SteeringVector, UlaAtBroadsideIsUniform)
{
    const CVector a = steering_vector(ArrayGeometry::ula(4), pi / 2.0);
    for (int n = 0; n < 4; ++n)
        EXPECT_NEAR(std::abs(a(n) - cdouble(0.5, 0.0)), 0.0, 1e-12);
}

TEST(SteeringVector, UraFirstElementHasZeroPhase)
{
    Rng rng(3);
    for (int t = 0; t < 20; ++t)
    {
        const CVector a = steering_vector(ArrayGeometry::ura(4, 6), uniform(rng, -pi / 2, pi / 2),
                                          uniform(rng, -pi / 2, pi / 2));
        EXPECT_NEAR(std::arg(a(0)), 0.0, 1e-15);
    }
}

TEST(SteeringVector, UlaMatchesClosedForm)
{
    const CVector a = steering_vector(ArrayGeometry::ula(8), pi / 3.0);
    for (int n = 0; n < 8; ++n)
    {
        const cdouble expected = std::exp(cdouble(0.0, n * 0.5)) / std::sqrt(8.0);
        EXPECT_NEAR(std::abs(a(n) - expected), 0.0, 1e-12) << "element " << n;
    }
}

TEST(SteeringVector, UraMatchesClosedForm)
{
    const double az = 0.4, el = -0.7;
    const auto geom = ArrayGeometry::ura(3, 5);
    const CVector a = steering_vector(geom, az, el);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 5; ++j)
        {
            const double xi = i * std::sin(el) * std::sin(az) + j * std::cos(az);
            EXPECT_NEAR(std::abs(a(i * 5 + j) - std::exp(cdouble(0.0, xi)) / std::sqrt(15.0)), 0.0, 1e-12);
        }
}

TEST(SteeringVector, UnitNormEverywhere)
{
    Rng rng(11);
    for (int t = 0; t < 200; ++t)
    {
        const int rows = 1 + static_cast<int>(rng() % 8);
        const int cols = 1 + static_cast<int>(rng() % 16);
        const auto geom = (t % 2) ? ArrayGeometry::ura(rows, cols) : ArrayGeometry::ula(cols);
        const CVector a = steering_vector(geom, uniform(rng, -pi / 2, pi / 2), uniform(rng, -pi / 2, pi / 2));
        EXPECT_NEAR(a.norm(), 1.0, 1e-12);
    }
}

TEST(SteeringVector, RejectsNonFiniteAngle)
{
    EXPECT_THROW(steering_vector(ArrayGeometry::ula(4), std::nan("")), InvalidArgument);
    EXPECT_THROW(steering_vector(ArrayGeometry::ura(2, 2), 0.1, INFINITY), InvalidArgument);
}

TEST(ArrayGeometry, RejectsInvalidShapes)
{
    EXPECT_THROW(ArrayGeometry::ula(0), InvalidArgument);
    EXPECT_THROW(ArrayGeometry::ura(2, 0), InvalidArgument);
    EXPECT_THROW(ArrayGeometry::ula(4, -0.5), InvalidArgument);
}

TEST(PathChannel, SingleBroadsideClusterIsUniform)
{
    PathCluster c;
    c.aoa_azimuth = c.aod_azimuth = pi / 2.0;
    const CMatrix h = gen_path_channel(ArrayGeometry::ula(2), ArrayGeometry::ula(2), {c});
    for (int r = 0; r < 2; ++r)
        for (int k = 0; k < 2; ++k)
            EXPECT_NEAR(std::abs(h(r, k)), 0.5, 1e-12);
    EXPECT_EQ(numerical_rank(h), 1);
}

TEST(PathChannel, FrobeniusNormScalesWithGain)
{
    PathCluster c;
    c.gain = 2.0;
    c.aoa_azimuth = 0.3;
    c.aod_azimuth = -0.9;
    const CMatrix h = gen_path_channel(ArrayGeometry::ula(5), ArrayGeometry::ula(3), {c});
    EXPECT_NEAR(h.norm(), 2.0, 1e-12);
}

TEST(PathChannel, ThreeDistinctClustersGiveRankThree)
{
    std::vector<PathCluster> clusters(3);
    const double aoa[] = {-1.2, 0.1, 0.9};
    const double aod[] = {0.7, -0.4, 1.3};
    for (int l = 0; l < 3; ++l)
    {
        clusters[l].gain = cdouble(1.0 + l, 0.5 * l);
        clusters[l].aoa_azimuth = aoa[l];
        clusters[l].aod_azimuth = aod[l];
    }
    const CMatrix h = gen_path_channel(ArrayGeometry::ula(4), ArrayGeometry::ula(4), clusters);

    // Independent construction: explicit sum of outer products.
    CMatrix oracle = CMatrix::Zero(4, 4);
    for (const auto &c : clusters)
        for (int r = 0; r < 4; ++r)
            for (int k = 0; k < 4; ++k)
                oracle(r, k) += c.gain * std::exp(cdouble(0, r * std::cos(c.aoa_azimuth))) *
                                std::exp(cdouble(0, -k * std::cos(c.aod_azimuth))) / 4.0;
    oracle /= std::sqrt(3.0);
    EXPECT_LT((h - oracle).norm(), 1e-12);
    EXPECT_EQ(numerical_rank(oracle), 3);
    EXPECT_EQ(numerical_rank(h), 3);
}

TEST(PathChannel, RankNeverExceedsClusterCount)
{
    Rng rng(5);
    for (int t = 0; t < 100; ++t)
    {
        const int nt = 1 + static_cast<int>(rng() % 8);
        const int nr = 1 + static_cast<int>(rng() % 8);
        const int l = 1 + static_cast<int>(rng() % 4);
        std::vector<PathCluster> clusters(l);
        for (auto &c : clusters)
        {
            c.gain = complex_gaussian(rng);
            c.aoa_azimuth = uniform(rng, -pi / 2, pi / 2);
            c.aod_azimuth = uniform(rng, -pi / 2, pi / 2);
        }
        const CMatrix h = gen_path_channel(ArrayGeometry::ula(nt), ArrayGeometry::ula(nr), clusters);
        ASSERT_EQ(h.rows(), nr);
        ASSERT_EQ(h.cols(), nt);
        EXPECT_LE(numerical_rank(h), l);
    }
}

TEST(PathChannel, EmptyClusterListThrows)
{
    EXPECT_THROW(gen_path_channel(ArrayGeometry::ula(2), ArrayGeometry::ula(2), {}), InvalidArgument);
}

TEST(CascadedChannel, IdentityPhasesGiveProduct)
{
    Rng rng(1);
    ChannelRealization real;
    real.h_direct = random_matrix(rng, 3, 4);
    real.h_ris_ms = random_matrix(rng, 3, 6);
    real.h_bs_ris = random_matrix(rng, 6, 4);
    const CMatrix z = cascaded_channel(real, CVector::Ones(6));
    EXPECT_LT((z - real.h_ris_ms * real.h_bs_ris).norm(), 1e-12);
}

TEST(CascadedChannel, SingleElementIsScaledOuterProduct)
{
    Rng rng(2);
    const CMatrix col = random_matrix(rng, 3, 1);
    const CMatrix row = random_matrix(rng, 1, 4);
    CVector theta(1);
    theta(0) = std::polar(1.0, 0.77);
    const CMatrix z = cascaded_channel(col, row, theta);
    EXPECT_LT((z - theta(0) * col * row).norm(), 1e-12);
}

TEST(CascadedChannel, MatchesTripleLoop)
{
    Rng rng(3);
    const CMatrix hr = random_matrix(rng, 2, 2);
    const CMatrix hb = random_matrix(rng, 2, 2);
    CVector theta(2);
    theta << std::polar(1.0, 0.3), std::polar(1.0, -2.1);
    const CMatrix z = cascaded_channel(hr, hb, theta);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
        {
            cdouble acc = 0.0;
            for (int m = 0; m < 2; ++m)
                acc += hr(i, m) * theta(m) * hb(m, j);
            EXPECT_NEAR(std::abs(z(i, j) - acc), 0.0, 1e-12);
        }
}

TEST(CascadedChannel, DimensionMismatchThrows)
{
    Rng rng(4);
    EXPECT_THROW(cascaded_channel(random_matrix(rng, 2, 3), random_matrix(rng, 3, 2), CVector::Ones(4)),
                 InvalidArgument);
}

namespace
{
    ChannelRealization small_realization(std::uint64_t seed)
    {
        Rng rng(seed);
        ChannelRealization real;
        real.h_direct = random_matrix(rng, 2, 3);
        real.h_ris_ms = random_matrix(rng, 2, 5);
        real.h_bs_ris = random_matrix(rng, 5, 3);
        real.rho_direct = 0.7;
        real.rho_cascade = 0.2;
        real.kappa = 3.0;
        return real;
    }
} // namespace

TEST(EffectiveChannel, FullBlockageLeavesOnlyCascade)
{
    auto real = small_realization(7);
    real.epsilon = 0.0;
    const CVector theta = CVector::Ones(5);
    const CMatrix h = compose_effective_channel(real, theta, true);
    EXPECT_LT((h - real.upsilon1(true) * cascaded_channel(real, theta)).norm(), 1e-14);
}

TEST(EffectiveChannel, ZeroRicianFactorRemovesLosDirectTerm)
{
    auto real = small_realization(8);
    real.kappa = 0.0;
    EXPECT_EQ(real.upsilon0(true), 0.0);
    const CVector theta = CVector::Ones(5);
    const CMatrix h = compose_effective_channel(real, theta, true);
    EXPECT_LT((h - std::sqrt(real.rho_cascade) * cascaded_channel(real, theta)).norm(), 1e-14);
}

TEST(EffectiveChannel, UnitWeightsAverageTheTwoPaths)
{
    auto real = small_realization(9);
    real.epsilon = 1.0;
    real.kappa = 1.0;
    real.rho_direct = real.rho_cascade = 1.0;
    CVector theta(5);
    for (int n = 0; n < 5; ++n)
        theta(n) = std::polar(1.0, 0.4 * n);
    const CMatrix h = compose_effective_channel(real, theta, true);
    const CMatrix expected = (real.h_direct + cascaded_channel(real, theta)) / std::sqrt(2.0);
    EXPECT_LT((h - expected).norm(), 1e-12);
}

TEST(EffectiveChannel, NlosPutsRicianFactorOnCascade)
{
    const auto real = small_realization(10);
    EXPECT_NEAR(real.upsilon0(false), std::sqrt(0.7 / 4.0), 1e-15);
    EXPECT_NEAR(real.upsilon1(false), std::sqrt(3.0 * 0.2 / 4.0), 1e-15);
}

TEST(EffectiveChannel, LinearInEpsilon)
{
    Rng rng(12);
    for (int t = 0; t < 20; ++t)
    {
        auto real = small_realization(100 + t);
        CVector theta(5);
        for (int n = 0; n < 5; ++n)
            theta(n) = std::polar(1.0, uniform(rng, -pi, pi));
        const bool los = t % 2;
        real.epsilon = 0.0;
        const CMatrix h0 = compose_effective_channel(real, theta, los);
        real.epsilon = 1.0;
        const CMatrix h1 = compose_effective_channel(real, theta, los);
        real.epsilon = uniform(rng, 0.0, 1.0);
        const CMatrix he = compose_effective_channel(real, theta, los);
        EXPECT_LT((he - (h0 + real.epsilon * (h1 - h0))).norm(), 1e-12);
    }
}

TEST(CsiError, FullReliabilityIsIdentity)
{
    Rng rng(13);
    const CMatrix h = random_matrix(rng, 4, 7);
    const CMatrix out = inject_csi_error(h, {1.0, 99});
    EXPECT_EQ((out - h).norm(), 0.0);
}

TEST(CsiError, ZeroReliabilityIgnoresInput)
{
    Rng rng(14);
    const CMatrix h1 = random_matrix(rng, 3, 3);
    const CMatrix h2 = random_matrix(rng, 3, 3);
    const CMatrix a = inject_csi_error(h1, {0.0, 5});
    const CMatrix b = inject_csi_error(h2, {0.0, 5});
    EXPECT_EQ((a - b).norm(), 0.0);
}

TEST(CsiError, SameSeedIsBitReproducible)
{
    Rng rng(15);
    const CMatrix h = random_matrix(rng, 4, 4);
    const CMatrix a = inject_csi_error(h, {0.8, 1234});
    const CMatrix b = inject_csi_error(h, {0.8, 1234});
    EXPECT_TRUE(a == b);
    EXPECT_FALSE(a == inject_csi_error(h, {0.8, 1235}));
}

TEST(CsiError, ErrorVarianceMatchesReliability)
{
    for (double rel : {0.5, 0.8, 0.95})
    {
        CMatrix h(1, 1);
        h(0, 0) = cdouble(0.3, -1.1);
        double acc = 0.0;
        const int draws = 10000;
        for (int s = 0; s < draws; ++s)
            acc += std::norm(inject_csi_error(h, {rel, derive_seed(77, s)})(0, 0) - rel * h(0, 0));
        const double var = acc / draws;
        const double expected = 1.0 - rel * rel;
        EXPECT_NEAR(var, expected, 0.05 * expected) << "reliability " << rel;
        if (rel == 0.8)
            EXPECT_NEAR(var, 0.36, 0.02);
    }
}

TEST(CsiError, RejectsReliabilityOutsideUnitInterval)
{
    EXPECT_THROW(inject_csi_error(CMatrix::Ones(1, 1), {1.5, 0}), InvalidArgument);
}

TEST(PhaseMse, Cases)
{
    CVector a(1), b(1);
    a(0) = 1.0;
    b(0) = -1.0;
    EXPECT_DOUBLE_EQ(phase_mse(a, b), 4.0);
    EXPECT_DOUBLE_EQ(phase_mse(a, a), 0.0);
    EXPECT_THROW(phase_mse(a, CVector::Ones(2)), InvalidArgument);

    Rng rng(16);
    CVector x(16), y(16);
    for (int n = 0; n < 16; ++n)
    {
        x(n) = std::polar(1.0, uniform(rng, -pi, pi));
        y(n) = std::polar(1.0, uniform(rng, -pi, pi));
    }
    double loop = 0.0;
    for (int n = 0; n < 16; ++n)
    {
        const double dr = x(n).real() - y(n).real();
        const double di = x(n).imag() - y(n).imag();
        loop += dr * dr + di * di;
    }
    EXPECT_NEAR(phase_mse(x, y), loop / 16.0, 1e-14);
}

TEST(Blockage, MeanCountMatchesIntensity)
{
    BlockageProcess p{10.0, {0.0, 0.0, 1.0, 1.0}};
    double total = 0.0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t)
        total += static_cast<double>(gen_blockage_events(p, derive_seed(1, t)).size());
    EXPECT_NEAR(total / trials, 10.0, 0.1);
}

TEST(Blockage, VanishingIntensityGivesNoEvents)
{
    BlockageProcess p{1e-6, {0.0, 0.0, 1.0, 1.0}};
    int nonzero = 0;
    for (int t = 0; t < 10000; ++t)
        nonzero += !gen_blockage_events(p, derive_seed(2, t)).empty();
    EXPECT_LE(nonzero, 2);
}

TEST(Blockage, DeterministicForFixedSeed)
{
    BlockageProcess p{3.0, {-5.0, -2.0, 5.0, 2.0}};
    const auto a = gen_blockage_events(p, 42);
    const auto b = gen_blockage_events(p, 42);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k)
    {
        EXPECT_EQ(a[k].x, b[k].x);
        EXPECT_EQ(a[k].y, b[k].y);
        EXPECT_EQ(a[k].epsilon, b[k].epsilon);
        EXPECT_GE(a[k].x, -5.0);
        EXPECT_LE(a[k].x, 5.0);
        EXPECT_GE(a[k].epsilon, 0.0);
        EXPECT_LE(a[k].epsilon, 1.0);
    }
}

TEST(Blockage, CountsPassChiSquaredGoodnessOfFit)
{
    const double mean = 10.0;
    BlockageProcess p{mean, {0.0, 0.0, 1.0, 1.0}};
    const int trials = 10000;
    std::map<long, int> hist;
    for (int t = 0; t < trials; ++t)
        ++hist[static_cast<long>(gen_blockage_events(p, derive_seed(3, t)).size())];

    // Bins 0..3 pooled, 4..17 individually, >= 18 pooled: all expected counts >= 5.
    auto pmf = [mean](long k) { return std::exp(-mean + k * std::log(mean) - std::lgamma(k + 1.0)); };
    std::vector<double> expected, observed;
    double lo_p = 0.0;
    int lo_o = 0;
    for (long k = 0; k <= 3; ++k)
    {
        lo_p += pmf(k);
        lo_o += hist[k];
    }
    expected.push_back(lo_p * trials);
    observed.push_back(lo_o);
    double used = lo_p;
    int used_o = lo_o;
    for (long k = 4; k <= 17; ++k)
    {
        expected.push_back(pmf(k) * trials);
        observed.push_back(hist[k]);
        used += pmf(k);
        used_o += hist[k];
    }
    expected.push_back((1.0 - used) * trials);
    observed.push_back(trials - used_o);

    double chi2 = 0.0;
    for (std::size_t b = 0; b < expected.size(); ++b)
    {
        ASSERT_GE(expected[b], 5.0);
        chi2 += std::pow(observed[b] - expected[b], 2) / expected[b];
    }
    const boost::math::chi_squared dist(static_cast<double>(expected.size() - 1));
    EXPECT_LT(chi2, boost::math::quantile(dist, 0.99));
}

TEST(Blockage, StrongestBlockerDominates)
{
    std::vector<BlockageEvent> ev{{0, 0, 0.6}, {0, 0, 0.2}, {0, 0, 0.9}, {0, 0, 0.05}};
    EXPECT_DOUBLE_EQ(blocked_epsilon(ev, 3), 0.2);
    EXPECT_DOUBLE_EQ(blocked_epsilon(ev, 10), 0.05);
    EXPECT_DOUBLE_EQ(blocked_epsilon({}, 5), 1.0);
}

TEST(AngleReciprocity, BoresightIsFixedPoint)
{
    const auto m = angle_reciprocity_map(0.0, 0.0);
    EXPECT_EQ(m.azimuth, 0.0);
    EXPECT_EQ(m.elevation, 0.0);
}

TEST(AngleReciprocity, IsAnInvolution)
{
    Rng rng(20);
    for (int t = 0; t < 50; ++t)
    {
        const double az = uniform(rng, -pi / 2, pi / 2), el = uniform(rng, -pi / 2, pi / 2);
        const auto once = angle_reciprocity_map(az, el);
        const auto twice = angle_reciprocity_map(once.azimuth, once.elevation);
        EXPECT_DOUBLE_EQ(twice.azimuth, az);
        EXPECT_DOUBLE_EQ(twice.elevation, el);
    }
}

TEST(AngleReciprocity, AgreesWithRayTrace)
{
    // RIS at the origin facing +y with elements along +x; MS array parallel to
    // it, facing back toward the RIS (-y), placed 30 m away and 4 m lower.
    for (double departure : {0.3, -0.6, 1.1})
    {
        const double r = 30.0, dz = -4.0;
        const double mx = r * std::sin(departure), my = r * std::cos(departure);

        // Arrival at the MS: direction back toward the RIS in the MS frame.
        const double vx = -mx, vy = -my, vz = -dz;
        const double aoa_az = std::atan2(vx, -vy);
        const double aoa_el = std::atan2(vz, std::hypot(vx, vy));

        // Departure at the RIS in its own frame.
        const double aod_az = std::atan2(mx, my);
        const double aod_el = std::atan2(dz, std::hypot(mx, my));

        const auto mapped = angle_reciprocity_map(aoa_az, aoa_el);
        EXPECT_NEAR(mapped.azimuth, aod_az, 1e-12);
        EXPECT_NEAR(mapped.elevation, aod_el, 1e-12);
        EXPECT_NEAR(aod_az, departure, 1e-12);
    }
}

TEST(PathGains, InverseSquareLaw)
{
    const auto a = path_gains(50.0, 100.0, 30.0, 28e9);
    const auto b = path_gains(100.0, 100.0, 30.0, 28e9);
    EXPECT_NEAR(a.direct / b.direct, 4.0, 1e-12);
}

TEST(PathGains, CascadeMatchesHandFriis)
{
    const double lambda = 299792458.0 / 28e9;
    const double expected = std::pow(lambda / (4.0 * 3.141592653589793 * 100.0 * 30.0), 2);
    const auto g = path_gains(120.0, 100.0, 30.0, 28e9);
    EXPECT_NEAR(g.cascade / expected, 1.0, 1e-12);
}

TEST(PathGains, CascadeWeakerThanDirectAtEqualLength)
{
    const auto g = path_gains(130.0, 100.0, 30.0, 28e9);
    EXPECT_LT(g.cascade, g.direct);
}

TEST(PathGains, RejectsNonPositiveDistance)
{
    EXPECT_THROW(path_gains(0.0, 1.0, 1.0, 28e9), InvalidArgument);
    EXPECT_THROW(path_gains(1.0, -1.0, 1.0, 28e9), InvalidArgument);
}

TEST(Realization, ShapesAndDeterminism)
{
    LinkLayout layout;
    layout.bs = ArrayGeometry::ula(8);
    layout.ms = ArrayGeometry::ula(2);
    layout.ris = ArrayGeometry::ura(4, 4);
    Rng a(9), b(9);
    const auto ra = draw_realization(layout, a);
    const auto rb = draw_realization(layout, b);
    ra.validate();
    EXPECT_EQ(ra.h_direct.rows(), 2);
    EXPECT_EQ(ra.h_direct.cols(), 8);
    EXPECT_EQ(ra.h_ris_ms.cols(), 16);
    EXPECT_EQ(ra.h_bs_ris.rows(), 16);
    EXPECT_TRUE(ra.h_ris_ms == rb.h_ris_ms);
    EXPECT_TRUE(ra.h_direct == rb.h_direct);
}

TEST(Realization, CsvExportIsRowMajorPairs)
{
    CMatrix m(2, 2);
    m << cdouble(1, 2), cdouble(3, 4), cdouble(5, 6), cdouble(7, 8);
    std::ostringstream os;
    write_matrix_csv(os, m);
    EXPECT_EQ(os.str(), "1,2,3,4\n5,6,7,8\n");
}
