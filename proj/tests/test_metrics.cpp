#include <doctest.h>

#include <cmath>

#include "teralasso/errors.hpp"
#include "teralasso/ksum.hpp"
#include "teralasso/metrics.hpp"
#include "test_support.hpp"

using namespace teralasso;
using teralasso::testing::random_factors;

namespace {

EdgeSupport support(const Dims& dims, std::vector<std::vector<std::pair<std::size_t, std::size_t>>> e)
{
    return EdgeSupport{dims, std::move(e)};
}

} // namespace

TEST_CASE("edge_support thresholds off-diagonal magnitudes")
{
    Matrix a = Matrix::Identity(3, 3);
    a(0, 2) = a(2, 0) = 0.5;
    a(0, 1) = a(1, 0) = 1e-9;
    const EdgeSupport s = edge_support(FactorSet(Dims{3}, {a}));
    REQUIRE(s.edges[0].size() == 1);
    CHECK(s.edges[0][0] == std::pair<std::size_t, std::size_t>{0, 2});
    CHECK(edge_support(FactorSet(Dims{3}, {a}), 1e-12).count() == 2);
}

TEST_CASE("mcc examples")
{
    const Dims dims{4};
    const EdgeSupport truth = support(dims, {{{0, 1}, {2, 3}}});
    CHECK(mcc(truth, truth) == doctest::Approx(1.0));
    const EdgeSupport complement = support(dims, {{{0, 2}, {0, 3}, {1, 2}, {1, 3}}});
    CHECK(mcc(truth, complement) == doctest::Approx(-1.0));

    const Confusion c{3, 5, 1, 1};
    CHECK(c.mcc() == doctest::Approx(14.0 / 24.0));
    CHECK(c.precision() == doctest::Approx(0.75));
    CHECK(c.recall() == doctest::Approx(0.75));
}

TEST_CASE("mcc conventions and symmetry")
{
    CHECK(Confusion{0, 10, 0, 0}.mcc() == 0.0);
    CHECK(Confusion{0, 8, 0, 2}.precision() == 1.0);
    CHECK(Confusion{0, 8, 0, 2}.recall() == 0.0);
    CHECK(Confusion{0, 8, 2, 0}.recall() == 1.0);
    for (std::uint64_t a = 1; a < 6; ++a)
        for (std::uint64_t b = 0; b < 4; ++b) {
            const Confusion c{a, a + b + 2, b, 3 - b};
            const Confusion swapped{c.tn, c.tp, c.fn, c.fp};
            CHECK(c.mcc() == doctest::Approx(swapped.mcc()));
            CHECK(c.mcc() >= -1.0);
            CHECK(c.mcc() <= 1.0);
        }
}

TEST_CASE("classify_edges pools factors")
{
    const Dims dims{3, 4};
    const EdgeSupport truth = support(dims, {{{0, 1}}, {{0, 1}, {1, 2}}});
    const EdgeSupport est = support(dims, {{{0, 1}, {1, 2}}, {{1, 2}}});
    const Confusion c = classify_edges(truth, est);
    CHECK(c.tp == 2);
    CHECK(c.fp == 1);
    CHECK(c.fn == 1);
    CHECK(c.tn == 3 + 6 - 4);
    CHECK_THROWS_AS(classify_edges(truth, support(Dims{3, 3}, {{}, {}})), DimensionError);
}

TEST_CASE("estimation errors")
{
    const Dims dims{4, 4};
    const FactorSet truth = random_factors(dims, 1);
    const EstimationErrors zero = estimation_errors(truth, truth);
    CHECK(zero.frob_full == 0.0);
    CHECK(zero.spectral == 0.0);
    CHECK(zero.tau == 0.0);
    CHECK(zero.diag == 0.0);

    const FactorSet shifted(dims, {truth[0] + 0.7 * Matrix::Identity(4, 4), truth[1] - 0.7 * Matrix::Identity(4, 4)});
    const EstimationErrors shift = estimation_errors(truth, shifted);
    CHECK(shift.frob_full < 1e-12);
    CHECK(shift.spectral < 1e-12);
    CHECK(shift.diag < 1e-12);
    for (double e : shift.factor_offdiag) CHECK(e < 1e-12);
    const EstimationErrors shift2 = estimation_errors(shifted, truth);
    CHECK(shift2.frob_full < 1e-12);

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const FactorSet a = random_factors(dims, 10 + seed);
        const FactorSet b = random_factors(dims, 20 + seed);
        const Matrix d = kron_sum_dense(b) - kron_sum_dense(a);
        const EstimationErrors e = estimation_errors(a, b);
        CHECK(std::abs(e.frob_full - d.norm()) < 1e-9);
        CHECK(std::abs(e.frob_rel - d.norm() / kron_sum_dense(a).norm()) < 1e-9);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(d, Eigen::EigenvaluesOnly);
        CHECK(std::abs(e.spectral - eig.eigenvalues().cwiseAbs().maxCoeff()) < 1e-9);
        CHECK(std::abs(e.diag - d.diagonal().norm()) < 1e-9);
        CHECK(std::abs(e.tau - std::abs(d.trace()) / 16.0) < 1e-12);
        for (std::size_t k = 0; k < 2; ++k) {
            Matrix off = b[k] - a[k];
            off.diagonal().setZero();
            CHECK(e.factor_offdiag[k] == doctest::Approx(off.norm()));
        }
    }
    CHECK_THROWS_AS(estimation_errors(truth, FactorSet::identity(Dims{2, 8})), DimensionError);
}

TEST_CASE("effective sample size")
{
    CHECK(effective_sample_size(Dims{4, 4}, 1) == doctest::Approx(4.0 / std::log(16.0)));
    CHECK(effective_sample_size(Dims{4, 4}, 2) == doctest::Approx(2.0 * effective_sample_size(Dims{4, 4}, 1)));
    CHECK(effective_sample_size(Dims{2, 8}, 1) == doctest::Approx(0.5 * effective_sample_size(Dims{4, 4}, 1)));
}
