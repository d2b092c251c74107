#include <emergent/numerics.hpp>
#include <emergent/models.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace emergent;
using namespace emergent::numerics;

namespace {

ComplexMatrix random_matrix(std::mt19937& rng, Eigen::Index n) {
    std::normal_distribution<double> d;
    ComplexMatrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = cplx(d(rng), d(rng));
    return m;
}

double eig_residual(const ComplexMatrix& h, const EigenSystem& es) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues.size(); ++i) {
        const auto& r = es.right_vectors.col(i);
        const auto& l = es.left_vectors.col(i);
        worst = std::max(worst, (h * r - es.eigenvalues(i) * r).norm() / r.norm());
        worst = std::max(worst, (l.adjoint() * h - es.eigenvalues(i) * l.adjoint()).norm() / l.norm());
    }
    return worst;
}

} // namespace

TEST(Eig, DiagonalMatrix) {
    ComplexMatrix h = ComplexMatrix::Zero(2, 2);
    h(0, 0) = cplx(1, 2);
    h(1, 1) = 3.0;
    auto es = eig(h);
    ASSERT_EQ(es.size(), 2u);
    EXPECT_NEAR(std::abs(es.eigenvalues(0) - cplx(1, 2)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(es.eigenvalues(1) - 3.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(es.right_vectors(0, 0)), 1.0, 1e-14);
    EXPECT_NEAR(std::abs(es.right_vectors(1, 0)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(es.right_vectors(1, 1)), 1.0, 1e-14);
    EXPECT_FALSE(es.any_defective());
}

TEST(Eig, OffDiagonalTwoByTwo) {
    const double a = 2.0, b = 0.5;
    ComplexMatrix h(2, 2);
    h << 0.0, a, b, 0.0;
    auto es = eig(h);
    EXPECT_NEAR(std::abs(es.eigenvalues(0) + 1.0), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(es.eigenvalues(1) - 1.0), 0.0, 1e-13);
    for (Eigen::Index i = 0; i < 2; ++i) {
        const double sign = es.eigenvalues(i).real() > 0 ? 1.0 : -1.0;
        ComplexVector expect(2);
        expect << sign * std::sqrt(a / b), 1.0;
        const auto& r = es.right_vectors.col(i);
        const cplx scale = r(1);
        EXPECT_LT((r / scale - expect).norm(), 1e-12);
    }
    EXPECT_LT(eig_residual(h, es), 1e-12);
}

TEST(Eig, ThreeSiteCharacteristicPolynomial) {
    const ComplexMatrix h = models::build_three_site(std::numbers::pi / 2, 1.0);
    auto ev = eigvals(h);
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        const ComplexMatrix shifted = h - ev(i) * ComplexMatrix::Identity(3, 3);
        EXPECT_LT(std::abs(det_cofactor(shifted)), 1e-10);
    }
}

TEST(Eig, SortedByRealThenImaginary) {
    std::mt19937 rng(7);
    auto ev = eigvals(random_matrix(rng, 9));
    for (Eigen::Index i = 1; i < ev.size(); ++i) EXPECT_FALSE(complex_less(ev(i), ev(i - 1)));
}

TEST(Eig, RejectsNonSquare) {
    EXPECT_THROW(eig(ComplexMatrix::Zero(2, 3)), std::invalid_argument);
}

TEST(Eig, TraceAndDeterminantIdentities) {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const ComplexMatrix h = random_matrix(rng, 10);
        auto ev = eigvals(h);
        const double scale = norm2(h);
        EXPECT_LT(std::abs(ev.sum() - h.trace()), 1e-10 * scale);
        const cplx det = h.determinant();
        EXPECT_LT(std::abs(ev.prod() - det) / std::abs(det), 1e-8);
    }
}

TEST(Eig, Biorthogonality) {
    std::mt19937 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const ComplexMatrix h = random_matrix(rng, 12);
        auto es = eig(h);
        ASSERT_FALSE(es.any_defective());
        const ComplexMatrix overlap = es.left_vectors.adjoint() * es.right_vectors;
        EXPECT_LT((overlap - ComplexMatrix::Identity(12, 12)).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_LT(eig_residual(h, es), 1e-9 * std::max(1.0, norm2(h)));
    }
}

TEST(Eig, DegenerateClusterIsBiorthogonalized) {
    ComplexMatrix h = ComplexMatrix::Zero(4, 4);
    h(0, 0) = h(1, 1) = cplx(1.0, 0.5);
    h(2, 2) = -1.0;
    h(3, 3) = 2.0;
    h(0, 2) = 0.3;
    h(1, 3) = cplx(0.2, 0.1);
    auto es = eig(h);
    EXPECT_FALSE(es.any_defective());
    const ComplexMatrix overlap = es.left_vectors.adjoint() * es.right_vectors;
    EXPECT_LT((overlap - ComplexMatrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Eig, JordanBlockFlaggedNearDefective) {
    ComplexMatrix h(2, 2);
    h << 1.0, 1.0, 0.0, 1.0;
    auto es = eig(h);
    EXPECT_TRUE(es.any_defective());
}

TEST(SolveLinear, IdentityAndDiagonal) {
    std::mt19937 rng(3);
    const ComplexMatrix b = random_matrix(rng, 4).leftCols(2);
    EXPECT_LT((solve_linear(ComplexMatrix::Identity(4, 4), b) - b).norm(), 1e-15);

    ComplexMatrix a = ComplexMatrix::Zero(2, 2);
    a(0, 0) = 2.0;
    a(1, 1) = 4.0;
    ComplexVector rhs(2);
    rhs << 2.0, 4.0;
    const ComplexMatrix x = solve_linear(a, rhs);
    EXPECT_NEAR(std::abs(x(0, 0) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(x(1, 0) - 1.0), 0.0, 1e-15);
}

TEST(SolveLinear, RandomResidual) {
    std::mt19937 rng(5);
    const ComplexMatrix a = random_matrix(rng, 8) + 8.0 * ComplexMatrix::Identity(8, 8);
    const ComplexMatrix b = random_matrix(rng, 8).leftCols(3);
    const ComplexMatrix x = solve_linear(a, b);
    EXPECT_LT((a * x - b).norm() / b.norm(), 1e-12);
}

TEST(SolveLinear, SingularAndShapeErrors) {
    ComplexMatrix a(2, 2);
    a << 1.0, 2.0, 2.0, 4.0;
    EXPECT_THROW(solve_linear(a, ComplexMatrix::Ones(2, 1)), SingularMatrixError);
    EXPECT_THROW(solve_linear(ComplexMatrix::Identity(2, 3), ComplexMatrix::Ones(2, 1)), std::invalid_argument);
    EXPECT_THROW(solve_linear(ComplexMatrix::Identity(2, 2), ComplexMatrix::Ones(3, 1)), std::invalid_argument);
}

TEST(PolyRoots, Quadratic) {
    auto roots = poly_roots({-1.0, 0.0, 1.0});
    ASSERT_EQ(roots.size(), 2u);
    EXPECT_NEAR(std::abs(roots[0] + 1.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(roots[1] - 1.0), 0.0, 1e-14);
}

TEST(PolyRoots, VanishingGainCubic) {
    auto roots = poly_roots({0.0, -3.0, 0.0, 1.0});
    ASSERT_EQ(roots.size(), 3u);
    EXPECT_NEAR(std::abs(roots[0] + std::sqrt(3.0)), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(roots[1]), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(roots[2] - std::sqrt(3.0)), 0.0, 1e-13);
}

TEST(PolyRoots, TrailingZerosAreTrimmed) {
    auto roots = poly_roots({-4.0, 0.0, 1.0, 1e-20});
    ASSERT_EQ(roots.size(), 2u);
    EXPECT_NEAR(std::abs(roots[1] - 2.0), 0.0, 1e-13);
}

TEST(PolyRoots, Errors) {
    EXPECT_THROW(poly_roots({0.0, 0.0}), std::invalid_argument);
    EXPECT_THROW(poly_roots({3.0}), std::invalid_argument);
}

TEST(PolyRoots, RandomQuadraticsMatchClosedForm) {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const cplx a(d(rng), d(rng)), b(d(rng), d(rng));
        const cplx c = a + cplx(3.0, 0.0);
        const cplx disc = std::sqrt(b * b - 4.0 * c * a);
        std::vector<cplx> expect{(-b + disc) / (2.0 * c), (-b - disc) / (2.0 * c)};
        std::sort(expect.begin(), expect.end(), complex_less);
        auto roots = poly_roots({a, b, c});
        for (std::size_t i = 0; i < 2; ++i) {
            worst = std::max(worst, std::abs(roots[i] - expect[i]));
            EXPECT_LT(std::abs(poly_eval({a, b, c}, roots[i])), Tolerances::root * poly_scale({a, b, c}, roots[i]));
        }
    }
    EXPECT_LT(worst, 1e-10);
}

TEST(ContourIntegral, ConstantAndHarmonic) {
    EXPECT_NEAR(std::abs(contour_integral([](double) { return cplx(1.0); }, 64) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(contour_integral([](double k) { return std::exp(I_unit * k); }, 64)), 0.0, 1e-15);
}

TEST(ContourIntegral, ResidueWindingIntegrand) {
    const double a = 1.0, w = 2.0;
    auto f = [&](double k) {
        const cplx ek = std::exp(I_unit * k);
        return I_unit * ek * w * (w + a * std::cos(k)) / ((ek * a + w) * (a + ek * w));
    };
    const cplx mean = contour_integral(f, 1024);
    EXPECT_NEAR(std::abs(mean / I_unit - 1.0), 0.0, 1e-6);
}

TEST(ContourIntegral, SpectralConvergence) {
    auto f = [](double k) { return cplx(1.0 / (1.3 + std::cos(k)), 0.0); };
    const double exact = 1.0 / std::sqrt(1.3 * 1.3 - 1.0);
    const double e64 = std::abs(contour_integral(f, 64).real() - exact);
    const double e32 = std::abs(contour_integral(f, 32).real() - exact);
    EXPECT_GT(e32 / std::max(e64, 1e-300), 100.0);
    EXPECT_THROW(contour_integral(f, 8), std::invalid_argument);
}

TEST(DetCofactor, MatchesLu) {
    std::mt19937 rng(19);
    const ComplexMatrix m = random_matrix(rng, 5);
    EXPECT_LT(std::abs(det_cofactor(m) - m.determinant()), 1e-10 * std::abs(m.determinant()));
}
