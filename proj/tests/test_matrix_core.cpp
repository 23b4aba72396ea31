#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "unistoch/matrix_core.hpp"
#include "unistoch/parametrize.hpp"

using namespace unistoch;

namespace {

ComplexMatrix random_unitary3(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ang(0.05, std::numbers::pi / 2 - 0.05);
    std::uniform_real_distribution<double> ph(0.05, std::numbers::pi - 0.05);
    return build_ckm3({ang(rng), ang(rng), ang(rng), ph(rng)});
}

GaugeTransform random_gauge(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> ph(0.0, 2 * std::numbers::pi);
    GaugeTransform g = GaugeTransform::identity(n);
    for (auto& p : g.left_phases) p = ph(rng);
    for (auto& p : g.right_phases) p = ph(rng);
    std::shuffle(g.row_permutation.begin(), g.row_permutation.end(), rng);
    std::shuffle(g.col_permutation.begin(), g.col_permutation.end(), rng);
    g.transposed = rng() % 2;
    g.conjugated = rng() % 2;
    return g;
}

}  // namespace

TEST(SquaredModuliMatrix, RejectsBadShapes) {
    EXPECT_THROW(SquaredModuliMatrix(RealMatrix::Zero(3, 2)), InputError);
    EXPECT_THROW(SquaredModuliMatrix(RealMatrix::Zero(5, 5)), InputError);
    EXPECT_THROW(SquaredModuliMatrix(RealMatrix::Zero(1, 1)), InputError);
    RealMatrix nan = RealMatrix::Zero(3, 3);
    nan(1, 2) = std::nan("");
    EXPECT_THROW(SquaredModuliMatrix{nan}, InputError);
}

TEST(CheckDoublyStochastic, Toy3PassesExactly) {
    const auto r = check_doubly_stochastic(SquaredModuliMatrix(oracle::toy3()), 1e-12);
    EXPECT_TRUE(r.pass);
    EXPECT_LT(r.max_defect, 1e-15);
    EXPECT_EQ(r.row_defects.size(), 3u);
    EXPECT_EQ(r.col_defects.size(), 3u);
}

TEST(CheckDoublyStochastic, IdentityPasses) {
    EXPECT_TRUE(check_doubly_stochastic(SquaredModuliMatrix(RealMatrix::Identity(4, 4))).pass);
}

TEST(CheckDoublyStochastic, PdgFirstRowDefect) {
    const auto r = check_doubly_stochastic(SquaredModuliMatrix(oracle::pdg_squared()), 1e-6);
    EXPECT_FALSE(r.pass);
    const double expected = oracle::sq(0.9738) + oracle::sq(0.22) + oracle::sq(0.00367) - 1.0;
    EXPECT_NEAR(r.row_defects[0], expected, 1e-15);
    EXPECT_NEAR(r.row_defects[0], -3.3e-3, 1e-4);
}

TEST(CheckDoublyStochastic, NegativeEntryIsNamed) {
    RealMatrix m = oracle::toy3();
    m(1, 2) = -0.1;
    try {
        check_doubly_stochastic(SquaredModuliMatrix(m));
        FAIL() << "expected DomainError";
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("m23"), std::string::npos) << e.what();
    }
}

TEST(CheckDoublyStochastic, RequiresPositiveTolerance) {
    EXPECT_THROW(check_doubly_stochastic(SquaredModuliMatrix(oracle::toy3()), 0.0), InputError);
}

TEST(CheckDoublyStochastic, PermutationInvariant) {
    const SquaredModuliMatrix m(oracle::pdg_squared());
    const auto base = check_doubly_stochastic(m, 1e-6);
    std::vector<int> p{2, 0, 1}, q{1, 2, 0};
    const auto moved = check_doubly_stochastic(m.permuted(p, q), 1e-6);
    EXPECT_EQ(base.pass, moved.pass);
    EXPECT_DOUBLE_EQ(base.max_defect, moved.max_defect);
}

TEST(CheckDoublyStochastic, ConvexCombinationsStayInside) {
    const SquaredModuliMatrix a(oracle::toy3());
    const SquaredModuliMatrix b(RealMatrix::Identity(3, 3));
    for (double x : {0.0, 0.25, 0.5, 0.9, 1.0}) {
        const SquaredModuliMatrix mix(x * a.entries() + (1 - x) * b.entries());
        EXPECT_TRUE(check_doubly_stochastic(mix, 1e-12).pass) << x;
    }
}

TEST(HadamardSquare, IdentityAndUnt) {
    EXPECT_TRUE(hadamard_square(ComplexMatrix::Identity(3, 3)).entries().isApprox(RealMatrix::Identity(3, 3)));
    const RealMatrix m = hadamard_square(oracle::unt()).entries();
    EXPECT_LT((m - oracle::toy3()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(HadamardSquare, RandomUnitaryIsDoublyStochastic) {
    std::mt19937_64 rng(7);
    for (int k = 0; k < 50; ++k)
        EXPECT_TRUE(check_doubly_stochastic(hadamard_square(random_unitary3(rng)), 1e-12).pass);
}

TEST(UnitarityDefect, Values) {
    EXPECT_EQ(unitarity_defect(ComplexMatrix::Identity(3, 3)), 0.0);
    EXPECT_LT(unitarity_defect(oracle::unt()), 1e-15);
    ComplexMatrix broken = oracle::unt();
    broken(1, 1) = 0.0;
    EXPECT_GT(unitarity_defect(broken), 0.1);
}

TEST(CanonicalGauge, RecoversUntFromRandomPhases) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ph(0.0, 2 * std::numbers::pi);
    const ComplexMatrix u = oracle::unt();
    for (int k = 0; k < 20; ++k) {
        GaugeTransform g = GaugeTransform::identity(3);
        for (auto& p : g.left_phases) p = ph(rng);
        for (auto& p : g.right_phases) p = ph(rng);
        const ComplexMatrix moved = g.apply(u);
        const auto c = canonical_gauge_form(moved);
        EXPECT_LT((c.matrix - u).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_FALSE(c.transform.conjugated);
        EXPECT_LT((c.transform.apply(c.matrix) - moved).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(CanonicalGauge, IdentityIsFixed) {
    const auto c = canonical_gauge_form(ComplexMatrix::Identity(4, 4));
    EXPECT_EQ(c.matrix, ComplexMatrix::Identity(4, 4));
    EXPECT_FALSE(c.transform.conjugated);
    for (double p : c.transform.left_phases) EXPECT_EQ(p, 0.0);
    for (double p : c.transform.right_phases) EXPECT_EQ(p, 0.0);
}

TEST(CanonicalGauge, ConjugateOfUnt) {
    const auto c = canonical_gauge_form(oracle::unt().conjugate());
    EXPECT_TRUE(c.transform.conjugated);
    EXPECT_LT((c.matrix - oracle::unt()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(CanonicalGauge, ZeroFirstColumnEntryUsesFirstNonzero) {
    ComplexMatrix d = ComplexMatrix::Zero(3, 3);
    d(0, 0) = 1.0;
    d(1, 1) = -1.0;
    d(2, 2) = Complex(0.0, 1.0);
    const auto c = canonical_gauge_form(d);
    EXPECT_LT((c.matrix - ComplexMatrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((c.transform.apply(c.matrix) - d).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(CanonicalGauge, Idempotent) {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 50; ++k) {
        GaugeTransform g = random_gauge(rng, 3);
        const ComplexMatrix u = g.apply(random_unitary3(rng));
        const ComplexMatrix once = canonical_gauge_form(u).matrix;
        const ComplexMatrix twice = canonical_gauge_form(once).matrix;
        EXPECT_LT((once - twice).cwiseAbs().maxCoeff(), 1e-14);
        for (int j = 0; j < 3; ++j) {
            EXPECT_GE(once(0, j).real(), 0.0);
            EXPECT_EQ(once(0, j).imag(), 0.0);
            EXPECT_GE(once(j, 0).real(), 0.0);
            EXPECT_EQ(once(j, 0).imag(), 0.0);
        }
    }
}

TEST(GaugeTransform, ModuliCovariance) {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 100; ++k) {
        const ComplexMatrix u = random_unitary3(rng);
        const GaugeTransform g = random_gauge(rng, 3);
        const ComplexMatrix moved = g.apply(u);
        EXPECT_LT(unitarity_defect(moved), 1e-13);
        const RealMatrix lhs = hadamard_square(moved).entries();
        const RealMatrix rhs = g.apply(hadamard_square(u)).entries();
        EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(ProjectToPolytope, PdgBecomesDoublyStochastic) {
    const auto p = project_to_polytope(SquaredModuliMatrix(oracle::pdg_squared()));
    EXPECT_TRUE(check_doubly_stochastic(p, 1e-12).pass);
    const auto fixed = project_to_polytope(SquaredModuliMatrix(oracle::toy3()));
    EXPECT_LT((fixed.entries() - oracle::toy3()).cwiseAbs().maxCoeff(), 1e-15);
}
