#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "unistoch/n4_explorer.hpp"

using namespace unistoch;

namespace {

StandardParams4 random_params4(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ang(0.15, std::numbers::pi / 2 - 0.15);
    std::uniform_real_distribution<double> ph(0.2, 2 * std::numbers::pi - 0.2);
    return {ang(rng), ang(rng), ang(rng), ang(rng), ang(rng), ang(rng), ph(rng), ph(rng), ph(rng)};
}

Params4Free free_of(const StandardParams4& p) { return {p.b2, p.beta1, p.beta2, p.gamma1}; }

// The four moduli typed in from the written trigonometric polynomials.
// The m23 expression carries cos^2 c1 on its cos(beta1) term.
std::array<double, 4> written_moduli(const StandardParams4& p) {
    using oracle::sq;
    const double ca1 = std::cos(p.a1), ca2 = std::cos(p.a2), ca3 = std::cos(p.a3);
    const double sa2 = std::sin(p.a2), sa3 = std::sin(p.a3);
    const double cb1 = std::cos(p.b1), cb2 = std::cos(p.b2), sb1 = std::sin(p.b1), sb2 = std::sin(p.b2);
    const double cc1 = std::cos(p.c1), sc1 = std::sin(p.c1);
    const double b1 = p.beta1, b2 = p.beta2, g1 = p.gamma1;
    const double m22 = sq(ca1 * ca2 * cb1) + sq(cb2 * sa2 * sb1) + 2 * ca1 * ca2 * cb1 * cb2 * sa2 * sb1 * std::cos(b1);
    const double m32 = sq(ca1 * ca3 * cb1 * sa2) + sq(ca2 * ca3 * cb2 * sb1) + sq(sa3 * sb1 * sb2) -
                       2 * ca1 * ca2 * sq(ca3) * cb1 * cb2 * sa2 * sb1 * std::cos(b1) +
                       2 * ca1 * ca3 * cb1 * sa2 * sa3 * sb1 * sb2 * std::cos(b2) -
                       2 * ca2 * ca3 * cb2 * sa3 * sq(sb1) * sb2 * std::cos(b1 - b2);
    const double m23 = sq(cb1 * cb2 * cc1 * sa2) + sq(ca1 * ca2 * cc1 * sb1) + sq(sa2 * sb2 * sc1) -
                       2 * ca1 * ca2 * cb1 * cb2 * sq(cc1) * sa2 * sb1 * std::cos(b1) +
                       2 * cb1 * cb2 * cc1 * sq(sa2) * sb2 * sc1 * std::cos(g1) -
                       2 * ca1 * ca2 * cc1 * sa2 * sb1 * sb2 * sc1 * std::cos(b1 + g1);
    const double m33 =
        sq(ca2 * ca3 * cb1 * cb2 * cc1) + sq(ca1 * ca3 * cc1 * sa2 * sb1) + sq(cb1 * cc1 * sa3 * sb2) +
        sq(cb2 * sa3 * sc1) + sq(ca2 * ca3 * sb2 * sc1) +
        2 * ca1 * ca2 * sq(ca3) * cb1 * cb2 * sq(cc1) * sa2 * sb1 * std::cos(b1) -
        2 * ca2 * ca3 * sq(cb1) * cb2 * sq(cc1) * sa3 * sb2 * std::cos(b1 - b2) -
        2 * ca1 * ca3 * cb1 * sq(cc1) * sa2 * sa3 * sb1 * sb2 * std::cos(b2) +
        2 * ca2 * ca3 * cb1 * sq(cb2) * cc1 * sa3 * sc1 * std::cos(b1 - b2 - g1) +
        2 * ca1 * ca3 * cb2 * cc1 * sa2 * sa3 * sb1 * sc1 * std::cos(b2 + g1) +
        2 * sq(ca2 * ca3) * cb1 * cb2 * cc1 * sb2 * sc1 * std::cos(g1) -
        2 * cb1 * cb2 * cc1 * sq(sa3) * sb2 * sc1 * std::cos(g1) +
        2 * ca1 * ca2 * sq(ca3) * cc1 * sa2 * sb1 * sb2 * sc1 * std::cos(b1 + g1) -
        2 * ca2 * ca3 * cb1 * cc1 * sa3 * sq(sb2) * sc1 * std::cos(b1 - b2 + g1) +
        2 * ca2 * ca3 * cb2 * sa3 * sb2 * sq(sc1) * std::cos(b1 - b2);
    return {m22, m23, m32, m33};
}

ComplexMatrix rotation2(double t) {
    ComplexMatrix r(2, 2);
    r << std::cos(t), std::sin(t), std::sin(t), -std::cos(t);
    return r;
}

Solve4Config light_config() {
    Solve4Config c;
    c.b2_starts = 3;
    c.phase_starts = 4;
    return c;
}

}  // namespace

TEST(FirstLineParams4, RoundTripFromBuilder) {
    std::mt19937_64 rng(41);
    for (int k = 0; k < 200; ++k) {
        const StandardParams4 p = random_params4(rng);
        const auto f = first_line_params4(hadamard_square(build_unitary_n(p)));
        ASSERT_TRUE(f.valid());
        EXPECT_NEAR(f.a1.angle(), p.a1, 1e-10);
        EXPECT_NEAR(f.a2.angle(), p.a2, 1e-10);
        EXPECT_NEAR(f.a3.angle(), p.a3, 1e-10);
        EXPECT_NEAR(f.b1.angle(), p.b1, 1e-10);
        EXPECT_NEAR(f.c1.angle(), p.c1, 1e-10);
    }
}

TEST(FirstLineParams4, UniformQuarter) {
    const auto f = first_line_params4(SquaredModuliMatrix(RealMatrix::Constant(4, 4, 0.25)));
    ASSERT_TRUE(f.valid());
    EXPECT_NEAR(f.a1.cos, 0.5, 1e-15);
    EXPECT_NEAR(f.a2.cos, 1 / std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(f.a3.cos, 1 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(f.b1.cos, 1 / std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(f.c1.cos, 1 / std::sqrt(2.0), 1e-15);
}

TEST(FirstLineParams4, OverfullRowIsInvalid) {
    RealMatrix m = RealMatrix::Constant(4, 4, 0.25);
    m(0, 1) = 0.5;
    m(0, 2) = 0.5;
    const auto f = first_line_params4(SquaredModuliMatrix(m));
    EXPECT_FALSE(f.valid());
    EXPECT_FALSE(f.diagnostics.empty());
    EXPECT_THROW(first_line_params4(SquaredModuliMatrix(oracle::toy3())), InputError);
}

TEST(Residuals4, MatchWrittenPolynomials) {
    std::mt19937_64 rng(43);
    for (int k = 0; k < 500; ++k) {
        const StandardParams4 p = random_params4(rng);
        const auto written = written_moduli(p);
        const RealMatrix m = hadamard_square(build_unitary_n(p)).entries();
        EXPECT_NEAR(m(1, 1), written[0], 1e-13);
        EXPECT_NEAR(m(1, 2), written[1], 1e-13);
        EXPECT_NEAR(m(2, 1), written[2], 1e-13);
        EXPECT_NEAR(m(2, 2), written[3], 1e-13);
    }
}

TEST(Residuals4, VanishAtGeneratingParameters) {
    std::mt19937_64 rng(47);
    for (int k = 0; k < 200; ++k) {
        const StandardParams4 p = random_params4(rng);
        const SquaredModuliMatrix m = hadamard_square(build_unitary_n(p));
        for (double r : residuals4(m, free_of(p))) EXPECT_LT(std::abs(r), 1e-12);
    }
}

TEST(Residuals4, LinearResponseInModuli) {
    std::mt19937_64 rng(53);
    const StandardParams4 p = random_params4(rng);
    RealMatrix m = hadamard_square(build_unitary_n(p)).entries();
    m(2, 1) += 0.01;
    const auto r = residuals4(SquaredModuliMatrix(m), free_of(p));
    EXPECT_NEAR(r[2], -0.01, 1e-12);
    EXPECT_LT(std::abs(r[0]) + std::abs(r[1]) + std::abs(r[3]), 1e-12);
}

TEST(Residuals4, UniformSmokeValue) {
    const double pi = std::numbers::pi;
    const auto r = residuals4(SquaredModuliMatrix(RealMatrix::Constant(4, 4, 0.25)), {pi / 4, pi / 2, pi, pi / 2});
    for (double x : r) EXPECT_TRUE(std::isfinite(x));
}

TEST(Solve4, RoundTripHundredDraws) {
    std::mt19937_64 rng(59);
    for (int k = 0; k < 100; ++k) {
        const StandardParams4 p = random_params4(rng);
        const auto truth = detail::conjugation_representative(free_of(p));
        const auto res = solve4(hadamard_square(build_unitary_n(p)));
        ASSERT_TRUE(res.found()) << "draw " << k;
        const bool matched = std::any_of(res.solutions.begin(), res.solutions.end(), [&](const Solution4& s) {
            return detail::params_distance(s.params, truth) < 1e-6 && s.criteriaPass;
        });
        EXPECT_TRUE(matched) << "draw " << k;
        for (const auto& s : res.solutions) EXPECT_LT(s.residualNorm, 1e-8);
    }
}

TEST(Solve4, ResultsAreSortedAndDistinct) {
    std::mt19937_64 rng(61);
    const auto res = solve4(hadamard_square(build_unitary_n(random_params4(rng))));
    for (std::size_t i = 1; i < res.solutions.size(); ++i) {
        EXPECT_LE(res.solutions[i - 1].residualNorm, res.solutions[i].residualNorm);
        EXPECT_GT(detail::params_distance(res.solutions[i - 1].params, res.solutions[i].params), 1e-5);
    }
    EXPECT_EQ(res.starts, 2560);
}

TEST(Solve4, UniformQuarterIsAContinuum) {
    const auto res = solve4(SquaredModuliMatrix(RealMatrix::Constant(4, 4, 0.25)), light_config());
    ASSERT_TRUE(res.found());
    for (const auto& s : res.solutions) EXPECT_LT(s.jacobianRank, 4);
}

TEST(Solve4, BlockCounterexampleIsDegenerate) {
    const ComplexMatrix u = compose_block_counterexample(rotation2(0.6), {rotation2(0.3), rotation2(1.1)});
    const auto res = solve4(hadamard_square(u), light_config());
    ASSERT_TRUE(res.found());
    for (const auto& s : res.solutions) EXPECT_LT(s.jacobianRank, 4);
}

TEST(Solve4, RankInvariantUnderConjugation) {
    std::mt19937_64 rng(67);
    const StandardParams4 p = random_params4(rng);
    const auto f = first_line_params4(hadamard_square(build_unitary_n(p)));
    const Params4Free q = free_of(p);
    const Params4Free conj{q.b2, 2 * std::numbers::pi - q.beta1, 2 * std::numbers::pi - q.beta2,
                           2 * std::numbers::pi - q.gamma1};
    EXPECT_EQ(jacobian_rank4(jacobian4(f, q)), jacobian_rank4(jacobian4(f, conj)));
    EXPECT_EQ(jacobian_rank4(jacobian4(f, q)), 4);
}

TEST(Solve4, NonUnistochasticHasNoPreimage) {
    RealMatrix m = RealMatrix::Zero(4, 4);
    m.topLeftCorner(3, 3) << 0.4, 0.3, 0.3, 0.3, 0.7, 0.0, 0.3, 0.0, 0.7;
    m(3, 3) = 1.0;
    const auto res = solve4(SquaredModuliMatrix(m), light_config());
    EXPECT_FALSE(res.found());
    EXPECT_FALSE(res.diagnostics.empty());
}

TEST(Solve4, RejectsBadInput) {
    RealMatrix m = RealMatrix::Constant(4, 4, 0.25);
    m(0, 0) = 0.3;
    EXPECT_THROW(solve4(SquaredModuliMatrix(m)), NotDoublyStochastic);
    EXPECT_THROW(solve4(SquaredModuliMatrix(oracle::toy3())), InputError);
}

TEST(CheckCriteria4, InjectedCosineFails) {
    Solution4 s;
    EXPECT_TRUE(check_criteria4(s));
    s.cosines[1] = 1.2;
    EXPECT_FALSE(check_criteria4(s));
    s.cosines = {-0.1, 0.0, 0.0, 0.0};
    EXPECT_FALSE(check_criteria4(s));
}

TEST(ConjugationRepresentative, FoldsNegatedPhases) {
    const Params4Free a{0.5, 1.0, 2.0, 3.0};
    const Params4Free b{0.5, 2 * std::numbers::pi - 1.0, 2 * std::numbers::pi - 2.0, 2 * std::numbers::pi - 3.0};
    EXPECT_LT(detail::params_distance(detail::conjugation_representative(a), detail::conjugation_representative(b)),
              1e-12);
    const Params4Free c{0.5, std::numbers::pi, 4.0, 1.0};
    EXPECT_LT(detail::conjugation_representative(c).beta2, std::numbers::pi);
}
