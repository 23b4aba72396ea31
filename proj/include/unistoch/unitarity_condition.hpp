#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <complex>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "errors.hpp"
#include "matrix_core.hpp"
#include "parametrize.hpp"
#include "tagged_value.hpp"

namespace unistoch {

// ---------------------------------------------------------------------------
// First line
// ---------------------------------------------------------------------------

struct MixingCosine {
    TaggedValue value;
    bool valid = false;
};

struct FirstLineSolution {
    MixingCosine c12, c13, c23;
    bool degenerate = false;
    std::vector<std::string> diagnostics;

    [[nodiscard]] bool valid() const { return !degenerate && c12.valid && c13.valid && c23.valid; }
};

namespace detail {

inline MixingCosine make_cosine(const char* name, Complex radicand, double tol,
                                std::vector<std::string>& diagnostics) {
    MixingCosine c;
    c.value = classify(csqrt(radicand));
    c.valid = c.value.is_real() && c.value.real() <= 1.0 + tol;
    if (!c.valid) {
        std::ostringstream os;
        os.precision(17);
        os << name << "^2 = " << radicand.real() << " outside [0, 1]";
        diagnostics.push_back(os.str());
    }
    return c;
}

}  // namespace detail

/// c12 = sqrt(m11), c13 = sqrt(m12 / (1 - m11)), c23 = sqrt(m21 / (1 - m11)).
inline FirstLineSolution solve_first_line(const SquaredModuliMatrix& m, double tol = kExactTolerance) {
    if (m.n() != 3) throw InputError("solve_first_line needs a 3x3 matrix");
    FirstLineSolution s;
    s.c12 = detail::make_cosine("c12", m(0, 0), tol, s.diagnostics);
    const double rest = 1.0 - m(0, 0);
    if (std::abs(rest) <= tol) {
        s.degenerate = true;
        s.diagnostics.push_back("m11 = 1: c13 and c23 are 0/0");
        return s;
    }
    s.c13 = detail::make_cosine("c13", m(0, 1) / rest, tol, s.diagnostics);
    s.c23 = detail::make_cosine("c23", m(1, 0) / rest, tol, s.diagnostics);
    return s;
}

// ---------------------------------------------------------------------------
// cos(delta) from the unitarity relations
// ---------------------------------------------------------------------------

/// cos(delta) from the moduli a = V11, b = V12, d = V21, e = V22.
inline TaggedValue cos_delta_s1(double a, double b, double d, double e) {
    const double a2 = a * a, b2 = b * b, d2 = d * d, e2 = e * e;
    const double r1 = 1.0 - a2 - b2, r2 = 1.0 - a2 - d2;
    if (a == 0.0 || b == 0.0 || d == 0.0 || r1 == 0.0 || r2 == 0.0) return TaggedValue::degenerate();
    const double num = -(1 - a2) * (1 - a2) * (1 - e2) + (1 - a2) * (b2 + d2) - b2 * d2 * (1 + a2);
    return classify(num / (2.0 * a * b * d * csqrt(r1) * csqrt(r2)));
}

/// cos(delta) from the moduli b = V12, c = V13, d = V21, f = V23.
inline TaggedValue cos_delta_s2(double b, double c, double d, double f) {
    const double b2 = b * b, c2 = c * c, d2 = d * d, f2 = f * f;
    const double bc = b2 + c2;
    const double r1 = 1.0 - bc, r2 = bc - d2;
    if (b == 0.0 || c == 0.0 || d == 0.0 || r1 == 0.0 || r2 == 0.0) return TaggedValue::degenerate();
    const double num = b2 * bc - d2 * (b2 - c2 + c2 * bc) - f2 * bc * bc;
    return classify(num / (2.0 * b * c * d * csqrt(r1) * csqrt(r2)));
}

/// The four corner relations, solved for cos(delta) with the first-line cosines.
struct CornerRelations {
    TaggedValue cs, cb, ts, tb;
    [[nodiscard]] std::array<TaggedValue, 4> all() const { return {cs, cb, ts, tb}; }
};

inline CornerRelations corner_cos_delta(const SquaredModuliMatrix& m, double degenerate_tol = 1e-12) {
    if (m.n() != 3) throw InputError("corner relations need a 3x3 matrix");
    const double rest = 1.0 - m(0, 0);
    if (rest == 0.0) return {};
    // rounding can leave a vanishing sine or cosine slightly negative
    auto snap = [](double x) { return std::abs(x) <= 1e-13 ? 0.0 : x; };
    const double c12sq = snap(m(0, 0)), c13sq = snap(m(0, 1) / rest), c23sq = snap(m(1, 0) / rest);
    const double s13sq = snap(1.0 - m(0, 1) / rest), s23sq = snap(1.0 - m(1, 0) / rest);
    const Complex k =
        2.0 * csqrt(c12sq) * csqrt(c13sq) * csqrt(c23sq) * csqrt(s13sq) * csqrt(s23sq);
    if (std::abs(k) <= degenerate_tol) return {};
    CornerRelations r;
    r.cs = classify((m(1, 1) - c12sq * c13sq * c23sq - s13sq * s23sq) / k);
    r.cb = classify((c12sq * c23sq * s13sq + c13sq * s23sq - m(1, 2)) / k);
    r.ts = classify((c23sq * s13sq + c12sq * c13sq * s23sq - m(2, 1)) / k);
    r.tb = classify((m(2, 2) - c13sq * c23sq - c12sq * s13sq * s23sq) / k);
    return r;
}

// ---------------------------------------------------------------------------
// Quadruples
// ---------------------------------------------------------------------------

/// 0-based grid position.
struct Position {
    int row = 0;
    int col = 0;
    auto operator<=>(const Position&) const = default;
};

struct QuadrupleSelection {
    std::array<Position, 4> positions{};
    bool independent = false;

    [[nodiscard]] bool contains(Position p) const {
        return std::find(positions.begin(), positions.end(), p) != positions.end();
    }

    [[nodiscard]] bool contains_full_line() const {
        for (int k = 0; k < 3; ++k) {
            int in_row = 0, in_col = 0;
            for (const auto& p : positions) {
                in_row += p.row == k;
                in_col += p.col == k;
            }
            if (in_row == 3 || in_col == 3) return true;
        }
        return false;
    }

    /// e.g. "V11 V12 V21 V22"
    [[nodiscard]] std::string label() const {
        std::string s;
        for (const auto& p : positions) {
            if (!s.empty()) s += ' ';
            s += 'V' + std::to_string(p.row + 1) + std::to_string(p.col + 1);
        }
        return s;
    }

    bool operator==(const QuadrupleSelection& o) const { return positions == o.positions; }
};

inline QuadrupleSelection make_quadruple(std::array<Position, 4> p) {
    std::sort(p.begin(), p.end());
    return {p, false};
}

/// {V11, V12, V21, V22}
inline QuadrupleSelection quadruple_s1() { return make_quadruple({{{0, 0}, {0, 1}, {1, 0}, {1, 1}}}); }
/// {V12, V13, V21, V23}
inline QuadrupleSelection quadruple_s2() { return make_quadruple({{{0, 1}, {0, 2}, {1, 0}, {1, 2}}}); }

namespace detail {

/// Squared moduli of the standard form as analytic functions of the angles.
template <class T>
std::array<T, 9> standard_moduli(const std::array<T, 4>& x) {
    using std::cos;
    using std::sin;
    const T c12 = cos(x[0]), s12 = sin(x[0]), c13 = cos(x[1]), s13 = sin(x[1]);
    const T c23 = cos(x[2]), s23 = sin(x[2]), cd = cos(x[3]);
    const T k = T(2) * c12 * c13 * c23 * s13 * s23 * cd;
    return {c12 * c12,
            s12 * s12 * c13 * c13,
            s12 * s12 * s13 * s13,
            s12 * s12 * c23 * c23,
            c12 * c12 * c13 * c13 * c23 * c23 + s13 * s13 * s23 * s23 + k,
            c12 * c12 * c23 * c23 * s13 * s13 + c13 * c13 * s23 * s23 - k,
            s12 * s12 * s23 * s23,
            c23 * c23 * s13 * s13 + c12 * c12 * c13 * c13 * s23 * s23 - k,
            c13 * c13 * c23 * c23 + c12 * c12 * s13 * s13 * s23 * s23 + k};
}

/// Complex-step Jacobian d m_ij / d(theta12, theta13, theta23, delta), rows row-major.
inline Eigen::Matrix<double, 9, 4> standard_moduli_jacobian(const MixingParameters3& p) {
    constexpr double h = 1e-30;
    const std::array<double, 4> x0{p.theta12, p.theta13, p.theta23, p.delta};
    Eigen::Matrix<double, 9, 4> j;
    for (int k = 0; k < 4; ++k) {
        std::array<Complex, 4> x{x0[0], x0[1], x0[2], x0[3]};
        x[k] += Complex(0.0, h);
        const auto m = standard_moduli(x);
        for (int r = 0; r < 9; ++r) j(r, k) = m[r].imag() / h;
    }
    return j;
}

/// The toy3 point, away from every degenerate boundary.
inline MixingParameters3 generic_point() {
    return MixingParameters3::from_cosines(1.0 / std::sqrt(3.0), std::sqrt(3.0) / 2.0, std::sqrt(6.0) / 4.0,
                                           4.0 * std::sqrt(15.0) / 25.0);
}

}  // namespace detail

/// Whether the four moduli are independent coordinates for (theta12, theta13, theta23, delta).
inline bool quadruple_is_independent(const QuadrupleSelection& q, double ratio = 1e-8) {
    const auto j = detail::standard_moduli_jacobian(detail::generic_point());
    Eigen::Matrix4d sub;
    for (int r = 0; r < 4; ++r) sub.row(r) = j.row(q.positions[r].row * 3 + q.positions[r].col);
    const Eigen::JacobiSVD<Eigen::Matrix4d> svd(sub);
    const auto& sv = svd.singularValues();
    return sv(0) > 0.0 && sv(3) / sv(0) > ratio;
}

/// All independent quadruples, in lexicographic position order.
inline const std::vector<QuadrupleSelection>& enumerate_independent_quadruples() {
    static const std::vector<QuadrupleSelection> list = [] {
        std::vector<QuadrupleSelection> out;
        for (int a = 0; a < 9; ++a)
            for (int b = a + 1; b < 9; ++b)
                for (int c = b + 1; c < 9; ++c)
                    for (int d = c + 1; d < 9; ++d) {
                        QuadrupleSelection q;
                        int k = 0;
                        for (int idx : {a, b, c, d}) q.positions[k++] = {idx / 3, idx % 3};
                        if (quadruple_is_independent(q)) {
                            q.independent = true;
                            out.push_back(q);
                        }
                    }
        return out;
    }();
    return list;
}

/**
 * @brief Linear map from four given entries to the five remaining ones.
 *
 * The six line sums have rank five, so the completion is unique when the
 * unknowns' coefficient matrix has full column rank. It is always
 * consistent: every given entry appears once among rows and once among columns.
 */
class QuadrupleCompletion {
public:
    explicit QuadrupleCompletion(const QuadrupleSelection& q) : q_(q) {
        int u = 0;
        for (int idx = 0; idx < 9; ++idx) {
            const Position p{idx / 3, idx % 3};
            if (!q.contains(p)) unknown_[u++] = p;
        }
        if (u != 5) throw InputError("quadruple must name four distinct positions");
        Eigen::Matrix<double, 6, 5> a = Eigen::Matrix<double, 6, 5>::Zero();
        Eigen::Matrix<double, 6, 4> g = Eigen::Matrix<double, 6, 4>::Zero();
        for (int k = 0; k < 5; ++k) {
            a(unknown_[k].row, k) = 1.0;
            a(3 + unknown_[k].col, k) = 1.0;
        }
        for (int k = 0; k < 4; ++k) {
            g(q.positions[k].row, k) = 1.0;
            g(3 + q.positions[k].col, k) = 1.0;
        }
        const Eigen::ColPivHouseholderQR<Eigen::Matrix<double, 6, 5>> qr(a);
        if (qr.rank() < 5) throw DependentQuadrupleError("dependent quadruple " + q.label());
        const Eigen::Matrix<double, 5, 5> ata = a.transpose() * a;
        const Eigen::Matrix<double, 5, 6> pinv = ata.inverse() * a.transpose();
        offset_ = pinv * Eigen::Matrix<double, 6, 1>::Ones();
        gain_ = -pinv * g;
    }

    [[nodiscard]] const QuadrupleSelection& selection() const { return q_; }

    [[nodiscard]] RealMatrix complete(const RealMatrix& m) const {
        Eigen::Vector4d given;
        for (int k = 0; k < 4; ++k) given(k) = m(q_.positions[k].row, q_.positions[k].col);
        const Eigen::Matrix<double, 5, 1> x = offset_ + gain_ * given;
        RealMatrix out(3, 3);
        for (int k = 0; k < 4; ++k) out(q_.positions[k].row, q_.positions[k].col) = given(k);
        for (int k = 0; k < 5; ++k) out(unknown_[k].row, unknown_[k].col) = x(k);
        return out;
    }

private:
    QuadrupleSelection q_;
    std::array<Position, 5> unknown_{};
    Eigen::Matrix<double, 5, 1> offset_;
    Eigen::Matrix<double, 5, 4> gain_;
};

/// Completions aligned with enumerate_independent_quadruples().
inline const std::vector<QuadrupleCompletion>& independent_completions() {
    static const std::vector<QuadrupleCompletion> list = [] {
        std::vector<QuadrupleCompletion> out;
        for (const auto& q : enumerate_independent_quadruples()) out.emplace_back(q);
        return out;
    }();
    return list;
}

/// @throws DependentQuadrupleError
inline SquaredModuliMatrix complete_from_quadruple(const SquaredModuliMatrix& m, const QuadrupleSelection& q) {
    if (m.n() != 3) throw InputError("quadruple completion needs a 3x3 matrix");
    return SquaredModuliMatrix(QuadrupleCompletion(q).complete(m.entries()));
}

struct QuadrupleCosDelta {
    std::vector<TaggedValue> values;  ///< distinct candidates among the corner relations
    TaggedValue designated;           ///< the V_cs relation
    SquaredModuliMatrix completed;
    bool outside_polytope = false;    ///< some completed entry is negative
};

namespace detail {

inline bool same_value(const TaggedValue& a, const TaggedValue& b, double rel) {
    if (a.kind != b.kind) return false;
    if (a.is_degenerate()) return true;
    return std::abs(a.value - b.value) <= rel * std::max(1.0, std::abs(a.value));
}

}  // namespace detail

inline QuadrupleCosDelta cos_delta_from_completion(const SquaredModuliMatrix& completed) {
    QuadrupleCosDelta out;
    out.completed = completed;
    out.outside_polytope = (completed.entries().array() < 0.0).any();
    const auto rel = corner_cos_delta(completed);
    out.designated = rel.cs;
    for (const auto& v : rel.all()) {
        const bool seen = std::any_of(out.values.begin(), out.values.end(),
                                      [&](const TaggedValue& w) { return detail::same_value(v, w, 1e-10); });
        if (!seen) out.values.push_back(v);
    }
    return out;
}

inline QuadrupleCosDelta cos_delta_from_quadruple(const SquaredModuliMatrix& m, const QuadrupleSelection& q) {
    return cos_delta_from_completion(complete_from_quadruple(m, q));
}

// ---------------------------------------------------------------------------
// Verdict and reconstruction
// ---------------------------------------------------------------------------

struct SeparationVerdict {
    std::vector<TaggedValue> cos_delta_values;  ///< cs, cb, ts, tb relations on the input
    TaggedValue designated;                     ///< cs relation
    FirstLineSolution cosines;
    StochasticityReport stochasticity;
    bool physical = false;
    bool degenerate = false;                    ///< cos(delta) drops out of the moduli
    std::optional<MixingParameters3> parameters;
    std::vector<std::string> diagnostics;
};

class ReconstructionRefused : public DomainError {
public:
    explicit ReconstructionRefused(SeparationVerdict v)
        : DomainError("matrix is not unistochastic; reconstruction refused"), verdict_(std::move(v)) {}
    [[nodiscard]] const SeparationVerdict& verdict() const { return verdict_; }

private:
    SeparationVerdict verdict_;
};

namespace detail {

inline double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }
inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace detail

/**
 * @brief Decides whether a doubly stochastic 3x3 matrix is unistochastic.
 * @throws NotDoublyStochastic when line sums are off by more than tol.
 */
inline SeparationVerdict test_unistochastic(const SquaredModuliMatrix& m, double tol = kExactTolerance) {
    if (m.n() != 3) throw InputError("test_unistochastic needs a 3x3 matrix");
    SeparationVerdict v;
    v.stochasticity = check_doubly_stochastic(m, tol);
    if (!v.stochasticity.pass) throw NotDoublyStochastic(v.stochasticity);

    v.cosines = solve_first_line(m, tol);
    v.diagnostics = v.cosines.diagnostics;
    const auto rel = corner_cos_delta(m);
    for (const auto& t : rel.all()) v.cos_delta_values.push_back(t);
    v.designated = rel.cs;

    if (!v.cosines.degenerate && !(v.cosines.c12.valid && v.cosines.c13.valid && v.cosines.c23.valid)) {
        v.diagnostics.push_back("mixing cosines outside [0, 1]");
        return v;
    }

    if (v.cosines.degenerate || v.designated.is_degenerate()) {
        v.degenerate = true;
        MixingParameters3 p;
        if (v.cosines.degenerate) {
            p = MixingParameters3::from_cosines(1.0, std::sqrt(detail::clamp01(m(1, 1))), 1.0, 1.0);
        } else {
            // snap to the boundary so the cross term vanishes exactly
            auto edge = [](double c) {
                const double c2 = detail::clamp01(c * c);
                return std::sqrt(c2 <= 1e-13 ? 0.0 : (c2 >= 1.0 - 1e-13 ? 1.0 : c2));
            };
            p = MixingParameters3::from_cosines(edge(v.cosines.c12.value.real()), edge(v.cosines.c13.value.real()),
                                                edge(v.cosines.c23.value.real()), 1.0);
        }
        const double mismatch = (hadamard_square(build_ckm3(p)).entries() - m.entries()).cwiseAbs().maxCoeff();
        v.physical = mismatch <= 10.0 * tol;
        std::ostringstream os;
        os.precision(3);
        os << "cos delta undefined (vanishing mixing sine or cosine); delta-free moduli mismatch " << mismatch;
        v.diagnostics.push_back(os.str());
        if (v.physical) v.parameters = p;
        return v;
    }

    if (!v.designated.is_real()) {
        v.diagnostics.push_back("cos delta is " + to_string(v.designated.kind));
        return v;
    }
    const double cd = v.designated.real();
    if (std::abs(cd) > 1.0 + tol) {
        std::ostringstream os;
        os.precision(17);
        os << "|cos delta| = " << std::abs(cd) << " > 1";
        v.diagnostics.push_back(os.str());
        return v;
    }
    v.physical = true;
    v.parameters = MixingParameters3::from_cosines(
        detail::clamp01(v.cosines.c12.value.real()), detail::clamp01(v.cosines.c13.value.real()),
        detail::clamp01(v.cosines.c23.value.real()), detail::clamp_unit(cd));
    return v;
}

struct Reconstruction {
    ComplexMatrix unitary;
    MixingParameters3 parameters;
    SeparationVerdict verdict;
};

/// @throws ReconstructionRefused when the verdict is unphysical.
inline Reconstruction reconstruct(const SquaredModuliMatrix& m, double tol = kExactTolerance) {
    SeparationVerdict v = test_unistochastic(m, tol);
    if (!v.physical) throw ReconstructionRefused(std::move(v));
    const MixingParameters3 p = *v.parameters;
    return {canonical_gauge_form(build_ckm3(p)).matrix, p, std::move(v)};
}

inline ComplexMatrix reconstruct_unitary(const SquaredModuliMatrix& m, double tol = kExactTolerance) {
    return reconstruct(m, tol).unitary;
}

// ---------------------------------------------------------------------------
// Expression census
// ---------------------------------------------------------------------------

/// Number of numerically distinct (quadruple, relation) cos(delta) expressions,
/// fingerprinted at eight random perturbations of the toy3 matrix.
inline int count_distinct_cos_delta_expressions(std::uint64_t seed = 20240601) {
    const SquaredModuliMatrix base = hadamard_square(build_ckm3(detail::generic_point()));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> noise(-0.01, 0.01);
    std::vector<SquaredModuliMatrix> probes;
    for (int k = 0; k < 8; ++k) {
        RealMatrix x = base.entries();
        for (Eigen::Index i = 0; i < x.size(); ++i) x(i) += noise(rng);
        probes.emplace_back(x);
    }
    std::vector<std::vector<Complex>> prints;
    for (const auto& c : independent_completions()) {
        std::array<std::vector<Complex>, 4> per_relation;
        for (const auto& probe : probes) {
            const auto rel = corner_cos_delta(SquaredModuliMatrix(c.complete(probe.entries()))).all();
            for (int r = 0; r < 4; ++r) per_relation[r].push_back(rel[r].value);
        }
        for (auto& fp : per_relation) {
            const bool seen = std::any_of(prints.begin(), prints.end(), [&](const std::vector<Complex>& other) {
                for (std::size_t k = 0; k < fp.size(); ++k)
                    if (!(std::abs(fp[k] - other[k]) <= 1e-9 * std::max(1.0, std::abs(fp[k])))) return false;
                return true;
            });
            if (!seen) prints.push_back(fp);
        }
    }
    return static_cast<int>(prints.size());
}

}  // namespace unistoch
