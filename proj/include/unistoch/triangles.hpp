#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "matrix_core.hpp"
#include "parametrize.hpp"
#include "tagged_value.hpp"
#include "unitarity_condition.hpp"

namespace unistoch {

/// Which pair of columns (C) or rows (R) is orthogonal; indices are 1-based.
enum class Orthogonality { C12, C13, C23, R12, R13, R23 };

inline constexpr std::array<Orthogonality, 6> kAllOrthogonalities{
    Orthogonality::C12, Orthogonality::C13, Orthogonality::C23,
    Orthogonality::R12, Orthogonality::R13, Orthogonality::R23};

inline std::string to_string(Orthogonality id) {
    switch (id) {
        case Orthogonality::C12: return "C12";
        case Orthogonality::C13: return "C13";
        case Orthogonality::C23: return "C23";
        case Orthogonality::R12: return "R12";
        case Orthogonality::R13: return "R13";
        case Orthogonality::R23: return "R23";
    }
    return "?";
}

inline Orthogonality orthogonality_from_string(const std::string& s) {
    for (auto id : kAllOrthogonalities)
        if (to_string(id) == s) return id;
    throw InputError("unknown orthogonality id '" + s + "' (expected C12, C13, C23, R12, R13 or R23)");
}

struct TriangleSides {
    TaggedValue rc;  ///< second term over the first
    TaggedValue rt;  ///< third term over the first
};

namespace detail {

inline bool is_column_pair(Orthogonality id) {
    return id == Orthogonality::C12 || id == Orthogonality::C13 || id == Orthogonality::C23;
}

inline std::pair<int, int> pair_indices(Orthogonality id) {
    switch (id) {
        case Orthogonality::C12:
        case Orthogonality::R12: return {0, 1};
        case Orthogonality::C13:
        case Orthogonality::R13: return {0, 2};
        case Orthogonality::C23:
        case Orthogonality::R23: return {1, 2};
    }
    return {0, 1};
}

/// |U_aj U_bj| style products, each factor a principal root of the entry.
inline std::array<Complex, 3> orthogonality_terms(const RealMatrix& m, Orthogonality id) {
    const auto [a, b] = pair_indices(id);
    std::array<Complex, 3> t;
    for (int k = 0; k < 3; ++k)
        t[k] = is_column_pair(id) ? csqrt(m(k, a)) * csqrt(m(k, b)) : csqrt(m(a, k)) * csqrt(m(b, k));
    return t;
}

}  // namespace detail

/// Sides scaled by the first term (real and positive in canonical gauge).
inline TriangleSides side_lengths(const SquaredModuliMatrix& m, Orthogonality id) {
    if (m.n() != 3) throw InputError("triangles need a 3x3 matrix");
    const auto t = detail::orthogonality_terms(m.entries(), id);
    if (std::abs(t[0]) == 0.0) return {};
    return {classify(t[1] / t[0]), classify(t[2] / t[0])};
}

/// Sides evaluated on the completion of M from the quadruple q.
inline TriangleSides side_lengths(const SquaredModuliMatrix& m, Orthogonality id, const QuadrupleSelection& q) {
    return side_lengths(complete_from_quadruple(m, q), id);
}

inline bool triangle_exists(double rc, double rt, double tol = 1e-12) {
    if (!(rc >= 0.0 && rt >= 0.0)) return false;
    return std::abs(rc - rt) <= 1.0 + tol && rc + rt >= 1.0 - tol;
}

inline bool triangle_exists(const TriangleSides& s, std::string* diagnostic = nullptr, double tol = 1e-12) {
    auto fail = [&](const std::string& why) {
        if (diagnostic) *diagnostic = why;
        return false;
    };
    if (s.rc.is_degenerate() || s.rt.is_degenerate()) return fail("degenerate side (zero first term)");
    if (!s.rc.is_real() || !s.rt.is_real()) return fail("imaginary side length");
    if (s.rc.real() < 0.0 || s.rt.real() < 0.0) return fail("negative side length");
    if (!triangle_exists(s.rc.real(), s.rt.real(), tol)) return fail("triangle inequality violated");
    return true;
}

/// phi3 at (0, 0), phi2 at (1, 0), phi1 at the apex.
struct TriangleAngles {
    double phi1 = 0, phi2 = 0, phi3 = 0;
    double cos_phi1 = 1, cos_phi2 = 1, cos_phi3 = 1;
    bool collinear = false;
};

struct Apex {
    double rho = 0;
    double eta = 0;  ///< taken >= 0
};

inline Apex triangle_apex(double rc, double rt) {
    const double rho = 0.5 * (1.0 + rc * rc - rt * rt);
    return {rho, std::sqrt(std::max(0.0, rc * rc - rho * rho))};
}

/// @throws DomainError if the sides do not close a triangle.
inline TriangleAngles triangle_angles(double rc, double rt) {
    if (!triangle_exists(rc, rt)) throw DomainError("sides do not form a triangle");
    TriangleAngles a;
    a.cos_phi3 = (1.0 + rc * rc - rt * rt) / (2.0 * rc);
    a.cos_phi2 = (1.0 + rt * rt - rc * rc) / (2.0 * rt);
    a.cos_phi1 = (rc * rc + rt * rt - 1.0) / (2.0 * rc * rt);
    const Apex p = triangle_apex(rc, rt);
    a.phi3 = std::atan2(p.eta, p.rho);
    a.phi2 = std::atan2(p.eta, 1.0 - p.rho);
    a.phi1 = std::numbers::pi - a.phi2 - a.phi3;
    a.collinear = p.eta <= 1e-12 * std::max(1.0, rc);
    return a;
}

struct TriangleGeometry {
    Orthogonality id = Orthogonality::C12;
    TriangleSides sides;
    Apex apex;
    TriangleAngles angles;
    bool valid = false;
    std::vector<std::string> diagnostics;
};

inline TriangleGeometry triangle_geometry(const TriangleSides& s, Orthogonality id) {
    TriangleGeometry g;
    g.id = id;
    g.sides = s;
    std::string why;
    g.valid = triangle_exists(s, &why);
    if (!g.valid) {
        g.diagnostics.push_back(why);
        return g;
    }
    g.apex = triangle_apex(s.rc.real(), s.rt.real());
    g.angles = triangle_angles(s.rc.real(), s.rt.real());
    if (g.angles.collinear) g.diagnostics.push_back("collinear triangle");
    return g;
}

inline TriangleGeometry triangle_geometry(const SquaredModuliMatrix& m, Orthogonality id) {
    return triangle_geometry(side_lengths(m, id), id);
}

// ---------------------------------------------------------------------------
// Phases of U22, U23, U32, U33
// ---------------------------------------------------------------------------

struct TangentQuadruple {
    double t22 = 0, t23 = 0, t32 = 0, t33 = 0;
};

struct OmegaTangents {
    TangentQuadruple t;
    std::array<bool, 4> infinite{};  ///< order t22, t23, t32, t33; the value is then meaningless
};

namespace detail {

/// tan = p sin(delta) / (q + r cos(delta)) for each of the four entries.
struct TangentForm {
    double p, q, r;
};

inline std::array<TangentForm, 4> tangent_forms(double c12, double c13, double c23, double s13, double s23) {
    return {{{s13 * s23, c12 * c13 * c23, s13 * s23},
             {c13 * s23, -c12 * c23 * s13, c13 * s23},
             {c23 * s13, -c12 * c13 * s23, c23 * s13},
             {c13 * c23, c12 * s13 * s23, c13 * c23}}};
}

}  // namespace detail

inline OmegaTangents omega_tangents(const MixingParameters3& p) {
    const auto forms = detail::tangent_forms(p.c12(), p.c13(), p.c23(), p.s13(), p.s23());
    const double sd = std::sin(p.delta), cd = std::cos(p.delta);
    OmegaTangents out;
    std::array<double, 4> v{};
    for (int k = 0; k < 4; ++k) {
        const double den = forms[k].q + forms[k].r * cd;
        out.infinite[k] = std::abs(den) <= 1e-14 * (std::abs(forms[k].q) + std::abs(forms[k].r));
        v[k] = out.infinite[k] ? std::numeric_limits<double>::infinity() : forms[k].p * sd / den;
    }
    out.t = {v[0], v[1], v[2], v[3]};
    return out;
}

struct RecoveredCosines {
    double c12sq = 0, c13sq = 0, c23sq = 0;
    bool valid = false;
    std::vector<std::string> diagnostics;
};

/// @throws DegenerateConfiguration when a denominator vanishes.
inline RecoveredCosines recover_cij_from_tangents(const TangentQuadruple& t, double tol = 1e-12) {
    const double a = t.t22, b = t.t23, c = t.t32, d = t.t33;
    const double den = a * b * (d - c) + c * d * (a - b);
    const double n1 = (a - b) * (a - c) * (b - d) * (c - d);
    const double a2 = a * a, b2 = b * b, c2 = c * c, d2 = d * d;
    const double n2 = b2 * c2 + a2 * d2 + b2 * c2 * (a2 + d2) + a2 * d2 * (b2 + c2) -
                      2.0 * a * b * c * d * (1.0 + (b + c) * (a + d) - b * c - a * d);
    const double scale = std::max({1.0, std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
    if (std::abs(den) <= 1e-14 * scale * scale * scale || std::abs(n2) <= 1e-14 * std::pow(scale, 6))
        throw DegenerateConfiguration("tangent recovery denominator vanishes");
    RecoveredCosines r;
    r.c13sq = b * d * (a - c) / den;
    r.c23sq = c * d * (a - b) / den;
    r.c12sq = n1 / n2;
    r.valid = true;
    const std::array<std::pair<const char*, double>, 3> named{{{"c12^2", r.c12sq}, {"c13^2", r.c13sq}, {"c23^2", r.c23sq}}};
    for (const auto& [name, v] : named) {
        if (v < -tol || v > 1.0 + tol) {
            r.valid = false;
            r.diagnostics.push_back(std::string(name) + " = " + std::to_string(v) + " outside [0, 1]");
        } else if (v <= tol || v >= 1.0 - tol) {
            r.diagnostics.push_back(std::string(name) + " on the boundary");
        }
    }
    return r;
}

struct CosDeltaCandidate {
    double value = 0;
    std::array<bool, 4> satisfies{};  ///< root of the t22, t23, t32, t33 equation
    bool consistent = false;
};

struct CosDeltaCandidates {
    std::vector<CosDeltaCandidate> candidates;
    std::optional<double> consistent;
    std::optional<RecoveredCosines> cosines;
    std::vector<std::string> diagnostics;
};

namespace detail {

/// Real roots of a x^2 + b x + c = 0.
inline std::vector<double> real_roots(double a, double b, double c) {
    if (a == 0.0) {
        if (b == 0.0) return {};
        return {-c / b};
    }
    double disc = b * b - 4.0 * a * c;
    const double scale = std::max(b * b, std::abs(4.0 * a * c));
    if (disc < 0.0 && disc > -1e-14 * scale) disc = 0.0;
    if (disc < 0.0) return {};
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    if (q == 0.0) return {0.0};
    return {q / a, c / q};
}

}  // namespace detail

/**
 * Each tangent equation t (q + r x) = p sqrt(1 - x^2), squared, is a
 * quadratic in x = cos(delta). Squaring admits both signs of sin(delta),
 * so every branch is covered; the true value is the root shared by all four.
 */
inline CosDeltaCandidates cos_delta_candidates_from_tangents(const TangentQuadruple& t) {
    CosDeltaCandidates out;
    RecoveredCosines rc;
    try {
        rc = recover_cij_from_tangents(t);
    } catch (const DegenerateConfiguration& e) {
        out.diagnostics.push_back(std::string("degenerate tangents: ") + e.what());
        return out;
    }
    out.cosines = rc;
    if (!rc.valid) {
        out.diagnostics.push_back("recovered mixing cosines outside [0, 1]");
        return out;
    }
    auto root_of = [](double x) { return std::sqrt(std::clamp(x, 0.0, 1.0)); };
    const double c12 = root_of(rc.c12sq), c13 = root_of(rc.c13sq), c23 = root_of(rc.c23sq);
    const double s13 = root_of(1.0 - rc.c13sq), s23 = root_of(1.0 - rc.c23sq);
    const auto forms = detail::tangent_forms(c12, c13, c23, s13, s23);
    const std::array<double, 4> ts{t.t22, t.t23, t.t32, t.t33};

    std::array<std::vector<double>, 4> roots;
    for (int k = 0; k < 4; ++k) {
        const auto& f = forms[k];
        const double t2 = ts[k] * ts[k];
        for (double x : detail::real_roots(t2 * f.r * f.r + f.p * f.p, 2.0 * t2 * f.q * f.r,
                                           t2 * f.q * f.q - f.p * f.p))
            if (std::abs(x) <= 1.0 + 1e-12) roots[k].push_back(std::clamp(x, -1.0, 1.0));
    }
    for (int k = 0; k < 4; ++k)
        for (double x : roots[k]) {
            const bool seen = std::any_of(out.candidates.begin(), out.candidates.end(),
                                          [&](const CosDeltaCandidate& c) { return std::abs(c.value - x) <= 1e-9; });
            if (!seen) out.candidates.push_back({x, {}, false});
        }
    for (auto& c : out.candidates) {
        for (int k = 0; k < 4; ++k)
            c.satisfies[k] = std::any_of(roots[k].begin(), roots[k].end(),
                                         [&](double x) { return std::abs(x - c.value) <= 1e-7; });
        c.consistent = std::all_of(c.satisfies.begin(), c.satisfies.end(), [](bool b) { return b; });
        if (c.consistent && !out.consistent) out.consistent = c.value;
    }
    if (out.candidates.empty()) out.diagnostics.push_back("no real cos delta root in any tangent equation");
    else if (!out.consistent) out.diagnostics.push_back("no cos delta common to all four tangent equations");
    return out;
}

/// Which side relation: R_db,c (second row over first) or R_db,t (third row over first).
enum class SideRelation { DbC, DbT };

/// cos(delta) from the mixing cosines and one side of the first/third column triangle.
inline TaggedValue cos_delta_from_side(double c12, double c13, double c23, double r, SideRelation which) {
    const double s13 = std::sqrt(std::max(0.0, 1.0 - c13 * c13));
    const double s23 = std::sqrt(std::max(0.0, 1.0 - c23 * c23));
    const double a2 = c12 * c12, b2 = c13 * c13, c2 = c23 * c23, s2 = s13 * s13, t2 = s23 * s23, r2 = r * r;
    double num = 0, den = 0;
    if (which == SideRelation::DbC) {
        num = a2 * c2 * c2 * s2 + b2 * c2 * t2 - a2 * s2 * r2;
        den = 2.0 * c12 * c13 * c2 * c23 * s13 * s23;
    } else {
        num = a2 * s2 * r2 - b2 * c2 * t2 - a2 * s2 * t2 * t2;
        den = 2.0 * c12 * c13 * c23 * s13 * t2 * s23;
    }
    if (den == 0.0) return TaggedValue::degenerate();
    return classify(num / den);
}

}  // namespace unistoch
