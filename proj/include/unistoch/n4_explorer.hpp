#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "matrix_core.hpp"
#include "parametrize.hpp"

namespace unistoch {

/// The four parameters left free once the first row and column are fixed.
struct Params4Free {
    double b2 = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double gamma1 = 0.0;

    [[nodiscard]] std::array<double, 4> as_array() const { return {b2, beta1, beta2, gamma1}; }
    static Params4Free from_array(const std::array<double, 4>& v) { return {v[0], v[1], v[2], v[3]}; }
};

struct CosSin {
    double cos = 1.0;
    double sin = 0.0;
    bool valid = true;
    [[nodiscard]] double angle() const { return std::atan2(sin, cos); }
};

/// Angles a1, a2, a3, b1, c1 read off the first column and first row.
struct FirstLine4 {
    CosSin a1, a2, a3, b1, c1;
    std::vector<std::string> diagnostics;

    [[nodiscard]] bool valid() const { return a1.valid && a2.valid && a3.valid && b1.valid && c1.valid; }
};

namespace detail {

/// cos^2 = num / rest, sin^2 = (rest - num) / rest, with rest the unused remainder.
inline CosSin ratio_pair(const char* name, double num, double rest, std::vector<std::string>& diag) {
    constexpr double tol = 1e-12;
    CosSin r;
    if (rest <= tol) {
        // Nothing left to share: the angle is irrelevant, pick cos = 1.
        if (std::abs(num) > tol) {
            r.valid = false;
            diag.push_back(std::string(name) + ": entry nonzero but remainder vanishes");
        }
        return r;
    }
    const double c2 = num / rest, s2 = (rest - num) / rest;
    if (c2 < -tol || s2 < -tol) {
        r.valid = false;
        diag.push_back(std::string(name) + ": negative radicand");
        return r;
    }
    r.cos = std::sqrt(std::clamp(c2, 0.0, 1.0));
    r.sin = std::sqrt(std::clamp(s2, 0.0, 1.0));
    return r;
}

}  // namespace detail

inline FirstLine4 first_line_params4(const SquaredModuliMatrix& m) {
    if (m.n() != 4) throw InputError("first_line_params4 needs a 4x4 matrix");
    FirstLine4 f;
    f.a1 = detail::ratio_pair("a1", m(0, 0), 1.0, f.diagnostics);
    f.a2 = detail::ratio_pair("a2", m(1, 0), 1.0 - m(0, 0), f.diagnostics);
    f.a3 = detail::ratio_pair("a3", m(2, 0), 1.0 - m(0, 0) - m(1, 0), f.diagnostics);
    f.b1 = detail::ratio_pair("b1", m(0, 1), 1.0 - m(0, 0), f.diagnostics);
    f.c1 = detail::ratio_pair("c1", m(0, 2), 1.0 - m(0, 0) - m(0, 1), f.diagnostics);
    return f;
}

inline StandardParams4 full_params4(const FirstLine4& f, const Params4Free& p) {
    return {f.a1.angle(), f.a2.angle(), f.a3.angle(), f.b1.angle(), p.b2, f.c1.angle(), p.beta1, p.beta2, p.gamma1};
}

namespace detail {

/// Fixed-size copy of GeneratingVector::block for the solver's inner loop.
template <int M>
Eigen::Matrix<Complex, M, M> fixed_block(const std::array<CosSin, M - 1>& angles, const std::array<double, M>& phases) {
    Eigen::Matrix<Complex, M, M> b = Eigen::Matrix<Complex, M, M>::Zero();
    std::array<Complex, M> e;
    for (int j = 0; j < M; ++j) e[j] = std::polar(1.0, phases[j]);
    for (int k = 0; k < M; ++k) {
        const int p = k - 1;
        double acc = 1.0;
        if (k > 0) {
            b(p, k) = -e[p] * angles[p].sin;
            acc = angles[p].cos;
        }
        for (int j = std::max(p + 1, 0); j < M; ++j) {
            const double c = j < M - 1 ? angles[j].cos : 1.0;
            b(j, k) = e[j] * (acc * c);
            if (j < M - 1) acc *= angles[j].sin;
        }
    }
    return b;
}

/// |U_22|^2, |U_23|^2, |U_32|^2, |U_33|^2 of the coset representative.
inline Eigen::Vector4d inner_moduli4(const FirstLine4& f, const Params4Free& p) {
    constexpr double pi = std::numbers::pi;
    const CosSin b2{std::cos(p.b2), std::sin(p.b2)};
    const auto y4 = fixed_block<4>({f.a1, f.a2, f.a3}, {0.0, 0.0, 0.0, 0.0});
    const auto y3 = fixed_block<3>({f.b1, b2}, {pi, p.beta1, p.beta2});
    const auto y2 = fixed_block<2>({f.c1}, {pi, p.gamma1});
    Eigen::Matrix4cd d3 = Eigen::Matrix4cd::Identity(), d2 = Eigen::Matrix4cd::Identity();
    d3.bottomRightCorner<3, 3>() = y3;
    d2.bottomRightCorner<2, 2>() = y2;
    const Eigen::Matrix4cd u = y4 * d3 * d2;  // the trailing diag(1, 1, 1, -1) leaves these moduli alone
    return {std::norm(u(1, 1)), std::norm(u(1, 2)), std::norm(u(2, 1)), std::norm(u(2, 2))};
}

}  // namespace detail

/// (f22 - m22, f23 - m23, f32 - m32, f33 - m33).
inline std::array<double, 4> residuals4(const SquaredModuliMatrix& m, const FirstLine4& f, const Params4Free& p) {
    const Eigen::Vector4d v = detail::inner_moduli4(f, p);
    return {v[0] - m(1, 1), v[1] - m(1, 2), v[2] - m(2, 1), v[3] - m(2, 2)};
}

inline std::array<double, 4> residuals4(const SquaredModuliMatrix& m, const Params4Free& p) {
    const FirstLine4 f = first_line_params4(m);
    if (!f.valid()) throw DomainError("first row/column do not determine valid angles");
    return residuals4(m, f, p);
}

/// Jacobian of (f22, f23, f32, f33) in (b2, beta1, beta2, gamma1), central differences.
inline Eigen::Matrix4d jacobian4(const FirstLine4& f, const Params4Free& p, double h = 1e-6) {
    Eigen::Matrix4d j;
    for (int k = 0; k < 4; ++k) {
        auto plus = p.as_array(), minus = p.as_array();
        plus[k] += h;
        minus[k] -= h;
        j.col(k) = (detail::inner_moduli4(f, Params4Free::from_array(plus)) -
                    detail::inner_moduli4(f, Params4Free::from_array(minus))) / (2.0 * h);
    }
    return j;
}

/// Singular values below the finite-difference noise floor count as zero.
inline constexpr double kJacobianNoiseFloor = 1e-9;

inline int jacobian_rank4(const Eigen::Matrix4d& j, double ratio = 1e-7) {
    const Eigen::Vector4d s = Eigen::JacobiSVD<Eigen::Matrix4d>(j).singularValues();
    const double cut = std::max(ratio * s[0], kJacobianNoiseFloor);
    return static_cast<int>((s.array() > cut).count());
}

struct Solution4 {
    Params4Free params;
    double residualNorm = 0.0;
    int jacobianRank = 0;
    /// cos b2, cos beta1, cos beta2, cos gamma1 at the solution.
    std::array<double, 4> cosines{1.0, 1.0, 1.0, 1.0};
    bool criteriaPass = false;
};

/// 0 <= cos b2 <= 1 and |cos beta1|, |cos beta2|, |cos gamma1| <= 1.
inline bool check_criteria4(const Solution4& s, double tol = 1e-12) {
    const auto& c = s.cosines;
    if (!(c[0] >= -tol && c[0] <= 1.0 + tol)) return false;
    for (int k = 1; k < 4; ++k)
        if (!(std::abs(c[k]) <= 1.0 + tol)) return false;
    return true;
}

struct Solve4Config {
    int b2_starts = 5;
    int phase_starts = 8;
    int max_iterations = 200;
    double converged_residual = 1e-8;
    double dedup_tolerance = 1e-5;
    double rank_ratio = 1e-7;
    double stochastic_tolerance = kExactTolerance;
};

struct Solve4Result {
    std::vector<Solution4> solutions;
    FirstLine4 first_line;
    int starts = 0;
    std::vector<std::string> diagnostics;

    [[nodiscard]] bool found() const { return !solutions.empty(); }
};

namespace detail {

inline double wrap_2pi(double x) {
    const double t = 2.0 * std::numbers::pi;
    x = std::fmod(x, t);
    if (x < 0) x += t;
    if (x >= t) x -= t;
    return x;
}

inline double phase_gap(double a, double b) {
    const double d = std::abs(wrap_2pi(a - b));
    return std::min(d, 2.0 * std::numbers::pi - d);
}

/// Complex conjugation of the unitary negates all free phases; keep the
/// branch whose first phase away from 0 and pi lies in [0, pi].
inline Params4Free conjugation_representative(Params4Free p, double tol = 1e-9) {
    p.beta1 = wrap_2pi(p.beta1);
    p.beta2 = wrap_2pi(p.beta2);
    p.gamma1 = wrap_2pi(p.gamma1);
    for (double ph : {p.beta1, p.beta2, p.gamma1}) {
        const bool real_phase = phase_gap(ph, 0.0) <= tol || phase_gap(ph, std::numbers::pi) <= tol;
        if (real_phase) continue;
        if (ph > std::numbers::pi) {
            p.beta1 = wrap_2pi(-p.beta1);
            p.beta2 = wrap_2pi(-p.beta2);
            p.gamma1 = wrap_2pi(-p.gamma1);
        }
        break;
    }
    return p;
}

inline double params_distance(const Params4Free& a, const Params4Free& b) {
    return std::max({std::abs(a.b2 - b.b2), phase_gap(a.beta1, b.beta1), phase_gap(a.beta2, b.beta2),
                     phase_gap(a.gamma1, b.gamma1)});
}

struct LmOutcome {
    Params4Free params;
    double residual;
};

/// Levenberg-Marquardt on the four residuals, b2 kept inside [0, pi/2].
inline LmOutcome levenberg_marquardt4(const SquaredModuliMatrix& m, const FirstLine4& f, Params4Free p,
                                       const Solve4Config& cfg) {
    const Eigen::Vector4d target(m(1, 1), m(1, 2), m(2, 1), m(2, 2));
    auto residual = [&](const Params4Free& q) -> Eigen::Vector4d { return inner_moduli4(f, q) - target; };
    Eigen::Vector4d r = residual(p);
    double cost = r.squaredNorm();
    double lambda = 1e-3;
    constexpr double h = 1e-7;
    for (int it = 0; it < cfg.max_iterations && cost > 1e-26; ++it) {
        Eigen::Matrix4d j;
        for (int k = 0; k < 4; ++k) {
            auto shifted = p.as_array();
            shifted[k] += h;
            j.col(k) = (residual(Params4Free::from_array(shifted)) - r) / h;
        }
        const Eigen::Matrix4d jtj = j.transpose() * j;
        const Eigen::Vector4d g = j.transpose() * r;
        bool improved = false;
        for (int tries = 0; tries < 12; ++tries) {
            Eigen::Matrix4d a = jtj;
            a.diagonal().array() += lambda * (1.0 + jtj.diagonal().array());
            const Eigen::Vector4d step = a.ldlt().solve(-g);
            auto next = p.as_array();
            for (int k = 0; k < 4; ++k) next[k] += step[k];
            next[0] = std::clamp(next[0], 0.0, std::numbers::pi / 2);
            const Params4Free q = Params4Free::from_array(next);
            const Eigen::Vector4d rq = residual(q);
            if (rq.squaredNorm() < cost) {
                p = q;
                r = rq;
                cost = rq.squaredNorm();
                lambda = std::max(lambda / 3.0, 1e-12);
                improved = true;
                break;
            }
            lambda *= 4.0;
        }
        if (!improved) break;
        if (it == 60 && cost > 1e-6) break;  // stuck in a non-zero local minimum
    }
    p.beta1 = wrap_2pi(p.beta1);
    p.beta2 = wrap_2pi(p.beta2);
    p.gamma1 = wrap_2pi(p.gamma1);
    return {p, std::sqrt(cost)};
}

}  // namespace detail

/**
 * Multi-start search for all coset representatives with the given moduli.
 * Results are sorted by residual, then lexicographically by parameters.
 * @throws NotDoublyStochastic if M fails the line-sum check.
 */
inline Solve4Result solve4(const SquaredModuliMatrix& m, const Solve4Config& cfg = {}) {
    if (m.n() != 4) throw InputError("solve4 needs a 4x4 matrix");
    if (cfg.b2_starts < 1 || cfg.phase_starts < 1) throw InputError("solve4 needs at least one start per axis");
    const auto report = check_doubly_stochastic(m, cfg.stochastic_tolerance);
    if (!report.pass) throw NotDoublyStochastic(report);

    Solve4Result out;
    out.first_line = first_line_params4(m);
    if (!out.first_line.valid()) {
        out.diagnostics = out.first_line.diagnostics;
        out.diagnostics.push_back("first row/column do not determine valid angles");
        return out;
    }
    const double two_pi = 2.0 * std::numbers::pi;
    for (int ib = 0; ib < cfg.b2_starts; ++ib)
        for (int i1 = 0; i1 < cfg.phase_starts; ++i1)
            for (int i2 = 0; i2 < cfg.phase_starts; ++i2)
                for (int i3 = 0; i3 < cfg.phase_starts; ++i3) {
                    ++out.starts;
                    const Params4Free start{(ib + 0.5) / cfg.b2_starts * std::numbers::pi / 2,
                                            two_pi * i1 / cfg.phase_starts, two_pi * i2 / cfg.phase_starts,
                                            two_pi * i3 / cfg.phase_starts};
                    const auto lm = detail::levenberg_marquardt4(m, out.first_line, start, cfg);
                    if (!(lm.residual < cfg.converged_residual)) continue;
                    const Params4Free rep = detail::conjugation_representative(lm.params);
                    auto same = [&](const Solution4& s) {
                        return detail::params_distance(s.params, rep) <= cfg.dedup_tolerance;
                    };
                    auto hit = std::find_if(out.solutions.begin(), out.solutions.end(), same);
                    if (hit != out.solutions.end()) {
                        if (lm.residual < hit->residualNorm) {
                            hit->params = rep;
                            hit->residualNorm = lm.residual;
                        }
                        continue;
                    }
                    Solution4 s;
                    s.params = rep;
                    s.residualNorm = lm.residual;
                    out.solutions.push_back(s);
                }
    for (auto& s : out.solutions) {
        s.jacobianRank = jacobian_rank4(jacobian4(out.first_line, s.params), cfg.rank_ratio);
        s.cosines = {std::cos(s.params.b2), std::cos(s.params.beta1), std::cos(s.params.beta2),
                     std::cos(s.params.gamma1)};
        s.criteriaPass = check_criteria4(s);
    }
    std::sort(out.solutions.begin(), out.solutions.end(), [](const Solution4& a, const Solution4& b) {
        if (a.residualNorm != b.residualNorm) return a.residualNorm < b.residualNorm;
        return a.params.as_array() < b.params.as_array();
    });
    if (out.solutions.empty()) out.diagnostics.push_back("no unitary preimage found from " +
                                                         std::to_string(out.starts) + " starts");
    return out;
}

}  // namespace unistoch
