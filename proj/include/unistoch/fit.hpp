#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "errors.hpp"
#include "matrix_core.hpp"
#include "parametrize.hpp"
#include "simplex.hpp"
#include "triangles.hpp"
#include "unitarity_condition.hpp"

namespace unistoch {

// ---------------------------------------------------------------------------
// Measurements
// ---------------------------------------------------------------------------

enum class MeasurementKind { Modulus, SquaredModulus, TriangleSide, TriangleAngleCosine };

inline std::string to_string(MeasurementKind k) {
    switch (k) {
        case MeasurementKind::Modulus: return "modulus";
        case MeasurementKind::SquaredModulus: return "squared-modulus";
        case MeasurementKind::TriangleSide: return "triangle-side";
        case MeasurementKind::TriangleAngleCosine: return "triangle-angle-cosine";
    }
    return "?";
}

inline MeasurementKind measurement_kind_from_string(const std::string& s) {
    for (auto k : {MeasurementKind::Modulus, MeasurementKind::SquaredModulus, MeasurementKind::TriangleSide,
                   MeasurementKind::TriangleAngleCosine})
        if (to_string(k) == s) return k;
    throw InputError("unknown measurement kind '" + s + "'");
}

/// One measured quantity. For moduli, `position` (0-based) is the target;
/// for sides, `which` 0 is R_c and 1 is R_t; for angle cosines, `which` 1..3 picks phi1..phi3.
struct Measurement {
    MeasurementKind kind = MeasurementKind::SquaredModulus;
    Position position{0, 0};
    Orthogonality triangle = Orthogonality::C13;
    int which = 0;
    double value = 0.0;
    double sigma = 1.0;

    [[nodiscard]] bool is_modulus() const {
        return kind == MeasurementKind::Modulus || kind == MeasurementKind::SquaredModulus;
    }

    /// Identifies the measured quantity, not the value.
    [[nodiscard]] std::string target_label() const {
        if (is_modulus())
            return "V" + std::to_string(position.row + 1) + std::to_string(position.col + 1);
        if (kind == MeasurementKind::TriangleSide) return to_string(triangle) + (which == 0 ? ":Rc" : ":Rt");
        return to_string(triangle) + ":cos_phi" + std::to_string(which);
    }

    [[nodiscard]] std::string label() const { return to_string(kind) + " " + target_label(); }

    void validate() const {
        if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InputError(label() + ": sigma must be positive");
        if (!std::isfinite(value)) throw InputError(label() + ": value must be finite");
        if (is_modulus() && (position.row < 0 || position.row > 2 || position.col < 0 || position.col > 2))
            throw InputError("measurement target outside the 3x3 matrix");
        if (kind == MeasurementKind::TriangleSide && (which < 0 || which > 1))
            throw InputError(label() + ": side must be c or t");
        if (kind == MeasurementKind::TriangleAngleCosine && (which < 1 || which > 3))
            throw InputError(label() + ": angle index must be 1, 2 or 3");
    }
};

/// Theory value of a measurement on V. Non-real triangle quantities enter with their real part.
inline double theory_value(const SquaredModuliMatrix& v, const Measurement& m) {
    switch (m.kind) {
        case MeasurementKind::SquaredModulus: return v(m.position.row, m.position.col);
        case MeasurementKind::Modulus: return std::sqrt(std::max(0.0, v(m.position.row, m.position.col)));
        case MeasurementKind::TriangleSide: {
            const auto s = side_lengths(v, m.triangle);
            return (m.which == 0 ? s.rc : s.rt).value.real();
        }
        case MeasurementKind::TriangleAngleCosine: {
            const auto s = side_lengths(v, m.triangle);
            const double rc = s.rc.value.real(), rt = s.rt.value.real();
            if (m.which == 1) return (rc * rc + rt * rt - 1.0) / (2.0 * rc * rt);
            if (m.which == 2) return (1.0 + rt * rt - rc * rc) / (2.0 * rt);
            return (1.0 + rc * rc - rt * rt) / (2.0 * rc);
        }
    }
    throw InputError("unknown measurement kind");
}

inline double chi2_data(const SquaredModuliMatrix& v, const std::vector<Measurement>& ms) {
    if (v.n() != 3) throw InputError("chi2_data needs a 3x3 matrix");
    double sum = 0.0;
    for (const auto& m : ms) {
        m.validate();
        const double pull = (theory_value(v, m) - m.value) / m.sigma;
        sum += pull * pull;
    }
    return sum;
}

inline double chi2_data(const MixingParameters3& p, const std::vector<Measurement>& ms) {
    return chi2_data(hadamard_square(build_ckm3(p)), ms);
}

// ---------------------------------------------------------------------------
// Unitarity objectives
// ---------------------------------------------------------------------------

struct Chi2Weights {
    double penalty = 1e3;  ///< line-sum defects
    double hinge = 1e3;    ///< bound violations and imaginary parts
    bool all_relations = false;
};

/// total = spread + penalty * lines + hinge * (bounds + imaginary).
struct Chi2Breakdown {
    double spread = 0.0;
    double lines = 0.0;
    double bounds = 0.0;
    double imaginary = 0.0;
    double total = 0.0;
    int candidates = 0;
};

namespace detail {

inline double line_defects2(const RealMatrix& v) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
        s += std::pow(v.row(i).sum() - 1.0, 2);
        s += std::pow(v.col(i).sum() - 1.0, 2);
    }
    return s;
}

/// N * sum (x - mean)^2, equal to the sum over pairs of squared differences.
inline double pair_spread(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double s = 0.0;
    for (double x : xs) s += (x - mean) * (x - mean);
    return static_cast<double>(xs.size()) * s;
}

inline double hinge2(double excess) { return excess > 0.0 ? excess * excess : 0.0; }

inline void finish(Chi2Breakdown& b, const Chi2Weights& w) {
    b.total = b.spread + w.penalty * b.lines + w.hinge * (b.bounds + b.imaginary);
}

}  // namespace detail

inline Chi2Breakdown chi2_unitarity_condition_breakdown(const SquaredModuliMatrix& v, const Chi2Weights& w = {}) {
    if (v.n() != 3) throw InputError("chi2_unitarity_condition needs a 3x3 matrix");
    Chi2Breakdown b;
    std::vector<double> reals;
    auto take = [&](const TaggedValue& t) {
        if (t.is_degenerate() || !std::isfinite(t.value.real()) || !std::isfinite(t.value.imag())) return;
        ++b.candidates;
        if (!t.is_imaginary()) {
            reals.push_back(t.value.real());
            b.bounds += detail::hinge2(std::abs(t.value.real()) - 1.0);
        }
        b.imaginary += t.value.imag() * t.value.imag();
    };
    for (const auto& t : corner_cos_delta(v).all()) take(t);
    for (const auto& c : independent_completions()) {
        const auto rel = corner_cos_delta(SquaredModuliMatrix(c.complete(v.entries())));
        if (w.all_relations)
            for (const auto& t : rel.all()) take(t);
        else
            take(rel.cs);
    }
    b.spread = detail::pair_spread(reals);
    b.lines = detail::line_defects2(v.entries());
    detail::finish(b, w);
    return b;
}

inline double chi2_unitarity_condition(const SquaredModuliMatrix& v, const Chi2Weights& w = {}) {
    return chi2_unitarity_condition_breakdown(v, w).total;
}

inline Chi2Breakdown chi2_triangles_breakdown(const SquaredModuliMatrix& v, const Chi2Weights& w = {}) {
    if (v.n() != 3) throw InputError("chi2_triangles needs a 3x3 matrix");
    Chi2Breakdown b;
    std::vector<SquaredModuliMatrix> views{v};
    for (const auto& c : independent_completions()) views.emplace_back(c.complete(v.entries()));
    for (auto id : kAllOrthogonalities) {
        std::vector<double> rcs, rts;
        for (const auto& m : views) {
            const auto s = side_lengths(m, id);
            if (s.rc.is_degenerate() || s.rt.is_degenerate()) continue;
            ++b.candidates;
            const double rc = s.rc.value.real(), rt = s.rt.value.real();
            rcs.push_back(rc);
            rts.push_back(rt);
            b.imaginary += std::norm(Complex(0, s.rc.value.imag())) + std::norm(Complex(0, s.rt.value.imag()));
            b.bounds += detail::hinge2(std::abs(rc - rt) - 1.0) + detail::hinge2(1.0 - rc - rt) +
                        detail::hinge2(-rc) + detail::hinge2(-rt);
        }
        b.spread += detail::pair_spread(rcs) + detail::pair_spread(rts);
    }
    b.lines = detail::line_defects2(v.entries());
    detail::finish(b, w);
    return b;
}

inline double chi2_triangles(const SquaredModuliMatrix& v, const Chi2Weights& w = {}) {
    return chi2_triangles_breakdown(v, w).total;
}

// ---------------------------------------------------------------------------
// Fits
// ---------------------------------------------------------------------------

enum class FitMode { UnitarityCondition, Triangles, Merged };

inline std::string to_string(FitMode m) {
    switch (m) {
        case FitMode::UnitarityCondition: return "unitarity-condition";
        case FitMode::Triangles: return "triangles";
        case FitMode::Merged: return "merged";
    }
    return "?";
}

inline FitMode fit_mode_from_string(const std::string& s) {
    for (auto m : {FitMode::UnitarityCondition, FitMode::Triangles, FitMode::Merged})
        if (to_string(m) == s) return m;
    throw InputError("unknown fit mode '" + s + "'");
}

struct FitConfig {
    FitMode mode = FitMode::UnitarityCondition;
    double penaltyWeight = 1e3;
    double hingeWeight = 1e3;
    int restarts = 32;
    std::uint64_t seed = 20240601;
    int maxIterations = 4000;  ///< simplex iterations per restart
    double tolerance = 1e-10;  ///< simplex size at convergence
    double physicalTolerance = 1e-6;
    bool allRelations = false;

    void validate() const {
        if (!(penaltyWeight > 0 && hingeWeight > 0 && restarts > 0 && maxIterations > 0 && tolerance > 0 &&
              physicalTolerance > 0))
            throw InputError("fit configuration values must be positive");
    }

    [[nodiscard]] Chi2Weights weights() const { return {penaltyWeight, hingeWeight, allRelations}; }
};

struct Pull {
    std::string label;
    double value = 0;
    double sigma = 0;
    double theory = 0;
    double pull = 0;
};

struct FitResult {
    SquaredModuliMatrix fittedSquaredModuli;
    std::optional<MixingParameters3> fittedParams;
    double chi2Unitarity = 0;
    double chi2Data = 0;
    double chi2Total = 0;
    bool physical = false;
    std::optional<ComplexMatrix> reconstructed;
    std::vector<Pull> report;
    bool underdetermined = false;
    bool notConverged = false;
    std::optional<SeparationVerdict> verdict;  ///< on the projection of the fitted moduli
    int restartsRun = 0;
    std::vector<std::string> diagnostics;
};

inline double chi2_constraint(const SquaredModuliMatrix& v, FitMode mode, const Chi2Weights& w) {
    switch (mode) {
        case FitMode::UnitarityCondition: return chi2_unitarity_condition(v, w);
        case FitMode::Triangles: return chi2_triangles(v, w);
        case FitMode::Merged: return chi2_unitarity_condition(v, w) + chi2_triangles(v, w);
    }
    return 0.0;
}

namespace detail {

inline int distinct_targets(const std::vector<Measurement>& ms) {
    std::set<std::string> t;
    for (const auto& m : ms) t.insert(m.target_label());
    return static_cast<int>(t.size());
}

inline std::vector<Pull> pulls(const SquaredModuliMatrix& v, const std::vector<Measurement>& ms) {
    std::vector<Pull> out;
    for (const auto& m : ms) {
        const double t = theory_value(v, m);
        out.push_back({m.label(), m.value, m.sigma, t, (t - m.value) / m.sigma});
    }
    return out;
}

/// Mean of the modulus-type measurements per entry; 1/3 elsewhere.
inline RealMatrix data_start(const std::vector<Measurement>& ms) {
    RealMatrix sum = RealMatrix::Zero(3, 3), count = RealMatrix::Zero(3, 3);
    for (const auto& m : ms) {
        if (!m.is_modulus()) continue;
        const double sq = m.kind == MeasurementKind::Modulus ? m.value * m.value : m.value;
        sum(m.position.row, m.position.col) += sq;
        count(m.position.row, m.position.col) += 1.0;
    }
    RealMatrix v = RealMatrix::Constant(3, 3, 1.0 / 3.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (count(i, j) > 0) v(i, j) = std::clamp(sum(i, j) / count(i, j), 0.0, 1.0);
    return v;
}

/// Moduli live in [0, 1] through v = sin^2 x.
inline RealMatrix moduli_from_free(const std::vector<double>& x) {
    RealMatrix v(3, 3);
    for (int k = 0; k < 9; ++k) v(k / 3, k % 3) = std::pow(std::sin(x[k]), 2);
    return v;
}

inline std::vector<double> free_from_moduli(const RealMatrix& v) {
    std::vector<double> x(9);
    for (int k = 0; k < 9; ++k) x[k] = std::asin(std::sqrt(std::clamp(v(k / 3, k % 3), 0.0, 1.0)));
    return x;
}

/// theta = (pi/2) sin^2 x for the angles, delta = pi sin^2 x.
inline MixingParameters3 params_from_free(const std::vector<double>& x) {
    auto s2 = [](double t) { return std::pow(std::sin(t), 2); };
    constexpr double half_pi = std::numbers::pi / 2;
    return {half_pi * s2(x[0]), half_pi * s2(x[1]), half_pi * s2(x[2]), std::numbers::pi * s2(x[3])};
}

inline std::vector<double> free_from_params(const MixingParameters3& p) {
    auto inv = [](double value, double range) { return std::asin(std::sqrt(std::clamp(value / range, 0.0, 1.0))); };
    constexpr double half_pi = std::numbers::pi / 2;
    return {inv(p.theta12, half_pi), inv(p.theta13, half_pi), inv(p.theta23, half_pi), inv(p.delta, std::numbers::pi)};
}

template <class Objective, class Start>
SimplexResult multistart(const Objective& f, const std::vector<double>& first, Start random_start,
                         const FitConfig& cfg, int& restarts_run, bool& converged) {
    SimplexOptions opt;
    opt.max_iterations = cfg.maxIterations;
    opt.size_tolerance = cfg.tolerance;
    SimplexResult best;
    std::mt19937_64 rng(cfg.seed);
    for (int r = 0; r < cfg.restarts; ++r) {
        const std::vector<double> x0 = r == 0 ? first : random_start(rng);
        SimplexResult run = minimize_simplex(f, x0, opt);
        ++restarts_run;
        if (run.value < best.value) best = std::move(run);  // ties keep the earlier restart
    }
    opt.initial_step = 0.02;
    SimplexResult polished = minimize_simplex(f, best.x, opt);
    converged = polished.converged;
    if (polished.value <= best.value) best = std::move(polished);
    return best;
}

}  // namespace detail

/// Free-moduli fit: minimizes the chosen unitarity objective plus chi2_data over [0, 1]^9.
inline FitResult fit(const std::vector<Measurement>& ms, const FitConfig& cfg = {}) {
    cfg.validate();
    if (ms.empty()) throw InputError("fit needs at least one measurement");
    for (const auto& m : ms) m.validate();
    const Chi2Weights w = cfg.weights();

    auto objective = [&](const std::vector<double>& x) {
        const SquaredModuliMatrix v(detail::moduli_from_free(x));
        return chi2_constraint(v, cfg.mode, w) + chi2_data(v, ms);
    };
    auto random_start = [](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u(0.0, std::numbers::pi / 2);
        std::vector<double> x(9);
        for (auto& xi : x) xi = u(rng);
        return x;
    };

    FitResult r;
    bool converged = false;
    const auto best = detail::multistart(objective, detail::free_from_moduli(detail::data_start(ms)), random_start,
                                         cfg, r.restartsRun, converged);
    r.notConverged = !converged;
    r.underdetermined = detail::distinct_targets(ms) < 4;
    r.fittedSquaredModuli = SquaredModuliMatrix(detail::moduli_from_free(best.x));
    r.chi2Unitarity = chi2_constraint(r.fittedSquaredModuli, cfg.mode, w);
    r.chi2Data = chi2_data(r.fittedSquaredModuli, ms);
    r.chi2Total = r.chi2Unitarity + r.chi2Data;
    r.report = detail::pulls(r.fittedSquaredModuli, ms);

    const SquaredModuliMatrix projected = project_to_polytope(r.fittedSquaredModuli);
    SeparationVerdict v = test_unistochastic(projected, cfg.physicalTolerance);
    r.physical = v.physical;
    if (v.parameters) r.fittedParams = v.parameters;
    if (r.physical && v.parameters) {
        r.reconstructed = canonical_gauge_form(build_ckm3(*v.parameters)).matrix;
        if (unitarity_defect(*r.reconstructed) >= 1e-6) {
            r.physical = false;
            r.reconstructed.reset();
            r.diagnostics.push_back("reconstruction failed the unitarity check");
        }
    }
    r.verdict = std::move(v);
    if (r.underdetermined) r.diagnostics.push_back("fewer than four distinct measured quantities");
    if (r.notConverged) r.diagnostics.push_back("simplex did not reach the size tolerance");
    return r;
}

/// Exactly unitary fit over the standard-form parameters; chi2Unitarity is 0 by construction.
inline FitResult fit_constrained_params(const std::vector<Measurement>& ms, const FitConfig& cfg = {}) {
    cfg.validate();
    if (ms.empty()) throw InputError("fit needs at least one measurement");
    for (const auto& m : ms) m.validate();

    auto objective = [&](const std::vector<double>& x) { return chi2_data(detail::params_from_free(x), ms); };
    auto random_start = [](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u(0.0, std::numbers::pi / 2);
        return std::vector<double>{u(rng), u(rng), u(rng), u(rng)};
    };
    std::vector<double> first{0.6, 0.6, 0.6, 0.6};
    try {
        const auto v = test_unistochastic(project_to_polytope(SquaredModuliMatrix(detail::data_start(ms))), 1e-6);
        if (v.parameters) first = detail::free_from_params(*v.parameters);
    } catch (const DomainError&) {
    }

    FitResult r;
    bool converged = false;
    const auto best = detail::multistart(objective, first, random_start, cfg, r.restartsRun, converged);
    r.notConverged = !converged;
    r.underdetermined = detail::distinct_targets(ms) < 4;
    const MixingParameters3 p = detail::params_from_free(best.x);
    const ComplexMatrix u = build_ckm3(p);
    r.fittedParams = p;
    r.fittedSquaredModuli = hadamard_square(u);
    r.chi2Unitarity = 0.0;
    r.chi2Data = chi2_data(r.fittedSquaredModuli, ms);
    r.chi2Total = r.chi2Data;
    r.report = detail::pulls(r.fittedSquaredModuli, ms);
    r.physical = true;
    r.reconstructed = canonical_gauge_form(u).matrix;
    if (r.underdetermined) r.diagnostics.push_back("fewer than four distinct measured quantities");
    if (r.notConverged) r.diagnostics.push_back("simplex did not reach the size tolerance");
    return r;
}

}  // namespace unistoch
