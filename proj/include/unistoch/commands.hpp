#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "fit.hpp"
#include "io.hpp"
#include "matrix_core.hpp"
#include "n4_explorer.hpp"
#include "parametrize.hpp"
#include "stats.hpp"
#include "triangles.hpp"
#include "unitarity_condition.hpp"

namespace unistoch::cli {

using io::json;

enum ExitCode : int {
    kConsistent = 0,
    kInconsistent = 1,
    kNotDoublyStochastic = 2,
    kInputError = 3,
    kNumericalFailure = 4,
};

struct CsvFile {
    std::string name;
    std::string content;
};

struct CommandOutcome {
    int exit_code = kConsistent;
    json report = json::object();
    std::vector<CsvFile> csv;
};

/// Command-line overrides; unset fields fall back to the document options.
struct CommandOptions {
    std::optional<double> tolerance;
    std::optional<std::uint64_t> seed;
    std::optional<int> restarts;
    std::optional<std::string> mode;
    bool project = false;
    bool allRelations = false;
};

namespace detail {

inline double tolerance(const io::InputDocument& doc, const CommandOptions& opt) {
    const double tol = opt.tolerance.value_or(doc.options.tolerance.value_or(kExactTolerance));
    if (!(tol > 0.0)) throw InputError("tolerance must be positive");
    return tol;
}

inline const SquaredModuliMatrix& require_matrix(const io::InputDocument& doc, const char* command) {
    if (!doc.matrix) throw InputError(std::string(command) + " needs a matrix");
    return *doc.matrix;
}

inline json header(const char* command, int n = 0) {
    json j{{"command", command}, {"schemaVersion", io::kSchemaVersion}};
    if (n > 0) j["n"] = n;
    return j;
}

/// Applies --project and the doubly stochastic gate; fills the outcome on failure.
inline std::optional<SquaredModuliMatrix> stochastic_input(const SquaredModuliMatrix& input, double tol,
                                                           bool project, CommandOutcome& out) {
    const SquaredModuliMatrix m = project ? project_to_polytope(input) : input;
    out.report["projected"] = project;
    if (project) out.report["matrix"] = io::to_json(m.entries());
    StochasticityReport r;
    try {
        r = check_doubly_stochastic(m, tol);
    } catch (const DomainError& e) {
        out.exit_code = kNotDoublyStochastic;
        out.report["status"] = "not-doubly-stochastic";
        out.report["diagnostics"] = json::array({e.what()});
        return std::nullopt;
    }
    out.report["stochasticity"] = io::to_json(r);
    if (!r.pass) {
        out.exit_code = kNotDoublyStochastic;
        out.report["status"] = "not-doubly-stochastic";
        return std::nullopt;
    }
    return m;
}

inline json to_json(const Params4Free& p) {
    return {{"b2", p.b2}, {"beta1", p.beta1}, {"beta2", p.beta2}, {"gamma1", p.gamma1}};
}

inline json to_json(const FirstLine4& f) {
    return {{"a1", f.a1.angle()}, {"a2", f.a2.angle()}, {"a3", f.a3.angle()},
            {"b1", f.b1.angle()}, {"c1", f.c1.angle()}, {"valid", f.valid()}};
}

inline json to_json(const Solve4Result& r) {
    json sols = json::array();
    for (const auto& s : r.solutions)
        sols.push_back({{"params", to_json(s.params)},
                        {"residualNorm", s.residualNorm},
                        {"jacobianRank", s.jacobianRank},
                        {"cosines", s.cosines},
                        {"criteriaPass", s.criteriaPass}});
    return {{"firstLine", to_json(r.first_line)},
            {"starts", r.starts},
            {"solutions", sols},
            {"diagnostics", r.diagnostics}};
}

inline const Solution4* best_solution4(const Solve4Result& r) {
    for (const auto& s : r.solutions)
        if (s.criteriaPass) return &s;
    return nullptr;
}

inline Solve4Config solve4_config(double tol) {
    Solve4Config c;
    c.stochastic_tolerance = tol;
    return c;
}

/// Verdict on a doubly stochastic matrix: test_unistochastic for n = 3, solve4 for n = 4.
inline void verdict(const SquaredModuliMatrix& m, double tol, CommandOutcome& out) {
    if (m.n() == 3) {
        const SeparationVerdict v = test_unistochastic(m, tol);
        out.report["verdict"] = io::to_json(v);
        out.exit_code = v.physical ? kConsistent : kInconsistent;
    } else if (m.n() == 4) {
        const Solve4Result r = solve4(m, solve4_config(tol));
        const Solution4* best = best_solution4(r);
        json j = to_json(r);
        j["physical"] = best != nullptr;
        if (best) j["continuum"] = best->jacobianRank < 4;
        out.report["verdict"] = j;
        out.exit_code = best ? kConsistent : kInconsistent;
    } else {
        throw InputError("matrix must be 3x3 or 4x4");
    }
    out.report["status"] = out.exit_code == kConsistent ? "unistochastic" : "not-unistochastic";
}

inline FitConfig fit_config(const io::InputDocument& doc, const CommandOptions& opt, bool& constrained) {
    FitConfig c;
    const auto& o = doc.options;
    const std::string mode = opt.mode.value_or(o.mode.value_or(to_string(c.mode)));
    constrained = mode == "constrained";
    if (!constrained) c.mode = fit_mode_from_string(mode);
    if (o.penaltyWeight) c.penaltyWeight = *o.penaltyWeight;
    if (o.hingeWeight) c.hingeWeight = *o.hingeWeight;
    if (o.maxIterations) c.maxIterations = *o.maxIterations;
    if (o.physicalTolerance) c.physicalTolerance = *o.physicalTolerance;
    if (o.tolerance) c.tolerance = *o.tolerance;
    if (opt.tolerance) c.tolerance = *opt.tolerance;
    c.restarts = opt.restarts.value_or(o.restarts.value_or(c.restarts));
    c.seed = opt.seed.value_or(o.seed.value_or(c.seed));
    c.allRelations = opt.allRelations;
    c.validate();
    return c;
}

}  // namespace detail

inline CommandOutcome cmd_check(const io::InputDocument& doc, const CommandOptions& opt = {}) {
    const auto& input = detail::require_matrix(doc, "check");
    CommandOutcome out;
    out.report = detail::header("check", input.n());
    const double tol = detail::tolerance(doc, opt);
    if (const auto m = detail::stochastic_input(input, tol, opt.project, out)) detail::verdict(*m, tol, out);
    return out;
}

inline CommandOutcome cmd_reconstruct(const io::InputDocument& doc, const CommandOptions& opt = {}) {
    const auto& input = detail::require_matrix(doc, "reconstruct");
    CommandOutcome out;
    out.report = detail::header("reconstruct", input.n());
    const double tol = detail::tolerance(doc, opt);
    const auto m = detail::stochastic_input(input, tol, opt.project, out);
    if (!m) return out;

    ComplexMatrix u;
    if (m->n() == 3) {
        try {
            const Reconstruction r = reconstruct(*m, tol);
            u = r.unitary;
            out.report["parameters"] = io::to_json(r.parameters);
            out.report["verdict"] = io::to_json(r.verdict);
        } catch (const ReconstructionRefused& e) {
            out.report["verdict"] = io::to_json(e.verdict());
            out.report["status"] = "not-unistochastic";
            out.exit_code = kInconsistent;
            return out;
        }
    } else if (m->n() == 4) {
        const Solve4Result r = solve4(*m, detail::solve4_config(tol));
        out.report["verdict"] = detail::to_json(r);
        const Solution4* best = detail::best_solution4(r);
        if (!best) {
            out.report["status"] = "not-unistochastic";
            out.exit_code = kInconsistent;
            return out;
        }
        out.report["parameters"] = detail::to_json(best->params);
        u = canonical_gauge_form(build_unitary_n(full_params4(r.first_line, best->params))).matrix;
    } else {
        throw InputError("matrix must be 3x3 or 4x4");
    }
    out.report["status"] = "unistochastic";
    out.report["unitary"] = io::to_json(u);
    out.report["unitarityDefect"] = unitarity_defect(u);
    out.report["moduliMismatch"] = (u.cwiseAbs2() - m->entries()).cwiseAbs().maxCoeff();
    out.csv.push_back({"reconstructed.csv", io::complex_matrix_csv(u)});
    return out;
}

inline CommandOutcome cmd_triangles(const io::InputDocument& doc, const CommandOptions& opt = {}) {
    const auto& input = detail::require_matrix(doc, "triangles");
    if (input.n() != 3) throw InputError("triangles needs a 3x3 matrix");
    CommandOutcome out;
    out.report = detail::header("triangles", 3);
    const double tol = detail::tolerance(doc, opt);
    const SquaredModuliMatrix m = opt.project ? project_to_polytope(input) : input;
    out.report["projected"] = opt.project;
    try {
        out.report["stochasticity"] = io::to_json(check_doubly_stochastic(m, tol));
    } catch (const DomainError& e) {
        out.exit_code = kNotDoublyStochastic;
        out.report["status"] = "not-doubly-stochastic";
        out.report["diagnostics"] = json::array({e.what()});
        return out;
    }
    const auto& q = doc.options.quadruple;
    if (q) out.report["quadruple"] = io::to_json(*q);

    json tris = json::array();
    std::string csv = "triangle,vertex,x,y\n";
    bool all = true;
    for (const Orthogonality id : kAllOrthogonalities) {
        const TriangleSides s = q ? side_lengths(m, id, *q) : side_lengths(m, id);
        const TriangleGeometry g = triangle_geometry(s, id);
        tris.push_back(io::to_json(g));
        all = all && g.valid;
        if (!g.valid) continue;
        const std::string name = to_string(id);
        csv += name + ",0,0,0\n" + name + ",1,1,0\n";
        csv += name + ",2," + io::csv_number(g.apex.rho) + "," + io::csv_number(g.apex.eta) + "\n";
    }
    out.report["triangles"] = tris;
    out.report["allExist"] = all;
    out.report["status"] = all ? "all-triangles-exist" : "missing-triangles";
    out.exit_code = all ? kConsistent : kInconsistent;
    out.csv.push_back({"triangles.csv", csv});
    return out;
}

inline CommandOutcome cmd_recover_angles(const io::InputDocument& doc, const CommandOptions& = {}) {
    if (!doc.tangents) throw InputError("recover-angles needs tangents");
    const TangentQuadruple& t = *doc.tangents;
    CommandOutcome out;
    out.report = detail::header("recover-angles");
    out.report["tangents"] = {{"t22", t.t22}, {"t23", t.t23}, {"t32", t.t32}, {"t33", t.t33}};
    try {
        const RecoveredCosines rc = recover_cij_from_tangents(t);
        out.report["squaredCosines"] = {{"c12sq", rc.c12sq}, {"c13sq", rc.c13sq}, {"c23sq", rc.c23sq}};
        out.report["cosines"] = {{"c12", std::sqrt(rc.c12sq)}, {"c13", std::sqrt(rc.c13sq)}, {"c23", std::sqrt(rc.c23sq)}};
        out.report["cosinesValid"] = rc.valid;
    } catch (const DegenerateConfiguration& e) {
        out.report["status"] = "degenerate";
        out.report["diagnostics"] = json::array({e.what()});
        out.exit_code = kInconsistent;
        return out;
    }
    const CosDeltaCandidates c = cos_delta_candidates_from_tangents(t);
    json cands = json::array();
    for (const auto& k : c.candidates)
        cands.push_back({{"cosDelta", k.value}, {"satisfies", k.satisfies}, {"consistent", k.consistent}});
    out.report["candidates"] = cands;
    out.report["candidateCount"] = c.candidates.size();
    out.report["consistent"] = c.consistent ? json(*c.consistent) : json(nullptr);
    out.report["diagnostics"] = c.diagnostics;
    out.report["status"] = c.consistent ? "consistent" : "no-consistent-candidate";
    out.exit_code = c.consistent ? kConsistent : kInconsistent;
    return out;
}

inline CommandOutcome cmd_fit(const io::InputDocument& doc, const CommandOptions& opt = {}) {
    if (doc.measurements.empty()) throw InputError("fit needs at least one measurement");
    bool constrained = false;
    const FitConfig cfg = detail::fit_config(doc, opt, constrained);
    const FitResult r = constrained ? fit_constrained_params(doc.measurements, cfg) : fit(doc.measurements, cfg);
    CommandOutcome out;
    out.report = detail::header("fit", 3);
    out.report["mode"] = constrained ? "constrained" : to_string(cfg.mode);
    out.report["seed"] = cfg.seed;
    json ms = json::array();
    for (const auto& m : doc.measurements) ms.push_back(io::to_json(m));
    out.report["measurements"] = ms;
    out.report["result"] = io::to_json(r);
    out.report["status"] = r.physical ? "physical" : "unphysical";
    out.exit_code = r.physical ? kConsistent : kInconsistent;
    if (r.reconstructed) out.csv.push_back({"fit_unitary.csv", io::complex_matrix_csv(*r.reconstructed)});
    return out;
}

inline CommandOutcome cmd_stats(const io::InputDocument& doc, const CommandOptions& opt = {}) {
    if (!doc.ensemble) throw InputError("stats needs an ensemble");
    const ModuliEnsemble& e = *doc.ensemble;
    CommandOutcome out;
    out.report = detail::header("stats", e.n());
    out.report["members"] = e.members.size();
    out.report["meanModuli"] = io::to_json(mean_moduli(e));
    out.report["sigmaModuli"] = io::to_json(sigma_moduli(e));
    SquaredModuliMatrix combined;
    try {
        combined = convex_combine(e);
    } catch (const DomainError& err) {
        throw InputError(err.what());
    }
    out.report["convexCombination"] = io::to_json(combined.entries());
    const double tol = std::max(detail::tolerance(doc, opt), kExactTolerance);
    if (const auto m = detail::stochastic_input(combined, tol, opt.project, out)) detail::verdict(*m, tol, out);
    return out;
}

inline CommandOutcome cmd_quadruples(std::uint64_t seed = 20240601) {
    const auto& qs = enumerate_independent_quadruples();
    CommandOutcome out;
    out.report = detail::header("quadruples", 3);
    json list = json::array();
    bool full_line = false;
    for (const auto& q : qs) {
        list.push_back(io::to_json(q));
        full_line = full_line || q.contains_full_line();
    }
    out.report["count"] = qs.size();
    out.report["quadruples"] = list;
    out.report["containsFullLine"] = full_line;
    out.report["distinctCosDeltaExpressions"] = count_distinct_cos_delta_expressions(seed);
    return out;
}

}  // namespace unistoch::cli
