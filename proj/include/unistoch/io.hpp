#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "fit.hpp"
#include "matrix_core.hpp"
#include "stats.hpp"
#include "triangles.hpp"
#include "unitarity_condition.hpp"

namespace unistoch::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

/// Numbers as %.17g, non-finite numbers as null, keys in sorted order.
inline void write_json(std::ostream& os, const json& j, int indent = 2, int depth = 0) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close(static_cast<std::size_t>(indent * depth), ' ');
    switch (j.type()) {
        case json::value_t::number_float: {
            const double x = j.get<double>();
            if (!std::isfinite(x)) {
                os << "null";
                return;
            }
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", x);
            os << buf;
            return;
        }
        case json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) os << ",\n";
                first = false;
                os << pad << json(it.key()).dump() << ": ";
                write_json(os, it.value(), indent, depth + 1);
            }
            os << "\n" << close << "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            const bool flat = std::none_of(j.begin(), j.end(), [](const json& e) { return e.is_structured(); });
            if (flat) {
                os << "[";
                for (std::size_t k = 0; k < j.size(); ++k) {
                    if (k) os << ", ";
                    write_json(os, j[k], indent, depth + 1);
                }
                os << "]";
                return;
            }
            os << "[\n";
            for (std::size_t k = 0; k < j.size(); ++k) {
                if (k) os << ",\n";
                os << pad;
                write_json(os, j[k], indent, depth + 1);
            }
            os << "\n" << close << "]";
            return;
        }
        default: os << j.dump();
    }
}

inline std::string to_json_string(const json& j) {
    std::ostringstream os;
    write_json(os, j);
    os << "\n";
    return os.str();
}

inline json to_json(const RealMatrix& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

/// Complex entries as [re, im] pairs.
inline json to_json(const ComplexMatrix& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
        rows.push_back(row);
    }
    return rows;
}

inline json to_json(const TaggedValue& t) {
    return {{"kind", to_string(t.kind)}, {"re", t.value.real()}, {"im", t.value.imag()}};
}

inline json to_json(const MixingParameters3& p) {
    return {{"theta12", p.theta12}, {"theta13", p.theta13}, {"theta23", p.theta23}, {"delta", p.delta},
            {"c12", p.c12()},       {"c13", p.c13()},       {"c23", p.c23()},       {"cosDelta", p.cos_delta()}};
}

inline json to_json(const StochasticityReport& r) {
    return {{"rowDefects", r.row_defects}, {"colDefects", r.col_defects}, {"maxDefect", r.max_defect},
            {"tolerance", r.tolerance},    {"pass", r.pass}};
}

inline json to_json(const SeparationVerdict& v) {
    json cds = json::array();
    for (const auto& t : v.cos_delta_values) cds.push_back(to_json(t));
    json j{{"physical", v.physical},
           {"degenerate", v.degenerate},
           {"cosines", {{"c12", to_json(v.cosines.c12.value)},
                        {"c13", to_json(v.cosines.c13.value)},
                        {"c23", to_json(v.cosines.c23.value)}}},
           {"cosDeltaRelations", cds},
           {"cosDelta", to_json(v.designated)},
           {"stochasticity", to_json(v.stochasticity)},
           {"diagnostics", v.diagnostics}};
    j["parameters"] = v.parameters ? to_json(*v.parameters) : json(nullptr);
    return j;
}

inline json to_json(const QuadrupleSelection& q) {
    json pos = json::array();
    for (const auto& p : q.positions) pos.push_back(json::array({p.row + 1, p.col + 1}));
    return {{"label", q.label()}, {"positions", pos}};
}

inline json to_json(const TriangleGeometry& g) {
    json j{{"id", to_string(g.id)},
           {"rc", to_json(g.sides.rc)},
           {"rt", to_json(g.sides.rt)},
           {"exists", g.valid},
           {"diagnostics", g.diagnostics}};
    if (g.valid) {
        constexpr double deg = 180.0 / std::numbers::pi;
        j["angles"] = {{"phi1", g.angles.phi1},          {"phi2", g.angles.phi2},
                       {"phi3", g.angles.phi3},          {"phi1Deg", g.angles.phi1 * deg},
                       {"phi2Deg", g.angles.phi2 * deg}, {"phi3Deg", g.angles.phi3 * deg},
                       {"cosPhi1", g.angles.cos_phi1},   {"cosPhi2", g.angles.cos_phi2},
                       {"cosPhi3", g.angles.cos_phi3},   {"collinear", g.angles.collinear}};
        j["apex"] = {{"rho", g.apex.rho}, {"eta", g.apex.eta}};
    }
    return j;
}

inline json to_json(const Measurement& m) {
    json target;
    if (m.is_modulus()) {
        target = {{"row", m.position.row + 1}, {"col", m.position.col + 1}};
    } else if (m.kind == MeasurementKind::TriangleSide) {
        target = {{"triangle", to_string(m.triangle)}, {"side", m.which == 0 ? "c" : "t"}};
    } else {
        target = {{"triangle", to_string(m.triangle)}, {"angle", m.which}};
    }
    return {{"kind", to_string(m.kind)}, {"target", target}, {"value", m.value}, {"sigma", m.sigma}};
}

inline json to_json(const FitResult& r) {
    json pulls = json::array();
    for (const auto& p : r.report)
        pulls.push_back({{"label", p.label}, {"value", p.value}, {"sigma", p.sigma}, {"theory", p.theory},
                         {"pull", p.pull}});
    json j{{"fittedSquaredModuli", to_json(r.fittedSquaredModuli.entries())},
           {"chi2Unitarity", r.chi2Unitarity},
           {"chi2Data", r.chi2Data},
           {"chi2Total", r.chi2Total},
           {"physical", r.physical},
           {"underdetermined", r.underdetermined},
           {"notConverged", r.notConverged},
           {"restarts", r.restartsRun},
           {"pulls", pulls},
           {"diagnostics", r.diagnostics}};
    j["fittedParams"] = r.fittedParams ? to_json(*r.fittedParams) : json(nullptr);
    j["reconstructed"] = r.reconstructed ? to_json(*r.reconstructed) : json(nullptr);
    j["verdict"] = r.verdict ? to_json(*r.verdict) : json(nullptr);
    return j;
}

// ---------------------------------------------------------------------------
// Input
// ---------------------------------------------------------------------------

struct DocumentOptions {
    std::optional<double> tolerance;
    std::optional<std::uint64_t> seed;
    std::optional<int> restarts;
    std::optional<std::string> mode;
    std::optional<double> penaltyWeight;
    std::optional<double> hingeWeight;
    std::optional<int> maxIterations;
    std::optional<double> physicalTolerance;
    std::optional<QuadrupleSelection> quadruple;
};

struct InputDocument {
    int schemaVersion = kSchemaVersion;
    std::optional<SquaredModuliMatrix> matrix;
    std::vector<Measurement> measurements;
    std::optional<TangentQuadruple> tangents;
    std::optional<ModuliEnsemble> ensemble;
    DocumentOptions options;
};

namespace detail {

inline double number(const json& j, const std::string& where) {
    if (!j.is_number()) throw InputError(where + ": expected a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) throw InputError(where + ": number must be finite");
    return x;
}

inline RealMatrix real_grid(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw InputError(where + ": expected a square array of rows");
    const auto n = static_cast<int>(j.size());
    RealMatrix m(n, n);
    for (int i = 0; i < n; ++i) {
        if (!j[i].is_array() || static_cast<int>(j[i].size()) != n) throw InputError(where + ": rows must have length " + std::to_string(n));
        for (int k = 0; k < n; ++k) m(i, k) = number(j[i][k], where);
    }
    return m;
}

/// Entries are numbers or [re, im] pairs.
inline ComplexMatrix complex_grid(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw InputError(where + ": expected a square array of rows");
    const auto n = static_cast<int>(j.size());
    ComplexMatrix m(n, n);
    for (int i = 0; i < n; ++i) {
        if (!j[i].is_array() || static_cast<int>(j[i].size()) != n) throw InputError(where + ": rows must have length " + std::to_string(n));
        for (int k = 0; k < n; ++k) {
            const json& e = j[i][k];
            if (e.is_array()) {
                if (e.size() != 2) throw InputError(where + ": complex entries are [re, im]");
                m(i, k) = Complex(number(e[0], where), number(e[1], where));
            } else {
                m(i, k) = number(e, where);
            }
        }
    }
    return m;
}

inline int one_based(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j[key].is_number_integer()) throw InputError(where + ": target needs integer '" + key + "'");
    return j[key].get<int>() - 1;
}

inline Measurement measurement(const json& j, std::size_t index) {
    const std::string where = "measurements[" + std::to_string(index) + "]";
    if (!j.is_object()) throw InputError(where + ": expected an object");
    for (const char* key : {"kind", "target", "value", "sigma"})
        if (!j.contains(key)) throw InputError(where + ": missing '" + key + "'");
    if (!j["kind"].is_string()) throw InputError(where + ": kind must be a string");
    Measurement m;
    m.kind = measurement_kind_from_string(j["kind"].get<std::string>());
    m.value = number(j["value"], where + ".value");
    m.sigma = number(j["sigma"], where + ".sigma");
    const json& t = j["target"];
    if (!t.is_object()) throw InputError(where + ": target must be an object");
    if (m.is_modulus()) {
        m.position = {one_based(t, "row", where), one_based(t, "col", where)};
    } else {
        if (!t.contains("triangle") || !t["triangle"].is_string()) throw InputError(where + ": target needs 'triangle'");
        m.triangle = orthogonality_from_string(t["triangle"].get<std::string>());
        if (m.kind == MeasurementKind::TriangleSide) {
            const std::string side = t.value("side", "");
            if (side != "c" && side != "t") throw InputError(where + ": side must be \"c\" or \"t\"");
            m.which = side == "c" ? 0 : 1;
        } else {
            m.which = one_based(t, "angle", where) + 1;
        }
    }
    m.validate();
    return m;
}

inline QuadrupleSelection quadruple(const json& j) {
    if (!j.is_array() || j.size() != 4) throw InputError("options.quadruple: expected four [row, col] pairs");
    std::array<Position, 4> p{};
    for (int k = 0; k < 4; ++k) {
        const json& e = j[k];
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
            throw InputError("options.quadruple: expected [row, col] integer pairs");
        p[k] = {e[0].get<int>() - 1, e[1].get<int>() - 1};
        if (p[k].row < 0 || p[k].row > 2 || p[k].col < 0 || p[k].col > 2)
            throw InputError("options.quadruple: positions are 1..3");
    }
    QuadrupleSelection q = make_quadruple(p);
    for (const auto& known : enumerate_independent_quadruples())
        if (known == q) return known;
    throw DependentQuadrupleError("options.quadruple " + q.label() + " is not an independent quadruple");
}

}  // namespace detail

/// @throws InputError for malformed or inconsistent documents.
inline InputDocument parse_document(const json& j) {
    if (!j.is_object()) throw InputError("input must be a JSON object");
    InputDocument doc;
    if (j.contains("schemaVersion")) {
        if (!j["schemaVersion"].is_number_integer()) throw InputError("schemaVersion must be an integer");
        doc.schemaVersion = j["schemaVersion"].get<int>();
        if (doc.schemaVersion != kSchemaVersion)
            throw InputError("unsupported schemaVersion " + std::to_string(doc.schemaVersion));
    }
    if (j.contains("matrix")) doc.matrix = SquaredModuliMatrix(detail::real_grid(j["matrix"], "matrix"));
    if (j.contains("measurements")) {
        if (!j["measurements"].is_array()) throw InputError("measurements must be an array");
        for (std::size_t k = 0; k < j["measurements"].size(); ++k)
            doc.measurements.push_back(detail::measurement(j["measurements"][k], k));
    }
    if (j.contains("tangents")) {
        const json& t = j["tangents"];
        std::array<double, 4> v{};
        if (t.is_array() && t.size() == 4) {
            for (int k = 0; k < 4; ++k) v[k] = detail::number(t[k], "tangents");
        } else if (t.is_object()) {
            const std::array<const char*, 4> keys{"t22", "t23", "t32", "t33"};
            for (int k = 0; k < 4; ++k) {
                if (!t.contains(keys[k])) throw InputError(std::string("tangents: missing ") + keys[k]);
                v[k] = detail::number(t[keys[k]], std::string("tangents.") + keys[k]);
            }
        } else {
            throw InputError("tangents: expected [t22, t23, t32, t33] or an object");
        }
        doc.tangents = TangentQuadruple{v[0], v[1], v[2], v[3]};
    }
    if (j.contains("ensemble")) {
        const json& e = j["ensemble"];
        const json& members = e.is_object() ? e.value("members", json::array()) : e;
        if (!members.is_array() || members.empty()) throw InputError("ensemble: expected a nonempty list of matrices");
        ModuliEnsemble ens;
        for (std::size_t k = 0; k < members.size(); ++k)
            ens.members.push_back(detail::complex_grid(members[k], "ensemble[" + std::to_string(k) + "]"));
        if (e.is_object() && e.contains("weights")) {
            std::vector<double> w;
            for (const auto& x : e["weights"]) w.push_back(detail::number(x, "ensemble.weights"));
            ens.weights = std::move(w);
        }
        ens.validate();
        doc.ensemble = std::move(ens);
    }
    if (j.contains("options")) {
        const json& o = j["options"];
        if (!o.is_object()) throw InputError("options must be an object");
        auto& d = doc.options;
        if (o.contains("tolerance")) d.tolerance = detail::number(o["tolerance"], "options.tolerance");
        if (o.contains("seed")) {
            if (!o["seed"].is_number_unsigned()) throw InputError("options.seed must be a nonnegative integer");
            d.seed = o["seed"].get<std::uint64_t>();
        }
        if (o.contains("restarts")) d.restarts = static_cast<int>(detail::number(o["restarts"], "options.restarts"));
        if (o.contains("mode")) {
            if (!o["mode"].is_string()) throw InputError("options.mode must be a string");
            d.mode = o["mode"].get<std::string>();
        }
        if (o.contains("penaltyWeight")) d.penaltyWeight = detail::number(o["penaltyWeight"], "options.penaltyWeight");
        if (o.contains("hingeWeight")) d.hingeWeight = detail::number(o["hingeWeight"], "options.hingeWeight");
        if (o.contains("maxIterations"))
            d.maxIterations = static_cast<int>(detail::number(o["maxIterations"], "options.maxIterations"));
        if (o.contains("physicalTolerance"))
            d.physicalTolerance = detail::number(o["physicalTolerance"], "options.physicalTolerance");
        if (o.contains("quadruple")) d.quadruple = detail::quadruple(o["quadruple"]);
    }
    if (!doc.matrix && doc.measurements.empty() && !doc.tangents && !doc.ensemble && !j.contains("measurements"))
        throw InputError("input needs a matrix, measurements, tangents or an ensemble");
    return doc;
}

inline InputDocument parse_document(std::istream& in) {
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("invalid JSON: ") + e.what());
    }
    return parse_document(j);
}

inline InputDocument parse_document(const std::string& text) {
    std::istringstream in(text);
    return parse_document(in);
}

inline InputDocument parse_document(const char* text) { return parse_document(std::string(text)); }

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline std::string csv_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// One row per matrix row, columns re_1, im_1, re_2, im_2, ...
inline std::string complex_matrix_csv(const ComplexMatrix& m) {
    std::ostringstream os;
    for (int j = 0; j < m.cols(); ++j) os << (j ? "," : "") << "re_" << j + 1 << ",im_" << j + 1;
    os << "\n";
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j)
            os << (j ? "," : "") << csv_number(m(i, j).real()) << "," << csv_number(m(i, j).imag());
        os << "\n";
    }
    return os.str();
}

}  // namespace unistoch::io
