#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "matrix_core.hpp"

namespace unistoch {

/// Standard-form parameters of a 3x3 unitary: three mixing angles and the CP phase.
struct MixingParameters3 {
    double theta12 = 0.0;
    double theta13 = 0.0;
    double theta23 = 0.0;
    double delta = 0.0;

    static MixingParameters3 from_cosines(double c12, double c13, double c23, double cos_delta) {
        for (double c : {c12, c13, c23})
            if (!(c >= 0.0 && c <= 1.0)) throw DomainError("mixing cosine outside [0, 1]: " + std::to_string(c));
        if (!(std::abs(cos_delta) <= 1.0)) throw DomainError("|cos delta| > 1: " + std::to_string(cos_delta));
        return {std::acos(c12), std::acos(c13), std::acos(c23), std::acos(cos_delta)};
    }

    [[nodiscard]] double c12() const { return std::cos(theta12); }
    [[nodiscard]] double c13() const { return std::cos(theta13); }
    [[nodiscard]] double c23() const { return std::cos(theta23); }
    [[nodiscard]] double s12() const { return std::sin(theta12); }
    [[nodiscard]] double s13() const { return std::sin(theta13); }
    [[nodiscard]] double s23() const { return std::sin(theta23); }
    [[nodiscard]] double cos_delta() const { return std::cos(delta); }

    void validate() const {
        constexpr double half_pi = std::numbers::pi / 2;
        for (double t : {theta12, theta13, theta23})
            if (!(t >= 0.0 && t <= half_pi)) throw DomainError("mixing angle outside [0, pi/2]");
        if (!(delta >= 0.0 && delta <= std::numbers::pi)) throw DomainError("delta outside [0, pi]");
    }
};

/// One generating unit vector y_m: m-1 angles and m phases.
struct GeneratingVector {
    std::vector<double> angles;
    std::vector<double> phases;

    [[nodiscard]] int size() const { return static_cast<int>(phases.size()); }

    [[nodiscard]] Eigen::VectorXcd unit_vector() const { return block().col(0); }

    /// Unitary block whose first column is y and whose later columns are the
    /// angle derivatives of y taken with the preceding angles at pi/2.
    [[nodiscard]] ComplexMatrix block() const {
        const int m = size();
        if (m < 1 || static_cast<int>(angles.size()) != m - 1)
            throw InputError("generating vector needs m phases and m-1 angles");
        ComplexMatrix b = ComplexMatrix::Zero(m, m);
        for (int k = 0; k < m; ++k) {
            if (k == 0) {
                double acc = 1.0;
                for (int j = 0; j < m; ++j) {
                    const double c = j < m - 1 ? std::cos(angles[j]) : 1.0;
                    b(j, 0) = phase_factor(phases[j]) * (acc * c);
                    if (j < m - 1) acc *= std::sin(angles[j]);
                }
                continue;
            }
            const int p = k - 1;
            b(p, k) = -phase_factor(phases[p]) * std::sin(angles[p]);
            double acc = std::cos(angles[p]);
            for (int j = p + 1; j < m; ++j) {
                const double c = j < m - 1 ? std::cos(angles[j]) : 1.0;
                b(j, k) = phase_factor(phases[j]) * (acc * c);
                if (j < m - 1) acc *= std::sin(angles[j]);
            }
        }
        return b;
    }
};

/// Generating vectors y_n, y_{n-1}, ..., y_1 (in that order).
struct GeneratingVectorsN {
    std::vector<GeneratingVector> vectors;

    [[nodiscard]] int dim() const { return static_cast<int>(vectors.size()); }

    /// Coset representatives: y_n real and nonnegative, y_k (k < n) with
    /// leading phase pi, y_1 = -1. angles[k] holds the n-k-1 angles of
    /// y_{n-k}; phases[k] the n-k-1 free phases of y_{n-k} (phases[0] unused).
    static GeneratingVectorsN standard(const std::vector<std::vector<double>>& angles,
                                       const std::vector<std::vector<double>>& phases) {
        const int n = static_cast<int>(angles.size()) + 1;
        if (n < 2 || n > 4) throw InputError("generating vectors support n in {2, 3, 4}");
        if (static_cast<int>(phases.size()) != n - 1) throw InputError("phase lists do not match angle lists");
        GeneratingVectorsN g;
        for (int k = 0; k < n - 1; ++k) {
            const int m = n - k;
            if (static_cast<int>(angles[k].size()) != m - 1)
                throw InputError("y_" + std::to_string(m) + " needs " + std::to_string(m - 1) + " angles");
            GeneratingVector y;
            y.angles = angles[k];
            if (k == 0) {
                y.phases.assign(m, 0.0);
            } else {
                if (static_cast<int>(phases[k].size()) != m - 1)
                    throw InputError("y_" + std::to_string(m) + " needs " + std::to_string(m - 1) + " phases");
                y.phases.push_back(std::numbers::pi);
                y.phases.insert(y.phases.end(), phases[k].begin(), phases[k].end());
            }
            g.vectors.push_back(std::move(y));
        }
        g.vectors.push_back(GeneratingVector{{}, {std::numbers::pi}});
        return g;
    }
};

/// Parameters of the 4x4 coset representative.
struct StandardParams4 {
    double a1 = 0, a2 = 0, a3 = 0;  ///< y_4
    double b1 = 0, b2 = 0;          ///< y_3
    double c1 = 0;                  ///< y_2
    double beta1 = 0, beta2 = 0;    ///< y_3 phases
    double gamma1 = 0;              ///< y_2 phase

    [[nodiscard]] GeneratingVectorsN generating_vectors() const {
        return GeneratingVectorsN::standard({{a1, a2, a3}, {b1, b2}, {c1}}, {{}, {beta1, beta2}, {gamma1}});
    }
};

/// U_n = B_n . diag(1, B_{n-1}) . ... . diag(1, ..., 1, B_1).
inline ComplexMatrix build_unitary_n(const GeneratingVectorsN& params) {
    const int n = params.dim();
    if (n < 2 || n > 4) throw InputError("build_unitary_n supports n in {2, 3, 4}");
    ComplexMatrix u = ComplexMatrix::Identity(n, n);
    for (int k = 0; k < n; ++k) {
        const auto& y = params.vectors[k];
        if (y.size() != n - k) throw InputError("generating vector sizes must be n, n-1, ..., 1");
        ComplexMatrix embedded = ComplexMatrix::Identity(n, n);
        embedded.bottomRightCorner(n - k, n - k) = y.block();
        u = (u * embedded).eval();
    }
    return u;
}

inline ComplexMatrix build_unitary_n(const StandardParams4& p) { return build_unitary_n(p.generating_vectors()); }

/// Explicit 3x3 standard form.
inline ComplexMatrix build_ckm3(const MixingParameters3& p) {
    p.validate();
    const double c12 = p.c12(), s12 = p.s12();
    const double c13 = p.c13(), s13 = p.s13();
    const double c23 = p.c23(), s23 = p.s23();
    const Complex e = phase_factor(p.delta);
    ComplexMatrix u(3, 3);
    u(0, 0) = c12;
    u(0, 1) = s12 * c13;
    u(0, 2) = s12 * s13;
    u(1, 0) = s12 * c23;
    u(1, 1) = -c12 * c13 * c23 - e * (s13 * s23);
    u(1, 2) = -c12 * c23 * s13 + e * (c13 * s23);
    u(2, 0) = s12 * s23;
    u(2, 1) = e * (c23 * s13) - c12 * c13 * s23;
    u(2, 2) = -e * (c13 * c23) - c12 * s13 * s23;
    return u;
}

/**
 * Block matrix with blocks p_ij D_j Q_j, where D_0 = I and
 * D_j = diag(1, e^{i phases[j-1][0]}, ...). Its moduli do not depend on
 * the phases, which is why such matrices are not recoverable from moduli.
 */
inline ComplexMatrix compose_block_counterexample(const ComplexMatrix& p, const std::vector<ComplexMatrix>& qs,
                                                  const std::vector<std::vector<double>>& phases = {}) {
    constexpr double tol = 1e-9;
    const auto m = p.rows();
    if (p.cols() != m || m < 1) throw InputError("P must be square");
    if (static_cast<Eigen::Index>(qs.size()) != m) throw InputError("need one Q block per row of P");
    if (unitarity_defect(p) > tol) throw DomainError("P is not unitary");
    const auto n = qs.front().rows();
    auto nonneg_first_line = [](const ComplexMatrix& x) {
        for (Eigen::Index k = 0; k < x.rows(); ++k)
            for (const Complex& z : {x(0, k), x(k, 0)})
                if (std::abs(z.imag()) > tol || z.real() < -tol) return false;
        return true;
    };
    if (!nonneg_first_line(p)) throw DomainError("P must have a nonnegative first row and column");
    for (const auto& q : qs) {
        if (q.rows() != n || q.cols() != n) throw InputError("Q blocks must share one square shape");
        if (unitarity_defect(q) > tol) throw DomainError("Q block is not unitary");
        if (!nonneg_first_line(q)) throw DomainError("Q blocks must have a nonnegative first row and column");
    }
    if (!phases.empty() && static_cast<Eigen::Index>(phases.size()) != m - 1)
        throw InputError("need one phase list per Q block after the first");

    ComplexMatrix out(m * n, m * n);
    for (Eigen::Index j = 0; j < m; ++j) {
        ComplexMatrix dq = qs[j];
        if (j > 0 && !phases.empty()) {
            const auto& ph = phases[j - 1];
            if (static_cast<Eigen::Index>(ph.size()) != n - 1) throw InputError("phase list must have n-1 entries");
            for (Eigen::Index r = 1; r < n; ++r) dq.row(r) *= phase_factor(ph[r - 1]);
        }
        for (Eigen::Index i = 0; i < m; ++i) out.block(i * n, j * n, n, n) = p(i, j) * dq;
    }
    return out;
}

}  // namespace unistoch
