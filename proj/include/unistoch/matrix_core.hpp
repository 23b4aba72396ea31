#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace unistoch {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;

inline constexpr double kExactTolerance = 1e-9;

/// Phase in [0, 2pi).
inline double wrap_phase(double phi) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(phi, two_pi);
    if (w < 0.0) w += two_pi;
    if (w >= two_pi) w = 0.0;
    return w;
}

/// e^{i phi}, exact at multiples of pi/2.
inline Complex phase_factor(double phi) {
    constexpr double pi = std::numbers::pi;
    if (phi == 0.0) return {1.0, 0.0};
    if (phi == pi) return {-1.0, 0.0};
    if (phi == pi / 2) return {0.0, 1.0};
    if (phi == 3 * pi / 2) return {0.0, -1.0};
    return std::polar(1.0, phi);
}

/**
 * @brief Square matrix of squared moduli m_ij = |U_ij|^2.
 *
 * Holds any finite n x n grid with 2 <= n <= 4. Entries are not clamped:
 * line-sum completions may legitimately leave the polytope, and the
 * diagnostics below report how far.
 */
class SquaredModuliMatrix {
public:
    SquaredModuliMatrix() : m_(RealMatrix::Identity(3, 3)) {}

    explicit SquaredModuliMatrix(RealMatrix entries) : m_(std::move(entries)) {
        if (m_.rows() != m_.cols()) throw InputError("squared-moduli matrix must be square");
        if (m_.rows() < 2 || m_.rows() > 4)
            throw InputError("squared-moduli matrix dimension must be 2, 3 or 4, got " +
                             std::to_string(m_.rows()));
        if (!m_.allFinite()) throw InputError("squared-moduli matrix has non-finite entries");
    }

    SquaredModuliMatrix(std::initializer_list<std::initializer_list<double>> rows)
        : SquaredModuliMatrix(from_rows(rows)) {}

    [[nodiscard]] int n() const { return static_cast<int>(m_.rows()); }
    [[nodiscard]] double operator()(int i, int j) const { return m_(i, j); }
    [[nodiscard]] const RealMatrix& entries() const { return m_; }

    /// Entrywise square roots (negative entries map to 0).
    [[nodiscard]] RealMatrix moduli() const { return m_.cwiseMax(0.0).cwiseSqrt(); }

    [[nodiscard]] SquaredModuliMatrix transposed() const { return SquaredModuliMatrix(m_.transpose()); }

    /// Y(i, j) = M(row_perm[i], col_perm[j]).
    [[nodiscard]] SquaredModuliMatrix permuted(const std::vector<int>& row_perm,
                                               const std::vector<int>& col_perm) const;

private:
    static RealMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        const auto n = static_cast<Eigen::Index>(rows.size());
        RealMatrix m(n, n);
        Eigen::Index i = 0;
        for (const auto& row : rows) {
            if (static_cast<Eigen::Index>(row.size()) != n) throw InputError("ragged squared-moduli rows");
            Eigen::Index j = 0;
            for (double v : row) m(i, j++) = v;
            ++i;
        }
        return m;
    }

    RealMatrix m_;
};

inline void check_permutation(const std::vector<int>& perm, int n, const char* what) {
    if (static_cast<int>(perm.size()) != n) throw InputError(std::string(what) + " has wrong length");
    std::vector<int> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    for (int k = 0; k < n; ++k)
        if (sorted[k] != k) throw InputError(std::string(what) + " is not a permutation");
}

inline SquaredModuliMatrix SquaredModuliMatrix::permuted(const std::vector<int>& row_perm,
                                                         const std::vector<int>& col_perm) const {
    check_permutation(row_perm, n(), "row permutation");
    check_permutation(col_perm, n(), "column permutation");
    RealMatrix y(n(), n());
    for (int i = 0; i < n(); ++i)
        for (int j = 0; j < n(); ++j) y(i, j) = m_(row_perm[i], col_perm[j]);
    return SquaredModuliMatrix(std::move(y));
}

/// Signed line-sum defects (sum - 1) of a squared-moduli matrix.
struct StochasticityReport {
    std::vector<double> row_defects;
    std::vector<double> col_defects;
    double max_defect = 0.0;
    double tolerance = kExactTolerance;
    bool pass = false;
};

/// Thrown when an operation requires a doubly stochastic matrix.
class NotDoublyStochastic : public DomainError {
public:
    explicit NotDoublyStochastic(StochasticityReport report)
        : DomainError(describe(report)), report_(std::move(report)) {}
    [[nodiscard]] const StochasticityReport& report() const { return report_; }

private:
    static std::string describe(const StochasticityReport& r) {
        std::ostringstream os;
        os.precision(6);
        os << "matrix is not doubly stochastic: max line-sum defect " << r.max_defect
           << " exceeds tolerance " << r.tolerance;
        return os.str();
    }
    StochasticityReport report_;
};

/**
 * @brief Line sums of M against 1.
 * @throws InputError if tol <= 0.
 * @throws DomainError on an entry below -tol, naming the 1-based index.
 */
inline StochasticityReport check_doubly_stochastic(const SquaredModuliMatrix& m,
                                                   double tol = kExactTolerance) {
    if (!(tol > 0.0)) throw InputError("tolerance must be positive");
    const int n = m.n();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (m(i, j) < -tol) {
                std::ostringstream os;
                os << "negative entry m" << (i + 1) << (j + 1) << " = " << m(i, j);
                throw DomainError(os.str());
            }
    StochasticityReport r;
    r.tolerance = tol;
    for (int i = 0; i < n; ++i) r.row_defects.push_back(m.entries().row(i).sum() - 1.0);
    for (int j = 0; j < n; ++j) r.col_defects.push_back(m.entries().col(j).sum() - 1.0);
    for (double d : r.row_defects) r.max_defect = std::max(r.max_defect, std::abs(d));
    for (double d : r.col_defects) r.max_defect = std::max(r.max_defect, std::abs(d));
    r.pass = r.max_defect <= tol;
    return r;
}

inline SquaredModuliMatrix hadamard_square(const ComplexMatrix& u) {
    return SquaredModuliMatrix(u.cwiseAbs2());
}

/// max |U U^* - I| entrywise.
inline double unitarity_defect(const ComplexMatrix& u) {
    if (u.rows() != u.cols() || u.rows() == 0) return std::numeric_limits<double>::infinity();
    const ComplexMatrix d = u * u.adjoint() - ComplexMatrix::Identity(u.rows(), u.cols());
    return d.cwiseAbs().maxCoeff();
}

/**
 * @brief An element of the rephasing group D x P x T x C.
 *
 * apply() acts in the order: conjugate, transpose, D_L . Y . D_R, then
 * permute with Y'(i, j) = Y(row_permutation[i], col_permutation[j]).
 */
struct GaugeTransform {
    std::vector<double> left_phases;
    std::vector<double> right_phases;
    std::vector<int> row_permutation;
    std::vector<int> col_permutation;
    bool transposed = false;
    bool conjugated = false;

    static GaugeTransform identity(int n) {
        GaugeTransform g;
        g.left_phases.assign(n, 0.0);
        g.right_phases.assign(n, 0.0);
        g.row_permutation.resize(n);
        g.col_permutation.resize(n);
        std::iota(g.row_permutation.begin(), g.row_permutation.end(), 0);
        std::iota(g.col_permutation.begin(), g.col_permutation.end(), 0);
        return g;
    }

    [[nodiscard]] ComplexMatrix apply(const ComplexMatrix& x) const {
        const int n = static_cast<int>(x.rows());
        validate(n);
        ComplexMatrix y = conjugated ? ComplexMatrix(x.conjugate()) : x;
        if (transposed) y = y.transpose().eval();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) y(i, j) *= phase_factor(left_phases[i] + right_phases[j]);
        ComplexMatrix z(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) z(i, j) = y(row_permutation[i], col_permutation[j]);
        return z;
    }

    /// Action on moduli: only transposition and permutations survive.
    [[nodiscard]] SquaredModuliMatrix apply(const SquaredModuliMatrix& m) const {
        validate(m.n());
        const SquaredModuliMatrix t = transposed ? m.transposed() : m;
        return t.permuted(row_permutation, col_permutation);
    }

private:
    void validate(int n) const {
        if (static_cast<int>(left_phases.size()) != n || static_cast<int>(right_phases.size()) != n)
            throw InputError("gauge transform phase count does not match matrix dimension");
        check_permutation(row_permutation, n, "row permutation");
        check_permutation(col_permutation, n, "column permutation");
    }
};

struct CanonicalForm {
    ComplexMatrix matrix;
    GaugeTransform transform;  ///< transform.apply(matrix) reproduces the input
};

/**
 * @brief Rephases U to a nonnegative real first row and first column.
 *
 * A row (column) whose first entry vanishes takes its phase from its first
 * nonzero entry. If the first interior entry with a non-negligible imaginary
 * part has Im > 0 the conjugate is returned and the conjugated flag set.
 */
inline CanonicalForm canonical_gauge_form(const ComplexMatrix& u) {
    if (u.rows() != u.cols() || u.rows() == 0) throw InputError("canonical form needs a square matrix");
    const int n = static_cast<int>(u.rows());
    const double scale = std::max(1.0, u.cwiseAbs().maxCoeff());
    const double zero_tol = 1e-14 * scale;
    const double imag_tol = 1e-12 * scale;

    GaugeTransform g = GaugeTransform::identity(n);
    ComplexMatrix w = u;

    auto fix_row = [&](int i, int j) {
        const double phi = std::arg(w(i, j));
        w.row(i) *= std::polar(1.0, -phi);
        w(i, j) = std::abs(w(i, j));
        g.left_phases[i] += phi;
    };
    auto fix_col = [&](int j, int i) {
        const double phi = std::arg(w(i, j));
        w.col(j) *= std::polar(1.0, -phi);
        w(i, j) = std::abs(w(i, j));
        g.right_phases[j] += phi;
    };

    for (int i = 0; i < n; ++i)
        if (std::abs(w(i, 0)) > zero_tol) fix_row(i, 0);
    for (int j = 1; j < n; ++j)
        if (std::abs(w(0, j)) > zero_tol) fix_col(j, 0);
    for (int i = 0; i < n; ++i) {
        if (std::abs(u(i, 0)) > zero_tol) continue;
        w(i, 0) = 0.0;
        for (int j = 1; j < n; ++j)
            if (std::abs(w(i, j)) > zero_tol) {
                fix_row(i, j);
                break;
            }
    }
    for (int j = 1; j < n; ++j) {
        if (std::abs(u(0, j)) > zero_tol) continue;
        w(0, j) = 0.0;
        for (int i = 1; i < n; ++i)
            if (std::abs(w(i, j)) > zero_tol && std::abs(u(i, 0)) > zero_tol) {
                fix_col(j, i);
                break;
            }
    }

    auto leading_imag = [&]() {
        for (int i = 1; i < n; ++i)
            for (int j = 1; j < n; ++j)
                if (std::abs(w(i, j).imag()) > imag_tol) return w(i, j).imag();
        return 0.0;
    };
    if (leading_imag() > 0.0) {
        w = w.conjugate().eval();
        g.conjugated = true;
    }
    for (auto& p : g.left_phases) p = wrap_phase(p);
    for (auto& p : g.right_phases) p = wrap_phase(p);
    return {w, g};
}

/// Sinkhorn alternating row/column normalization; negative entries clipped to 0.
/// Runs at least min_sweeps and continues until every line sum is within
/// target of 1 (nearly decomposable inputs converge slowly).
inline SquaredModuliMatrix project_to_polytope(const SquaredModuliMatrix& m, int min_sweeps = 100,
                                               int max_sweeps = 100000, double target = 1e-14) {
    RealMatrix x = m.entries().cwiseMax(0.0);
    for (int s = 0; s < max_sweeps; ++s) {
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const double r = x.row(i).sum();
            if (r > 0.0) x.row(i) /= r;
        }
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double c = x.col(j).sum();
            if (c > 0.0) x.col(j) /= c;
        }
        if (s + 1 >= min_sweeps && ((x.rowwise().sum().array() - 1.0).abs() <= target).all()) break;
    }
    return SquaredModuliMatrix(std::move(x));
}

}  // namespace unistoch
