#pragma once

#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "matrix_core.hpp"

namespace unistoch {

/// Unitary matrices of one size with optional convex weights (uniform when absent).
struct ModuliEnsemble {
    std::vector<ComplexMatrix> members;
    std::optional<std::vector<double>> weights;

    [[nodiscard]] int n() const { return members.empty() ? 0 : static_cast<int>(members.front().rows()); }

    void validate() const {
        if (members.empty()) throw InputError("ensemble is empty");
        const auto rows = members.front().rows();
        for (const auto& u : members)
            if (u.rows() != rows || u.cols() != rows) throw InputError("ensemble members must share one square size");
        if (weights) {
            if (weights->size() != members.size()) throw InputError("one weight per ensemble member is required");
            for (double w : *weights)
                if (!(w >= 0.0)) throw InputError("ensemble weights must be nonnegative");
            const double total = std::accumulate(weights->begin(), weights->end(), 0.0);
            if (std::abs(total - 1.0) > 1e-12) throw InputError("ensemble weights must sum to 1");
        }
    }
};

/// Entrywise sum |U_i|^2 / N.
inline RealMatrix mean_squared_moduli(const ModuliEnsemble& e) {
    e.validate();
    RealMatrix acc = RealMatrix::Zero(e.n(), e.n());
    for (const auto& u : e.members) acc += u.cwiseAbs2();
    return acc / static_cast<double>(e.members.size());
}

/// Entrywise sqrt(sum |U_i|^2 / N).
inline RealMatrix mean_moduli(const ModuliEnsemble& e) { return mean_squared_moduli(e).cwiseSqrt(); }

/// Entrywise sqrt(sum |U_i|^4 / N - <M>^4), evaluated in the centered form
/// sum (|U_i|^2 - <M>^2)^2 / N, which cannot go negative and is exactly
/// zero when all members share their moduli.
inline RealMatrix sigma_moduli(const ModuliEnsemble& e) {
    const RealMatrix mean2 = mean_squared_moduli(e);
    RealMatrix acc = RealMatrix::Zero(e.n(), e.n());
    for (const auto& u : e.members) acc += (u.cwiseAbs2() - mean2).cwiseAbs2();
    return (acc / static_cast<double>(e.members.size())).cwiseSqrt();
}

/// sum x_i |U_i|^2; a point of the Birkhoff polytope when every member is unitary.
/// @throws DomainError if a member is not unitary within 1e-9.
inline SquaredModuliMatrix convex_combine(const ModuliEnsemble& e) {
    e.validate();
    const auto count = e.members.size();
    RealMatrix acc = RealMatrix::Zero(e.n(), e.n());
    for (std::size_t k = 0; k < count; ++k) {
        if (unitarity_defect(e.members[k]) > 1e-9)
            throw DomainError("ensemble member " + std::to_string(k) + " is not unitary");
        const double w = e.weights ? (*e.weights)[k] : 1.0 / static_cast<double>(count);
        acc += w * e.members[k].cwiseAbs2();
    }
    return SquaredModuliMatrix(std::move(acc));
}

}  // namespace unistoch
