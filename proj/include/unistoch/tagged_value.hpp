#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

namespace unistoch {

enum class ValueKind { Real, Imaginary, Complex, Degenerate };

inline std::string to_string(ValueKind kind) {
    switch (kind) {
        case ValueKind::Real: return "real";
        case ValueKind::Imaginary: return "imaginary";
        case ValueKind::Complex: return "complex";
        case ValueKind::Degenerate: return "degenerate";
    }
    return "unknown";
}

/// A quantity that is real on physical input and may turn imaginary (or
/// undefined) outside the unistochastic set. Imaginary results are data.
struct TaggedValue {
    std::complex<double> value{std::numeric_limits<double>::quiet_NaN(), 0.0};
    ValueKind kind{ValueKind::Degenerate};

    [[nodiscard]] bool is_real() const { return kind == ValueKind::Real; }
    [[nodiscard]] bool is_imaginary() const { return kind == ValueKind::Imaginary; }
    [[nodiscard]] bool is_degenerate() const { return kind == ValueKind::Degenerate; }
    [[nodiscard]] double real() const { return value.real(); }
    [[nodiscard]] double imag() const { return value.imag(); }
    [[nodiscard]] double magnitude() const { return std::abs(value); }

    static TaggedValue degenerate() { return {}; }
};

/// Tags z as real or imaginary when the other part is below rel_tol * |z|.
/// The negligible part is zeroed so downstream code sees a clean value.
inline TaggedValue classify(std::complex<double> z, double rel_tol = 1e-9) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return TaggedValue::degenerate();
    const double scale = std::abs(z);
    if (std::abs(z.imag()) <= rel_tol * scale) return {{z.real(), 0.0}, ValueKind::Real};
    if (std::abs(z.real()) <= rel_tol * scale) return {{0.0, z.imag()}, ValueKind::Imaginary};
    return {z, ValueKind::Complex};
}

/// Principal square root of a real radicand: +i sqrt(|x|) for x < 0.
inline std::complex<double> csqrt(double x) {
    return x >= 0.0 ? std::complex<double>(std::sqrt(x), 0.0)
                    : std::complex<double>(0.0, std::sqrt(-x));
}

/// Principal square root that treats a signed-zero imaginary part as real,
/// so -0.0 never flips the branch.
inline std::complex<double> csqrt(std::complex<double> z) {
    if (z.imag() == 0.0) return csqrt(z.real());
    return std::sqrt(z);
}

}  // namespace unistoch
