#pragma once

#include <cstdint>
#include <vector>

namespace qrtrend::hilbert {

/// Largest supported Hilbert size. Inverse entries of H_13 still fit in int64.
inline constexpr int kMaxSize = 13;

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(const Rational&, const Rational&) = default;
};

/// Dense row-major square matrix.
template <typename T>
struct SquareMatrix {
    int size = 0;
    std::vector<T> entries;

    SquareMatrix() = default;
    explicit SquareMatrix(int m) : size(m), entries(static_cast<std::size_t>(m) * m) {}

    T& operator()(int r, int c) { return entries[static_cast<std::size_t>(r) * size + c]; }
    const T& operator()(int r, int c) const { return entries[static_cast<std::size_t>(r) * size + c]; }
};

using HilbertMatrix = SquareMatrix<Rational>;
using IntegerMatrix = SquareMatrix<std::int64_t>;
using RealMatrix = SquareMatrix<double>;

/// H[j1,j2] = 1/(j1+j2+1), 0-indexed. Throws RangeError unless 1 <= m <= kMaxSize.
HilbertMatrix hilbert_matrix(int m);

/// Exact integer inverse of the m x m Hilbert matrix from the closed-form binomial expression.
IntegerMatrix hilbert_inverse(int m);

RealMatrix to_real(const HilbertMatrix& h);
RealMatrix to_real(const IntegerMatrix& h);

/// Correlation form D0[j1,j2] = H[j1,j2] / sqrt(H[j1,j1] H[j2,j2]); unit diagonal.
RealMatrix limit_correlation(const HilbertMatrix& h);

/// D0^-1 for the m x m polynomial limit: Hinv[j1,j2] / sqrt((2 j1 + 1)(2 j2 + 1)).
RealMatrix limit_correlation_inverse(int m);

struct PowerSum {
    unsigned __int128 exact = 0;
    double asymptote = 0.0;  // T^(k+1)/(k+1)

    double exact_as_double() const { return static_cast<double>(exact); }
    double ratio() const { return exact_as_double() / asymptote; }
};

/// sum_{t=1}^T t^k in exact 128-bit arithmetic plus its leading asymptote.
/// Throws RangeError on overflow of the exact representation.
PowerSum power_sum(std::int64_t T, int k);

}  // namespace qrtrend::hilbert
