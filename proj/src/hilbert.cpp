#include "qrtrend/hilbert.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "qrtrend/error.hpp"

namespace qrtrend::hilbert {

namespace {

void check_size(int m) {
    if (m < 1 || m > kMaxSize) {
        throw RangeError("Hilbert size " + std::to_string(m) + " outside supported range [1, " +
                         std::to_string(kMaxSize) + "]");
    }
}

using i128 = __int128;

i128 binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    i128 r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;  // exact at each step
    return r;
}

}  // namespace

HilbertMatrix hilbert_matrix(int m) {
    check_size(m);
    HilbertMatrix h(m);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) h(r, c) = Rational{1, r + c + 1};
    return h;
}

IntegerMatrix hilbert_inverse(int m) {
    check_size(m);
    // (H^-1)[i,j] = (-1)^(i+j) (i+j+1) C(m+i, m-j-1) C(m+j, m-i-1) C(i+j, i)^2
    IntegerMatrix inv(m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            const i128 c = binomial(i + j, i);
            i128 v = static_cast<i128>(i + j + 1) * binomial(m + i, m - j - 1) *
                     binomial(m + j, m - i - 1) * c * c;
            if (v > static_cast<i128>(std::numeric_limits<std::int64_t>::max()))
                throw RangeError("inverse Hilbert entry exceeds int64");
            if ((i + j) % 2 == 1) v = -v;
            inv(i, j) = static_cast<std::int64_t>(v);
        }
    }
    return inv;
}

RealMatrix to_real(const HilbertMatrix& h) {
    RealMatrix out(h.size);
    for (std::size_t i = 0; i < h.entries.size(); ++i) out.entries[i] = h.entries[i].to_double();
    return out;
}

RealMatrix to_real(const IntegerMatrix& h) {
    RealMatrix out(h.size);
    for (std::size_t i = 0; i < h.entries.size(); ++i)
        out.entries[i] = static_cast<double>(h.entries[i]);
    return out;
}

RealMatrix limit_correlation(const HilbertMatrix& h) {
    const int m = h.size;
    RealMatrix d0(m);
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < m; ++c) {
            if (r == c) {
                d0(r, c) = 1.0;
                continue;
            }
            // H[r,c]^2 / (H[r,r] H[c,c]) as an exact rational, then one sqrt.
            const long double num = static_cast<long double>(h(r, c).num) * h(r, c).num *
                                    h(r, r).den * h(c, c).den;
            const long double den = static_cast<long double>(h(r, c).den) * h(r, c).den *
                                    h(r, r).num * h(c, c).num;
            const double mag = static_cast<double>(std::sqrt(num / den));
            d0(r, c) = (h(r, c).num < 0) ? -mag : mag;
        }
    }
    return d0;
}

RealMatrix limit_correlation_inverse(int m) {
    const IntegerMatrix inv = hilbert_inverse(m);
    RealMatrix out(m);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c)
            out(r, c) = static_cast<double>(inv(r, c)) /
                        std::sqrt(static_cast<double>((2 * r + 1) * (2 * c + 1)));
    return out;
}

PowerSum power_sum(std::int64_t T, int k) {
    if (T < 1) throw DomainError("power_sum requires T >= 1");
    if (k < 0) throw DomainError("power_sum requires k >= 0");
    using u128 = unsigned __int128;
    constexpr u128 kMax = ~static_cast<u128>(0);

    u128 total = 0;
    for (std::int64_t t = 1; t <= T; ++t) {
        u128 term = 1;
        const u128 base = static_cast<u128>(t);
        for (int e = 0; e < k; ++e) {
            if (term > kMax / base)
                throw RangeError("power_sum(" + std::to_string(T) + ", " + std::to_string(k) +
                                 ") overflows 128-bit integer");
            term *= base;
        }
        if (total > kMax - term)
            throw RangeError("power_sum(" + std::to_string(T) + ", " + std::to_string(k) +
                             ") overflows 128-bit integer");
        total += term;
    }
    PowerSum out;
    out.exact = total;
    out.asymptote = std::pow(static_cast<double>(T), k + 1) / (k + 1);
    return out;
}

}  // namespace qrtrend::hilbert
