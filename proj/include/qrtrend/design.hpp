#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qrtrend::design {

inline constexpr int kMaxDegree = 12;

enum class ColumnKind { PolyDegree, FourierSin, FourierCos };

/// What a regressor column represents. Fourier columns carry their period and
/// harmonic; `residualized` marks columns projected off the polynomial basis.
struct ColumnRole {
    ColumnKind kind = ColumnKind::PolyDegree;
    int index = 0;  // polynomial degree j, or Fourier harmonic k
    double period = 0.0;
    bool residualized = false;

    std::string name() const;
};

struct Column {
    Eigen::VectorXd values;
    ColumnRole role;
};

/// Regressor columns over the time index t = 1..T. Immutable once built.
class DesignMatrix {
public:
    DesignMatrix() = default;
    DesignMatrix(std::int64_t rows, std::vector<Column> columns);

    std::int64_t rows() const { return rows_; }
    int cols() const { return static_cast<int>(columns_.size()); }
    const std::vector<Column>& columns() const { return columns_; }
    const Column& column(int c) const { return columns_[static_cast<std::size_t>(c)]; }

    /// Number of leading polynomial columns (degrees 0..p in order).
    int polynomial_count() const;

    Eigen::MatrixXd matrix() const;
    DesignMatrix with_columns(std::span<const Column> extra) const;

private:
    std::int64_t rows_ = 0;
    std::vector<Column> columns_;
};

/// Columns (1, t, ..., t^p) for t = 1..T. Throws RankError when T <= p.
DesignMatrix polynomial_design(std::int64_t T, int p);

/// sin(2 pi k t / period), cos(2 pi k t / period) for k = 1..K, in that order.
std::vector<Column> fourier_columns(std::int64_t T, double period, int K);

struct OrthogonalizedColumns {
    std::vector<Column> columns;
    std::vector<bool> degenerate;  // residual numerically zero

    /// Columns that survive, i.e. without the degenerate ones.
    std::vector<Column> usable() const;
};

/// Residualizes each seasonal column on the polynomial block of `poly` using a
/// Householder QR of the (unit-norm scaled) polynomial columns.
OrthogonalizedColumns orthogonalize(std::span<const Column> seasonal, const DesignMatrix& poly);

enum class Convention { ExactColumnNorm, PowerScaling };

std::string to_string(Convention c);
Convention convention_from_string(const std::string& s);

struct NormalizationMatrix {
    std::vector<double> diagonal;
    Convention convention = Convention::ExactColumnNorm;
};

/// Diagonal scaling of the polynomial columns: exact column norms or T^(j+1/2).
NormalizationMatrix normalization(const DesignMatrix& design, Convention convention);

/// S^-1 X^T X S^-1 over all columns: polynomial columns scaled by Delta,
/// any other column by its Euclidean norm (zero columns left unscaled).
Eigen::MatrixXd normalized_gram(const DesignMatrix& design, const NormalizationMatrix& delta);

struct PeriodPeak {
    double period = 0.0;
    double power = 0.0;
    int frequency_index = 0;
};

/// Top spectral peaks of the linearly detrended series, by power descending.
/// Returns an empty list for a constant (or exactly linear) series.
std::vector<PeriodPeak> dominant_periods(std::span<const double> series, int top_n);

}  // namespace qrtrend::design
