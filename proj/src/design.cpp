#include "qrtrend/design.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

#include "qrtrend/error.hpp"
#include "qrtrend/hilbert.hpp"

namespace qrtrend::design {

std::string ColumnRole::name() const {
    std::ostringstream os;
    switch (kind) {
        case ColumnKind::PolyDegree:
            os << "poly_" << index;
            return os.str();
        case ColumnKind::FourierSin:
            os << "sin";
            break;
        case ColumnKind::FourierCos:
            os << "cos";
            break;
    }
    os << "_" << period << "_k" << index;
    if (residualized) os << "_orth";
    return os.str();
}

DesignMatrix::DesignMatrix(std::int64_t rows, std::vector<Column> columns)
    : rows_(rows), columns_(std::move(columns)) {
    for (const auto& c : columns_)
        if (c.values.size() != rows_) throw RangeError("design column length mismatch");
}

int DesignMatrix::polynomial_count() const {
    int n = 0;
    for (const auto& c : columns_) {
        if (c.role.kind != ColumnKind::PolyDegree) break;
        ++n;
    }
    return n;
}

Eigen::MatrixXd DesignMatrix::matrix() const {
    Eigen::MatrixXd x(rows_, cols());
    for (int c = 0; c < cols(); ++c) x.col(c) = columns_[static_cast<std::size_t>(c)].values;
    return x;
}

DesignMatrix DesignMatrix::with_columns(std::span<const Column> extra) const {
    std::vector<Column> all = columns_;
    all.insert(all.end(), extra.begin(), extra.end());
    return DesignMatrix(rows_, std::move(all));
}

DesignMatrix polynomial_design(std::int64_t T, int p) {
    if (p < 0 || p > kMaxDegree)
        throw RangeError("polynomial degree " + std::to_string(p) + " outside [0, " +
                         std::to_string(kMaxDegree) + "]");
    if (T <= p)
        throw RankError("T = " + std::to_string(T) + " rows cannot identify a degree-" +
                        std::to_string(p) + " polynomial");
    std::vector<Column> cols;
    cols.reserve(static_cast<std::size_t>(p) + 1);
    for (int j = 0; j <= p; ++j) {
        Eigen::VectorXd v(T);
        for (std::int64_t t = 1; t <= T; ++t) {
            double x = 1.0;
            for (int e = 0; e < j; ++e) x *= static_cast<double>(t);
            v(t - 1) = x;
        }
        cols.push_back({std::move(v), ColumnRole{ColumnKind::PolyDegree, j, 0.0, false}});
    }
    return DesignMatrix(T, std::move(cols));
}

std::vector<Column> fourier_columns(std::int64_t T, double period, int K) {
    if (T < 1) throw DomainError("fourier_columns requires T >= 1");
    if (!(period > 1.0)) throw DomainError("Fourier period must exceed 1");
    if (K < 1) throw DomainError("Fourier order K must be positive");
    std::vector<Column> cols;
    for (int k = 1; k <= K; ++k) {
        Eigen::VectorXd s(T), c(T);
        for (std::int64_t t = 1; t <= T; ++t) {
            const double angle = 2.0 * std::numbers::pi * k * static_cast<double>(t) / period;
            s(t - 1) = std::sin(angle);
            c(t - 1) = std::cos(angle);
        }
        cols.push_back({std::move(s), ColumnRole{ColumnKind::FourierSin, k, period, false}});
        cols.push_back({std::move(c), ColumnRole{ColumnKind::FourierCos, k, period, false}});
    }
    return cols;
}

std::vector<Column> OrthogonalizedColumns::usable() const {
    std::vector<Column> out;
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (!degenerate[i]) out.push_back(columns[i]);
    return out;
}

OrthogonalizedColumns orthogonalize(std::span<const Column> seasonal, const DesignMatrix& poly) {
    const int np = poly.polynomial_count();
    if (np == 0) throw RankError("orthogonalize needs at least one polynomial column");
    Eigen::MatrixXd p(poly.rows(), np);
    for (int j = 0; j < np; ++j) {
        const auto& v = poly.column(j).values;
        const double norm = v.norm();
        if (norm == 0.0) throw RankError("zero polynomial column");
        p.col(j) = v / norm;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(p);
    qr.setThreshold(1e-12);
    if (qr.rank() < np) throw RankError("polynomial block is rank deficient");
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(poly.rows(), np);

    OrthogonalizedColumns out;
    for (const auto& col : seasonal) {
        if (col.values.size() != poly.rows()) throw RangeError("seasonal column length mismatch");
        Eigen::VectorXd r = col.values - q * (q.transpose() * col.values);
        // second pass restores orthogonality lost to cancellation
        r -= q * (q.transpose() * r);
        const double in_norm = col.values.norm();
        const bool degenerate = r.norm() <= 1e-10 * std::max(in_norm, 1e-300);
        if (degenerate) r.setZero();
        ColumnRole role = col.role;
        role.residualized = true;
        out.columns.push_back({std::move(r), role});
        out.degenerate.push_back(degenerate);
    }
    return out;
}

std::string to_string(Convention c) {
    return c == Convention::ExactColumnNorm ? "exact" : "power";
}

Convention convention_from_string(const std::string& s) {
    if (s == "exact") return Convention::ExactColumnNorm;
    if (s == "power") return Convention::PowerScaling;
    throw ValidationError("unknown normalization convention '" + s + "' (expected exact|power)");
}

namespace {

long double column_sum_of_squares(const Eigen::VectorXd& v) {
    long double acc = 0.0L;
    for (Eigen::Index i = 0; i < v.size(); ++i) acc += static_cast<long double>(v(i)) * v(i);
    return acc;
}

}  // namespace

NormalizationMatrix normalization(const DesignMatrix& design, Convention convention) {
    const int np = design.polynomial_count();
    if (np == 0) throw RankError("normalization needs polynomial columns");
    NormalizationMatrix delta;
    delta.convention = convention;
    const double T = static_cast<double>(design.rows());
    for (int j = 0; j < np; ++j) {
        if (convention == Convention::PowerScaling) {
            delta.diagonal.push_back(std::pow(T, j + 0.5));
            continue;
        }
        long double ss;
        try {
            ss = static_cast<long double>(hilbert::power_sum(design.rows(), 2 * j).exact);
        } catch (const RangeError&) {
            ss = column_sum_of_squares(design.column(j).values);
        }
        delta.diagonal.push_back(static_cast<double>(std::sqrt(ss)));
    }
    return delta;
}

Eigen::MatrixXd normalized_gram(const DesignMatrix& design, const NormalizationMatrix& delta) {
    const int np = static_cast<int>(delta.diagonal.size());
    if (design.polynomial_count() != np)
        throw RangeError("normalization size differs from the polynomial block");
    const int m = design.cols();
    std::vector<long double> scale(static_cast<std::size_t>(m));
    for (int a = 0; a < m; ++a) {
        if (a < np) {
            scale[a] = delta.diagonal[a];
        } else {
            const long double ss = column_sum_of_squares(design.column(a).values);
            scale[a] = ss > 0.0L ? std::sqrt(ss) : 1.0L;
        }
    }
    Eigen::MatrixXd g(m, m);
    for (int a = 0; a < m; ++a) {
        for (int b = a; b < m; ++b) {
            long double acc = 0.0L;
            const auto& va = design.column(a).values;
            const auto& vb = design.column(b).values;
            for (Eigen::Index i = 0; i < va.size(); ++i)
                acc += static_cast<long double>(va(i)) * vb(i);
            const double v = static_cast<double>(acc / (scale[a] * scale[b]));
            g(a, b) = g(b, a) = v;
        }
    }
    if (delta.convention == Convention::ExactColumnNorm)
        for (int a = 0; a < np; ++a) g(a, a) = 1.0;
    return g;
}

std::vector<PeriodPeak> dominant_periods(std::span<const double> series, int top_n) {
    const auto n = static_cast<int>(series.size());
    if (n < 8) throw DomainError("dominant_periods needs at least 8 observations");
    if (top_n < 1) throw DomainError("top_n must be positive");

    // least-squares linear detrend on t = 1..n
    long double st = 0, sy = 0, stt = 0, sty = 0;
    for (int i = 0; i < n; ++i) {
        const long double t = i + 1;
        st += t;
        sy += series[i];
        stt += t * t;
        sty += t * series[i];
    }
    const long double slope = (n * sty - st * sy) / (n * stt - st * st);
    const long double intercept = (sy - slope * st) / n;

    std::vector<double> resid(static_cast<std::size_t>(n));
    double scale = 0.0, rss = 0.0;
    for (int i = 0; i < n; ++i) {
        resid[i] = static_cast<double>(series[i] - (intercept + slope * (i + 1)));
        scale = std::max(scale, std::abs(series[i]));
        rss += resid[i] * resid[i];
    }
    if (std::sqrt(rss / n) <= 1e-12 * std::max(scale, 1.0)) return {};

    const int bins = n / 2 + 1;
    fftw_complex* spectrum = fftw_alloc_complex(static_cast<std::size_t>(bins));
    // FFTW planning is not thread-safe; execution is.
    static std::mutex planner_mutex;
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex);
        plan = fftw_plan_dft_r2c_1d(n, resid.data(), spectrum, FFTW_ESTIMATE);
    }
    fftw_execute(plan);

    std::vector<PeriodPeak> peaks;
    peaks.reserve(static_cast<std::size_t>(bins));
    for (int k = 1; k < bins; ++k) {
        const double re = spectrum[k][0], im = spectrum[k][1];
        peaks.push_back({static_cast<double>(n) / k, re * re + im * im, k});
    }
    {
        std::lock_guard lock(planner_mutex);
        fftw_destroy_plan(plan);
    }
    fftw_free(spectrum);

    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const PeriodPeak& a, const PeriodPeak& b) { return a.power > b.power; });
    if (static_cast<int>(peaks.size()) > top_n) peaks.resize(static_cast<std::size_t>(top_n));
    return peaks;
}

}  // namespace qrtrend::design
