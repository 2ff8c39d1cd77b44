#include "qrtrend/inference.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>

#include "qrtrend/error.hpp"
#include "qrtrend/hilbert.hpp"
#include "qrtrend/noise.hpp"
#include "qrtrend/parallel.hpp"
#include "qrtrend/solver.hpp"

namespace qrtrend::inference {

namespace {

void check_level(double level) {
    if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0, 1)");
}

void check_sigma(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("sigma must be positive and finite");
}

ConfidenceInterval centered(double center, double half, double level, Method m) {
    ConfidenceInterval ci;
    ci.lower = center - half;
    ci.upper = center + half;
    ci.level = level;
    ci.method = m;
    return ci;
}

}  // namespace

AsymptoticCovariance asymptotic_covariance(int p, double tau, double f0, std::int64_t T,
                                           Convention convention) {
    if (!(f0 > 0.0) || !std::isfinite(f0)) throw DomainError("density at zero must be positive");
    if (!(tau > 0.0 && tau < 1.0)) throw DomainError("tau must lie in (0, 1)");
    if (p < 0 || p + 1 > hilbert::kMaxSize) throw RangeError("degree outside supported range");
    if (T <= p) throw RankError("T must exceed the polynomial degree");

    AsymptoticCovariance out;
    out.tau = tau;
    out.f0 = f0;
    out.T = T;
    out.p = p;
    out.convention = convention;

    const int m = p + 1;
    const hilbert::RealMatrix core = convention == Convention::PowerScaling
                                         ? hilbert::to_real(hilbert::hilbert_inverse(m))
                                         : hilbert::limit_correlation_inverse(m);
    const auto delta = design::normalization(design::polynomial_design(T, p), convention).diagonal;

    const double s0 = out.sigma0_squared();
    out.sigma_beta.resize(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) out.sigma_beta(a, b) = s0 * core(a, b) / (delta[a] * delta[b]);
    return out;
}

std::string to_string(Method m) {
    switch (m) {
        case Method::Standard:
            return "standard";
        case Method::Relaxed:
            return "relaxed";
        case Method::Propagated:
            return "propagated";
        case Method::Bootstrap:
            return "bootstrap";
    }
    return "unknown";
}

double z_value(double level) {
    check_level(level);
    return boost::math::quantile(boost::math::normal(0.0, 1.0), 0.5 * (1.0 + level));
}

double coefficient_sigma(int p, int j, double tau, double f0) {
    if (j < 0 || j > p) throw RangeError("coefficient index outside 0..p");
    if (!(f0 > 0.0)) throw DomainError("density at zero must be positive");
    const auto hinv = hilbert::hilbert_inverse(p + 1);
    return std::sqrt(tau * (1.0 - tau) * static_cast<double>(hinv(j, j))) / f0;
}

ConfidenceInterval standard_ci(double beta_j, double sigma_j, std::int64_t T, int j, double level) {
    check_sigma(sigma_j);
    if (T < 1) throw DomainError("T must be positive");
    if (j < 0) throw DomainError("coefficient index must be nonnegative");
    const double half = z_value(level) * sigma_j / std::pow(static_cast<double>(T), j + 0.5);
    return centered(beta_j, half, level, Method::Standard);
}

ConfidenceInterval relaxed_ci(double beta_j, double sigma_j, std::int64_t T, double alpha,
                              double level) {
    check_sigma(sigma_j);
    if (T < 1) throw DomainError("T must be positive");
    if (!(alpha > 0.0)) throw DomainError("relaxation exponent alpha must be positive");
    const double half = z_value(level) * sigma_j / std::pow(static_cast<double>(T), alpha);
    auto ci = centered(beta_j, half, level, Method::Relaxed);
    ci.alpha = alpha;
    return ci;
}

ConfidenceInterval propagated_ci(double value, const Eigen::VectorXd& gradient,
                                 const AsymptoticCovariance& sigma, double level) {
    if (gradient.size() != sigma.sigma_beta.rows())
        throw DomainError("gradient length does not match covariance dimension");
    const double q = gradient.dot(sigma.sigma_beta * gradient);
    const double scale = gradient.cwiseAbs().dot(sigma.sigma_beta.cwiseAbs() * gradient.cwiseAbs());
    if (q < -1e-12 * scale) throw NumericError("covariance is not positive semidefinite along gradient");
    return centered(value, z_value(level) * std::sqrt(std::max(q, 0.0)), level, Method::Propagated);
}

double turning_point(double beta1, double beta2) {
    if (beta2 == 0.0) throw DomainError("no turning point: quadratic coefficient is zero");
    return -beta1 / (2.0 * beta2);
}

Eigen::VectorXd turning_point_gradient(double beta1, double beta2) {
    if (beta2 == 0.0) throw DomainError("no turning point: quadratic coefficient is zero");
    Eigen::VectorXd g(3);
    g << 0.0, -1.0 / (2.0 * beta2), beta1 / (2.0 * beta2 * beta2);
    return g;
}

double sorted_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw DomainError("quantile of empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

BootstrapResult bootstrap_ci(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau,
                             int B, double level, std::uint64_t seed, unsigned threads) {
    check_level(level);
    if (B < 100) throw DomainError("bootstrap needs at least 100 replications");
    if (X.rows() != y.size()) throw DomainError("design and response sizes differ");
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();

    std::vector<Eigen::VectorXd> estimates(static_cast<std::size_t>(B));
    std::vector<char> ok(static_cast<std::size_t>(B), 0);

    parallel_for(static_cast<std::size_t>(B), threads, [&](std::size_t b) {
        auto engine = noise::make_engine({seed, b, noise::role::kBootstrap});
        Eigen::MatrixXd xb(n, p);
        Eigen::VectorXd yb(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            auto row = static_cast<Eigen::Index>(noise::open_uniform(engine) * static_cast<double>(n));
            row = std::min(row, n - 1);
            xb.row(i) = X.row(row);
            yb(i) = y(row);
        }
        try {
            auto fit = solver::fit_quantile(xb, yb, tau);
            if (fit.converged) {
                estimates[b] = std::move(fit.beta_hat);
                ok[b] = 1;
            }
        } catch (const RankError&) {
        } catch (const NumericError&) {
        }
    });

    BootstrapResult out;
    out.replications = B;
    for (char f : ok) out.failures += f ? 0 : 1;
    if (out.failures * 20 > B)
        throw NumericError("bootstrap: " + std::to_string(out.failures) + " of " + std::to_string(B) +
                           " refits failed (limit 5%)");

    for (Eigen::Index j = 0; j < p; ++j) {
        std::vector<double> draws;
        draws.reserve(static_cast<std::size_t>(B));
        for (std::size_t b = 0; b < estimates.size(); ++b)
            if (ok[b]) draws.push_back(estimates[b](j));
        std::sort(draws.begin(), draws.end());
        ConfidenceInterval ci;
        ci.lower = sorted_quantile(draws, 0.5 * (1.0 - level));
        ci.upper = sorted_quantile(draws, 0.5 * (1.0 + level));
        ci.level = level;
        ci.method = Method::Bootstrap;
        ci.replications = B - out.failures;
        out.intervals.push_back(ci);
    }
    return out;
}

}  // namespace qrtrend::inference
