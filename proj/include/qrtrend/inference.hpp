#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "qrtrend/design.hpp"

namespace qrtrend::inference {

using design::Convention;

struct AsymptoticCovariance {
    double tau = 0.5;
    double f0 = 1.0;
    std::int64_t T = 0;
    int p = 0;
    Convention convention = Convention::PowerScaling;
    Eigen::MatrixXd sigma_beta;

    /// tau (1 - tau) / f0^2
    double sigma0_squared() const { return tau * (1.0 - tau) / (f0 * f0); }
};

/// Sigma_beta = tau(1-tau)/f0^2 * Delta^-1 M Delta^-1 with M = H^-1 and
/// Delta = diag(T^(j+1/2)) (PowerScaling), or M = D0^-1 and Delta the exact
/// column norms (ExactColumnNorm). Throws DomainError for f0 <= 0 or tau
/// outside (0,1), RankError for T <= p.
AsymptoticCovariance asymptotic_covariance(int p, double tau, double f0, std::int64_t T,
                                           Convention convention);

enum class Method { Standard, Relaxed, Propagated, Bootstrap };

std::string to_string(Method m);

struct ConfidenceInterval {
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.95;
    Method method = Method::Standard;
    double alpha = 0.0;    // Relaxed only
    int replications = 0;  // Bootstrap only

    double center() const { return 0.5 * (lower + upper); }
    double half_width() const { return 0.5 * (upper - lower); }
    bool contains(double x) const { return lower <= x && x <= upper; }
    bool contains(const ConfidenceInterval& other) const {
        return lower <= other.lower && other.upper <= upper;
    }
};

/// Two-sided standard normal critical value for `level` (1.95996... at 0.95).
double z_value(double level);

/// sigma_j = sqrt(tau (1 - tau) Hinv[j,j]) / f0 for the degree-p polynomial model.
double coefficient_sigma(int p, int j, double tau, double f0);

/// beta_j +- z sigma_j / T^(j + 1/2)
ConfidenceInterval standard_ci(double beta_j, double sigma_j, std::int64_t T, int j, double level);

/// beta_j +- z sigma_j / T^alpha
ConfidenceInterval relaxed_ci(double beta_j, double sigma_j, std::int64_t T, double alpha,
                              double level);

/// value +- z sqrt(grad' Sigma grad). Throws NumericError if the quadratic form
/// is negative beyond round-off.
ConfidenceInterval propagated_ci(double value, const Eigen::VectorXd& gradient,
                                 const AsymptoticCovariance& sigma, double level);

/// Vertex -beta1 / (2 beta2) of the quadratic trend. Throws DomainError when beta2 == 0.
double turning_point(double beta1, double beta2);

/// Gradient of the turning point with respect to (beta0, beta1, beta2).
Eigen::VectorXd turning_point_gradient(double beta1, double beta2);

struct BootstrapResult {
    std::vector<ConfidenceInterval> intervals;  // one per column
    int replications = 0;
    int failures = 0;
};

/// Paired (row) bootstrap with percentile intervals. Replication b draws its
/// rows from the stream (seed, b, bootstrap role), so results are identical
/// for any thread count. Throws NumericError when more than 5% of refits fail.
BootstrapResult bootstrap_ci(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau,
                             int B, double level, std::uint64_t seed, unsigned threads = 1);

/// Linear interpolation between order statistics of a sorted sample.
double sorted_quantile(const std::vector<double>& sorted, double q);

}  // namespace qrtrend::inference
