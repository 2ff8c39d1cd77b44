#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qrtrend/noise.hpp"

namespace qrtrend::mc {

/// Coverage study of relaxed intervals beta_j +- z sigma_j / T^alpha.
struct CoverageConfig {
    double tau = 0.5;
    std::vector<noise::Family> families{noise::Family::Laplace, noise::Family::Gaussian,
                                        noise::Family::Cauchy};
    std::vector<std::int64_t> T_grid{100, 500, 1000, 5000};
    std::vector<double> alpha_grid{0.5, 0.4, 0.3, 0.2};
    int replications = 1000;
    double level = 0.95;
    std::uint64_t seed = 20240601;
    int degree = 0;       // polynomial degree p of the simulated trend model
    int coefficient = 0;  // index j of the coefficient whose interval is checked
    double noise_scale = 1.0;
    unsigned threads = 1;  // 0 = hardware concurrency

    /// The large grid, up to T = 500000 (hours of runtime).
    static std::vector<std::int64_t> full_T_grid();

    /// Throws ValidationError naming the offending field.
    void validate() const;
};

struct CoverageCell {
    noise::Family family = noise::Family::Laplace;
    std::int64_t T = 0;
    double alpha = 0.0;
    int hits = 0;
    int replications = 0;  // successful replications
    double coverage = 0.0; // hits / replications
};

struct CoverageReport {
    CoverageConfig config;
    std::vector<CoverageCell> cells;  // family-major, then T, then alpha (config order)
    int failed_replications = 0;
    int attempted_replications = 0;
    bool valid = true;  // false when more than 1% of replications failed
    bool nesting_holds = true;  // per-replication hit monotone in alpha, every cell
    double wall_seconds = 0.0;

    /// Columns: family,T,alpha,coverage,hits,R,seed. Byte-stable for a given config.
    std::string to_csv() const;
    nlohmann::json to_json() const;
};

CoverageReport run_coverage(const CoverageConfig& config);

struct ScalingConfig {
    int degree = 0;
    double tau = 0.5;
    noise::Family family = noise::Family::Laplace;
    double noise_scale = 1.0;
    std::vector<std::int64_t> T_grid{5000};
    int replications = 1000;
    std::uint64_t seed = 20240602;
    unsigned threads = 1;
    bool noiseless = false;  // y = X beta* exactly
};

struct ScalingCell {
    std::int64_t T = 0;
    int replications = 0;
    int failures = 0;
    Eigen::VectorXd mean;        // of T^(j+1/2) (beta_hat_j - beta_j*)
    Eigen::VectorXd sd;
    Eigen::MatrixXd covariance;  // empirical covariance of the scaled errors
    Eigen::VectorXd normality;   // max |empirical CDF - fitted normal CDF| per coefficient
    Eigen::MatrixXd theoretical; // tau(1-tau)/f0^2 * H^-1
};

struct ScalingReport {
    ScalingConfig config;
    std::vector<ScalingCell> cells;
    nlohmann::json to_json() const;
};

ScalingReport run_scaling_study(const ScalingConfig& config);

}  // namespace qrtrend::mc
