#include "qrtrend/mc.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <sstream>

#include "qrtrend/design.hpp"
#include "qrtrend/error.hpp"
#include "qrtrend/hilbert.hpp"
#include "qrtrend/inference.hpp"
#include "qrtrend/parallel.hpp"
#include "qrtrend/solver.hpp"

namespace qrtrend::mc {

namespace {

// Distinct stream per (family, T) so cells do not share trajectories.
std::uint64_t noise_role(noise::Family f, std::int64_t T) {
    return noise::role::kNoise | (static_cast<std::uint64_t>(f) + 1) << 8 |
           static_cast<std::uint64_t>(T) << 16;
}

// shortest text that parses back to the same double
std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::vector<std::int64_t> CoverageConfig::full_T_grid() {
    return {100, 500, 1000, 5000, 10000, 50000, 100000, 500000};
}

void CoverageConfig::validate() const {
    if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("tau: must lie in (0, 1)");
    if (families.empty()) throw ValidationError("families: at least one noise family required");
    if (T_grid.empty()) throw ValidationError("T: grid is empty");
    for (auto t : T_grid)
        if (t <= degree) throw ValidationError("T: every sample size must exceed the degree");
    if (alpha_grid.empty()) throw ValidationError("alpha: grid is empty");
    if (degree < 0 || degree > 12) throw ValidationError("degree: must lie in 0..12");
    if (coefficient < 0 || coefficient > degree)
        throw ValidationError("coefficient: must lie in 0..degree");
    const double bound = coefficient + 0.5;
    for (double a : alpha_grid) {
        if (!(a > 0.0)) throw ValidationError("alpha: every value must be positive");
        if (a > bound)
            throw ValidationError("alpha: value " + format_double(a) + " exceeds j + 1/2 = " +
                                  format_double(bound));
    }
    if (replications < 1) throw ValidationError("replications: must be at least 1");
    if (!(level > 0.0 && level < 1.0)) throw ValidationError("level: must lie in (0, 1)");
    if (!(noise_scale > 0.0)) throw ValidationError("noise_scale: must be positive");
}

CoverageReport run_coverage(const CoverageConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();

    CoverageReport report;
    report.config = config;
    const int j = config.coefficient;
    const double z = inference::z_value(config.level);
    const std::size_t R = static_cast<std::size_t>(config.replications);

    for (auto family : config.families) {
        const noise::NoiseModel model(family, 0.0, config.noise_scale);
        const double f0 = noise::density_at_zero(model, config.tau);
        const double sigma_j = inference::coefficient_sigma(config.degree, j, config.tau, f0);

        for (auto T : config.T_grid) {
            const auto X = design::polynomial_design(T, config.degree).matrix();
            const std::uint64_t role = noise_role(family, T);

            // |beta_hat_j - beta_j*| per replication; NaN marks a failed fit
            std::vector<double> error(R);
            parallel_for(R, config.threads, [&](std::size_t r) {
                const auto u = noise::sample_centered(model, config.tau, static_cast<std::size_t>(T),
                                                      {config.seed, r, role});
                const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(u.data(), T);
                try {
                    const auto fit = solver::fit_quantile(X, y, config.tau);
                    error[r] = fit.converged ? std::abs(fit.beta_hat(j)) : std::nan("");
                } catch (const Error&) {
                    error[r] = std::nan("");
                }
            });

            int failed = 0;
            for (double e : error) failed += std::isnan(e) ? 1 : 0;
            report.failed_replications += failed;
            report.attempted_replications += config.replications;

            std::vector<double> half(config.alpha_grid.size());
            for (std::size_t a = 0; a < half.size(); ++a)
                half[a] = z * sigma_j / std::pow(static_cast<double>(T), config.alpha_grid[a]);

            std::vector<int> hits(half.size(), 0);
            for (double e : error) {
                if (std::isnan(e)) continue;
                for (std::size_t a = 0; a < half.size(); ++a) {
                    const bool hit = e <= half[a];
                    hits[a] += hit ? 1 : 0;
                    // same trajectory for every alpha: a hit at a larger alpha implies a hit at
                    // every smaller one
                    for (std::size_t b = 0; b < half.size(); ++b)
                        if (config.alpha_grid[b] < config.alpha_grid[a] && hit && !(e <= half[b]))
                            report.nesting_holds = false;
                }
            }
            for (std::size_t a = 0; a < half.size(); ++a) {
                CoverageCell cell;
                cell.family = family;
                cell.T = T;
                cell.alpha = config.alpha_grid[a];
                cell.hits = hits[a];
                cell.replications = config.replications - failed;
                cell.coverage = cell.replications > 0
                                    ? static_cast<double>(cell.hits) / cell.replications
                                    : 0.0;
                report.cells.push_back(cell);
            }
        }
    }
    report.valid = report.failed_replications * 100 <= report.attempted_replications;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

std::string CoverageReport::to_csv() const {
    std::ostringstream os;
    os << "family,T,alpha,coverage,hits,R,seed\n";
    for (const auto& c : cells) {
        os << noise::to_string(c.family) << ',' << c.T << ',' << format_double(c.alpha) << ','
           << format_double(c.coverage) << ',' << c.hits << ',' << c.replications << ','
           << config.seed << '\n';
    }
    return os.str();
}

nlohmann::json CoverageReport::to_json() const {
    nlohmann::json families = nlohmann::json::array();
    for (auto f : config.families) families.push_back(noise::to_string(f));
    nlohmann::json cfg = {
        {"tau", config.tau},
        {"families", families},
        {"T", config.T_grid},
        {"alpha", config.alpha_grid},
        {"replications", config.replications},
        {"level", config.level},
        {"seed", config.seed},
        {"degree", config.degree},
        {"coefficient", config.coefficient},
        {"noise_scale", config.noise_scale},
        {"noise_location", 0.0},
        {"true_coefficients", "all zero"},
    };
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& c : cells) {
        rows.push_back({{"family", noise::to_string(c.family)},
                        {"T", c.T},
                        {"alpha", c.alpha},
                        {"coverage", c.coverage},
                        {"hits", c.hits},
                        {"R", c.replications}});
    }
    return {{"schema_version", 1},
            {"kind", "coverage_report"},
            {"config", cfg},
            {"cells", rows},
            {"failed_replications", failed_replications},
            {"attempted_replications", attempted_replications},
            {"valid", valid},
            {"nesting_holds", nesting_holds},
            {"wall_seconds", wall_seconds}};
}

ScalingReport run_scaling_study(const ScalingConfig& config) {
    if (config.degree < 0 || config.degree > 12) throw ValidationError("degree: must lie in 0..12");
    if (config.replications < 2) throw ValidationError("replications: need at least 2");
    if (!(config.tau > 0.0 && config.tau < 1.0)) throw ValidationError("tau: must lie in (0, 1)");

    const int m = config.degree + 1;
    const noise::NoiseModel model(config.family, 0.0, config.noise_scale);
    const double f0 = noise::density_at_zero(model, config.tau);
    const auto hinv = hilbert::to_real(hilbert::hilbert_inverse(m));
    const double s0 = config.tau * (1.0 - config.tau) / (f0 * f0);
    const boost::math::normal std_normal(0.0, 1.0);

    ScalingReport report;
    report.config = config;
    for (auto T : config.T_grid) {
        if (T <= config.degree) throw ValidationError("T: every sample size must exceed the degree");
        const auto X = design::polynomial_design(T, config.degree).matrix();
        const auto R = static_cast<std::size_t>(config.replications);
        std::vector<Eigen::VectorXd> scaled(R);
        std::vector<char> ok(R, 0);

        parallel_for(R, config.threads, [&](std::size_t r) {
            Eigen::VectorXd y = Eigen::VectorXd::Zero(T);
            if (!config.noiseless) {
                const auto u = noise::sample_centered(
                    model, config.tau, static_cast<std::size_t>(T),
                    {config.seed, r, noise_role(config.family, T)});
                y = Eigen::Map<const Eigen::VectorXd>(u.data(), T);
            }
            try {
                const auto fit = solver::fit_quantile(X, y, config.tau);
                if (!fit.converged) return;
                Eigen::VectorXd e(m);
                for (int j = 0; j < m; ++j)
                    e(j) = std::pow(static_cast<double>(T), j + 0.5) * fit.beta_hat(j);
                scaled[r] = std::move(e);
                ok[r] = 1;
            } catch (const Error&) {
            }
        });

        ScalingCell cell;
        cell.T = T;
        std::vector<Eigen::VectorXd> good;
        for (std::size_t r = 0; r < R; ++r)
            if (ok[r]) good.push_back(scaled[r]);
        cell.replications = static_cast<int>(good.size());
        cell.failures = config.replications - cell.replications;
        if (good.size() < 2) throw NumericError("scaling study: fewer than two successful fits");

        cell.mean = Eigen::VectorXd::Zero(m);
        for (const auto& e : good) cell.mean += e;
        cell.mean /= static_cast<double>(good.size());
        cell.covariance = Eigen::MatrixXd::Zero(m, m);
        for (const auto& e : good) cell.covariance += (e - cell.mean) * (e - cell.mean).transpose();
        cell.covariance /= static_cast<double>(good.size() - 1);
        cell.sd = cell.covariance.diagonal().cwiseSqrt();

        cell.normality = Eigen::VectorXd::Zero(m);
        for (int j = 0; j < m; ++j) {
            if (cell.sd(j) == 0.0) continue;
            std::vector<double> v;
            v.reserve(good.size());
            for (const auto& e : good) v.push_back(e(j));
            std::sort(v.begin(), v.end());
            const double nn = static_cast<double>(v.size());
            double worst = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) {
                const double f = boost::math::cdf(std_normal, (v[i] - cell.mean(j)) / cell.sd(j));
                worst = std::max({worst, std::abs(f - static_cast<double>(i) / nn),
                                  std::abs(static_cast<double>(i + 1) / nn - f)});
            }
            cell.normality(j) = worst;
        }
        cell.theoretical.resize(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) cell.theoretical(a, b) = s0 * hinv(a, b);
        report.cells.push_back(std::move(cell));
    }
    return report;
}

nlohmann::json ScalingReport::to_json() const {
    auto matrix_json = [](const Eigen::MatrixXd& mat) {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < mat.rows(); ++r) {
            std::vector<double> row(static_cast<std::size_t>(mat.cols()));
            for (Eigen::Index c = 0; c < mat.cols(); ++c) row[static_cast<std::size_t>(c)] = mat(r, c);
            rows.push_back(row);
        }
        return rows;
    };
    auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    nlohmann::json cells_json = nlohmann::json::array();
    for (const auto& c : cells) {
        cells_json.push_back({{"T", c.T},
                              {"replications", c.replications},
                              {"failures", c.failures},
                              {"mean", vec(c.mean)},
                              {"sd", vec(c.sd)},
                              {"covariance", matrix_json(c.covariance)},
                              {"theoretical_covariance", matrix_json(c.theoretical)},
                              {"normality_score", vec(c.normality)}});
    }
    return {{"schema_version", 1},
            {"kind", "scaling_report"},
            {"config",
             {{"degree", config.degree},
              {"tau", config.tau},
              {"family", noise::to_string(config.family)},
              {"noise_scale", config.noise_scale},
              {"replications", config.replications},
              {"seed", config.seed}}},
            {"cells", cells_json}};
}

}  // namespace qrtrend::mc
