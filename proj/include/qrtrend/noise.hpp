#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace qrtrend::noise {

enum class Family { Laplace, Gaussian, Cauchy };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

struct NoiseModel {
    Family family = Family::Laplace;
    double location = 0.0;
    double scale = 1.0;

    NoiseModel() = default;
    NoiseModel(Family f, double loc = 0.0, double sc = 1.0);

    double pdf(double x) const;
    double cdf(double x) const;
    /// Inverse CDF; throws DomainError unless 0 < q < 1.
    double quantile(double q) const;
};

/// f evaluated at the tau-quantile of the model, i.e. the density at 0 of the
/// tau-centered errors.
double density_at_zero(const NoiseModel& model, double tau);

/// Key of an independent random stream: the same key always reproduces the
/// same draws, whatever thread or order it is consumed in.
struct StreamKey {
    std::uint64_t seed = 0;
    std::uint64_t replication = 0;
    std::uint64_t role = 0;
};

/// Role tags for StreamKey::role.
namespace role {
inline constexpr std::uint64_t kNoise = 1;
inline constexpr std::uint64_t kBootstrap = 2;
inline constexpr std::uint64_t kSynthetic = 3;
}  // namespace role

std::mt19937_64 make_engine(const StreamKey& key);

/// Uniform on the open interval (0, 1) with 53 random bits.
double open_uniform(std::mt19937_64& engine);

/// n i.i.d. draws minus the tau-quantile, so P(u < 0) = tau.
std::vector<double> sample_centered(const NoiseModel& model, double tau, std::size_t n,
                                    const StreamKey& key);

}  // namespace qrtrend::noise
