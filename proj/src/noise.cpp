#include "qrtrend/noise.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <numbers>

#include "qrtrend/error.hpp"

namespace qrtrend::noise {

namespace {

const boost::math::normal kStdNormal(0.0, 1.0);

}  // namespace

std::string to_string(Family f) {
    switch (f) {
        case Family::Laplace:
            return "laplace";
        case Family::Gaussian:
            return "gaussian";
        case Family::Cauchy:
            return "cauchy";
    }
    return "unknown";
}

Family family_from_string(const std::string& s) {
    if (s == "laplace") return Family::Laplace;
    if (s == "gaussian" || s == "normal") return Family::Gaussian;
    if (s == "cauchy") return Family::Cauchy;
    throw ValidationError("unknown noise family '" + s + "' (expected laplace|gaussian|cauchy)");
}

NoiseModel::NoiseModel(Family f, double loc, double sc) : family(f), location(loc), scale(sc) {
    if (!(sc > 0.0) || !std::isfinite(sc)) throw DomainError("noise scale must be positive");
    if (!std::isfinite(loc)) throw DomainError("noise location must be finite");
}

double NoiseModel::pdf(double x) const {
    const double z = (x - location) / scale;
    switch (family) {
        case Family::Laplace:
            return std::exp(-std::abs(z)) / (2.0 * scale);
        case Family::Gaussian:
            return std::exp(-0.5 * z * z) / (scale * std::sqrt(2.0 * std::numbers::pi));
        case Family::Cauchy:
            return 1.0 / (std::numbers::pi * scale * (1.0 + z * z));
    }
    return 0.0;
}

double NoiseModel::cdf(double x) const {
    const double z = (x - location) / scale;
    switch (family) {
        case Family::Laplace:
            return z < 0.0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
        case Family::Gaussian:
            return boost::math::cdf(kStdNormal, z);
        case Family::Cauchy:
            return 0.5 + std::atan(z) / std::numbers::pi;
    }
    return 0.0;
}

double NoiseModel::quantile(double q) const {
    if (!(q > 0.0 && q < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
    double z = 0.0;
    switch (family) {
        case Family::Laplace:
            z = q < 0.5 ? std::log(2.0 * q) : -std::log(2.0 * (1.0 - q));
            break;
        case Family::Gaussian:
            z = boost::math::quantile(kStdNormal, q);
            break;
        case Family::Cauchy:
            z = std::tan(std::numbers::pi * (q - 0.5));
            break;
    }
    return location + scale * z;
}

double density_at_zero(const NoiseModel& model, double tau) {
    return model.pdf(model.quantile(tau));
}

std::mt19937_64 make_engine(const StreamKey& key) {
    std::seed_seq seq{static_cast<std::uint32_t>(key.seed), static_cast<std::uint32_t>(key.seed >> 32),
                      static_cast<std::uint32_t>(key.replication),
                      static_cast<std::uint32_t>(key.replication >> 32),
                      static_cast<std::uint32_t>(key.role), static_cast<std::uint32_t>(key.role >> 32)};
    return std::mt19937_64(seq);
}

double open_uniform(std::mt19937_64& engine) {
    for (;;) {
        const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
        if (u > 0.0) return u;
    }
}

std::vector<double> sample_centered(const NoiseModel& model, double tau, std::size_t n,
                                    const StreamKey& key) {
    if (n == 0) throw DomainError("sample size must be positive");
    const double shift = model.quantile(tau);
    auto engine = make_engine(key);
    std::vector<double> out(n);
    for (auto& v : out) v = model.quantile(open_uniform(engine)) - shift;
    return out;
}

}  // namespace qrtrend::noise
