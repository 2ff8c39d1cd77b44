#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qrtrend/cli/config.hpp"
#include "qrtrend/cli/dataset.hpp"
#include "qrtrend/design.hpp"
#include "qrtrend/inference.hpp"
#include "qrtrend/mc.hpp"
#include "qrtrend/noise.hpp"
#include "qrtrend/solver.hpp"

namespace qrtrend::cli {

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitNumeric = 3 };

struct SeasonalSpec {
    double period = 0.0;
    int K = 1;
};

/// "period:K", e.g. "365.25:2"; K defaults to 1 when omitted.
SeasonalSpec parse_seasonal(const std::string& s);

struct FitOptions {
    int degree = 2;
    double tau = 0.5;
    std::vector<SeasonalSpec> seasonal;
    bool orthogonalize = true;
    std::vector<noise::Family> noise_assumptions{noise::Family::Laplace, noise::Family::Gaussian,
                                                 noise::Family::Cauchy};
    double noise_scale = 1.0;
    std::vector<double> alphas;
    int bootstrap = 0;  // replications; 0 disables
    double level = 0.95;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

struct CoefficientReport {
    std::string name;
    design::ColumnRole role;
    double estimate = 0.0;
};

struct AssumptionIntervals {
    noise::Family family = noise::Family::Laplace;
    double f0 = 0.0;
    // per polynomial coefficient j: standard interval then relaxed intervals (alpha order)
    std::vector<inference::ConfidenceInterval> standard;
    std::vector<std::vector<inference::ConfidenceInterval>> relaxed;
    std::optional<inference::ConfidenceInterval> turning_point;
};

struct TurningPointReport {
    double index = 0.0;       // -beta1 / (2 beta2), in time-index units
    long long rounded = 0;
    std::string label;        // row label at the rounded index, when inside the data
    std::string date;         // calendar date when labels are ISO dates
};

struct FitReport {
    FitOptions options;
    std::string source;
    std::int64_t T = 0;
    std::vector<CoefficientReport> coefficients;
    std::vector<AssumptionIntervals> assumptions;
    std::optional<inference::BootstrapResult> bootstrap;
    std::optional<TurningPointReport> turning_point;
    std::vector<std::string> excluded_columns;
    solver::QuantileFit fit;

    nlohmann::json to_json() const;
};

/// Polynomial + (orthogonalized) Fourier fit with every requested interval.
FitReport cmd_fit(const SeriesDataset& data, const FitOptions& options);

/// Turning point with label/date mapping against the dataset's labels.
TurningPointReport map_turning_point(double index, const std::vector<std::string>& labels);

/// Runs the coverage study and writes CSV/JSON outputs where paths are set.
mc::CoverageReport cmd_simulate(const mc::CoverageConfig& config, const std::string& csv_path,
                                const std::string& json_path);

/// "period,power" CSV of the dominant periods (header only for a constant series).
std::string cmd_periodogram(const SeriesDataset& data, int top_n);

enum class HilbertView { Matrix, MatrixFloat, Inverse, LimitCorrelation, LimitCorrelationInverse };

/// Tab-separated rows; rationals as "num/den", integers exact, reals with 17 digits.
std::string cmd_hilbert(int size, HilbertView view);

/// CSV with a "t" column then one column per regressor.
std::string cmd_design(std::int64_t T, int degree, const std::vector<SeasonalSpec>& seasonal,
                       bool orthogonalize, const std::vector<std::string>& labels = {});

/// Throws NumericError if any number in `j` is NaN or infinite.
void require_finite(const nlohmann::json& j, const std::string& path = "$");

}  // namespace qrtrend::cli
