#include "qrtrend/cli/commands.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qrtrend/error.hpp"
#include "qrtrend/hilbert.hpp"

namespace qrtrend::cli {

namespace {

std::string kind_name(design::ColumnKind k) {
    switch (k) {
        case design::ColumnKind::PolyDegree:
            return "polynomial";
        case design::ColumnKind::FourierSin:
            return "fourier_sin";
        case design::ColumnKind::FourierCos:
            return "fourier_cos";
    }
    return "unknown";
}

nlohmann::json interval_json(const inference::ConfidenceInterval& ci) {
    nlohmann::json j = {{"lower", ci.lower}, {"upper", ci.upper}, {"level", ci.level},
                        {"method", inference::to_string(ci.method)}};
    if (ci.method == inference::Method::Relaxed) j["alpha"] = ci.alpha;
    if (ci.method == inference::Method::Bootstrap) j["replications"] = ci.replications;
    return j;
}

// shortest text that parses back to the same double
std::string real(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError(path + ": cannot open for writing");
    f << content;
    if (!f) throw ValidationError(path + ": write failed");
}

}  // namespace

SeasonalSpec parse_seasonal(const std::string& s) {
    SeasonalSpec spec;
    const auto colon = s.find(':');
    spec.period = parse_double(s.substr(0, colon), "seasonal period");
    if (colon != std::string::npos)
        spec.K = static_cast<int>(parse_integer(s.substr(colon + 1), "seasonal K"));
    if (!(spec.period > 1.0)) throw ValidationError("seasonal period must exceed 1 in '" + s + "'");
    if (spec.K < 1) throw ValidationError("seasonal K must be positive in '" + s + "'");
    return spec;
}

TurningPointReport map_turning_point(double index, const std::vector<std::string>& labels) {
    TurningPointReport tp;
    tp.index = index;
    if (!std::isfinite(index) || std::abs(index) > 1e12) return tp;
    tp.rounded = std::llround(index);
    const auto T = static_cast<long long>(labels.size());
    if (T == 0) return tp;
    if (tp.rounded >= 1 && tp.rounded <= T) tp.label = labels[static_cast<std::size_t>(tp.rounded - 1)];

    std::vector<long> days;
    for (const auto& l : labels) {
        const auto d = parse_iso_date(l);
        if (!d) return tp;
        days.push_back(*d);
    }
    const long step = T >= 2 ? days[1] - days[0] : 1;
    if (step <= 0) return tp;
    if (tp.rounded >= 1 && tp.rounded <= T) {
        tp.date = labels[static_cast<std::size_t>(tp.rounded - 1)];
    } else if (std::abs(tp.rounded) < 10'000'000) {
        tp.date = format_iso_date(days[0] + static_cast<long>(tp.rounded - 1) * step);
    }
    return tp;
}

FitReport cmd_fit(const SeriesDataset& data, const FitOptions& options) {
    if (!(options.tau > 0.0 && options.tau < 1.0)) throw ValidationError("tau must lie in (0, 1)");
    if (!(options.level > 0.0 && options.level < 1.0)) throw ValidationError("level must lie in (0, 1)");
    if (options.degree < 0 || options.degree > design::kMaxDegree)
        throw ValidationError("degree must lie in 0..12");
    for (double a : options.alphas)
        if (!(a > 0.0)) throw ValidationError("alpha values must be positive");
    if (options.bootstrap != 0 && options.bootstrap < 100)
        throw ValidationError("bootstrap needs at least 100 replications");

    FitReport report;
    report.options = options;
    report.source = data.source;
    const auto T = static_cast<std::int64_t>(data.size());
    report.T = T;

    const auto poly = design::polynomial_design(T, options.degree);
    std::vector<design::Column> seasonal;
    for (const auto& s : options.seasonal) {
        auto cols = design::fourier_columns(T, s.period, s.K);
        seasonal.insert(seasonal.end(), cols.begin(), cols.end());
    }
    std::vector<design::Column> extra;
    if (options.orthogonalize && !seasonal.empty()) {
        const auto orth = design::orthogonalize(seasonal, poly);
        for (std::size_t i = 0; i < orth.columns.size(); ++i)
            if (orth.degenerate[i]) report.excluded_columns.push_back(orth.columns[i].role.name());
        extra = orth.usable();
    } else {
        extra = seasonal;
    }
    const auto full = poly.with_columns(extra);
    const Eigen::MatrixXd X = full.matrix();
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(data.values.data(), T);

    report.fit = solver::fit_quantile(X, y, options.tau);
    for (int c = 0; c < full.cols(); ++c)
        report.coefficients.push_back({full.column(c).role.name(), full.column(c).role,
                                       report.fit.beta_hat(c)});

    const int p = options.degree;
    const bool quadratic = p == 2 && report.fit.beta_hat(2) != 0.0;
    if (quadratic) {
        const double l = inference::turning_point(report.fit.beta_hat(1), report.fit.beta_hat(2));
        report.turning_point = map_turning_point(l, data.labels);
    }

    for (auto family : options.noise_assumptions) {
        AssumptionIntervals ai;
        ai.family = family;
        ai.f0 = noise::density_at_zero(noise::NoiseModel(family, 0.0, options.noise_scale), options.tau);
        for (int j = 0; j <= p; ++j) {
            const double sigma = inference::coefficient_sigma(p, j, options.tau, ai.f0);
            const double b = report.fit.beta_hat(j);
            ai.standard.push_back(inference::standard_ci(b, sigma, T, j, options.level));
            std::vector<inference::ConfidenceInterval> relaxed;
            for (double a : options.alphas)
                if (a <= j + 0.5) relaxed.push_back(inference::relaxed_ci(b, sigma, T, a, options.level));
            ai.relaxed.push_back(std::move(relaxed));
        }
        if (quadratic) {
            const auto cov = inference::asymptotic_covariance(p, options.tau, ai.f0, T,
                                                              design::Convention::PowerScaling);
            const double b1 = report.fit.beta_hat(1), b2 = report.fit.beta_hat(2);
            ai.turning_point = inference::propagated_ci(inference::turning_point(b1, b2),
                                                        inference::turning_point_gradient(b1, b2), cov,
                                                        options.level);
        }
        report.assumptions.push_back(std::move(ai));
    }

    if (options.bootstrap > 0)
        report.bootstrap = inference::bootstrap_ci(X, y, options.tau, options.bootstrap, options.level,
                                                   options.seed, options.threads);
    return report;
}

nlohmann::json FitReport::to_json() const {
    nlohmann::json seasonal = nlohmann::json::array();
    for (const auto& s : options.seasonal) seasonal.push_back({{"period", s.period}, {"K", s.K}});
    nlohmann::json noise_names = nlohmann::json::array();
    for (auto f : options.noise_assumptions) noise_names.push_back(noise::to_string(f));

    nlohmann::json coefs = nlohmann::json::array();
    for (std::size_t c = 0; c < coefficients.size(); ++c) {
        const auto& cr = coefficients[c];
        nlohmann::json j = {{"name", cr.name},
                            {"kind", kind_name(cr.role.kind)},
                            {"index", cr.role.index},
                            {"estimate", cr.estimate}};
        if (cr.role.kind != design::ColumnKind::PolyDegree) {
            j["period"] = cr.role.period;
            j["residualized"] = cr.role.residualized;
        }
        if (bootstrap) j["bootstrap"] = interval_json(bootstrap->intervals[c]);
        coefs.push_back(j);
    }

    nlohmann::json intervals = nlohmann::json::array();
    for (const auto& ai : assumptions) {
        nlohmann::json per = nlohmann::json::array();
        for (std::size_t j = 0; j < ai.standard.size(); ++j) {
            nlohmann::json relaxed = nlohmann::json::array();
            for (const auto& ci : ai.relaxed[j]) relaxed.push_back(interval_json(ci));
            per.push_back({{"name", coefficients[j].name},
                           {"standard", interval_json(ai.standard[j])},
                           {"relaxed", relaxed}});
        }
        nlohmann::json entry = {{"noise", noise::to_string(ai.family)}, {"f0", ai.f0}, {"coefficients", per}};
        if (ai.turning_point) entry["turning_point"] = interval_json(*ai.turning_point);
        intervals.push_back(entry);
    }

    nlohmann::json tp = nullptr;
    if (turning_point) {
        tp = {{"index", turning_point->index}, {"rounded", turning_point->rounded}};
        if (!turning_point->label.empty()) tp["label"] = turning_point->label;
        if (!turning_point->date.empty()) tp["date"] = turning_point->date;
    }

    nlohmann::json out = {
        {"schema_version", kSchemaVersion},
        {"kind", "fit_report"},
        {"source", source},
        {"T", T},
        {"model",
         {{"degree", options.degree},
          {"tau", options.tau},
          {"seasonal", seasonal},
          {"orthogonalized", options.orthogonalize},
          {"level", options.level},
          {"noise_assumptions", noise_names},
          {"noise_scale", options.noise_scale},
          {"alphas", options.alphas},
          {"bootstrap_replications", options.bootstrap},
          {"seed", options.seed}}},
        {"coefficients", coefs},
        {"intervals", intervals},
        {"turning_point", tp},
        {"diagnostics",
         {{"objective", fit.objective},
          {"iterations", fit.iterations},
          {"pivots", fit.pivots},
          {"duality_gap", fit.duality_gap},
          {"converged", fit.converged},
          {"excluded_columns", excluded_columns},
          {"bootstrap_failures", bootstrap ? bootstrap->failures : 0}}},
    };
    require_finite(out);
    return out;
}

void require_finite(const nlohmann::json& j, const std::string& path) {
    if (j.is_number_float()) {
        if (!std::isfinite(j.get<double>())) throw NumericError("non-finite number at " + path);
    } else if (j.is_object()) {
        for (const auto& [k, v] : j.items()) require_finite(v, path + "." + k);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) require_finite(j[i], path + "[" + std::to_string(i) + "]");
    }
}

mc::CoverageReport cmd_simulate(const mc::CoverageConfig& config, const std::string& csv_path,
                                const std::string& json_path) {
    auto report = mc::run_coverage(config);
    if (!csv_path.empty()) write_file(csv_path, report.to_csv());
    if (!json_path.empty()) write_file(json_path, report.to_json().dump(2) + "\n");
    return report;
}

std::string cmd_periodogram(const SeriesDataset& data, int top_n) {
    const auto peaks = design::dominant_periods(data.values, top_n);
    std::ostringstream os;
    os << "period,power\n";
    for (const auto& pk : peaks) os << real(pk.period) << ',' << real(pk.power) << '\n';
    return os.str();
}

std::string cmd_hilbert(int size, HilbertView view) {
    std::ostringstream os;
    auto emit = [&](int m, auto&& cell) {
        for (int r = 0; r < m; ++r) {
            for (int c = 0; c < m; ++c) os << (c ? "\t" : "") << cell(r, c);
            os << '\n';
        }
    };
    switch (view) {
        case HilbertView::Matrix: {
            const auto h = hilbert::hilbert_matrix(size);
            emit(size, [&](int r, int c) {
                const auto q = h(r, c);
                return q.den == 1 ? std::to_string(q.num) : std::to_string(q.num) + "/" + std::to_string(q.den);
            });
            break;
        }
        case HilbertView::MatrixFloat: {
            const auto h = hilbert::to_real(hilbert::hilbert_matrix(size));
            emit(size, [&](int r, int c) { return real(h(r, c)); });
            break;
        }
        case HilbertView::Inverse: {
            const auto h = hilbert::hilbert_inverse(size);
            emit(size, [&](int r, int c) { return std::to_string(h(r, c)); });
            break;
        }
        case HilbertView::LimitCorrelation: {
            const auto d = hilbert::limit_correlation(hilbert::hilbert_matrix(size));
            emit(size, [&](int r, int c) { return real(d(r, c)); });
            break;
        }
        case HilbertView::LimitCorrelationInverse: {
            const auto d = hilbert::limit_correlation_inverse(size);
            emit(size, [&](int r, int c) { return real(d(r, c)); });
            break;
        }
    }
    return os.str();
}

std::string cmd_design(std::int64_t T, int degree, const std::vector<SeasonalSpec>& seasonal,
                       bool orthogonalize, const std::vector<std::string>& labels) {
    const auto poly = design::polynomial_design(T, degree);
    std::vector<design::Column> cols;
    for (const auto& s : seasonal) {
        auto f = design::fourier_columns(T, s.period, s.K);
        cols.insert(cols.end(), f.begin(), f.end());
    }
    if (orthogonalize && !cols.empty()) cols = design::orthogonalize(cols, poly).columns;
    const auto full = poly.with_columns(cols);

    std::ostringstream os;
    os << "t";
    const bool with_labels = !labels.empty();
    if (with_labels) os << ",label";
    for (const auto& c : full.columns()) os << ',' << c.role.name();
    os << '\n';
    for (std::int64_t t = 0; t < T; ++t) {
        os << (t + 1);
        if (with_labels) os << ',' << labels[static_cast<std::size_t>(t)];
        for (const auto& c : full.columns()) os << ',' << real(c.values(t));
        os << '\n';
    }
    return os.str();
}

}  // namespace qrtrend::cli
