// qrtrend: quantile-regression trend fitting, coverage simulation and
// Hilbert-matrix utilities.
//
// Exit codes: 0 success, 2 validation error, 3 numeric failure.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "qrtrend/cli/commands.hpp"
#include "qrtrend/error.hpp"

using namespace qrtrend;

namespace {

void emit(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError(path + ": cannot open for writing");
    f << text;
}

std::vector<cli::SeasonalSpec> seasonal_specs(const std::vector<std::string>& raw) {
    std::vector<cli::SeasonalSpec> out;
    for (const auto& s : raw) out.push_back(cli::parse_seasonal(s));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantile regression for polynomial trends"};
    app.require_subcommand(1);

    // fit
    auto* fit = app.add_subcommand("fit", "Fit a polynomial (+ Fourier) quantile trend to a CSV series");
    std::string fit_input, fit_column, fit_label, fit_output;
    std::vector<std::string> fit_seasonal, fit_noise;
    bool fit_no_orth = false;
    cli::FitOptions fit_opts;
    fit->add_option("--input,-i", fit_input, "CSV file with a header row")->required();
    fit->add_option("--column,-c", fit_column, "Value column name")->required();
    fit->add_option("--label-column", fit_label, "Optional label column (ISO dates map turning points)");
    fit->add_option("--degree,-p", fit_opts.degree, "Polynomial degree")->capture_default_str();
    fit->add_option("--tau,-t", fit_opts.tau, "Quantile level in (0,1)")->capture_default_str();
    fit->add_option("--seasonal", fit_seasonal, "Fourier terms as period:K (repeatable)");
    fit->add_flag("--no-orthogonalize", fit_no_orth, "Keep raw Fourier columns");
    fit->add_option("--noise", fit_noise, "Noise assumptions: laplace gaussian cauchy");
    fit->add_option("--noise-scale", fit_opts.noise_scale, "Scale of the assumed noise")->capture_default_str();
    fit->add_option("--alpha", fit_opts.alphas, "Relaxation exponents for relaxed intervals");
    fit->add_option("--bootstrap,-B", fit_opts.bootstrap, "Bootstrap replications (0 = off)")->capture_default_str();
    fit->add_option("--level", fit_opts.level, "Confidence level")->capture_default_str();
    fit->add_option("--seed", fit_opts.seed, "Bootstrap seed")->capture_default_str();
    fit->add_option("--threads", fit_opts.threads, "Worker threads for bootstrap (0 = all cores)");
    fit->add_option("--output,-o", fit_output, "Write JSON report here instead of stdout");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Monte Carlo coverage of standard and relaxed intervals");
    std::string sim_config, sim_csv, sim_json;
    std::vector<std::string> sim_families;
    std::vector<std::int64_t> sim_T;
    std::vector<double> sim_alpha;
    bool sim_full_grid = false;
    auto* o_seed = sim->add_option("--seed", "Master seed");
    auto* o_threads = sim->add_option("--threads", "Worker threads (0 = all cores)");
    auto* o_reps = sim->add_option("--replications,-R", "Replications per cell");
    auto* o_tau = sim->add_option("--tau", "Quantile level");
    auto* o_level = sim->add_option("--level", "Confidence level");
    auto* o_degree = sim->add_option("--degree", "Polynomial degree of the simulated model");
    auto* o_coef = sim->add_option("--coefficient", "Coefficient index j checked");
    sim->add_option("--config", sim_config, "Config file ([experiment], [grid], [run] sections)");
    sim->add_option("--csv", sim_csv, "Tidy CSV output path");
    sim->add_option("--json", sim_json, "JSON report output path");
    sim->add_option("--families", sim_families, "Noise families");
    sim->add_option("--T", sim_T, "Sample sizes");
    sim->add_option("--alpha", sim_alpha, "Relaxation exponents");
    sim->add_flag("--full-grid", sim_full_grid, "Use T up to 500000 (hours of runtime)");

    // scaling
    auto* scal = app.add_subcommand("scaling", "Sampling distribution of T^(j+1/2)-scaled estimation errors");
    mc::ScalingConfig scal_cfg;
    std::string scal_family = "laplace", scal_output;
    scal->add_option("--degree", scal_cfg.degree, "Polynomial degree")->capture_default_str();
    scal->add_option("--tau", scal_cfg.tau, "Quantile level")->capture_default_str();
    scal->add_option("--family", scal_family, "Noise family")->capture_default_str();
    scal->add_option("--T", scal_cfg.T_grid, "Sample sizes")->capture_default_str();
    scal->add_option("--replications,-R", scal_cfg.replications, "Replications per sample size")->capture_default_str();
    scal->add_option("--seed", scal_cfg.seed, "Master seed")->capture_default_str();
    scal->add_option("--threads", scal_cfg.threads, "Worker threads (0 = all cores)");
    scal->add_option("--output,-o", scal_output, "Write JSON here instead of stdout");

    // periodogram
    auto* per = app.add_subcommand("periodogram", "Dominant periods of a detrended CSV series");
    std::string per_input, per_column, per_output;
    int per_top = 5;
    per->add_option("--input,-i", per_input, "CSV file with a header row")->required();
    per->add_option("--column,-c", per_column, "Value column name")->required();
    per->add_option("--top,-n", per_top, "Number of peaks")->capture_default_str();
    per->add_option("--output,-o", per_output, "Write CSV here instead of stdout");

    // hilbert
    auto* hil = app.add_subcommand("hilbert", "Print Hilbert matrices and their correlation forms");
    int hil_size = 3;
    bool hil_inverse = false, hil_d0 = false, hil_float = false;
    hil->add_option("--size,-m", hil_size, "Matrix size (1..13)")->required();
    hil->add_flag("--inverse", hil_inverse, "Exact integer inverse (with --d0: D0 inverse)");
    hil->add_flag("--d0", hil_d0, "Limit correlation D0");
    hil->add_flag("--float", hil_float, "Print H as decimals instead of rationals");

    // design
    auto* des = app.add_subcommand("design", "Dump polynomial/Fourier design matrices as CSV");
    std::int64_t des_T = 0;
    int des_degree = 2;
    std::vector<std::string> des_seasonal;
    bool des_orth = false;
    std::string des_output;
    des->add_option("--T", des_T, "Number of time points")->required();
    des->add_option("--degree,-p", des_degree, "Polynomial degree")->capture_default_str();
    des->add_option("--seasonal", des_seasonal, "Fourier terms as period:K");
    des->add_flag("--orthogonalize", des_orth, "Residualize Fourier columns on the polynomial basis");
    des->add_option("--output,-o", des_output, "Write CSV here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? cli::kExitOk : cli::kExitValidation;
    }

    try {
        if (*fit) {
            const auto data = cli::ingest_csv(fit_input, fit_column,
                                              fit_label.empty() ? std::nullopt : std::optional(fit_label));
            fit_opts.seasonal = seasonal_specs(fit_seasonal);
            fit_opts.orthogonalize = !fit_no_orth;
            if (!fit_noise.empty()) {
                fit_opts.noise_assumptions.clear();
                for (const auto& n : fit_noise) fit_opts.noise_assumptions.push_back(noise::family_from_string(n));
            }
            const auto report = cli::cmd_fit(data, fit_opts);
            emit(report.to_json().dump(2) + "\n", fit_output);
            if (!report.fit.converged) {
                std::cerr << "qrtrend: solver did not converge (duality gap " << report.fit.duality_gap << ")\n";
                return cli::kExitNumeric;
            }
        } else if (*sim) {
            cli::SimulateSettings settings;
            if (!sim_config.empty())
                settings = cli::simulate_settings_from(cli::KeyValueConfig::load(sim_config));
            auto& c = settings.coverage;
            if (*o_seed) c.seed = o_seed->as<std::uint64_t>();
            if (*o_threads) c.threads = o_threads->as<unsigned>();
            if (*o_reps) c.replications = o_reps->as<int>();
            if (*o_tau) c.tau = o_tau->as<double>();
            if (*o_level) c.level = o_level->as<double>();
            if (*o_degree) c.degree = o_degree->as<int>();
            if (*o_coef) c.coefficient = o_coef->as<int>();
            if (!sim_families.empty()) {
                c.families.clear();
                for (const auto& f : sim_families) c.families.push_back(noise::family_from_string(f));
            }
            if (sim_full_grid) c.T_grid = mc::CoverageConfig::full_T_grid();
            if (!sim_T.empty()) c.T_grid = sim_T;
            if (!sim_alpha.empty()) c.alpha_grid = sim_alpha;
            if (!sim_csv.empty()) settings.csv_path = sim_csv;
            if (!sim_json.empty()) settings.json_path = sim_json;
            const auto report = cli::cmd_simulate(c, settings.csv_path, settings.json_path);
            if (settings.csv_path.empty()) std::cout << report.to_csv();
            if (!report.valid) {
                std::cerr << "qrtrend: " << report.failed_replications << " of " << report.attempted_replications
                          << " replications failed; report flagged invalid\n";
                return cli::kExitNumeric;
            }
        } else if (*scal) {
            scal_cfg.family = noise::family_from_string(scal_family);
            const auto report = mc::run_scaling_study(scal_cfg);
            emit(report.to_json().dump(2) + "\n", scal_output);
        } else if (*per) {
            const auto data = cli::ingest_csv(per_input, per_column);
            const auto csv = cli::cmd_periodogram(data, per_top);
            if (csv.find('\n') + 1 == csv.size())
                std::cerr << "qrtrend: warning: series is constant after detrending; no periods reported\n";
            emit(csv, per_output);
        } else if (*hil) {
            auto view = cli::HilbertView::Matrix;
            if (hil_d0) view = hil_inverse ? cli::HilbertView::LimitCorrelationInverse : cli::HilbertView::LimitCorrelation;
            else if (hil_inverse) view = cli::HilbertView::Inverse;
            else if (hil_float) view = cli::HilbertView::MatrixFloat;
            std::cout << cli::cmd_hilbert(hil_size, view);
        } else if (*des) {
            emit(cli::cmd_design(des_T, des_degree, seasonal_specs(des_seasonal), des_orth), des_output);
        }
    } catch (const NumericError& e) {
        std::cerr << "qrtrend: numeric failure: " << e.what() << '\n';
        return cli::kExitNumeric;
    } catch (const Error& e) {
        std::cerr << "qrtrend: " << e.what() << '\n';
        return cli::kExitValidation;
    }
    return cli::kExitOk;
}
