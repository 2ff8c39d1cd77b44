#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "qrtrend/cli/commands.hpp"
#include "qrtrend/error.hpp"

using namespace qrtrend;
using namespace qrtrend::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("qrtrend_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

fs::path write_text(const std::string& name, const std::string& text) {
    const auto path = scratch_dir() / name;
    std::ofstream(path, std::ios::binary) << text;
    return path;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(QRTREND_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string series_csv(const std::vector<double>& values, const std::vector<std::string>& labels = {}) {
    std::ostringstream os;
    os.precision(17);
    os << (labels.empty() ? "value\n" : "date,value\n");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!labels.empty()) os << labels[i] << ',';
        os << values[i] << '\n';
    }
    return os.str();
}

std::vector<std::string> daily_labels(const std::string& start, int n) {
    const long d0 = *parse_iso_date(start);
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(format_iso_date(d0 + i));
    return out;
}

}  // namespace

TEST_CASE("parse_csv basics") {
    const auto d = parse_csv("value\n1.0\n2.0\n3.0\n", "mem", "value");
    CHECK(d.size() == 3);
    CHECK(d.values == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(d.labels.empty());

    const auto l = parse_csv("\xEF\xBB\xBF" "date,\"load, MW\"\n2022-01-01,\"5\"\n\n2022-01-02,6e1\r\n", "mem",
                             "load, MW", std::string("date"));
    CHECK(l.values == std::vector<double>{5.0, 60.0});
    CHECK(l.labels == std::vector<std::string>{"2022-01-01", "2022-01-02"});
}

TEST_CASE("parse_csv errors name the line") {
    auto message = [](const std::string& text, const std::string& col) {
        try {
            parse_csv(text, "data.csv", col);
        } catch (const ValidationError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message("value\n1\n\n3\n,\n", "value").find("data.csv:5") != std::string::npos);
    CHECK(message("value\n1\nabc\n", "value").find("data.csv:3") != std::string::npos);
    CHECK(message("value\n1\n2x\n", "value").find("data.csv:3") != std::string::npos);
    CHECK(message("a,b\n1\n", "a").find("data.csv:2") != std::string::npos);
    CHECK(!message("a,a\n1,2\n", "a").empty());
    CHECK(!message("a,b\n1,2\n", "c").empty());
    CHECK(!message("", "a").empty());
    CHECK(!message("value\n", "value").empty());
    CHECK(!message("value\nnan\n", "value").empty());
    CHECK_THROWS_AS(ingest_csv((scratch_dir() / "missing.csv").string(), "value"), ValidationError);
}

TEST_CASE("ingest_csv reads files") {
    std::ostringstream os;
    os << "year,anomaly\n";
    for (int i = 0; i < 176; ++i) os << 1850 + i << ',' << 0.01 * i << '\n';
    const auto path = write_text("anomaly.csv", os.str());
    const auto d = ingest_csv(path.string(), "anomaly", std::string("year"));
    CHECK(d.size() == 176);
    CHECK(d.labels.front() == "1850");
    CHECK(d.source == path.string());
}

TEST_CASE("iso dates") {
    CHECK(parse_iso_date("1970-01-01") == 0L);
    CHECK(parse_iso_date("2022-01-01") == 18993L);
    CHECK(format_iso_date(18993) == "2022-01-01");
    CHECK(!parse_iso_date("2022-02-30"));
    CHECK(!parse_iso_date("2022-1-01"));
    CHECK(!parse_iso_date("1850"));
    CHECK(format_iso_date(*parse_iso_date("2024-02-29")) == "2024-02-29");
}

TEST_CASE("parse_seasonal") {
    CHECK(parse_seasonal("365.25:2").period == 365.25);
    CHECK(parse_seasonal("365.25:2").K == 2);
    CHECK(parse_seasonal("7").K == 1);
    CHECK_THROWS_AS(parse_seasonal("7:0"), ValidationError);
    CHECK_THROWS_AS(parse_seasonal("x:1"), ValidationError);
    CHECK_THROWS_AS(parse_seasonal("-3:1"), ValidationError);
}

TEST_CASE("turning point mapping") {
    const auto labels = daily_labels("2022-01-01", 1096);
    const auto tp = map_turning_point(690.378, labels);
    CHECK(tp.rounded == 690);
    CHECK(tp.label == "2023-11-21");
    CHECK(tp.date == "2023-11-21");

    const auto outside = map_turning_point(1200.2, labels);
    CHECK(outside.label.empty());
    CHECK(outside.date == "2025-04-14");

    const auto opaque = map_turning_point(2.0, {"a", "b", "c"});
    CHECK(opaque.label == "b");
    CHECK(opaque.date.empty());
    CHECK(map_turning_point(3.0, {}).label.empty());
}

TEST_CASE("cmd_fit location model gives the sample median") {
    SeriesDataset d = parse_csv("value\n5\n1\n9\n3\n100\n", "mem", "value");
    FitOptions opt;
    opt.degree = 0;
    const auto rep = cmd_fit(d, opt);
    REQUIRE(rep.coefficients.size() == 1);
    CHECK(rep.coefficients[0].estimate == 5.0);
    CHECK(rep.coefficients[0].name == "poly_0");
    CHECK(!rep.turning_point);
    CHECK(rep.assumptions.size() == 3);
    CHECK(rep.fit.converged);
}

TEST_CASE("cmd_fit reproduces the turning point of an exact quadratic") {
    const int T = 1096;
    std::vector<double> y(T);
    for (int t = 1; t <= T; ++t) y[t - 1] = 30227.8 - 4.018 * t + 0.00291 * t * t;
    SeriesDataset d;
    d.source = "mem";
    d.values = y;
    d.labels = daily_labels("2022-01-01", T);
    FitOptions opt;
    opt.tau = 0.95;
    opt.alphas = {0.4, 1.2};
    const auto rep = cmd_fit(d, opt);
    REQUIRE(rep.turning_point);
    CHECK(std::abs(rep.coefficients[1].estimate + 4.018) <= 1e-8);
    CHECK(std::abs(rep.coefficients[2].estimate - 0.00291) <= 1e-10);
    CHECK(rep.turning_point->rounded == 690);
    CHECK(rep.turning_point->date == "2023-11-21");
    for (const auto& ai : rep.assumptions) {
        REQUIRE(ai.turning_point);
        CHECK(ai.turning_point->contains(rep.turning_point->index));
        // alpha 0.4 only applies to j >= 0; 1.2 only to j >= 1
        CHECK(ai.relaxed[0].size() == 1);
        CHECK(ai.relaxed[1].size() == 2);
        CHECK(ai.relaxed[2].size() == 2);
        for (std::size_t j = 0; j < 3; ++j)
            for (const auto& r : ai.relaxed[j]) CHECK(r.contains(ai.standard[j]));
    }
    const auto js = rep.to_json();
    CHECK(js["turning_point"]["rounded"] == 690);
    CHECK(js["turning_point"]["date"] == "2023-11-21");
    CHECK_NOTHROW(require_finite(js));
}

TEST_CASE("cmd_fit recovers a seasonal quadratic at tau = 0.95") {
    const int T = 1096;
    const auto poly = design::polynomial_design(T, 2);
    std::vector<design::Column> seas = design::fourier_columns(T, 7.0, 1);
    const auto yearly = design::fourier_columns(T, 365.25, 2);
    seas.insert(seas.end(), yearly.begin(), yearly.end());
    const auto full = poly.with_columns(design::orthogonalize(seas, poly).usable());
    REQUIRE(full.cols() == 9);
    Eigen::VectorXd truth(9);
    truth << 300.0, -0.4, 0.0003, 5.0, -3.0, 20.0, 10.0, -4.0, 2.0;
    const auto u = noise::sample_centered(noise::NoiseModel(noise::Family::Laplace, 0.0, 2.0), 0.95, T,
                                          {2024, 0, noise::role::kSynthetic});
    const Eigen::VectorXd y = full.matrix() * truth + Eigen::Map<const Eigen::VectorXd>(u.data(), T);

    SeriesDataset d;
    d.source = "synthetic";
    d.values.assign(y.data(), y.data() + T);
    FitOptions opt;
    opt.tau = 0.95;
    opt.seasonal = {{7.0, 1}, {365.25, 2}};
    opt.bootstrap = 200;
    opt.seed = 3;
    const auto rep = cmd_fit(d, opt);
    REQUIRE(rep.bootstrap);
    REQUIRE(rep.coefficients.size() == 9);
    CHECK(rep.excluded_columns.empty());
    CHECK(rep.coefficients[3].name == "sin_7_k1_orth");
    for (int j = 0; j < 9; ++j) {
        CAPTURE(rep.coefficients[static_cast<std::size_t>(j)].name);
        CHECK(rep.bootstrap->intervals[static_cast<std::size_t>(j)].contains(truth(j)));
    }
    CHECK_NOTHROW(require_finite(rep.to_json()));
}

TEST_CASE("cmd_fit reports are byte-identical across runs") {
    std::vector<double> v;
    for (int t = 1; t <= 200; ++t) v.push_back(std::sin(t * 0.3) + 0.01 * t + 0.5 * std::cos(t * 1.7));
    SeriesDataset d;
    d.source = "mem";
    d.values = v;
    FitOptions opt;
    opt.seasonal = {{20.9, 1}};
    opt.bootstrap = 100;
    opt.alphas = {0.3};
    const auto a = cmd_fit(d, opt).to_json().dump(2);
    opt.threads = 2;
    const auto b = cmd_fit(d, opt).to_json().dump(2);
    CHECK(a == b);
    const auto js = nlohmann::json::parse(a);
    CHECK(js["schema_version"] == kSchemaVersion);
    CHECK(js["kind"] == "fit_report");
    CHECK(js["coefficients"].size() == 5);
}

TEST_CASE("cmd_fit validation") {
    SeriesDataset d = parse_csv("value\n1\n2\n3\n4\n", "mem", "value");
    FitOptions opt;
    opt.tau = 1.0;
    CHECK_THROWS_AS(cmd_fit(d, opt), ValidationError);
    opt = {};
    opt.bootstrap = 50;
    CHECK_THROWS_AS(cmd_fit(d, opt), ValidationError);
    opt = {};
    opt.degree = 4;
    CHECK_THROWS_AS(cmd_fit(d, opt), RankError);
}

TEST_CASE("require_finite") {
    CHECK_NOTHROW(require_finite(nlohmann::json{{"a", 1.5}, {"b", {1, 2}}}));
    CHECK_THROWS_AS(require_finite(nlohmann::json{{"a", {1.0, std::nan("")}}}), NumericError);
    CHECK_THROWS_AS(require_finite(nlohmann::json{{"x", INFINITY}}), NumericError);
}

TEST_CASE("cmd_periodogram") {
    std::vector<double> weekly, tones, flat(100, 3.0);
    for (int t = 1; t <= 364; ++t) weekly.push_back(std::sin(2 * std::numbers::pi * t / 7.0));
    for (int t = 1; t <= 1200; ++t)
        tones.push_back(std::sin(2 * std::numbers::pi * t / 12.0) + 0.7 * std::cos(2 * std::numbers::pi * t / 50.0));
    SeriesDataset d;
    d.values = weekly;
    const auto w = cmd_periodogram(d, 3);
    std::istringstream in(w);
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    CHECK(header == "period,power");
    CHECK(first.rfind("7,", 0) == 0);

    d.values = tones;
    std::istringstream in2(cmd_periodogram(d, 2));
    std::string l1, l2;
    std::getline(in2, header);
    std::getline(in2, l1);
    std::getline(in2, l2);
    CHECK(l1.rfind("12,", 0) == 0);
    CHECK(l2.rfind("50,", 0) == 0);

    d.values = flat;
    CHECK(cmd_periodogram(d, 5) == "period,power\n");
}

TEST_CASE("cmd_hilbert and cmd_design output") {
    CHECK(cmd_hilbert(3, HilbertView::Matrix) == "1\t1/2\t1/3\n1/2\t1/3\t1/4\n1/3\t1/4\t1/5\n");
    CHECK(cmd_hilbert(3, HilbertView::Inverse) == "9\t-36\t30\n-36\t192\t-180\n30\t-180\t180\n");
    CHECK(cmd_hilbert(2, HilbertView::LimitCorrelationInverse).rfind("4\t", 0) == 0);
    CHECK_THROWS_AS(cmd_hilbert(14, HilbertView::Inverse), RangeError);

    const auto csv = cmd_design(3, 1, {}, false, {"a", "b", "c"});
    CHECK(csv == "t,label,poly_0,poly_1\n1,a,1,1\n2,b,1,2\n3,c,1,3\n");
    const auto seas = cmd_design(10, 1, {{5.0, 1}}, true);
    CHECK(seas.rfind("t,poly_0,poly_1,sin_5_k1_orth,cos_5_k1_orth\n", 0) == 0);
}

TEST_CASE("config parsing") {
    const auto cfg = KeyValueConfig::parse(
        "# coverage study\n"
        "[experiment]\n"
        "tau = 0.5\n"
        "; short run\n"
        "replications = 20\n"
        "seed = 99\n"
        "[grid]\n"
        "families = laplace, cauchy\n"
        "T = 100, 200\n"
        "alpha = 0.5, 0.3\n"
        "[run]\n"
        "threads = 2\n"
        "csv = out.csv\n",
        "study.ini");
    const auto s = simulate_settings_from(cfg);
    CHECK(s.coverage.replications == 20);
    CHECK(s.coverage.seed == 99);
    CHECK(s.coverage.families.size() == 2);
    CHECK(s.coverage.T_grid == std::vector<std::int64_t>{100, 200});
    CHECK(s.coverage.alpha_grid == std::vector<double>{0.5, 0.3});
    CHECK(s.coverage.threads == 2);
    CHECK(s.csv_path == "out.csv");
    CHECK(s.json_path.empty());

    auto error_of = [](const std::string& text) {
        try {
            simulate_settings_from(KeyValueConfig::parse(text, "c.ini")).coverage.validate();
        } catch (const ValidationError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(error_of("[grid]\nalpha = 0.5, 0.7\n").find("alpha") != std::string::npos);
    CHECK(error_of("[experiment]\nbogus = 1\n").find("c.ini:2") != std::string::npos);
    CHECK(error_of("[nowhere]\nx = 1\n").find("nowhere") != std::string::npos);
    CHECK(error_of("[experiment]\ntau = 0.5\ntau = 0.6\n").find("c.ini:3") != std::string::npos);
    CHECK(error_of("[experiment]\nreplications = many\n").find("replications") != std::string::npos);
    CHECK(error_of("[experiment\n").find("c.ini:1") != std::string::npos);
    CHECK(error_of("no equals sign\n").find("c.ini:1") != std::string::npos);
}

TEST_CASE("cmd_simulate writes the default grid") {
    mc::CoverageConfig cfg;
    cfg.replications = 3;
    const auto csv = scratch_dir() / "sim.csv";
    const auto json = scratch_dir() / "sim.json";
    const auto rep = cmd_simulate(cfg, csv.string(), json.string());
    const auto text = read_text(csv);
    int lines = 0;
    for (char c : text) lines += c == '\n';
    CHECK(lines == 1 + 48);
    CHECK(rep.cells.size() == 48);
    CHECK(text == rep.to_csv());
    CHECK(nlohmann::json::parse(read_text(json))["cells"].size() == 48);

    cmd_simulate(cfg, (scratch_dir() / "sim2.csv").string(), "");
    CHECK(read_text(scratch_dir() / "sim2.csv") == text);
}

TEST_CASE("command-line exit codes") {
    const auto data = write_text("series.csv", series_csv({3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8, 9, 7}));
    const auto out = scratch_dir() / "fit.json";
    CHECK(run_cli("fit --input " + data.string() + " --column value --degree 1 --output " + out.string()) == 0);
    const auto js = nlohmann::json::parse(read_text(out));
    CHECK(js["kind"] == "fit_report");

    CHECK(run_cli("fit --input " + data.string() + " --column nope") == 2);
    CHECK(run_cli("fit --input " + data.string() + " --column value --tau 1.5") == 2);
    CHECK(run_cli("fit --input " + (scratch_dir() / "absent.csv").string() + " --column value") == 2);
    CHECK(run_cli("fit --bogus-flag") == 2);
    CHECK(run_cli("hilbert --size 3 --inverse") == 0);
    CHECK(run_cli("hilbert --size 20 --inverse") == 2);
    CHECK(run_cli("design --T 5 --degree 2") == 0);

    const auto flat = write_text("flat.csv", series_csv(std::vector<double>(50, 1.0)));
    CHECK(run_cli("periodogram --input " + flat.string() + " --column value") == 0);

    const auto bad_cfg = write_text("bad.ini", "[grid]\nalpha = 0.9\n");
    CHECK(run_cli("simulate --config " + bad_cfg.string()) == 2);

    const auto cfg = write_text("ok.ini", "[experiment]\nreplications = 4\nseed = 8\n[grid]\nT = 60\nfamilies = gaussian\n");
    const auto sim = scratch_dir() / "cli_sim.csv";
    CHECK(run_cli("simulate --config " + cfg.string() + " --csv " + sim.string() + " --threads 2") == 0);
    const auto sim_text = read_text(sim);
    CHECK(sim_text.rfind("family,T,alpha,coverage,hits,R,seed\ngaussian,60,0.5,", 0) == 0);
    // flags override the file
    CHECK(run_cli("simulate --config " + cfg.string() + " --csv " + sim.string() + " --seed 9") == 0);
    CHECK(read_text(sim).find(",9\n") != std::string::npos);
}
