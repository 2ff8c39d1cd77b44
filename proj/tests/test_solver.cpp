#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "qrtrend/design.hpp"
#include "qrtrend/error.hpp"
#include "qrtrend/noise.hpp"
#include "qrtrend/solver.hpp"

using namespace qrtrend;
using namespace qrtrend::solver;

namespace {

// Lowest order statistic whose cumulative mass k/n reaches tau.
double left_continuous_quantile(std::vector<double> v, double tau) {
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    for (std::size_t k = 1; k <= v.size(); ++k)
        if (static_cast<double>(k) >= tau * n - 1e-9) return v[k - 1];
    return v.back();
}

Eigen::VectorXd draw(std::mt19937_64& rng, noise::Family fam, double tau, std::size_t n) {
    const auto u = noise::sample_centered(noise::NoiseModel(fam), tau, n, {rng(), 0, 9});
    return Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Eigen::Index>(n));
}

}  // namespace

TEST_CASE("check_loss values") {
    for (double tau : {0.05, 0.5, 0.95}) CHECK(check_loss(0.0, tau) == 0.0);
    CHECK(check_loss(1.0, 0.5) == 0.5);
    CHECK(check_loss(-1.0, 0.5) == 0.5);
    CHECK(check_loss(-2.0, 0.95) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_THROWS_AS(check_loss(1.0, 0.0), DomainError);
    CHECK_THROWS_AS(check_loss(1.0, 1.0), DomainError);
    CHECK_THROWS_AS(check_loss(1.0, -0.2), DomainError);
}

TEST_CASE("psi values") {
    CHECK(psi(3.0, 0.5) == 0.5);
    CHECK(psi(-3.0, 0.5) == -0.5);
    CHECK(psi(-1.0, 0.05) == doctest::Approx(-0.95));
    CHECK(psi(0.0, 0.3) == 0.3);
    CHECK_THROWS_AS(psi(1.0, 1.5), DomainError);
}

TEST_CASE("check loss: symmetry sum and convexity") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-50.0, 50.0), t(0.001, 0.999), l(0.0, 1.0);
    for (int i = 0; i < 5000; ++i) {
        const double a = u(rng), b = u(rng), tau = t(rng), lam = l(rng);
        CHECK(std::abs(check_loss(a, tau) + check_loss(-a, tau) - std::abs(a)) <= 1e-12);
        const double mix = check_loss(lam * a + (1 - lam) * b, tau);
        CHECK(mix <= lam * check_loss(a, tau) + (1 - lam) * check_loss(b, tau) + 1e-12);
        CHECK(check_loss(a, tau) >= 0.0);
    }
}

TEST_CASE("knight identity") {
    const auto z = knight_terms(1.0, 0.0, 0.3);
    CHECK(z.lhs == 0.0);
    CHECK(z.rhs == 0.0);

    const auto h = knight_terms(0.5, 1.0, 0.5);
    CHECK(h.lhs == 0.0);
    CHECK(h.rhs == 0.0);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0), t(0.01, 0.99);
    for (int i = 0; i < 10000; ++i) {
        const double a = u(rng), b = u(rng), tau = t(rng);
        const auto k = knight_terms(a, b, tau);
        CHECK(std::abs(k.lhs - k.rhs) <= 1e-12);
    }
    // boundary cases of the case analysis
    for (double a : {-1.0, 0.0, 1.0})
        for (double b : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
            const auto k = knight_terms(a, b, 0.25);
            CHECK(std::abs(k.lhs - k.rhs) <= 1e-15);
        }
}

TEST_CASE("fit_quantile location model is the empirical quantile") {
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(3, 1);
    const auto fit = fit_quantile(ones, Eigen::Vector3d(1, 2, 100), 0.5);
    CHECK(fit.converged);
    CHECK(fit.beta_hat(0) == 2.0);
    CHECK(fit.objective == doctest::Approx(0.5 * (1 + 98)));

    std::mt19937_64 rng(2024);
    const Eigen::VectorXd y = draw(rng, noise::Family::Gaussian, 0.05, 1000);
    const auto q = fit_quantile(Eigen::MatrixXd::Ones(1000, 1), y, 0.05);
    CHECK(q.converged);
    const std::vector<double> v(y.data(), y.data() + y.size());
    CHECK(q.beta_hat(0) == doctest::Approx(left_continuous_quantile(v, 0.05)).epsilon(1e-12));
}

TEST_CASE("fit_quantile picks the left-continuous quantile on flat optima") {
    std::mt19937_64 rng(77);
    for (int n : {4, 10, 20, 100}) {
        for (double tau : {0.05, 0.25, 0.5, 0.75}) {
            const Eigen::VectorXd y = draw(rng, noise::Family::Laplace, tau, static_cast<std::size_t>(n));
            const auto fit = fit_quantile(Eigen::MatrixXd::Ones(n, 1), y, tau);
            const std::vector<double> v(y.data(), y.data() + y.size());
            CAPTURE(n);
            CAPTURE(tau);
            CHECK(fit.beta_hat(0) == left_continuous_quantile(v, tau));
        }
    }
}

TEST_CASE("brute_force_fit examples") {
    const auto b = brute_force_fit(Eigen::MatrixXd::Ones(3, 1), Eigen::Vector3d(1, 2, 100), 0.5);
    CHECK(b.beta_hat(0) == 2.0);

    // duplicated rows
    Eigen::MatrixXd X(5, 2);
    X << 1, 1, 1, 1, 1, 2, 1, 3, 1, 3;
    Eigen::VectorXd y(5);
    y << 0.5, 0.5, 2.0, 1.0, 1.0;
    const auto dup = brute_force_fit(X, y, 0.5);
    const auto fq = fit_quantile(X, y, 0.5);
    CHECK(std::abs(dup.objective - fq.objective) <= 1e-12);
    CHECK(fq.converged);

    CHECK_THROWS_AS(brute_force_fit(Eigen::MatrixXd::Ones(41, 1), Eigen::VectorXd::Zero(41), 0.5), RangeError);
    CHECK_THROWS_AS(brute_force_fit(Eigen::MatrixXd::Zero(4, 1), Eigen::VectorXd::Zero(4), 0.5), RankError);
}

TEST_CASE("fit_quantile agrees with vertex enumeration") {
    std::mt19937_64 rng(99);
    const noise::Family fams[] = {noise::Family::Laplace, noise::Family::Gaussian, noise::Family::Cauchy};
    {
        const auto X = design::polynomial_design(25, 2).matrix();
        const Eigen::VectorXd y = X * Eigen::Vector3d(1.0, -0.3, 0.02) + draw(rng, noise::Family::Laplace, 0.75, 25);
        const auto fast = fit_quantile(X, y, 0.75);
        const auto slow = brute_force_fit(X, y, 0.75);
        CHECK(fast.converged);
        CHECK(std::abs(fast.objective - slow.objective) <= 1e-8);
    }
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 5 + static_cast<int>(rng() % 26);
        const int p = static_cast<int>(rng() % 3);
        const double tau = std::array{0.05, 0.5, 0.75, 0.95}[rng() % 4];
        const auto X = design::polynomial_design(n, p).matrix();
        const Eigen::VectorXd y = draw(rng, fams[trial % 3], tau, static_cast<std::size_t>(n));
        const auto fast = fit_quantile(X, y, tau);
        const auto slow = brute_force_fit(X, y, tau);
        CAPTURE(trial);
        CHECK(fast.converged);
        CHECK(std::abs(fast.objective - slow.objective) <= 1e-8);
        CHECK(slow.objective <= fast.objective + 1e-10);
    }
}

TEST_CASE("fit_quantile objective and residual bookkeeping") {
    std::mt19937_64 rng(3);
    const auto X = design::polynomial_design(200, 2).matrix();
    const Eigen::VectorXd y = X * Eigen::Vector3d(5, 0.1, -0.001) + draw(rng, noise::Family::Cauchy, 0.3, 200);
    const auto fit = fit_quantile(X, y, 0.3);
    CHECK(fit.converged);
    CHECK(fit.duality_gap <= 1e-8 * (1 + fit.objective));
    CHECK((fit.residuals - (y - X * fit.beta_hat)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(fit.objective == objective(fit.residuals, 0.3));
    CHECK(fit.basis.size() == 3);
    for (int i : fit.basis) CHECK(std::abs(fit.residuals(i)) <= 1e-9);
}

TEST_CASE("fit_quantile equivariance and subgradient optimality") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 30 + static_cast<int>(rng() % 200);
        const int p = 1 + static_cast<int>(rng() % 2);
        const double tau = 0.1 + 0.8 * static_cast<double>(rng() % 1000) / 1000.0;
        const auto X = design::polynomial_design(n, p).matrix();
        const Eigen::VectorXd y = draw(rng, noise::Family::Laplace, tau, static_cast<std::size_t>(n));
        const auto base = fit_quantile(X, y, tau);
        REQUIRE(base.converged);
        CAPTURE(trial);

        Eigen::VectorXd gamma(p + 1);
        for (int j = 0; j <= p; ++j) gamma(j) = g(rng) / std::pow(n, j);
        const auto shifted = fit_quantile(X, y + X * gamma, tau);
        CHECK((shifted.beta_hat - (base.beta_hat + gamma)).cwiseAbs().maxCoeff() <= 1e-6);

        const double c = 0.1 + 10.0 * static_cast<double>(rng() % 100) / 100.0;
        const auto scaled = fit_quantile(X, c * y, tau);
        CHECK((scaled.beta_hat - c * base.beta_hat).cwiseAbs().maxCoeff() <= 1e-6 * (1 + c * base.beta_hat.norm()));

        const auto mirrored = fit_quantile(X, -y, 1.0 - tau);
        if (std::abs(tau * n - std::round(tau * n)) > 1e-9)  // unique optimum
            CHECK((mirrored.beta_hat + base.beta_hat).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK(std::abs(mirrored.objective - base.objective) <= 1e-8 * (1 + base.objective));

        for (int j = 0; j <= p; ++j) {
            double sum = 0.0, slack = 0.0;
            for (int i = 0; i < n; ++i) {
                const bool zero = std::find(base.basis.begin(), base.basis.end(), i) != base.basis.end();
                if (zero) slack += std::abs(X(i, j));
                else sum += X(i, j) * psi(base.residuals(i), tau);
            }
            CHECK(std::abs(sum) <= slack + 1e-6 * (1 + slack));
        }
    }
}

TEST_CASE("fit_quantile exact data and errors") {
    const auto X = design::polynomial_design(40, 2).matrix();
    const Eigen::Vector3d beta(2.0, -1.0, 0.25);
    const auto fit = fit_quantile(X, X * beta, 0.9);
    CHECK(fit.converged);
    CHECK((fit.beta_hat - beta).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(fit.objective <= 1e-10);

    Eigen::MatrixXd rank_def(6, 2);
    rank_def.col(0).setOnes();
    rank_def.col(1).setConstant(3.0);
    CHECK_THROWS_AS(fit_quantile(rank_def, Eigen::VectorXd::Zero(6), 0.5), RankError);
    CHECK_THROWS_AS(fit_quantile(X, Eigen::VectorXd::Zero(39), 0.5), DomainError);
    CHECK_THROWS_AS(fit_quantile(X, Eigen::VectorXd::Zero(40), 1.0), DomainError);

    // square system interpolates
    const auto sq = fit_quantile(design::polynomial_design(3, 2).matrix(), Eigen::Vector3d(1, 4, 9), 0.5);
    CHECK(sq.objective <= 1e-12);
}

TEST_CASE("fit_quantile with DesignMatrix and Fourier columns") {
    std::mt19937_64 rng(4);
    const auto poly = design::polynomial_design(400, 2);
    const auto f = design::orthogonalize(design::fourier_columns(400, 7.0, 1), poly);
    const auto full = poly.with_columns(f.usable());
    Eigen::VectorXd truth(5);
    truth << 10, 0.05, -0.0001, 2.0, -1.0;
    const Eigen::VectorXd y = full.matrix() * truth + draw(rng, noise::Family::Gaussian, 0.5, 400) * 0.1;
    const auto fit = fit_quantile(full, y, 0.5);
    CHECK(fit.converged);
    CHECK(std::abs(fit.beta_hat(3) - 2.0) < 0.05);
    CHECK(std::abs(fit.beta_hat(4) + 1.0) < 0.05);
}
