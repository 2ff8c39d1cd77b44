#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qrtrend/design.hpp"

namespace qrtrend::solver {

/// rho_tau(u) = u (tau - 1{u < 0}). Throws DomainError unless 0 < tau < 1.
double check_loss(double u, double tau);

/// psi_tau(u) = tau - 1{u < 0}.
double psi(double u, double tau);

/// Sum of check losses over a residual vector.
double objective(const Eigen::VectorXd& residuals, double tau);

/// Both sides of Knight's identity
///   rho(u - v) - rho(u) = -v psi(u) + int_0^v (1{u <= s} - 1{u <= 0}) ds,
/// with the integral in closed form.
struct KnightTerms {
    double lhs = 0.0;
    double rhs = 0.0;
};
KnightTerms knight_terms(double u, double v, double tau);

struct SolverOptions {
    double tolerance = 1e-8;   // relative duality gap
    int max_iterations = 200;  // interior-point iterations
    int max_pivots = 0;        // vertex pivots after crossover; 0 = 10 * rows + 100
    double step_fraction = 0.99995;
};

struct QuantileFit {
    double tau = 0.5;
    Eigen::VectorXd beta_hat;
    Eigen::VectorXd residuals;
    double objective = 0.0;
    int iterations = 0;  // interior-point iterations
    int pivots = 0;      // vertex pivots after crossover
    bool converged = false;
    double duality_gap = 0.0;
    std::vector<int> basis;  // rows interpolated exactly at the returned vertex
};

/// Minimizes sum_i rho_tau(y_i - x_i' beta).
///
/// Columns are rescaled to unit norm and reparametrized through a thin QR
/// factorization, then a Frisch-Newton primal-dual interior-point method
/// solves the LP. Its solution seeds a basic (vertex) solution that is driven
/// to optimality by exterior-point pivots, so the returned beta interpolates
/// cols(X) observations and the duality gap is certified at that vertex.
/// Among optimal vertices reachable along flat edges, the one with the
/// smallest first coefficient is returned (for an intercept-only design this
/// is the left-continuous empirical quantile).
///
/// Throws DomainError for tau outside (0,1) or mismatched sizes, RankError for
/// a rank-deficient design. Non-convergence is reported via `converged`.
QuantileFit fit_quantile(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau,
                         const SolverOptions& options = {});
QuantileFit fit_quantile(const design::DesignMatrix& X, const Eigen::VectorXd& y, double tau,
                         const SolverOptions& options = {});

/// Exhaustive vertex enumeration: every cols(X)-row subset with an invertible
/// submatrix is interpolated and the best check-loss objective kept.
/// Requires rows <= 40 and cols <= 3.
QuantileFit brute_force_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau);

}  // namespace qrtrend::solver
