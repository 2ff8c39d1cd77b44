#include "qrtrend/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "qrtrend/error.hpp"

namespace qrtrend::solver {

namespace {

void check_tau(double tau) {
    if (!(tau > 0.0 && tau < 1.0))
        throw DomainError("quantile level tau = " + std::to_string(tau) + " outside (0, 1)");
}

// Directional derivative of rho_tau at 0 along x.
double kink_slope(double x, double tau) { return x >= 0.0 ? tau * x : (tau - 1.0) * x; }

struct InteriorPointResult {
    Eigen::VectorXd coef;
    int iterations = 0;
    double gap = 0.0;
    bool converged = false;
};

// Frisch-Newton primal-dual interior point with Mehrotra-style correction for
//   min c'x  s.t.  A x = b,  0 <= x <= 1
// where A = W' (p x n), c = -y, b = (1 - tau) W' 1. The dual vector is -coef.
InteriorPointResult frisch_newton(const Eigen::MatrixXd& W, const Eigen::VectorXd& y, double tau,
                                  const SolverOptions& opt) {
    const Eigen::Index n = W.rows();
    const double dn = static_cast<double>(n);
    constexpr double kBig = 1e20;
    const double eps = opt.tolerance;
    const double beta = opt.step_fraction;

    const Eigen::VectorXd c = -y;
    const Eigen::VectorXd b = (1.0 - tau) * W.transpose() * Eigen::VectorXd::Ones(n);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 - tau);
    Eigen::VectorXd d = Eigen::VectorXd::Ones(n);

    InteriorPointResult out;

    Eigen::LLT<Eigen::MatrixXd> chol(W.transpose() * W);
    Eigen::VectorXd dual = chol.solve(W.transpose() * c);
    Eigen::VectorXd s = c - W * dual;

    Eigen::VectorXd z(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double bump = std::abs(s(i)) < eps ? eps : 0.0;
        z(i) = std::max(s(i), 0.0) + bump;
        w(i) = std::max(-s(i), 0.0) + bump;
        s(i) = 1.0 - x(i);
    }
    double gap = z.dot(x) + w.dot(s);

    Eigen::VectorXd dx(n), ds(n), dz(n), dw(n), dr(n), u(n);
    Eigen::VectorXd dy, rhs;

    auto ratio_tests = [&](double& deltap, double& deltad) {
        deltap = kBig;
        deltad = kBig;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (dx(i) < 0) deltap = std::min(deltap, -x(i) / dx(i));
            if (ds(i) < 0) deltap = std::min(deltap, -s(i) / ds(i));
            if (dz(i) < 0) deltad = std::min(deltad, -z(i) / dz(i));
            if (dw(i) < 0) deltad = std::min(deltad, -w(i) / dw(i));
        }
        deltap = std::min(beta * deltap, 1.0);
        deltad = std::min(beta * deltad, 1.0);
    };

    auto scale = [&] { return 1.0 + std::abs(c.dot(x)); };

    while (gap > eps * scale() && out.iterations < opt.max_iterations) {
        ++out.iterations;
        for (Eigen::Index i = 0; i < n; ++i) {
            d(i) = 1.0 / (z(i) / x(i) + w(i) / s(i));
            ds(i) = z(i) - w(i);
            dz(i) = d(i) * ds(i);
        }
        dy = b - W.transpose() * x + W.transpose() * dz;
        rhs = dy;

        const Eigen::MatrixXd ada = W.transpose() * d.asDiagonal() * W;
        chol.compute(ada);
        if (chol.info() != Eigen::Success) break;
        dy = chol.solve(dy);

        ds = W * dy - ds;
        for (Eigen::Index i = 0; i < n; ++i) {
            dx(i) = d(i) * ds(i);
            ds(i) = -dx(i);
            dz(i) = -z(i) * (dx(i) / x(i) + 1.0);
            dw(i) = -w(i) * (ds(i) / s(i) + 1.0);
        }
        double deltap, deltad;
        ratio_tests(deltap, deltad);

        if (std::min(deltap, deltad) < 1.0) {
            double mu = z.dot(x) + w.dot(s);
            const double g = mu + deltap * dx.dot(z) + deltad * dz.dot(x) +
                             deltap * deltad * dx.dot(dz) + deltap * ds.dot(w) +
                             deltad * dw.dot(s) + deltap * deltad * ds.dot(dw);
            mu = mu * std::pow(g / mu, 3) / (2.0 * dn);
            for (Eigen::Index i = 0; i < n; ++i)
                dr(i) = d(i) * (mu * (1.0 / s(i) - 1.0 / x(i)) + dx(i) * dz(i) / x(i) -
                                ds(i) * dw(i) / s(i));
            dy = rhs + W.transpose() * dr;
            dy = chol.solve(dy);
            u = W * dy;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double dxdz = dx(i) * dz(i);
                const double dsdw = ds(i) * dw(i);
                dx(i) = d(i) * (u(i) - z(i) + w(i)) - dr(i);
                ds(i) = -dx(i);
                dz(i) = -z(i) + (mu - z(i) * dx(i) - dxdz) / x(i);
                dw(i) = -w(i) + (mu - w(i) * ds(i) - dsdw) / s(i);
            }
            ratio_tests(deltap, deltad);
        }
        x += deltap * dx;
        s += deltap * ds;
        dual += deltad * dy;
        z += deltad * dz;
        w += deltad * dw;
        gap = z.dot(x) + w.dot(s);
    }
    out.coef = -dual;
    out.gap = gap;
    out.converged = gap <= eps * scale();
    return out;
}

// Picks cols(W) linearly independent rows, preferring small |residual|.
std::vector<int> initial_basis(const Eigen::MatrixXd& W, const Eigen::VectorXd& resid) {
    const auto n = static_cast<int>(W.rows());
    const auto p = static_cast<int>(W.cols());
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(resid(a)) < std::abs(resid(b));
    });
    std::vector<int> basis;
    Eigen::MatrixXd q(p, p);
    int rank = 0;
    for (int i : order) {
        Eigen::VectorXd v = W.row(i).transpose();
        const double norm = v.norm();
        if (norm == 0.0) continue;
        for (int pass = 0; pass < 2; ++pass)
            for (int k = 0; k < rank; ++k) v -= q.col(k).dot(v) * q.col(k);
        if (v.norm() <= 1e-8 * norm) continue;
        q.col(rank++) = v.normalized();
        basis.push_back(i);
        if (rank == p) break;
    }
    if (rank < p) throw RankError("design has no set of linearly independent rows");
    return basis;
}

struct VertexResult {
    Eigen::VectorXd gamma;
    std::vector<int> basis;
    int pivots = 0;
    bool optimal = false;
    double infeasibility = 0.0;  // dual box violation at the final basis
    Eigen::VectorXd dual;        // length n, satisfies W' dual = 0
};

// Exterior-point descent over vertices: at each basis, the 2p edge directions
// keep all but one basic residual at zero; the steepest descending edge is
// followed to the minimizing breakpoint (a weighted median), whose row enters.
// `first_coef` maps a gamma-direction to the change in the first original
// coefficient and drives the tie-break along flat edges.
VertexResult vertex_descent(const Eigen::MatrixXd& W, const Eigen::VectorXd& y, double tau,
                            std::vector<int> basis, const Eigen::RowVectorXd& first_coef,
                            int max_pivots) {
    const auto n = static_cast<int>(W.rows());
    const auto p = static_cast<int>(W.cols());
    constexpr double kSlopeTol = 1e-10;

    VertexResult out;
    std::vector<char> is_basic(static_cast<std::size_t>(n), 0);
    Eigen::MatrixXd B(p, p);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    Eigen::VectorXd gamma, r;
    std::vector<int> zero_rows;
    Eigen::VectorXd g(p);

    struct Breakpoint {
        double step;
        double weight;
        int row;
    };
    std::vector<Breakpoint> breaks;

    for (;;) {
        std::fill(is_basic.begin(), is_basic.end(), 0);
        for (int k = 0; k < p; ++k) {
            B.row(k) = W.row(basis[k]);
            is_basic[static_cast<std::size_t>(basis[k])] = 1;
        }
        lu.compute(B);
        Eigen::VectorXd yb(p);
        for (int k = 0; k < p; ++k) yb(k) = y(basis[k]);
        gamma = lu.solve(yb);
        r = y - W * gamma;
        for (int k = 0; k < p; ++k) r(basis[k]) = 0.0;

        const double ztol = 1e-12 * (1.0 + gamma.cwiseAbs().maxCoeff());
        zero_rows.clear();
        g.setZero();
        for (int i = 0; i < n; ++i) {
            if (is_basic[static_cast<std::size_t>(i)]) continue;
            if (std::abs(r(i)) <= ztol) {
                zero_rows.push_back(i);
                continue;
            }
            g += psi(r(i), tau) * W.row(i).transpose();
        }
        const Eigen::MatrixXd binv_t = lu.inverse().transpose();
        const Eigen::VectorXd v = binv_t * g;
        Eigen::MatrixXd cz(p, static_cast<Eigen::Index>(zero_rows.size()));
        for (std::size_t a = 0; a < zero_rows.size(); ++a)
            cz.col(static_cast<Eigen::Index>(a)) = binv_t * W.row(zero_rows[a]).transpose();

        auto edge_slope = [&](int k, double sigma) {
            double slope = -sigma * v(k) + (sigma > 0 ? 1.0 - tau : tau);
            for (Eigen::Index a = 0; a < cz.cols(); ++a) slope += kink_slope(-sigma * cz(k, a), tau);
            return slope;
        };

        const bool can_pivot = out.pivots < max_pivots;
        int best_k = -1;
        double best_sigma = 0.0, best_slope = -kSlopeTol;
        bool flat_move = false;
        for (int k = 0; k < p && can_pivot; ++k) {
            for (double sigma : {1.0, -1.0}) {
                const double slope = edge_slope(k, sigma);
                if (slope < best_slope) {
                    best_slope = slope;
                    best_k = k;
                    best_sigma = sigma;
                }
            }
        }
        if (best_k < 0 && can_pivot) {
            // optimal; look for a flat edge that lowers the first coefficient
            const Eigen::MatrixXd binv = lu.inverse();
            for (int k = 0; k < p && best_k < 0; ++k) {
                for (double sigma : {1.0, -1.0}) {
                    if (std::abs(edge_slope(k, sigma)) > kSlopeTol) continue;
                    const Eigen::VectorXd dir = sigma * binv.col(k);
                    const double change = first_coef.dot(dir);
                    if (change < -1e-12 * first_coef.norm() * dir.norm()) {
                        best_k = k;
                        best_sigma = sigma;
                        best_slope = edge_slope(k, sigma);
                        flat_move = true;
                        break;
                    }
                }
            }
        }

        if (best_k < 0) {
            out.optimal = can_pivot || [&] {
                for (int k = 0; k < p; ++k)
                    for (double sigma : {1.0, -1.0})
                        if (edge_slope(k, sigma) < -kSlopeTol) return false;
                return true;
            }();

            // Dual certificate: nonbasic nonzero rows take psi, basic rows take
            // lambda = -B^-T (sum over the rest); zero nonbasic rows are chosen in
            // the box to make lambda feasible (projected coordinate descent).
            std::vector<double> dz(zero_rows.size(), 0.0);
            auto lambda_of = [&] {
                Eigen::VectorXd lam = -v;
                for (std::size_t a = 0; a < zero_rows.size(); ++a)
                    lam -= dz[a] * cz.col(static_cast<Eigen::Index>(a));
                return lam;
            };
            auto violation = [&](const Eigen::VectorXd& lam) {
                Eigen::VectorXd viol(p);
                for (int k = 0; k < p; ++k)
                    viol(k) = std::max({0.0, lam(k) - tau, tau - 1.0 - lam(k)}) *
                              (lam(k) > tau ? 1.0 : -1.0);
                return viol;
            };
            Eigen::VectorXd lam = lambda_of();
            for (int sweep = 0; sweep < 1000 && !zero_rows.empty(); ++sweep) {
                if (violation(lam).norm() == 0.0) break;
                for (std::size_t a = 0; a < zero_rows.size(); ++a) {
                    const Eigen::VectorXd col = cz.col(static_cast<Eigen::Index>(a));
                    const double cc = col.squaredNorm();
                    if (cc == 0.0) continue;
                    // lam depends on dz[a] as -dz[a] * col; gradient step on the squared violation
                    const Eigen::VectorXd viol = violation(lam);
                    const double step = viol.dot(col) / cc;
                    const double next = std::clamp(dz[a] + step, tau - 1.0, tau);
                    lam -= (next - dz[a]) * col;
                    dz[a] = next;
                }
            }
            out.infeasibility = violation(lam).lpNorm<1>();
            out.dual = Eigen::VectorXd::Zero(n);
            for (int i = 0; i < n; ++i)
                if (!is_basic[static_cast<std::size_t>(i)]) out.dual(i) = psi(r(i), tau);
            for (std::size_t a = 0; a < zero_rows.size(); ++a) out.dual(zero_rows[a]) = dz[a];
            for (int k = 0; k < p; ++k) out.dual(basis[k]) = lam(k);
            break;
        }

        // line search along the chosen edge
        const Eigen::VectorXd dir = best_sigma * lu.solve(Eigen::VectorXd::Unit(p, best_k));
        const Eigen::VectorXd a = W * dir;
        breaks.clear();
        for (int i = 0; i < n; ++i) {
            if (is_basic[static_cast<std::size_t>(i)] || std::abs(r(i)) <= ztol) continue;
            if (a(i) == 0.0) continue;
            const double step = r(i) / a(i);
            if (step > 0.0) breaks.push_back({step, std::abs(a(i)), i});
        }
        std::sort(breaks.begin(), breaks.end(),
                  [](const Breakpoint& l, const Breakpoint& rr) { return l.step < rr.step; });
        double slope = best_slope;
        int entering = -1;
        for (const auto& bp : breaks) {
            slope += bp.weight;
            if (flat_move || slope > -kSlopeTol) {
                entering = bp.row;
                break;
            }
        }
        if (entering < 0) {
            if (flat_move) {
                // the flat edge is unbounded in this direction; stop tie-breaking here
                out.optimal = true;
                out.gamma = gamma;
                out.basis = basis;
                return out;
            }
            throw NumericError("check-loss objective unbounded along an edge (rank-deficient design?)");
        }
        basis[static_cast<std::size_t>(best_k)] = entering;
        ++out.pivots;
    }
    out.gamma = gamma;
    out.basis = basis;
    return out;
}

}  // namespace

double check_loss(double u, double tau) {
    check_tau(tau);
    return u >= 0.0 ? tau * u : (tau - 1.0) * u;
}

double psi(double u, double tau) {
    check_tau(tau);
    return u >= 0.0 ? tau : tau - 1.0;
}

double objective(const Eigen::VectorXd& residuals, double tau) {
    check_tau(tau);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < residuals.size(); ++i) sum += check_loss(residuals(i), tau);
    return sum;
}

KnightTerms knight_terms(double u, double v, double tau) {
    KnightTerms out;
    out.lhs = check_loss(u - v, tau) - check_loss(u, tau);
    // int_0^v (1{u < s} - 1{u < 0}) ds; equal to the non-strict form for u != 0,
    // and the variant that matches psi(0) = tau at u = 0
    double integral = 0.0;
    if (v >= 0.0) {
        if (u >= 0.0) integral = std::max(0.0, v - u);
    } else {
        if (u < 0.0) integral = std::max(0.0, u - v);
    }
    out.rhs = -v * psi(u, tau) + integral;
    return out;
}

QuantileFit fit_quantile(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau,
                         const SolverOptions& options) {
    check_tau(tau);
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    if (y.size() != n)
        throw DomainError("design has " + std::to_string(n) + " rows but response has " +
                          std::to_string(y.size()) + " values");
    if (p < 1) throw DomainError("design has no columns");
    if (n < p) throw RankError("fewer observations than regressors");
    if (!X.allFinite() || !y.allFinite()) throw DomainError("non-finite value in design or response");

    // unit-norm columns, then a thin QR reparametrization: X S^-1 Perm = Q R
    Eigen::VectorXd col_scale(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        col_scale(j) = X.col(j).norm();
        if (col_scale(j) == 0.0) throw RankError("design column " + std::to_string(j) + " is zero");
    }
    const Eigen::MatrixXd xs = X * col_scale.cwiseInverse().asDiagonal();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) throw RankError("design matrix is rank deficient");
    const Eigen::MatrixXd W = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
    const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    const auto& perm = qr.colsPermutation();

    // gamma -> beta: beta = S^-1 Perm R^-1 gamma
    auto to_beta = [&](const Eigen::VectorXd& gamma) {
        Eigen::VectorXd tmp = R.triangularView<Eigen::Upper>().solve(gamma);
        Eigen::VectorXd beta = perm * tmp;
        return Eigen::VectorXd(beta.cwiseQuotient(col_scale));
    };
    const Eigen::MatrixXd gamma_to_beta = [&] {
        Eigen::MatrixXd m(p, p);
        for (Eigen::Index k = 0; k < p; ++k) m.col(k) = to_beta(Eigen::VectorXd::Unit(p, k));
        return m;
    }();

    const double y_scale = std::max(y.cwiseAbs().maxCoeff(), 1e-300);
    const Eigen::VectorXd ys = y / y_scale;

    QuantileFit fit;
    fit.tau = tau;

    InteriorPointResult ip;
    if (n > p) {
        ip = frisch_newton(W, ys, tau, options);
    } else {
        ip.coef = W.transpose() * ys;
        ip.converged = true;
    }
    fit.iterations = ip.iterations;

    const Eigen::VectorXd ip_resid = ys - W * ip.coef;
    const int max_pivots =
        options.max_pivots > 0 ? options.max_pivots : static_cast<int>(10 * n + 100);
    VertexResult vertex = vertex_descent(W, ys, tau, initial_basis(W, ip_resid),
                                         gamma_to_beta.row(0), max_pivots);
    fit.pivots = vertex.pivots;
    fit.basis = vertex.basis;
    std::sort(fit.basis.begin(), fit.basis.end());

    fit.beta_hat = y_scale * to_beta(vertex.gamma);
    fit.residuals = y - X * fit.beta_hat;
    fit.objective = objective(fit.residuals, tau);

    // re-solve the vertex on the original rows to drop rounding from the rescaling
    if (static_cast<Eigen::Index>(fit.basis.size()) == p) {
        Eigen::MatrixXd xb(p, p);
        Eigen::VectorXd yb(p);
        for (Eigen::Index k = 0; k < p; ++k) {
            xb.row(k) = X.row(fit.basis[static_cast<std::size_t>(k)]);
            yb(k) = y(fit.basis[static_cast<std::size_t>(k)]);
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(xb);
        if (lu.isInvertible()) {
            Eigen::VectorXd beta = lu.solve(yb);
            Eigen::VectorXd resid = y - X * beta;
            const double obj = objective(resid, tau);
            if (beta.allFinite() && obj <= fit.objective * (1.0 + 1e-12) + 1e-300) {
                fit.beta_hat = std::move(beta);
                fit.residuals = std::move(resid);
                fit.objective = obj;
            }
        }
    }

    const double dual_objective = y.dot(vertex.dual);
    fit.duality_gap = std::abs(fit.objective - dual_objective) + y_scale * vertex.infeasibility;
    fit.converged = vertex.optimal &&
                    fit.duality_gap <= options.tolerance * (1.0 + std::abs(fit.objective));
    return fit;
}

QuantileFit fit_quantile(const design::DesignMatrix& X, const Eigen::VectorXd& y, double tau,
                         const SolverOptions& options) {
    return fit_quantile(X.matrix(), y, tau, options);
}

QuantileFit brute_force_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau) {
    check_tau(tau);
    const auto n = static_cast<int>(X.rows());
    const auto p = static_cast<int>(X.cols());
    if (y.size() != n) throw DomainError("design and response sizes differ");
    if (n > 40 || p > 3 || p < 1)
        throw RangeError("brute_force_fit supports at most 40 rows and 1..3 columns");
    if (n < p) throw RankError("fewer observations than regressors");

    QuantileFit best;
    best.tau = tau;
    bool found = false;
    std::vector<int> idx(static_cast<std::size_t>(p));
    std::iota(idx.begin(), idx.end(), 0);
    Eigen::MatrixXd sub(p, p);
    Eigen::VectorXd rhs(p);
    for (;;) {
        for (int k = 0; k < p; ++k) {
            sub.row(k) = X.row(idx[k]);
            rhs(k) = y(idx[k]);
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
        lu.setThreshold(1e-12);
        if (lu.isInvertible()) {
            Eigen::VectorXd beta = lu.solve(rhs);
            Eigen::VectorXd resid = y - X * beta;
            const double obj = objective(resid, tau);
            if (!found || obj < best.objective) {
                found = true;
                best.beta_hat = std::move(beta);
                best.residuals = std::move(resid);
                best.objective = obj;
                best.basis = idx;
            }
        }
        // next combination in lexicographic order
        int k = p - 1;
        while (k >= 0 && idx[k] == n - p + k) --k;
        if (k < 0) break;
        ++idx[k];
        for (int m = k + 1; m < p; ++m) idx[m] = idx[m - 1] + 1;
    }
    if (!found) throw RankError("every row subset is singular");
    best.converged = true;
    return best;
}

}  // namespace qrtrend::solver
