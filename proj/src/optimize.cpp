#include "ou2f/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "ou2f/errors.hpp"

namespace ou2f {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double guarded(const ObjectiveFn& f, const Eigen::VectorXd& x, long& evals) {
    ++evals;
    const double v = f(x);
    return std::isnan(v) ? kInf : v;
}

}  // namespace

MinimizeResult nelder_mead(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                           const MinimizeOptions& options) {
    if (!x0.allFinite()) throw ArgumentError("nelder_mead: starting point is not finite");
    const Eigen::Index n = x0.size();
    constexpr double alpha = 1.0, gamma = 2.0, beta = 0.5, delta = 0.5;

    MinimizeResult res;
    std::vector<Eigen::VectorXd> v(static_cast<std::size_t>(n) + 1, x0);
    std::vector<double> fv(static_cast<std::size_t>(n) + 1);
    for (Eigen::Index i = 0; i < n; ++i)
        v[static_cast<std::size_t>(i) + 1][i] += 0.25 * (1.0 + std::abs(x0[i]));
    for (std::size_t i = 0; i < v.size(); ++i) fv[i] = guarded(f, v[i], res.evaluations);

    std::vector<std::size_t> order(v.size());
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        res.iterations = iter;
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order.front(), worst = order.back(),
                          second = order[order.size() - 2];

        if (fv[worst] - fv[best] <= options.f_tol) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (std::size_t k = 0; k + 1 < order.size(); ++k) centroid += v[order[k]];
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd xr = centroid + alpha * (centroid - v[worst]);
        const double fr = guarded(f, xr, res.evaluations);

        if (fr < fv[best]) {
            const Eigen::VectorXd xe = centroid + gamma * (xr - centroid);
            const double fe = guarded(f, xe, res.evaluations);
            if (fe < fr) {
                v[worst] = xe;
                fv[worst] = fe;
            } else {
                v[worst] = xr;
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            v[worst] = xr;
            fv[worst] = fr;
        } else {
            const bool outside = fr < fv[worst];
            const Eigen::VectorXd xc =
                outside ? centroid + beta * (xr - centroid) : centroid + beta * (v[worst] - centroid);
            const double fc = guarded(f, xc, res.evaluations);
            if (fc < std::min(fr, fv[worst])) {
                v[worst] = xc;
                fv[worst] = fc;
            } else {
                for (std::size_t k = 1; k < order.size(); ++k) {
                    const std::size_t i = order[k];
                    v[i] = v[best] + delta * (v[i] - v[best]);
                    fv[i] = guarded(f, v[i], res.evaluations);
                }
            }
        }
    }

    const std::size_t best =
        static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    res.x = v[best];
    res.f = fv[best];
    return res;
}

Eigen::VectorXd central_difference_gradient(const ObjectiveFn& f, const Eigen::VectorXd& x) {
    const double rel = std::cbrt(std::numeric_limits<double>::epsilon());
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = rel * (1.0 + std::abs(x[i]));
        xp[i] = x[i] + h;
        const double fp = f(xp);
        xp[i] = x[i] - h;
        const double fm = f(xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

Eigen::MatrixXd central_difference_hessian(const ObjectiveFn& f, const Eigen::VectorXd& x) {
    const double rel = std::pow(std::numeric_limits<double>::epsilon(), 0.25);
    const Eigen::Index n = x.size();
    Eigen::VectorXd h(n);
    for (Eigen::Index i = 0; i < n; ++i) h[i] = rel * (1.0 + std::abs(x[i]));

    const double f0 = f(x);
    Eigen::MatrixXd H(n, n);
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < n; ++i) {
        xp[i] = x[i] + h[i];
        const double fp = f(xp);
        xp[i] = x[i] - h[i];
        const double fm = f(xp);
        xp[i] = x[i];
        H(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double q[4];
            const double si[4] = {1.0, 1.0, -1.0, -1.0};
            const double sj[4] = {1.0, -1.0, 1.0, -1.0};
            for (int k = 0; k < 4; ++k) {
                xp[i] = x[i] + si[k] * h[i];
                xp[j] = x[j] + sj[k] * h[j];
                q[k] = f(xp);
                xp[i] = x[i];
                xp[j] = x[j];
            }
            H(i, j) = H(j, i) = (q[0] - q[1] - q[2] + q[3]) / (4.0 * h[i] * h[j]);
        }
    }
    return H;
}

MinimizeResult bfgs_polish(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                           const MinimizeOptions& options) {
    if (!x0.allFinite()) throw ArgumentError("bfgs_polish: starting point is not finite");
    const Eigen::Index n = x0.size();

    MinimizeResult res;
    res.x = x0;
    res.f = guarded(f, x0, res.evaluations);
    if (!std::isfinite(res.f)) return res;

    Eigen::VectorXd g = central_difference_gradient(f, res.x);
    res.evaluations += 2 * n;
    if (!g.allFinite()) return res;

    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
    bool scaled = false;

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        res.iterations = iter;
        if (g.norm() <= 1e-5 * (1.0 + std::abs(res.f))) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd p = -H * g;
        if (p.dot(g) >= 0.0) {  // not a descent direction; reset
            H.setIdentity();
            p = -g;
        }

        // Armijo backtracking.
        double step = 1.0;
        double fn = kInf;
        Eigen::VectorXd xn;
        const double slope = g.dot(p);
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            xn = res.x + step * p;
            fn = guarded(f, xn, res.evaluations);
            if (fn <= res.f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // No decrease along the quasi-Newton direction: the iterate sits
            // at the resolution limit of the finite-difference gradient.
            res.converged = true;
            break;
        }

        Eigen::VectorXd gn = central_difference_gradient(f, xn);
        res.evaluations += 2 * n;
        if (!gn.allFinite()) {
            res.x = xn;
            res.f = fn;
            break;
        }

        const Eigen::VectorXd s = xn - res.x;
        const Eigen::VectorXd y = gn - g;
        const double sy = s.dot(y);
        const double decrease = res.f - fn;
        res.x = xn;
        res.f = fn;
        g = gn;

        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (!scaled) {
                H *= sy / y.squaredNorm();
                scaled = true;
            }
            const Eigen::VectorXd Hy = H * y;
            const double yHy = y.dot(Hy);
            H += ((sy + yHy) / (sy * sy)) * (s * s.transpose()) -
                 (Hy * s.transpose() + s * Hy.transpose()) / sy;
        }

        if (decrease < options.f_tol && g.norm() <= 1e-4 * (1.0 + std::abs(res.f))) {
            res.converged = true;
            break;
        }
    }
    return res;
}

}  // namespace ou2f
