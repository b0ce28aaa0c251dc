#include "sst/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace sst {
namespace {

bool finite(double v) { return std::isfinite(v); }

bool finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double a : v) m = std::max(m, std::fabs(a));
    return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

} // namespace

SolveReport nelder_mead(const ObjFn& f, std::vector<double> x0, int max_iter, double ftol) {
    const std::size_t n = x0.size();
    struct Vertex {
        std::vector<double> x;
        double f;
    };
    auto eval = [&](const std::vector<double>& x) {
        double v = f(x, nullptr);
        return finite(v) ? v : std::numeric_limits<double>::infinity();
    };
    std::vector<Vertex> simplex;
    simplex.push_back({x0, eval(x0)});
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x = x0;
        x[i] += (x[i] != 0.0) ? 0.05 * x[i] : 0.00025;
        simplex.push_back({x, eval(x)});
    }
    auto by_f = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };
    int it = 0;
    for (; it < max_iter; ++it) {
        std::sort(simplex.begin(), simplex.end(), by_f);
        if (std::fabs(simplex.back().f - simplex.front().f) <=
            ftol * (1.0 + std::fabs(simplex.front().f)))
            break;
        std::vector<double> centroid(n, 0.0);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[k].x[i] / double(n);
        auto blend = [&](double coef) {
            std::vector<double> x(n);
            for (std::size_t i = 0; i < n; ++i)
                x[i] = centroid[i] + coef * (simplex.back().x[i] - centroid[i]);
            return x;
        };
        std::vector<double> xr = blend(-1.0);
        double fr = eval(xr);
        if (fr < simplex.front().f) {
            std::vector<double> xe = blend(-2.0);
            double fe = eval(xe);
            simplex.back() = (fe < fr) ? Vertex{xe, fe} : Vertex{xr, fr};
        } else if (fr < simplex[n - 1].f) {
            simplex.back() = {xr, fr};
        } else {
            std::vector<double> xc = blend(0.5);
            double fc = eval(xc);
            if (fc < simplex.back().f) {
                simplex.back() = {xc, fc};
            } else {
                for (std::size_t k = 1; k <= n; ++k) {
                    for (std::size_t i = 0; i < n; ++i)
                        simplex[k].x[i] = 0.5 * (simplex[k].x[i] + simplex[0].x[i]);
                    simplex[k].f = eval(simplex[k].x);
                }
            }
        }
    }
    std::sort(simplex.begin(), simplex.end(), by_f);
    SolveReport rep;
    rep.x = simplex.front().x;
    rep.f = simplex.front().f;
    rep.iterations = it;
    rep.status = (it < max_iter) ? SolveStatus::Converged : SolveStatus::MaxIter;
    return rep;
}

SolveReport minimize(const ObjFn& f, std::vector<double> x0, const SolveOptions& opts) {
    const std::size_t n = x0.size();
    std::vector<double> grad(n), x = x0;
    double fx = f(x, &grad);
    if (!finite(fx)) throw NonFiniteAtStart("minimize: objective not finite at x0");

    const double f0 = fx;
    std::vector<double> best_x = x;
    double best_f = fx;
    bool fallback = false;

    auto run_fallback = [&](SolveReport rep) {
        SolveReport nm = nelder_mead(f, best_x, opts.nm_max_iter);
        if (nm.f < best_f) {
            best_f = nm.f;
            best_x = nm.x;
        }
        rep.x = best_x;
        rep.f = best_f;
        rep.status = SolveStatus::FallbackUsed;
        return rep;
    };

    if (!finite(grad)) {
        SolveReport rep;
        rep.iterations = 0;
        if (!opts.allow_fallback) {
            rep.x = x;
            rep.f = fx;
            rep.status = SolveStatus::NonFinite;
            return rep;
        }
        return run_fallback(rep);
    }

    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;
    std::vector<double> prev_x, prev_grad;

    int it = 0;
    SolveStatus status = SolveStatus::MaxIter;
    for (; it < opts.max_iter; ++it) {
        if (inf_norm(grad) < opts.gtol) {
            status = SolveStatus::Converged;
            break;
        }
        // two-loop recursion
        std::vector<double> dir = grad;
        std::vector<double> alpha(s_hist.size());
        for (int k = static_cast<int>(s_hist.size()) - 1; k >= 0; --k) {
            alpha[k] = rho_hist[k] * dot(s_hist[k], dir);
            for (std::size_t i = 0; i < n; ++i) dir[i] -= alpha[k] * y_hist[k][i];
        }
        if (!s_hist.empty()) {
            const double gamma =
                dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
            for (double& d : dir) d *= gamma;
        }
        for (std::size_t k = 0; k < s_hist.size(); ++k) {
            const double b = rho_hist[k] * dot(y_hist[k], dir);
            for (std::size_t i = 0; i < n; ++i) dir[i] += s_hist[k][i] * (alpha[k] - b);
        }
        for (double& d : dir) d = -d;

        double slope = dot(grad, dir);
        if (!(slope < 0.0)) {  // not a descent direction; reset to steepest descent
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            for (std::size_t i = 0; i < n; ++i) dir[i] = -grad[i];
            slope = dot(grad, dir);
        }

        // Armijo backtracking
        double step = 1.0;
        std::vector<double> x_new(n), grad_new(n);
        double f_new = 0.0;
        bool accepted = false, bad_value = false;
        for (int ls = 0; ls < opts.max_line_search; ++ls) {
            for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * dir[i];
            f_new = f(x_new, &grad_new);
            if (!finite(f_new) || !finite(grad_new)) {
                bad_value = true;
                step *= 0.5;
                continue;
            }
            bad_value = false;
            if (f_new <= fx + opts.armijo_c * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (bad_value && opts.allow_fallback && !fallback) {
                fallback = true;
                SolveReport rep;
                rep.iterations = it;
                return run_fallback(rep);
            }
            status = SolveStatus::LineSearchFail;
            break;
        }

        std::vector<double> s(n), yv(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = x_new[i] - x[i];
            yv[i] = grad_new[i] - grad[i];
        }
        const double sy = dot(s, yv);
        if (sy > 1e-10 * std::sqrt(dot(s, s)) * std::sqrt(dot(yv, yv))) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(yv));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opts.lbfgs_memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        } else if (!s_hist.empty()) {
            // Armijo alone does not enforce the curvature condition, so a
            // rejected pair means the stored model is going stale at the
            // current point; age it out rather than looping on it
            s_hist.pop_front();
            y_hist.pop_front();
            rho_hist.pop_front();
        }
        x = std::move(x_new);
        grad = grad_new;
        fx = f_new;
        if (fx < best_f) {
            best_f = fx;
            best_x = x;
        }
    }

    SolveReport rep;
    rep.x = best_x;
    rep.f = best_f;
    rep.gnorm = inf_norm(grad);
    rep.iterations = it;
    rep.status = status;
    if (rep.f > f0) {  // line search is monotone, so this should not happen
        rep.x = x0;
        rep.f = f0;
    }
    return rep;
}

} // namespace sst
