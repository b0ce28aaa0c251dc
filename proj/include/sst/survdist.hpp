#pragma once
#include <cmath>
#include <span>
#include <vector>

#include "sst/errors.hpp"

namespace sst {

enum class Family { Exp, Weibull, LogLogistic, SplinePO, SplinePH };

inline bool is_spline(Family f) { return f == Family::SplinePO || f == Family::SplinePH; }

// Number of ancillary (log-)parameters of a parametric family.
inline int ancillary_count(Family f) {
    return (f == Family::Exp) ? 0 : 1;
}

inline double clamped_exp(double v) {
    if (v > 700.0) v = 700.0;
    if (v < -700.0) v = -700.0;
    return std::exp(v);
}

// Parametric leaf parameters are stored as beta = (gamma0, gamma_1..gamma_p, a..)
// with mu(x) = exp(gamma0 + gamma.x) and shape alpha = exp(a).
//
// For Exp, mu is a rate (S = exp(-mu t)); for Weibull/Llog it is a scale.

inline double linear_predictor(std::span<const double> beta, std::span<const double> x) {
    double g = beta[0];
    for (std::size_t j = 0; j < x.size(); ++j) g += beta[j + 1] * x[j];
    return g;
}

inline double parametric_cumhaz(Family f, std::span<const double> beta, std::span<const double> x,
                                double t) {
    if (t <= 0.0) throw NonPositiveTime("cumhaz: t must be positive");
    const double g = linear_predictor(beta, x);
    switch (f) {
        case Family::Exp:
            return clamped_exp(g) * t;
        case Family::Weibull: {
            const double alpha = clamped_exp(beta[x.size() + 1]);
            return clamped_exp(alpha * (std::log(t) - g));
        }
        case Family::LogLogistic: {
            const double alpha = clamped_exp(beta[x.size() + 1]);
            const double au = alpha * (std::log(t) - g);
            // log(1 + e^au), stable for large |au|
            return (au > 0.0) ? au + std::log1p(std::exp(-au)) : std::log1p(std::exp(au));
        }
        default:
            throw Error("parametric_cumhaz: spline family");
    }
}

inline double parametric_hazard(Family f, std::span<const double> beta, std::span<const double> x,
                                double t) {
    if (t <= 0.0) throw NonPositiveTime("hazard: t must be positive");
    const double g = linear_predictor(beta, x);
    switch (f) {
        case Family::Exp:
            return clamped_exp(g);
        case Family::Weibull: {
            const double a = beta[x.size() + 1];
            const double alpha = clamped_exp(a);
            // log h = a - log t + alpha (log t - g)
            return clamped_exp(a - std::log(t) + alpha * (std::log(t) - g));
        }
        case Family::LogLogistic: {
            const double a = beta[x.size() + 1];
            const double alpha = clamped_exp(a);
            const double au = alpha * (std::log(t) - g);
            const double sig = (au >= 0.0) ? 1.0 / (1.0 + std::exp(-au))
                                           : std::exp(au) / (1.0 + std::exp(au));
            return alpha / t * sig;
        }
        default:
            throw Error("parametric_hazard: spline family");
    }
}

inline double parametric_survival(Family f, std::span<const double> beta,
                                  std::span<const double> x, double t) {
    if (t < 0.0) throw NonPositiveTime("survival: t must be nonnegative");
    if (t == 0.0) return 1.0;
    return std::exp(-parametric_cumhaz(f, beta, x, t));
}

inline double parametric_nll(Family f, std::span<const double> beta, std::span<const double> x,
                             double t, int c) {
    const double H = parametric_cumhaz(f, beta, x, t);
    if (c == 0) return H;
    return -std::log(parametric_hazard(f, beta, x, t)) + H;
}

// Analytic gradient of the censored NLL w.r.t. (gamma0, gamma, a),
// accumulated into grad (which must have beta.size() entries).
inline void parametric_nll_grad(Family f, std::span<const double> beta, std::span<const double> x,
                                double t, int c, std::span<double> grad, double weight = 1.0) {
    if (t <= 0.0) throw NonPositiveTime("nll_grad: t must be positive");
    const double g = linear_predictor(beta, x);
    double dg = 0.0;  // d nll / d (gamma0 + gamma.x)
    double da = 0.0;  // d nll / d a
    switch (f) {
        case Family::Exp: {
            const double H = clamped_exp(g) * t;
            dg = (c == 1) ? H - 1.0 : H;
            break;
        }
        case Family::Weibull: {
            const double alpha = clamped_exp(beta[x.size() + 1]);
            const double u = std::log(t) - g;
            const double H = clamped_exp(alpha * u);
            if (c == 1) {
                dg = alpha * (1.0 - H);
                da = -1.0 + alpha * u * (H - 1.0);
            } else {
                dg = -alpha * H;
                da = alpha * u * H;
            }
            break;
        }
        case Family::LogLogistic: {
            const double alpha = clamped_exp(beta[x.size() + 1]);
            const double u = std::log(t) - g;
            const double au = alpha * u;
            const double sig = (au >= 0.0) ? 1.0 / (1.0 + std::exp(-au))
                                           : std::exp(au) / (1.0 + std::exp(au));
            if (c == 1) {
                dg = alpha * (1.0 - 2.0 * sig);
                da = -1.0 + au * (2.0 * sig - 1.0);
            } else {
                dg = -alpha * sig;
                da = au * sig;
            }
            break;
        }
        default:
            throw Error("parametric_nll_grad: spline family");
    }
    grad[0] += weight * dg;
    for (std::size_t j = 0; j < x.size(); ++j) grad[j + 1] += weight * dg * x[j];
    if (ancillary_count(f) == 1) grad[x.size() + 1] += weight * da;
}

// d S / d beta, accumulated into grad with the given weight. Used by the
// fairness penalty.
inline void parametric_survival_grad(Family f, std::span<const double> beta,
                                     std::span<const double> x, double t, std::span<double> grad,
                                     double weight) {
    if (t <= 0.0) return;  // S(0)=1 with zero gradient
    const double S = parametric_survival(f, beta, x, t);
    const double g = linear_predictor(beta, x);
    double dHg = 0.0, dHa = 0.0;
    switch (f) {
        case Family::Exp:
            dHg = clamped_exp(g) * t;
            break;
        case Family::Weibull: {
            const double alpha = clamped_exp(beta[x.size() + 1]);
            const double u = std::log(t) - g;
            const double H = clamped_exp(alpha * u);
            dHg = -alpha * H;
            dHa = alpha * u * H;
            break;
        }
        case Family::LogLogistic: {
            const double alpha = clamped_exp(beta[x.size() + 1]);
            const double au = alpha * (std::log(t) - g);
            const double sig = (au >= 0.0) ? 1.0 / (1.0 + std::exp(-au))
                                           : std::exp(au) / (1.0 + std::exp(au));
            dHg = -alpha * sig;
            dHa = au * sig;
            break;
        }
        default:
            throw Error("parametric_survival_grad: spline family");
    }
    const double w = -weight * S;
    grad[0] += w * dHg;
    for (std::size_t j = 0; j < x.size(); ++j) grad[j + 1] += w * dHg * x[j];
    if (ancillary_count(f) == 1) grad[x.size() + 1] += w * dHa;
}

} // namespace sst
