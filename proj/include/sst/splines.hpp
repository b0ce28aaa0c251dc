#pragma once
#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "sst/errors.hpp"
#include "sst/survdist.hpp"
#include "sst/tree.hpp"

namespace sst {

// Natural cubic spline knots on the log-time axis.
struct KnotSet {
    double k_min = 0.0;
    double k_max = 1.0;
    std::vector<double> internal;

    int m() const { return static_cast<int>(internal.size()); }
    double lambda(int j) const { return (k_max - internal[j]) / (k_max - k_min); }
};

// Type-7 (linear interpolation) percentile of a sorted sample.
inline double percentile_sorted(const std::vector<double>& sorted, double q) {
    const double h = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

// Boundary knots at the min/max uncensored log-time, internal knots at the
// m equally spaced interior percentiles of the uncensored log-times.
inline KnotSet place_knots(const std::vector<double>& times, const std::vector<int>& events,
                           int m) {
    std::vector<double> logt;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (events[i] == 1) logt.push_back(std::log(times[i]));
    std::sort(logt.begin(), logt.end());
    logt.erase(std::unique(logt.begin(), logt.end()), logt.end());
    if (static_cast<int>(logt.size()) < m + 2)
        throw TooFewEvents("place_knots: need at least " + std::to_string(m + 2) +
                           " distinct uncensored log-times, have " + std::to_string(logt.size()));
    KnotSet ks;
    ks.k_min = logt.front();
    ks.k_max = logt.back();
    for (int j = 1; j <= m; ++j) {
        const double q = static_cast<double>(j) / static_cast<double>(m + 1);
        ks.internal.push_back(percentile_sorted(logt, q));
    }
    for (int j = 0; j < m; ++j) {
        const double lo = (j == 0) ? ks.k_min : ks.internal[j - 1];
        if (ks.internal[j] <= lo || ks.internal[j] >= ks.k_max)
            throw TooFewEvents("place_knots: percentile collision, knots are not strictly ordered");
    }
    return ks;
}

inline double pos3(double v) { return v > 0.0 ? v * v * v : 0.0; }
inline double pos2(double v) { return v > 0.0 ? v * v : 0.0; }

// j is zero-based here (spec's v_{j+1}).
inline double basis(const KnotSet& ks, int j, double y) {
    const double lam = ks.lambda(j);
    return pos3(y - ks.internal[j]) - lam * pos3(y - ks.k_min) - (1.0 - lam) * pos3(y - ks.k_max);
}

inline double basis_deriv(const KnotSet& ks, int j, double y) {
    const double lam = ks.lambda(j);
    return 3.0 * pos2(y - ks.internal[j]) - 3.0 * lam * pos2(y - ks.k_min) -
           3.0 * (1.0 - lam) * pos2(y - ks.k_max);
}

// s(y; eta) = eta0 + eta1 y + sum_j eta_{j+2} v_j(y)
inline double spline_eval(const KnotSet& ks, std::span<const double> eta, double y) {
    double s = eta[0] + eta[1] * y;
    for (int j = 0; j < ks.m(); ++j) s += eta[j + 2] * basis(ks, j, y);
    return s;
}

inline double spline_deriv(const KnotSet& ks, std::span<const double> eta, double y) {
    double d = eta[1];
    for (int j = 0; j < ks.m(); ++j) d += eta[j + 2] * basis_deriv(ks, j, y);
    return d;
}

// Spline leaf parameters are stored as beta = (gamma_1..gamma_p, eta_0..eta_{m+1}).

inline double spline_link(const KnotSet& ks, std::span<const double> beta,
                          std::span<const double> x, double y) {
    const std::size_t p = x.size();
    double z = spline_eval(ks, beta.subspan(p), y);
    for (std::size_t j = 0; j < p; ++j) z += beta[j] * x[j];
    return z;
}

inline double spline_survival(Family f, const KnotSet& ks, std::span<const double> beta,
                              std::span<const double> x, double t) {
    if (t < 0.0) throw NonPositiveTime("spline_survival: t must be nonnegative");
    if (t == 0.0) return 1.0;
    const double z = spline_link(ks, beta, x, std::log(t));
    if (f == Family::SplinePO) return sigmoid(-z);
    return std::exp(-clamped_exp(z));  // PH
}

// Censored NLL for the PO and PH spline models. Throws NonPositiveDerivative
// for an observed event whose spline derivative at log t is not positive;
// callers implementing the exclusion rule should use try_spline_nll.
inline double spline_nll(Family f, const KnotSet& ks, std::span<const double> beta,
                         std::span<const double> x, double t, int c) {
    if (t <= 0.0) throw NonPositiveTime("spline_nll: t must be positive");
    const double y = std::log(t);
    const double z = spline_link(ks, beta, x, y);
    if (c == 0) {
        if (f == Family::SplinePO)
            return (z > 0.0) ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        return clamped_exp(z);  // PH cumulative hazard
    }
    const std::size_t p = x.size();
    const double ds = spline_deriv(ks, beta.subspan(p), y);
    if (ds <= 0.0)
        throw NonPositiveDerivative("spline_nll: ds/dy <= 0 at an observed event");
    if (f == Family::SplinePO) {
        const double log1pez = (z > 0.0) ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        return y - std::log(ds) - z + 2.0 * log1pez;
    }
    return y - std::log(ds) - z + clamped_exp(z);  // PH
}

inline bool try_spline_nll(Family f, const KnotSet& ks, std::span<const double> beta,
                           std::span<const double> x, double t, int c, double& out) {
    if (c == 1) {
        const double ds = spline_deriv(ks, beta.subspan(x.size()), std::log(t));
        if (ds <= 0.0) return false;
    }
    out = spline_nll(f, ks, beta, x, t, c);
    return true;
}

// Gradient w.r.t. (gamma, eta), accumulated into grad with the given weight.
inline void spline_nll_grad(Family f, const KnotSet& ks, std::span<const double> beta,
                            std::span<const double> x, double t, int c, std::span<double> grad,
                            double weight = 1.0) {
    if (t <= 0.0) throw NonPositiveTime("spline_nll_grad: t must be positive");
    const std::size_t p = x.size();
    const double y = std::log(t);
    const double z = spline_link(ks, beta, x, y);

    // dz/dtheta: x_j for gamma_j; b_k(y) for eta_k with b = (1, y, v_1..v_m)
    double dz_coeff;  // d nll / d z
    if (c == 1) {
        dz_coeff = (f == Family::SplinePO) ? (2.0 * sigmoid(z) - 1.0) : (clamped_exp(z) - 1.0);
    } else {
        dz_coeff = (f == Family::SplinePO) ? sigmoid(z) : clamped_exp(z);
    }
    for (std::size_t j = 0; j < p; ++j) grad[j] += weight * dz_coeff * x[j];
    grad[p] += weight * dz_coeff;
    grad[p + 1] += weight * dz_coeff * y;
    for (int j = 0; j < ks.m(); ++j) grad[p + 2 + j] += weight * dz_coeff * basis(ks, j, y);

    if (c == 1) {
        const double ds = spline_deriv(ks, beta.subspan(p), y);
        if (ds <= 0.0)
            throw NonPositiveDerivative("spline_nll_grad: ds/dy <= 0 at an observed event");
        const double w = -weight / ds;  // d(-log ds)/d eta
        grad[p + 1] += w;
        for (int j = 0; j < ks.m(); ++j) grad[p + 2 + j] += w * basis_deriv(ks, j, y);
    }
}

// d S / d beta, accumulated with the given weight.
inline void spline_survival_grad(Family f, const KnotSet& ks, std::span<const double> beta,
                                 std::span<const double> x, double t, std::span<double> grad,
                                 double weight) {
    if (t <= 0.0) return;
    const std::size_t p = x.size();
    const double y = std::log(t);
    const double z = spline_link(ks, beta, x, y);
    double dS_dz;
    if (f == Family::SplinePO) {
        const double S = sigmoid(-z);
        dS_dz = -S * (1.0 - S);
    } else {
        const double ez = clamped_exp(z);
        dS_dz = -std::exp(-ez) * ez;
    }
    const double w = weight * dS_dz;
    for (std::size_t j = 0; j < p; ++j) grad[j] += w * x[j];
    grad[p] += w;
    grad[p + 1] += w * y;
    for (int j = 0; j < ks.m(); ++j) grad[p + 2 + j] += w * basis(ks, j, y);
}

} // namespace sst
