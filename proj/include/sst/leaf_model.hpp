#pragma once
#include <span>
#include <string>
#include <vector>

#include "sst/splines.hpp"
#include "sst/survdist.hpp"
#include "sst/tree.hpp"

namespace sst {

// Which survival family lives at the leaves, plus spline configuration.
// One KnotSet is shared by all leaves of a tree.
struct LeafModelSpec {
    Family family = Family::Exp;
    int knots_m = 2;
    KnotSet knots;  // valid only for spline families

    bool spline() const { return is_spline(family); }

    std::size_t beta_dim(std::size_t p) const {
        if (spline()) return p + static_cast<std::size_t>(knots.m()) + 2;
        return p + 1 + static_cast<std::size_t>(ancillary_count(family));
    }
};

inline std::string family_name(Family f) {
    switch (f) {
        case Family::Exp: return "exp";
        case Family::Weibull: return "weibull";
        case Family::LogLogistic: return "llog";
        case Family::SplinePO: return "spline-po";
        case Family::SplinePH: return "spline-ph";
    }
    return "?";
}

inline Family family_from_name(const std::string& s) {
    if (s == "exp") return Family::Exp;
    if (s == "weibull") return Family::Weibull;
    if (s == "llog") return Family::LogLogistic;
    if (s == "spline-po") return Family::SplinePO;
    if (s == "spline-ph") return Family::SplinePH;
    throw Error("unknown family: " + s);
}

inline double leaf_nll(const LeafModelSpec& spec, std::span<const double> beta,
                       std::span<const double> x, double t, int c) {
    if (spec.spline()) return spline_nll(spec.family, spec.knots, beta, x, t, c);
    return parametric_nll(spec.family, beta, x, t, c);
}

// Returns false when the spline exclusion rule drops this (point, leaf) term.
inline bool try_leaf_nll(const LeafModelSpec& spec, std::span<const double> beta,
                         std::span<const double> x, double t, int c, double& out) {
    if (spec.spline()) return try_spline_nll(spec.family, spec.knots, beta, x, t, c, out);
    out = parametric_nll(spec.family, beta, x, t, c);
    return true;
}

// Accumulates weight * d nll / d beta into grad; no-op for excluded terms.
inline void leaf_nll_grad(const LeafModelSpec& spec, std::span<const double> beta,
                          std::span<const double> x, double t, int c, std::span<double> grad,
                          double weight = 1.0) {
    if (spec.spline()) {
        if (c == 1 && spline_deriv(spec.knots, beta.subspan(x.size()), std::log(t)) <= 0.0) return;
        spline_nll_grad(spec.family, spec.knots, beta, x, t, c, grad, weight);
        return;
    }
    parametric_nll_grad(spec.family, beta, x, t, c, grad, weight);
}

inline double leaf_survival(const LeafModelSpec& spec, std::span<const double> beta,
                            std::span<const double> x, double t) {
    if (spec.spline()) return spline_survival(spec.family, spec.knots, beta, x, t);
    return parametric_survival(spec.family, beta, x, t);
}

inline void leaf_survival_grad(const LeafModelSpec& spec, std::span<const double> beta,
                               std::span<const double> x, double t, std::span<double> grad,
                               double weight) {
    if (spec.spline()) {
        spline_survival_grad(spec.family, spec.knots, beta, x, t, grad, weight);
        return;
    }
    parametric_survival_grad(spec.family, beta, x, t, grad, weight);
}

// Survival curve prediction through the HBP leaf.
inline std::vector<double> predict_survival(const TreeParams& params, const LeafModelSpec& spec,
                                            std::span<const double> x,
                                            std::span<const double> ts) {
    const int leaf = hbp_leaf(params, x);
    const auto& beta = params.beta_at(leaf);
    std::vector<double> out(ts.size());
    for (std::size_t k = 0; k < ts.size(); ++k) out[k] = leaf_survival(spec, beta, x, ts[k]);
    return out;
}

} // namespace sst
