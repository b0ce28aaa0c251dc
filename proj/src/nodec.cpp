#include "sst/nodec.hpp"

#include "sst/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace sst {
namespace {

// Small dense solve (normal equations for the spline least-squares init).
bool solve_linear(std::vector<std::vector<double>> A, std::vector<double> b,
                  std::vector<double>& out) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(A[r][col]) > std::fabs(A[piv][col])) piv = r;
        if (std::fabs(A[piv][col]) < 1e-12) return false;
        std::swap(A[piv], A[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = A[r][col] / A[col][col];
            for (std::size_t c = col; c < n; ++c) A[r][c] -= f * A[col][c];
            b[r] -= f * b[col];
        }
    }
    out.assign(n, 0.0);
    for (std::size_t r = n; r-- > 0;) {
        double v = b[r];
        for (std::size_t c = r + 1; c < n; ++c) v -= A[r][c] * out[c];
        out[r] = v / A[r][r];
    }
    return true;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Parametric leaf starting values from marginal event statistics.
std::vector<double> parametric_start(const SurvivalDataset& ds, const LeafModelSpec& spec,
                                     const std::vector<std::size_t>& idx) {
    std::vector<double> beta(spec.beta_dim(ds.p()), 0.0);
    double sum_t = 0.0;
    double n_events = 0.0;
    std::vector<double> ts;
    for (std::size_t i : idx) {
        sum_t += ds.times[i];
        n_events += ds.events[i];
        ts.push_back(ds.times[i]);
    }
    switch (spec.family) {
        case Family::Exp:
            beta[0] = std::log(std::max(n_events, 1.0) / sum_t);
            break;
        case Family::Weibull:
            beta[0] = std::log(sum_t / std::max(n_events, 1.0));
            break;
        case Family::LogLogistic:
            beta[0] = std::log(median(ts));
            break;
        default:
            break;
    }
    return beta;
}

// Spline leaf starting values: eta from least squares of the transformed
// Kaplan-Meier curve of a with-replacement resample; gamma stays 0. Falls
// back to the identity spline (0, 1, 0, ...) when the fit is unusable.
std::vector<double> spline_start(const SurvivalDataset& ds, const LeafModelSpec& spec,
                                 const std::vector<std::size_t>& idx, std::size_t sample_size,
                                 std::mt19937_64& rng) {
    const std::size_t p = ds.p();
    const int m = spec.knots.m();
    std::vector<double> beta(spec.beta_dim(p), 0.0);
    beta[p + 1] = 1.0;  // eta1 = 1 keeps ds/dy positive

    sample_size = std::max<std::size_t>(sample_size, static_cast<std::size_t>(m) + 3);
    std::uniform_int_distribution<std::size_t> pick(0, idx.size() - 1);
    std::vector<double> st;
    std::vector<int> sc;
    for (std::size_t k = 0; k < sample_size; ++k) {
        const std::size_t i = idx[pick(rng)];
        st.push_back(ds.times[i]);
        sc.push_back(ds.events[i]);
    }
    const StepFunction km = kaplan_meier(st, sc);

    const std::size_t dim = static_cast<std::size_t>(m) + 2;
    std::vector<std::vector<double>> ata(dim, std::vector<double>(dim, 0.0));
    std::vector<double> atb(dim, 0.0);
    std::size_t rows = 0;
    for (std::size_t k = 0; k < st.size(); ++k) {
        if (sc[k] != 1) continue;
        double S = km.at(st[k]);
        S = std::clamp(S, 1e-6, 1.0 - 1e-6);
        const double z = (spec.family == Family::SplinePH) ? std::log(-std::log(S))
                                                          : std::log((1.0 - S) / S);
        const double y = std::log(st[k]);
        std::vector<double> row(dim);
        row[0] = 1.0;
        row[1] = y;
        for (int j = 0; j < m; ++j) row[2 + j] = basis(spec.knots, j, y);
        for (std::size_t a = 0; a < dim; ++a) {
            atb[a] += row[a] * z;
            for (std::size_t b = 0; b < dim; ++b) ata[a][b] += row[a] * row[b];
        }
        ++rows;
    }
    std::vector<double> eta;
    if (rows >= dim && solve_linear(ata, atb, eta)) {
        bool ok = true;
        for (std::size_t i : idx) {
            if (spline_deriv(spec.knots, eta, std::log(ds.times[i])) <= 0.0) {
                ok = false;
                break;
            }
        }
        if (ok)
            for (std::size_t j = 0; j < dim; ++j) beta[p + j] = eta[j];
    }
    return beta;
}

std::vector<double> leaf_start(const SurvivalDataset& ds, const LeafModelSpec& spec,
                               const std::vector<std::size_t>& idx, int depth,
                               std::mt19937_64& rng) {
    if (!spec.spline()) return parametric_start(ds, spec, idx);
    const std::size_t sample = std::max<std::size_t>(1, ds.n() >> depth);
    return spline_start(ds, spec, idx, sample, rng);
}

// Maximum-likelihood fit of one leaf on its own points.
std::vector<double> fit_leaf_mle(const SurvivalDataset& ds, const LeafModelSpec& spec,
                                 const std::vector<std::size_t>& idx, std::vector<double> start,
                                 const SolveOptions& solver) {
    if (idx.empty()) return start;
    ObjFn f = [&](const std::vector<double>& beta, std::vector<double>* grad) {
        double acc = 0.0;
        if (grad) std::fill(grad->begin(), grad->end(), 0.0);
        for (std::size_t i : idx) {
            double v;
            if (try_leaf_nll(spec, beta, ds.features[i], ds.times[i], ds.events[i], v)) {
                acc += v;
                if (grad)
                    leaf_nll_grad(spec, beta, ds.features[i], ds.times[i], ds.events[i], *grad,
                                  1.0);
            }
        }
        return acc / static_cast<double>(idx.size());
    };
    // normalize gradient accordingly
    ObjFn fn = [&, n = double(idx.size())](const std::vector<double>& beta,
                                           std::vector<double>* grad) {
        double v = f(beta, grad);
        if (grad)
            for (double& g : *grad) g /= n;
        return v;
    };
    return minimize(fn, std::move(start), solver).x;
}

// Unweighted binary logistic regression for omega (class 1 = left).
std::vector<double> fit_logistic(const SurvivalDataset& ds, const std::vector<std::size_t>& idx,
                                 const std::vector<int>& labels, const SolveOptions& solver) {
    const std::size_t p = ds.p();
    ObjFn f = [&](const std::vector<double>& omega, std::vector<double>* grad) {
        double acc = 0.0;
        if (grad) std::fill(grad->begin(), grad->end(), 0.0);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const auto& x = ds.features[idx[k]];
            double v = -omega[0];
            for (std::size_t j = 0; j < p; ++j) v += omega[j + 1] * x[j];
            const double log1pe = (v > 0.0) ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
            acc += (labels[k] == 1) ? (log1pe - v) : log1pe;
            if (grad) {
                const double resid = sigmoid(v) - labels[k];
                (*grad)[0] -= resid;
                for (std::size_t j = 0; j < p; ++j) (*grad)[j + 1] += resid * x[j];
            }
        }
        const double n = static_cast<double>(idx.size());
        if (grad)
            for (double& g : *grad) g /= n;
        return acc / n;
    };
    return minimize(f, std::vector<double>(p + 1, 0.0), solver).x;
}

std::size_t max_variance_feature(const SurvivalDataset& ds, const std::vector<std::size_t>& idx) {
    const std::size_t p = ds.p();
    std::size_t best = 0;
    double best_var = -1.0;
    for (std::size_t j = 0; j < p; ++j) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t i : idx) {
            s += ds.features[i][j];
            s2 += ds.features[i][j] * ds.features[i][j];
        }
        const double n = static_cast<double>(idx.size());
        const double var = s2 / n - (s / n) * (s / n);
        if (var > best_var) {
            best_var = var;
            best = j;
        }
    }
    return best;
}

// 2-means split; falls back to a median split on the highest-variance
// feature when a side comes out empty.
void two_means_split(const SurvivalDataset& ds, const std::vector<std::size_t>& idx,
                     std::mt19937_64& rng, std::vector<std::size_t>& left,
                     std::vector<std::size_t>& right) {
    left.clear();
    right.clear();
    const std::size_t p = ds.p();
    auto median_split = [&]() {
        left.clear();
        right.clear();
        const std::size_t j = max_variance_feature(ds, idx);
        std::vector<double> col;
        for (std::size_t i : idx) col.push_back(ds.features[i][j]);
        const double med = median(col);
        for (std::size_t i : idx)
            (ds.features[i][j] <= med ? left : right).push_back(i);
        if (left.empty() || right.empty()) {
            // all-identical points: alternate
            left.clear();
            right.clear();
            for (std::size_t k = 0; k < idx.size(); ++k)
                (k % 2 == 0 ? left : right).push_back(idx[k]);
        }
    };
    if (idx.size() < 2) {
        left = idx;
        return;
    }
    std::uniform_int_distribution<std::size_t> pick(0, idx.size() - 1);
    std::vector<double> c0 = ds.features[idx[pick(rng)]];
    std::vector<double> c1 = ds.features[idx[pick(rng)]];
    if (c0 == c1) {
        median_split();
        return;
    }
    std::vector<int> assign(idx.size(), 0);
    for (int it = 0; it < 50; ++it) {
        bool changed = false;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const auto& x = ds.features[idx[k]];
            double d0 = 0.0, d1 = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                d0 += (x[j] - c0[j]) * (x[j] - c0[j]);
                d1 += (x[j] - c1[j]) * (x[j] - c1[j]);
            }
            const int a = (d1 < d0) ? 1 : 0;
            if (a != assign[k]) {
                assign[k] = a;
                changed = true;
            }
        }
        std::vector<double> n0(p, 0.0), n1(p, 0.0);
        std::size_t k0 = 0, k1 = 0;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const auto& x = ds.features[idx[k]];
            if (assign[k] == 0) {
                ++k0;
                for (std::size_t j = 0; j < p; ++j) n0[j] += x[j];
            } else {
                ++k1;
                for (std::size_t j = 0; j < p; ++j) n1[j] += x[j];
            }
        }
        if (k0 == 0 || k1 == 0) {
            median_split();
            return;
        }
        for (std::size_t j = 0; j < p; ++j) {
            n0[j] /= static_cast<double>(k0);
            n1[j] /= static_cast<double>(k1);
        }
        c0 = std::move(n0);
        c1 = std::move(n1);
        if (!changed) break;
    }
    for (std::size_t k = 0; k < idx.size(); ++k)
        (assign[k] == 0 ? left : right).push_back(idx[k]);
    if (left.empty() || right.empty()) median_split();
}

double davies_bouldin(const SurvivalDataset& ds,
                      const std::vector<std::vector<std::size_t>>& clusters) {
    const std::size_t p = ds.p();
    std::vector<std::vector<double>> centroids;
    std::vector<double> scatter;
    for (const auto& cl : clusters) {
        if (cl.empty()) continue;
        std::vector<double> c(p, 0.0);
        for (std::size_t i : cl)
            for (std::size_t j = 0; j < p; ++j) c[j] += ds.features[i][j];
        for (double& v : c) v /= static_cast<double>(cl.size());
        double s = 0.0;
        for (std::size_t i : cl) {
            double d = 0.0;
            for (std::size_t j = 0; j < p; ++j)
                d += (ds.features[i][j] - c[j]) * (ds.features[i][j] - c[j]);
            s += std::sqrt(d);
        }
        centroids.push_back(std::move(c));
        scatter.push_back(s / static_cast<double>(cl.size()));
    }
    const std::size_t k = centroids.size();
    if (k < 2) return std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
        double worst = 0.0;
        for (std::size_t b = 0; b < k; ++b) {
            if (a == b) continue;
            double d = 0.0;
            for (std::size_t j = 0; j < p; ++j)
                d += (centroids[a][j] - centroids[b][j]) * (centroids[a][j] - centroids[b][j]);
            d = std::sqrt(d);
            if (d < 1e-12) return std::numeric_limits<double>::infinity();
            worst = std::max(worst, (scatter[a] + scatter[b]) / d);
        }
        acc += worst;
    }
    return acc / static_cast<double>(k);
}

} // namespace

std::string branch_kind_name(BranchKind k) {
    switch (k) {
        case BranchKind::Balanced: return "balanced";
        case BranchKind::Moderate: return "moderate";
        case BranchKind::HighImbalance: return "high";
    }
    return "?";
}

void prepare_spec(LeafModelSpec& spec, const SurvivalDataset& ds) {
    if (spec.spline()) spec.knots = place_knots(ds.times, ds.events, spec.knots_m);
}

TreeParams init_random(const SurvivalDataset& ds, const LeafModelSpec& spec, int depth,
                       std::uint64_t seed) {
    TreeParams params;
    params.topo.depth = depth;
    params.p = ds.p();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    params.omega.resize(static_cast<std::size_t>(params.topo.n_branch()));
    for (auto& w : params.omega) {
        w.resize(params.p + 1);
        for (double& v : w) v = uni(rng);
    }
    std::vector<std::size_t> all(ds.n());
    std::iota(all.begin(), all.end(), 0);
    std::vector<double> beta0 = spec.spline()
                                    ? [&] {
                                          std::vector<double> b(spec.beta_dim(params.p), 0.0);
                                          b[params.p + 1] = 1.0;
                                          return b;
                                      }()
                                    : parametric_start(ds, spec, all);
    params.beta.assign(static_cast<std::size_t>(params.topo.n_leaf()), beta0);
    return params;
}

TreeParams init_clustering(const SurvivalDataset& ds, const LeafModelSpec& spec,
                           const TrainConfig& cfg) {
    const int depth = cfg.depth;
    const int n_leaf = 1 << depth;
    if (ds.n() < static_cast<std::size_t>(n_leaf))
        throw TooFewRows("init_clustering: fewer points than leaves");

    // node_points[n] holds the points assigned to heap node n
    using Assignment = std::vector<std::vector<std::size_t>>;
    Assignment best;
    double best_db = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < cfg.clustering_repeats; ++rep) {
        std::mt19937_64 rng(cfg.seed * 1000003ULL + static_cast<std::uint64_t>(rep));
        Assignment node_points(static_cast<std::size_t>(2 * n_leaf));
        node_points[1].resize(ds.n());
        std::iota(node_points[1].begin(), node_points[1].end(), 0);
        for (int n = 1; n < n_leaf; ++n)
            two_means_split(ds, node_points[static_cast<std::size_t>(n)], rng,
                            node_points[static_cast<std::size_t>(2 * n)],
                            node_points[static_cast<std::size_t>(2 * n + 1)]);
        std::vector<std::vector<std::size_t>> leaves(node_points.begin() + n_leaf,
                                                     node_points.end());
        const double db = davies_bouldin(ds, leaves);
        if (db < best_db) {
            best_db = db;
            best = std::move(node_points);
        }
    }
    if (best.empty()) throw Error("init_clustering: no usable clustering run");

    TreeParams params;
    params.topo.depth = depth;
    params.p = ds.p();
    params.omega.resize(static_cast<std::size_t>(params.topo.n_branch()));
    params.beta.resize(static_cast<std::size_t>(n_leaf));
    std::mt19937_64 rng(cfg.seed * 9176423ULL + 17ULL);
    for (int n = 1; n < n_leaf; ++n) {
        const auto& l = best[static_cast<std::size_t>(2 * n)];
        const auto& r = best[static_cast<std::size_t>(2 * n + 1)];
        std::vector<std::size_t> idx;
        std::vector<int> labels;
        for (std::size_t i : l) {
            idx.push_back(i);
            labels.push_back(1);
        }
        for (std::size_t i : r) {
            idx.push_back(i);
            labels.push_back(0);
        }
        params.omega[static_cast<std::size_t>(n - 1)] =
            idx.empty() ? std::vector<double>(params.p + 1, 0.0)
                        : fit_logistic(ds, idx, labels, cfg.solver);
    }
    std::vector<std::size_t> all(ds.n());
    std::iota(all.begin(), all.end(), 0);
    for (int leaf = n_leaf; leaf < 2 * n_leaf; ++leaf) {
        const auto& idx = best[static_cast<std::size_t>(leaf)];
        const auto& fit_idx = idx.empty() ? all : idx;
        std::vector<double> start = leaf_start(ds, spec, fit_idx, depth, rng);
        params.beta[static_cast<std::size_t>(leaf - n_leaf)] =
            fit_leaf_mle(ds, spec, fit_idx, std::move(start), cfg.solver);
    }
    return params;
}

BranchUpdate update_branch_node(const SurvivalDataset& ds, const std::vector<int>& W_B,
                                const std::vector<std::size_t>& I_s, const TreeParams& params,
                                const LeafModelSpec& spec, double eps1, double eps2, double eps3,
                                const SolveOptions& solver) {
    if (I_s.empty()) throw EmptyRestrictedSet("update_branch_node: empty restricted set");
    const int s = *std::min_element(W_B.begin(), W_B.end());
    const std::size_t p = params.p;

    // deterministic routing at s
    std::vector<int> routed_left(I_s.size());
    std::size_t n_left = 0;
    for (std::size_t k = 0; k < I_s.size(); ++k) {
        routed_left[k] = branch_prob(params.omega_at(s), ds.features[I_s[k]]) >= 0.5 ? 1 : 0;
        n_left += static_cast<std::size_t>(routed_left[k]);
    }
    const double L_s = static_cast<double>(n_left) / static_cast<double>(I_s.size());

    BranchUpdate out;
    for (int n : W_B) out.omega.push_back(params.omega_at(n));

    const bool imbalanced =
        (L_s <= eps1 || L_s >= 1.0 - eps1) && (eps1 * static_cast<double>(ds.n()) >= 1.0);

    if (!imbalanced) {
        out.branch = BranchKind::Balanced;
        // joint solve over all omega blocks in W_B on the restricted subtree
        std::vector<double> x0;
        for (const auto& w : out.omega) x0.insert(x0.end(), w.begin(), w.end());
        TreeParams work = params;
        ObjFn f = [&](const std::vector<double>& v, std::vector<double>* grad) {
            for (std::size_t b = 0; b < W_B.size(); ++b)
                std::copy(v.begin() + static_cast<std::ptrdiff_t>(b * (p + 1)),
                          v.begin() + static_cast<std::ptrdiff_t>((b + 1) * (p + 1)),
                          work.omega_at(W_B[b]).begin());
            const double e = subtree_error(ds, I_s, work, spec, s);
            if (grad) *grad = subtree_grad_omega(ds, I_s, work, spec, s, W_B);
            return e;
        };
        SolveReport rep = minimize(f, std::move(x0), solver);
        for (std::size_t b = 0; b < W_B.size(); ++b)
            std::copy(rep.x.begin() + static_cast<std::ptrdiff_t>(b * (p + 1)),
                      rep.x.begin() + static_cast<std::ptrdiff_t>((b + 1) * (p + 1)),
                      out.omega[b].begin());
        return out;
    }

    // imbalanced: weighted logistic regression on omega_s only
    std::vector<int> r(routed_left);
    std::vector<double> w(I_s.size());
    for (std::size_t k = 0; k < I_s.size(); ++k)
        w[k] = routed_left[k] ? 1.0 / (2.0 * std::max(L_s, 1e-12))
                              : 1.0 / (2.0 * std::max(1.0 - L_s, 1e-12));

    const bool high = (L_s <= eps2 || L_s >= 1.0 - eps2);
    out.branch = high ? BranchKind::HighImbalance : BranchKind::Moderate;

    if (high) {
        const int majority_left = (n_left * 2 >= I_s.size()) ? 1 : 0;
        const std::vector<double> point_err = subtree_point_errors(ds, I_s, params, spec, s);
        std::vector<std::size_t> cand;
        for (std::size_t k = 0; k < I_s.size(); ++k)
            if (routed_left[k] == majority_left) cand.push_back(k);
        std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
            if (point_err[a] != point_err[b]) return point_err[a] > point_err[b];
            return a < b;
        });
        std::size_t quota = static_cast<std::size_t>(
            std::ceil(eps3 * static_cast<double>(I_s.size())));
        for (std::size_t k : cand) {
            if (quota == 0) break;
            if (spec.spline() && ds.events[I_s[k]] == 1) {
                // exclusion rule: skip points whose target leaf has a
                // nonpositive spline derivative at their event time
                const int child = majority_left ? TreeTopology::right(s) : TreeTopology::left(s);
                const int target = params.topo.is_leaf(child)
                                       ? child
                                       : hbp_leaf_from(params, ds.features[I_s[k]], child);
                const double dsdy = spline_deriv(
                    spec.knots, std::span<const double>(params.beta_at(target)).subspan(p),
                    std::log(ds.times[I_s[k]]));
                if (dsdy <= 0.0) continue;
            }
            r[k] = 1 - r[k];
            --quota;
        }
    }

    ObjFn wlr = [&](const std::vector<double>& omega, std::vector<double>* grad) {
        double acc = 0.0;
        if (grad) std::fill(grad->begin(), grad->end(), 0.0);
        for (std::size_t k = 0; k < I_s.size(); ++k) {
            const auto& x = ds.features[I_s[k]];
            double v = -omega[0];
            for (std::size_t j = 0; j < p; ++j) v += omega[j + 1] * x[j];
            const double log1pe = (v > 0.0) ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
            acc += w[k] * ((r[k] == 1) ? (log1pe - v) : log1pe);
            if (grad) {
                const double resid = w[k] * (sigmoid(v) - r[k]);
                (*grad)[0] -= resid;
                for (std::size_t j = 0; j < p; ++j) (*grad)[j + 1] += resid * x[j];
            }
        }
        const double n = static_cast<double>(I_s.size());
        if (grad)
            for (double& g : *grad) g /= n;
        return acc / n;
    };
    SolveReport rep = minimize(wlr, params.omega_at(s), solver);
    for (std::size_t b = 0; b < W_B.size(); ++b)
        if (W_B[b] == s) out.omega[b] = rep.x;
    return out;
}

void ln_step(const SurvivalDataset& ds, const std::vector<int>& W_L,
             const std::vector<std::size_t>& I_s, TreeParams& params, const LeafModelSpec& spec,
             double lambda_beta, double rho, const SolveOptions& solver) {
    if (W_L.empty() || I_s.empty()) return;
    const std::size_t p = params.p;
    const std::size_t bd = spec.beta_dim(p);
    const int s = [&] {
        int node = W_L.front();
        while (true) {
            const int par = TreeTopology::parent(node);
            const auto dl = params.topo.descendant_leaves(par);
            const bool all = std::all_of(W_L.begin(), W_L.end(), [&](int l) {
                return std::find(dl.begin(), dl.end(), l) != dl.end();
            });
            if (!all || par < 1) break;
            node = par;
            if (dl.size() == W_L.size()) break;
        }
        return node;
    }();

    // routing weights are frozen during the LN step
    const std::vector<int> sub_leaves = params.topo.descendant_leaves(s);
    std::vector<std::vector<double>> P(I_s.size());
    for (std::size_t k = 0; k < I_s.size(); ++k)
        P[k] = subtree_leaf_probs(params, ds.features[I_s[k]], s);
    const double inv_n = 1.0 / static_cast<double>(I_s.size());

    auto leaf_weight = [&](std::size_t k, int leaf) {
        const auto it = std::find(sub_leaves.begin(), sub_leaves.end(), leaf);
        return (it == sub_leaves.end())
                   ? 0.0
                   : P[k][static_cast<std::size_t>(it - sub_leaves.begin())] * inv_n;
    };

    if (rho <= 0.0) {
        // the objective is additive in the beta blocks: solve per leaf
        for (int leaf : W_L) {
            ObjFn f = [&](const std::vector<double>& beta, std::vector<double>* grad) {
                double acc = 0.0;
                if (grad) std::fill(grad->begin(), grad->end(), 0.0);
                for (std::size_t k = 0; k < I_s.size(); ++k) {
                    const double wk = leaf_weight(k, leaf);
                    if (wk == 0.0) continue;
                    const std::size_t i = I_s[k];
                    double v;
                    if (try_leaf_nll(spec, beta, ds.features[i], ds.times[i], ds.events[i], v)) {
                        acc += wk * v;
                        if (grad)
                            leaf_nll_grad(spec, beta, ds.features[i], ds.times[i], ds.events[i],
                                          *grad, wk);
                    }
                }
                for (std::size_t j = 0; j < bd; ++j) {
                    acc += 0.5 * lambda_beta * beta[j] * beta[j];
                    if (grad) (*grad)[j] += lambda_beta * beta[j];
                }
                return acc;
            };
            params.beta_at(leaf) = minimize(f, params.beta_at(leaf), solver).x;
        }
        return;
    }

    // fairness-coupled joint solve over the beta blocks of W_L
    std::vector<int> leaf_of_point(ds.n());
    for (std::size_t i = 0; i < ds.n(); ++i) leaf_of_point[i] = hbp_leaf(params, ds.features[i]);
    const std::vector<double> grid = sorted_unique_times(ds);

    std::vector<double> x0;
    for (int leaf : W_L) {
        const auto& b = params.beta_at(leaf);
        x0.insert(x0.end(), b.begin(), b.end());
    }
    TreeParams work = params;
    ObjFn f = [&](const std::vector<double>& v, std::vector<double>* grad) {
        for (std::size_t b = 0; b < W_L.size(); ++b)
            std::copy(v.begin() + static_cast<std::ptrdiff_t>(b * bd),
                      v.begin() + static_cast<std::ptrdiff_t>((b + 1) * bd),
                      work.beta_at(W_L[b]).begin());
        double acc = 0.0;
        if (grad) {
            grad->assign(v.size(), 0.0);
        }
        for (std::size_t b = 0; b < W_L.size(); ++b) {
            const auto& beta = work.beta_at(W_L[b]);
            for (std::size_t k = 0; k < I_s.size(); ++k) {
                const double wk = leaf_weight(k, W_L[b]);
                if (wk == 0.0) continue;
                const std::size_t i = I_s[k];
                double nv;
                if (try_leaf_nll(spec, beta, ds.features[i], ds.times[i], ds.events[i], nv)) {
                    acc += wk * nv;
                    if (grad)
                        leaf_nll_grad(spec, beta, ds.features[i], ds.times[i], ds.events[i],
                                      {grad->data() + b * bd, bd}, wk);
                }
            }
            for (std::size_t j = 0; j < bd; ++j) {
                acc += 0.5 * lambda_beta * beta[j] * beta[j];
                if (grad) (*grad)[b * bd + j] += lambda_beta * beta[j];
            }
        }
        acc += rho * fairness_penalty_frozen(ds, work, spec, leaf_of_point, grid);
        if (grad)
            fairness_penalty_grad_beta(ds, work, spec, leaf_of_point, grid, W_L, *grad, rho);
        return acc;
    };
    SolveReport rep = minimize(f, std::move(x0), solver);
    for (std::size_t b = 0; b < W_L.size(); ++b)
        std::copy(rep.x.begin() + static_cast<std::ptrdiff_t>(b * bd),
                  rep.x.begin() + static_cast<std::ptrdiff_t>((b + 1) * bd),
                  params.beta_at(W_L[b]).begin());
}

TrainResult train(const SurvivalDataset& ds, const LeafModelSpec& spec, const TrainConfig& cfg,
                  const TreeParams& init) {
    TrainResult res;
    res.params = init;
    TreeParams current = init;
    auto objective = [&](const TreeParams& pr) {
        return (cfg.rho > 0.0) ? fair_objective(ds, pr, spec, cfg.lambda_beta, cfg.rho)
                               : tree_error(ds, pr, spec, cfg.lambda_beta);
    };
    double error_best = objective(current);
    res.error_best = error_best;

    double eps1 = cfg.eps1, eps2 = cfg.eps2, eps3 = cfg.eps3;
    const int n_branch = current.topo.n_branch();
    int k = 0;
    for (int it = 1; it <= cfg.max_macro_iters; ++it) {
        const double macro_start_best = error_best;
        for (int s = 1; s <= n_branch; ++s) {
            std::vector<int> W_B, W_L;
            if (s == 1 && cfg.depth > 1) {
                W_B = {1};
            } else {
                W_B = current.topo.subtree_branches(s);
                W_L = current.topo.descendant_leaves(s);
            }
            std::vector<std::size_t> I_s;
            for (std::size_t i = 0; i < ds.n(); ++i)
                if (hbp_path_contains(current, ds.features[i], s)) I_s.push_back(i);

            HistoryRow row;
            row.macro_iter = it;
            row.inner_iter = k;
            row.node = s;
            row.eps1 = eps1;
            row.eps2 = eps2;
            row.eps3 = eps3;
            if (!I_s.empty()) {
                BranchUpdate bu =
                    update_branch_node(ds, W_B, I_s, current, spec, eps1, eps2, eps3, cfg.solver);
                for (std::size_t b = 0; b < W_B.size(); ++b)
                    current.omega_at(W_B[b]) = bu.omega[b];
                row.branch = bu.branch;
                if (!W_L.empty())
                    ln_step(ds, W_L, I_s, current, spec, cfg.lambda_beta, cfg.rho, cfg.solver);
            }
            const double e = objective(current);
            row.error = e;
            if (e < error_best) {
                error_best = e;
                res.params = current;
            }
            row.error_best = error_best;
            res.history.push_back(row);
            ++k;
        }
        eps1 *= cfg.decay;
        eps2 *= cfg.decay;
        eps3 *= cfg.decay;
        const double improvement = macro_start_best - error_best;
        if (improvement < cfg.tol_rel * std::max(1.0, std::fabs(macro_start_best))) break;
    }
    res.error_best = error_best;
    return res;
}

TrainResult train_restarts(const SurvivalDataset& ds, LeafModelSpec& spec,
                           const TrainConfig& cfg) {
    prepare_spec(spec, ds);
    TrainResult best;
    bool have = false;
    for (int r = 0; r < cfg.restarts; ++r) {
        TrainConfig rc = cfg;
        rc.seed = cfg.seed + static_cast<std::uint64_t>(r);
        TreeParams init = (cfg.init_mode == InitMode::Clustering)
                              ? init_clustering(ds, spec, rc)
                              : init_random(ds, spec, cfg.depth, rc.seed);
        TrainResult res = train(ds, spec, rc, init);
        if (!have || res.error_best < best.error_best) {
            best = std::move(res);
            have = true;
        }
    }
    return best;
}

} // namespace sst
