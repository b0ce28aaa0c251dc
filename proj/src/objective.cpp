#include "sst/objective.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace sst {
namespace {

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw NonFinite(std::string(what) + ": non-finite value");
}

} // namespace

std::vector<double> sorted_unique_times(const SurvivalDataset& ds) {
    std::set<double> s(ds.times.begin(), ds.times.end());
    return {s.begin(), s.end()};
}

double subtree_error(const SurvivalDataset& ds, const std::vector<std::size_t>& I_s,
                     const TreeParams& params, const LeafModelSpec& spec, int s) {
    if (I_s.empty()) throw EmptyRestrictedSet("subtree_error: empty restricted set");
    const std::vector<int> leaves = params.topo.descendant_leaves(s);
    double acc = 0.0;
    for (std::size_t i : I_s) {
        const std::vector<double> P = subtree_leaf_probs(params, ds.features[i], s);
        for (std::size_t k = 0; k < leaves.size(); ++k) {
            double nll;
            if (try_leaf_nll(spec, params.beta_at(leaves[k]), ds.features[i], ds.times[i],
                             ds.events[i], nll))
                acc += P[k] * nll;
        }
    }
    const double e = acc / static_cast<double>(I_s.size());
    check_finite(e, "subtree_error");
    return e;
}

std::vector<double> subtree_point_errors(const SurvivalDataset& ds,
                                         const std::vector<std::size_t>& I_s,
                                         const TreeParams& params, const LeafModelSpec& spec,
                                         int s) {
    const std::vector<int> leaves = params.topo.descendant_leaves(s);
    std::vector<double> out;
    out.reserve(I_s.size());
    for (std::size_t i : I_s) {
        const std::vector<double> P = subtree_leaf_probs(params, ds.features[i], s);
        double acc = 0.0;
        for (std::size_t k = 0; k < leaves.size(); ++k) {
            double nll;
            if (try_leaf_nll(spec, params.beta_at(leaves[k]), ds.features[i], ds.times[i],
                             ds.events[i], nll))
                acc += P[k] * nll;
        }
        out.push_back(acc);
    }
    return out;
}

double tree_error(const SurvivalDataset& ds, const TreeParams& params, const LeafModelSpec& spec,
                  double lambda_beta) {
    std::vector<std::size_t> all(ds.n());
    for (std::size_t i = 0; i < ds.n(); ++i) all[i] = i;
    double e = subtree_error(ds, all, params, spec, 1);
    if (lambda_beta > 0.0) {
        double reg = 0.0;
        for (const auto& b : params.beta)
            for (double v : b) reg += v * v;
        e += 0.5 * lambda_beta * reg;
    }
    check_finite(e, "tree_error");
    return e;
}

std::vector<double> subtree_grad_omega(const SurvivalDataset& ds,
                                       const std::vector<std::size_t>& I_s,
                                       const TreeParams& params, const LeafModelSpec& spec, int s,
                                       const std::vector<int>& nodes) {
    const std::size_t p = params.p;
    const std::vector<int> leaves = params.topo.descendant_leaves(s);
    std::vector<double> grad(nodes.size() * (p + 1), 0.0);
    const double inv_n = 1.0 / static_cast<double>(I_s.size());

    for (std::size_t i : I_s) {
        const auto& x = ds.features[i];
        const std::vector<double> P = subtree_leaf_probs(params, x, s);
        // masked leaf NLLs
        std::vector<double> nll(leaves.size(), 0.0);
        for (std::size_t k = 0; k < leaves.size(); ++k) {
            double v;
            nll[k] = try_leaf_nll(spec, params.beta_at(leaves[k]), x, ds.times[i], ds.events[i], v)
                         ? v
                         : 0.0;
        }
        for (std::size_t b = 0; b < nodes.size(); ++b) {
            const int node = nodes[b];
            const double pl = branch_prob(params.omega_at(node), x);
            // dE_i/dv at node: sum over leaves under the left child gets (1-p),
            // under the right child gets (-p), times the leaf's P * nll.
            double acc = 0.0;
            for (std::size_t k = 0; k < leaves.size(); ++k) {
                // ascend from leaf to s checking which side of `node` it is on
                int n = leaves[k];
                int side = 0;  // 0: not a descendant path through node
                while (n != s) {
                    const int par = TreeTopology::parent(n);
                    if (par == node) {
                        side = (n == TreeTopology::left(par)) ? 1 : -1;
                        break;
                    }
                    n = par;
                }
                if (side == 1)
                    acc += P[k] * nll[k] * (1.0 - pl);
                else if (side == -1)
                    acc -= P[k] * nll[k] * pl;
            }
            acc *= inv_n;
            double* g = grad.data() + b * (p + 1);
            g[0] -= acc;  // d v / d omega_0 = -1
            for (std::size_t j = 0; j < p; ++j) g[j + 1] += acc * x[j];
        }
    }
    return grad;
}

std::vector<double> subtree_grad_beta(const SurvivalDataset& ds,
                                      const std::vector<std::size_t>& I_s,
                                      const TreeParams& params, const LeafModelSpec& spec, int s,
                                      const std::vector<int>& leaves, double lambda_beta) {
    const std::size_t bd = spec.beta_dim(params.p);
    const std::vector<int> sub_leaves = params.topo.descendant_leaves(s);
    std::vector<double> grad(leaves.size() * bd, 0.0);
    const double inv_n = 1.0 / static_cast<double>(I_s.size());

    for (std::size_t i : I_s) {
        const auto& x = ds.features[i];
        const std::vector<double> P = subtree_leaf_probs(params, x, s);
        for (std::size_t b = 0; b < leaves.size(); ++b) {
            const auto it = std::find(sub_leaves.begin(), sub_leaves.end(), leaves[b]);
            if (it == sub_leaves.end()) continue;
            const double w = P[static_cast<std::size_t>(it - sub_leaves.begin())] * inv_n;
            leaf_nll_grad(spec, params.beta_at(leaves[b]), x, ds.times[i], ds.events[i],
                          {grad.data() + b * bd, bd}, w);
        }
    }
    if (lambda_beta > 0.0) {
        for (std::size_t b = 0; b < leaves.size(); ++b) {
            const auto& beta = params.beta_at(leaves[b]);
            for (std::size_t j = 0; j < bd; ++j) grad[b * bd + j] += lambda_beta * beta[j];
        }
    }
    return grad;
}

double fairness_penalty_frozen(const SurvivalDataset& ds, const TreeParams& params,
                               const LeafModelSpec& spec, const std::vector<int>& leaf_of_point,
                               const std::vector<double>& grid) {
    if (!ds.has_group()) throw MissingGroupColumn("fairness_penalty: group labels required");
    const std::size_t n = ds.n();
    std::size_t n_g = 0;
    for (int g : ds.group) n_g += static_cast<std::size_t>(g);
    const std::size_t n_c = n - n_g;
    if (n_g == 0 || n_c == 0) return 0.0;

    // sum_{i in G, j in comp} (a_i - b_j)^2
    //   = |comp| sum a^2 + |G| sum b^2 - 2 (sum a)(sum b), per grid time.
    double acc = 0.0;
    for (double t : grid) {
        double sa = 0.0, sa2 = 0.0, sb = 0.0, sb2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double s = leaf_survival(spec, params.beta_at(leaf_of_point[i]), ds.features[i], t);
            if (ds.group[i] == 1) {
                sa += s;
                sa2 += s * s;
            } else {
                sb += s;
                sb2 += s * s;
            }
        }
        acc += static_cast<double>(n_c) * sa2 + static_cast<double>(n_g) * sb2 - 2.0 * sa * sb;
    }
    return acc;
}

void fairness_penalty_grad_beta(const SurvivalDataset& ds, const TreeParams& params,
                                const LeafModelSpec& spec, const std::vector<int>& leaf_of_point,
                                const std::vector<double>& grid, const std::vector<int>& leaves,
                                std::vector<double>& grad, double weight) {
    const std::size_t n = ds.n();
    const std::size_t bd = spec.beta_dim(params.p);
    std::size_t n_g = 0;
    for (int g : ds.group) n_g += static_cast<std::size_t>(g);
    const std::size_t n_c = n - n_g;
    if (n_g == 0 || n_c == 0) return;

    for (double t : grid) {
        double sa = 0.0, sb = 0.0;
        std::vector<double> sv(n);
        for (std::size_t i = 0; i < n; ++i) {
            sv[i] = leaf_survival(spec, params.beta_at(leaf_of_point[i]), ds.features[i], t);
            (ds.group[i] == 1 ? sa : sb) += sv[i];
        }
        // d/d s_i = 2 (|comp| s_i - sum_b) for i in G, symmetric otherwise
        for (std::size_t i = 0; i < n; ++i) {
            const auto it = std::find(leaves.begin(), leaves.end(), leaf_of_point[i]);
            if (it == leaves.end()) continue;
            const std::size_t b = static_cast<std::size_t>(it - leaves.begin());
            const double ds_coef = (ds.group[i] == 1)
                                       ? 2.0 * (static_cast<double>(n_c) * sv[i] - sb)
                                       : 2.0 * (static_cast<double>(n_g) * sv[i] - sa);
            leaf_survival_grad(spec, params.beta_at(leaf_of_point[i]), ds.features[i], t,
                               {grad.data() + b * bd, bd}, weight * ds_coef);
        }
    }
}

double fairness_penalty(const SurvivalDataset& ds, const TreeParams& params,
                        const LeafModelSpec& spec) {
    std::vector<int> leaf_of_point(ds.n());
    for (std::size_t i = 0; i < ds.n(); ++i) leaf_of_point[i] = hbp_leaf(params, ds.features[i]);
    return fairness_penalty_frozen(ds, params, spec, leaf_of_point, sorted_unique_times(ds));
}

double fair_objective(const SurvivalDataset& ds, const TreeParams& params,
                      const LeafModelSpec& spec, double lambda_beta, double rho) {
    double e = tree_error(ds, params, spec, lambda_beta);
    if (rho > 0.0) e += rho * fairness_penalty(ds, params, spec);
    check_finite(e, "fair_objective");
    return e;
}

} // namespace sst
