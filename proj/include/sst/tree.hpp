#pragma once
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "sst/errors.hpp"

namespace sst {

// Numerically stable logistic; saturates cleanly for |v| > ~700.
inline double sigmoid(double v) {
    if (v >= 0.0) {
        return 1.0 / (1.0 + std::exp(-v));
    }
    const double e = std::exp(v);
    return e / (1.0 + e);
}

// Complete binary tree in heap order: root = 1, children of n are 2n and
// 2n+1. Branch nodes are 1..2^D-1, leaves are 2^D..2^(D+1)-1.
struct TreeTopology {
    int depth = 1;

    int n_branch() const { return (1 << depth) - 1; }
    int n_leaf() const { return 1 << depth; }
    int first_leaf() const { return 1 << depth; }
    bool is_leaf(int n) const { return n >= first_leaf(); }

    static int left(int n) { return 2 * n; }
    static int right(int n) { return 2 * n + 1; }
    static int parent(int n) { return n / 2; }

    // Leaves of the subtree rooted at s, in heap order.
    std::vector<int> descendant_leaves(int s) const {
        int lo = s, hi = s;
        while (lo < first_leaf()) {
            lo = left(lo);
            hi = right(hi);
        }
        std::vector<int> out;
        for (int n = lo; n <= hi; ++n) out.push_back(n);
        return out;
    }

    // Branch nodes of the subtree rooted at s (including s).
    std::vector<int> subtree_branches(int s) const {
        std::vector<int> out;
        std::vector<int> stack{s};
        while (!stack.empty()) {
            int n = stack.back();
            stack.pop_back();
            if (is_leaf(n)) continue;
            out.push_back(n);
            stack.push_back(right(n));
            stack.push_back(left(n));
        }
        return out;
    }
};

// omega[b] is the (p+1)-vector for branch node b+1 (heap index), laid out
// as (intercept, feature weights). beta[l] is the leaf parameter vector
// for leaf with heap index first_leaf()+l; its layout is owned by the
// leaf model (see leaf_model.hpp).
struct TreeParams {
    TreeTopology topo;
    std::size_t p = 0;
    std::vector<std::vector<double>> omega;
    std::vector<std::vector<double>> beta;

    const std::vector<double>& omega_at(int node) const { return omega[node - 1]; }
    std::vector<double>& omega_at(int node) { return omega[node - 1]; }
    const std::vector<double>& beta_at(int leaf) const { return beta[leaf - topo.first_leaf()]; }
    std::vector<double>& beta_at(int leaf) { return beta[leaf - topo.first_leaf()]; }
};

// Probability of routing left: F(sum_j w_j x_j - w_0).
inline double branch_prob(std::span<const double> omega_n, std::span<const double> x) {
    if (omega_n.size() != x.size() + 1)
        throw DimensionMismatch("branch_prob: omega has " + std::to_string(omega_n.size()) +
                                " entries for " + std::to_string(x.size()) + " features");
    double v = -omega_n[0];
    for (std::size_t j = 0; j < x.size(); ++j) v += omega_n[j + 1] * x[j];
    return sigmoid(v);
}

// P_{xn} for every leaf of the subtree rooted at `s`, in heap order of the
// leaves. With s = 1 this is Definition 2's leaf probability vector.
inline std::vector<double> subtree_leaf_probs(const TreeParams& params, std::span<const double> x,
                                              int s) {
    const auto& topo = params.topo;
    std::vector<int> leaves = topo.descendant_leaves(s);
    std::vector<double> out(leaves.size());
    for (std::size_t k = 0; k < leaves.size(); ++k) {
        double prob = 1.0;
        int n = leaves[k];
        while (n != s) {
            int par = TreeTopology::parent(n);
            double pl = branch_prob(params.omega_at(par), x);
            prob *= (n == TreeTopology::left(par)) ? pl : (1.0 - pl);
            n = par;
        }
        out[k] = prob;
    }
    return out;
}

inline std::vector<double> leaf_probs(const TreeParams& params, std::span<const double> x) {
    return subtree_leaf_probs(params, x, 1);
}

// HBP routing below node s: go left iff p >= 0.5. Returns a leaf heap index.
inline int hbp_leaf_from(const TreeParams& params, std::span<const double> x, int s) {
    int n = s;
    while (!params.topo.is_leaf(n)) {
        double pl = branch_prob(params.omega_at(n), x);
        n = (pl >= 0.5) ? TreeTopology::left(n) : TreeTopology::right(n);
    }
    return n;
}

inline int hbp_leaf(const TreeParams& params, std::span<const double> x) {
    return hbp_leaf_from(params, x, 1);
}

// Does the HBP path of x contain node s?
inline bool hbp_path_contains(const TreeParams& params, std::span<const double> x, int s) {
    int n = 1;
    while (true) {
        if (n == s) return true;
        if (params.topo.is_leaf(n)) return false;
        double pl = branch_prob(params.omega_at(n), x);
        n = (pl >= 0.5) ? TreeTopology::left(n) : TreeTopology::right(n);
    }
}

} // namespace sst
