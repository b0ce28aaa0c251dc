#pragma once
#include <cstddef>
#include <vector>

#include "sst/dataset.hpp"
#include "sst/leaf_model.hpp"
#include "sst/tree.hpp"

namespace sst {

// Mean P-weighted censored NLL over the whole tree plus the l2 regularizer
// lambda_beta/2 * ||beta||^2. Spline (point, leaf) terms with a nonpositive
// derivative at an observed event contribute 0 (exclusion rule).
double tree_error(const SurvivalDataset& ds, const TreeParams& params, const LeafModelSpec& spec,
                  double lambda_beta);

// Restricted error for the subtree rooted at s over the index set I_s, with
// leaf probabilities computed relative to s. No regularizer.
double subtree_error(const SurvivalDataset& ds, const std::vector<std::size_t>& I_s,
                     const TreeParams& params, const LeafModelSpec& spec, int s);

// Per-point restricted error terms (the reassignment heuristic ranks these).
std::vector<double> subtree_point_errors(const SurvivalDataset& ds,
                                         const std::vector<std::size_t>& I_s,
                                         const TreeParams& params, const LeafModelSpec& spec,
                                         int s);

// Gradient of subtree_error w.r.t. the omega blocks of the listed branch
// nodes, in the listed order; each block has p+1 entries.
std::vector<double> subtree_grad_omega(const SurvivalDataset& ds,
                                       const std::vector<std::size_t>& I_s,
                                       const TreeParams& params, const LeafModelSpec& spec, int s,
                                       const std::vector<int>& nodes);

// Gradient of the restricted error + regularizer w.r.t. the beta blocks of
// the listed leaves, in the listed order.
std::vector<double> subtree_grad_beta(const SurvivalDataset& ds,
                                      const std::vector<std::size_t>& I_s,
                                      const TreeParams& params, const LeafModelSpec& spec, int s,
                                      const std::vector<int>& leaves, double lambda_beta);

// Group-fairness penalty: sum over (i in G, j in complement) of the summed
// squared survival differences at the sorted unique training times, with HBP
// leaf assignments under the current omega.
double fairness_penalty(const SurvivalDataset& ds, const TreeParams& params,
                        const LeafModelSpec& spec);

// Same penalty evaluated from precomputed HBP leaf assignments and a fixed
// time grid; also exposes the gradient w.r.t. the beta blocks of `leaves`.
double fairness_penalty_frozen(const SurvivalDataset& ds, const TreeParams& params,
                               const LeafModelSpec& spec, const std::vector<int>& leaf_of_point,
                               const std::vector<double>& grid);

void fairness_penalty_grad_beta(const SurvivalDataset& ds, const TreeParams& params,
                                const LeafModelSpec& spec, const std::vector<int>& leaf_of_point,
                                const std::vector<double>& grid, const std::vector<int>& leaves,
                                std::vector<double>& grad, double weight);

double fair_objective(const SurvivalDataset& ds, const TreeParams& params,
                      const LeafModelSpec& spec, double lambda_beta, double rho);

std::vector<double> sorted_unique_times(const SurvivalDataset& ds);

} // namespace sst
