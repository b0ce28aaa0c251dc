#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "sst/dataset.hpp"
#include "sst/leaf_model.hpp"
#include "sst/objective.hpp"
#include "sst/optimizer.hpp"

namespace sst {

enum class InitMode { Random, Clustering };

struct TrainConfig {
    int depth = 2;
    int max_macro_iters = 10;      // M_it
    double eps1 = 0.1;             // imbalance threshold
    double eps2 = 0.3;             // high-imbalance threshold
    double eps3 = 0.4;             // reassigned fraction
    double decay = 0.8;            // threshold decay per macro iteration
    double lambda_beta = 0.0;
    double rho = 0.0;
    int restarts = 20;
    std::uint64_t seed = 0;
    double tol_rel = 1e-6;
    InitMode init_mode = InitMode::Random;
    int clustering_repeats = 5;
    SolveOptions solver;
};

enum class BranchKind { Balanced, Moderate, HighImbalance };

struct HistoryRow {
    int macro_iter = 0;
    int inner_iter = 0;
    int node = 0;
    double error = 0.0;
    double error_best = 0.0;
    BranchKind branch = BranchKind::Balanced;
    double eps1 = 0.0, eps2 = 0.0, eps3 = 0.0;
};

struct TrainResult {
    TreeParams params;
    std::vector<HistoryRow> history;
    double error_best = 0.0;
};

TreeParams init_random(const SurvivalDataset& ds, const LeafModelSpec& spec, int depth,
                       std::uint64_t seed);

TreeParams init_clustering(const SurvivalDataset& ds, const LeafModelSpec& spec,
                           const TrainConfig& cfg);

// Appendix-style branch node update with the data-point reassignment
// heuristic. Returns new omega vectors for the nodes of W_B (ordered as
// given); only omega_s changes in the imbalanced branches.
struct BranchUpdate {
    std::vector<std::vector<double>> omega;
    BranchKind branch = BranchKind::Balanced;
};
BranchUpdate update_branch_node(const SurvivalDataset& ds, const std::vector<int>& W_B,
                                const std::vector<std::size_t>& I_s, const TreeParams& params,
                                const LeafModelSpec& spec, double eps1, double eps2, double eps3,
                                const SolveOptions& solver);

// LN step: optimize the beta blocks of W_L on the restricted set I_s with
// omega frozen. rho > 0 adds the fairness penalty with frozen HBP leaves.
void ln_step(const SurvivalDataset& ds, const std::vector<int>& W_L,
             const std::vector<std::size_t>& I_s, TreeParams& params, const LeafModelSpec& spec,
             double lambda_beta, double rho, const SolveOptions& solver);

TrainResult train(const SurvivalDataset& ds, const LeafModelSpec& spec, const TrainConfig& cfg,
                  const TreeParams& init);

// Runs cfg.restarts trainings from fresh initializations (seed + restart
// index) and keeps the best by final objective.
TrainResult train_restarts(const SurvivalDataset& ds, LeafModelSpec& spec, const TrainConfig& cfg);

// Fits the shared KnotSet for spline specs from the training data.
void prepare_spec(LeafModelSpec& spec, const SurvivalDataset& ds);

std::string branch_kind_name(BranchKind k);

} // namespace sst
