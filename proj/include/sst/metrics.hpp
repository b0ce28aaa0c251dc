#pragma once
#include <functional>
#include <vector>

#include "sst/errors.hpp"

namespace sst {

// Right-continuous step function with value 1 before the first jump.
struct StepFunction {
    std::vector<double> jump_times;  // sorted, distinct
    std::vector<double> values;      // value at and after each jump

    double at(double t) const;       // S(t)
    double at_left(double t) const;  // S(t-)
};

StepFunction kaplan_meier(const std::vector<double>& times, const std::vector<int>& events);
StepFunction censoring_km(const std::vector<double>& times, const std::vector<int>& events);

// preds(i, t) = predicted survival probability of point i at time t.
using SurvivalEvaluator = std::function<double(std::size_t, double)>;

double c_harrell(const SurvivalEvaluator& preds, const std::vector<double>& times,
                 const std::vector<int>& events);

double c_uno(const SurvivalEvaluator& preds, const std::vector<double>& times,
             const std::vector<int>& events, const StepFunction& G_hat);

double auc_at(const SurvivalEvaluator& preds, const std::vector<double>& times,
              const std::vector<int>& events, const StepFunction& G_hat, double t);

double cd_auc(const SurvivalEvaluator& preds, const std::vector<double>& times,
              const std::vector<int>& events);

double brier_at(const SurvivalEvaluator& preds, const std::vector<double>& times,
                const std::vector<int>& events, const StepFunction& G_hat, double t);

double ibs(const SurvivalEvaluator& preds, const std::vector<double>& times,
           const std::vector<int>& events);

// Normalized two-class Gini balance 4 p (1-p) per nonempty leaf; returns
// (simple average, occupancy-weighted average).
struct GiniBalance {
    double simple_avg = 0.0;
    double weighted_avg = 0.0;
};
GiniBalance gini_leaf_balance(const std::vector<int>& leaf_assignment,
                              const std::vector<int>& group);

struct MetricReport {
    double c_harrell = 0.0;
    double c_uno = 0.0;
    double cd_auc = 0.0;
    double ibs = 0.0;
};

MetricReport compute_metrics(const SurvivalEvaluator& preds, const std::vector<double>& times,
                             const std::vector<int>& events);

} // namespace sst
