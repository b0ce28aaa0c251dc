#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sst/errors.hpp"

namespace sst {

// Right-censored survival data. Missing raw feature values are stored as NaN
// until preprocess() imputes them. After preprocessing every feature lies in
// [0,1] (for the fit fold) and the dataset is immutable by convention.
struct SurvivalDataset {
    std::vector<std::vector<double>> features;  // N rows of p values
    std::vector<double> times;
    std::vector<int> events;
    std::vector<int> group;  // empty when no sensitive-group column
    std::vector<std::string> feature_names;

    std::size_t n() const { return times.size(); }
    std::size_t p() const { return feature_names.size(); }
    bool has_group() const { return !group.empty(); }

    SurvivalDataset subset(const std::vector<std::size_t>& idx) const;
};

// Per-column preprocessing parameters fit on a training fold.
struct Scaler {
    std::vector<double> min, max;
    std::vector<double> impute;       // mean (continuous) or mode (categorical)
    std::vector<bool> categorical;    // <=10 distinct raw values heuristic
};

SurvivalDataset load_csv(const std::string& path, const std::string& time_col,
                         const std::string& event_col, const std::string& group_col = "");

Scaler fit_scaler(const SurvivalDataset& raw);
SurvivalDataset apply_scaler(const SurvivalDataset& raw, const Scaler& sc);

inline SurvivalDataset preprocess(const SurvivalDataset& raw) {
    return apply_scaler(raw, fit_scaler(raw));
}

struct FoldPlan {
    int k = 0;
    std::vector<int> assignments;
    std::uint64_t seed = 0;
};

FoldPlan kfold(const SurvivalDataset& ds, int k, std::uint64_t seed);

std::vector<std::size_t> fold_indices(const FoldPlan& plan, int fold, bool in_fold);

} // namespace sst
