#include "sst/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace sst {

double StepFunction::at(double t) const {
    // last jump time <= t
    auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
    if (it == jump_times.begin()) return 1.0;
    return values[static_cast<std::size_t>(it - jump_times.begin()) - 1];
}

double StepFunction::at_left(double t) const {
    auto it = std::lower_bound(jump_times.begin(), jump_times.end(), t);
    if (it == jump_times.begin()) return 1.0;
    return values[static_cast<std::size_t>(it - jump_times.begin()) - 1];
}

StepFunction kaplan_meier(const std::vector<double>& times, const std::vector<int>& events) {
    // group deaths/at-risk counts at each distinct time
    std::map<double, std::pair<int, int>> counts;  // time -> (deaths, total leaving)
    for (std::size_t i = 0; i < times.size(); ++i) {
        auto& c = counts[times[i]];
        c.first += events[i];
        c.second += 1;
    }
    StepFunction sf;
    double s = 1.0;
    int at_risk = static_cast<int>(times.size());
    for (const auto& [t, dc] : counts) {
        const auto [deaths, leaving] = dc;
        if (deaths > 0) {
            s *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
            sf.jump_times.push_back(t);
            sf.values.push_back(s);
        }
        at_risk -= leaving;
    }
    return sf;
}

StepFunction censoring_km(const std::vector<double>& times, const std::vector<int>& events) {
    std::vector<int> flipped(events.size());
    for (std::size_t i = 0; i < events.size(); ++i) flipped[i] = 1 - events[i];
    return kaplan_meier(times, flipped);
}

double c_harrell(const SurvivalEvaluator& preds, const std::vector<double>& times,
                 const std::vector<int>& events) {
    const std::size_t n = times.size();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (events[i] != 1) continue;
        const double si = preds(i, times[i]);
        for (std::size_t j = 0; j < n; ++j) {
            if (times[i] >= times[j]) continue;
            const double sj = preds(j, times[i]);
            den += 1.0;
            if (si < sj)
                num += 1.0;
            else if (si == sj)
                num += 0.5;
        }
    }
    if (den == 0.0) throw NoComparablePairs("c_harrell: no comparable pairs");
    return num / den;
}

double c_uno(const SurvivalEvaluator& preds, const std::vector<double>& times,
             const std::vector<int>& events, const StepFunction& G_hat) {
    const std::size_t n = times.size();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (events[i] != 1) continue;
        const double g = G_hat.at_left(times[i]);
        if (g <= 0.0) continue;  // weight undefined, pair excluded
        const double w = 1.0 / (g * g);
        const double si = preds(i, times[i]);
        for (std::size_t j = 0; j < n; ++j) {
            if (times[i] >= times[j]) continue;
            const double sj = preds(j, times[i]);
            den += w;
            if (si < sj)
                num += w;
            else if (si == sj)
                num += 0.5 * w;
        }
    }
    if (den == 0.0) throw NoComparablePairs("c_uno: no comparable pairs");
    return num / den;
}

double auc_at(const SurvivalEvaluator& preds, const std::vector<double>& times,
              const std::vector<int>& events, const StepFunction& G_hat, double t) {
    const std::size_t n = times.size();
    double num = 0.0, case_w = 0.0;
    std::size_t controls = 0;
    for (std::size_t j = 0; j < n; ++j)
        if (times[j] > t) ++controls;
    for (std::size_t i = 0; i < n; ++i) {
        if (events[i] != 1 || times[i] > t) continue;
        const double g = G_hat.at_left(times[i]);
        if (g <= 0.0) continue;
        const double w = 1.0 / g;
        case_w += w;
        const double si = preds(i, t);
        for (std::size_t j = 0; j < n; ++j) {
            if (times[j] <= t) continue;
            const double sj = preds(j, t);
            if (si < sj)
                num += w;
            else if (si == sj)
                num += 0.5 * w;  // ties as 0.5, consistent with the C-indices
        }
    }
    if (case_w == 0.0 || controls == 0)
        throw UndefinedAtTime("auc_at: no cases or no controls at t=" + std::to_string(t));
    return num / (case_w * static_cast<double>(controls));
}

double cd_auc(const SurvivalEvaluator& preds, const std::vector<double>& times,
              const std::vector<int>& events) {
    const double t_min = *std::min_element(times.begin(), times.end());
    const double t_max = *std::max_element(times.begin(), times.end());
    const StepFunction S = kaplan_meier(times, events);
    const StepFunction G = censoring_km(times, events);
    const double total = S.at(t_min) - S.at(t_max);
    if (!(total > 0.0)) throw DegenerateKM("cd_auc: S(t_min) - S(t_max) is not positive");
    double acc = 0.0;
    for (std::size_t k = 0; k < S.jump_times.size(); ++k) {
        const double tau = S.jump_times[k];
        if (tau <= t_min || tau > t_max) continue;
        const double dS = S.at_left(tau) - S.values[k];
        double a;
        try {
            a = auc_at(preds, times, events, G, tau);
        } catch (const UndefinedAtTime&) {
            continue;  // e.g. no controls beyond the last event time
        }
        acc += a * dS;
    }
    return acc / total;
}

double brier_at(const SurvivalEvaluator& preds, const std::vector<double>& times,
                const std::vector<int>& events, const StepFunction& G_hat, double t) {
    const std::size_t n = times.size();
    double acc = 0.0;
    const double gt = G_hat.at(t);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = preds(i, t);
        if (times[i] <= t && events[i] == 1) {
            const double g = G_hat.at_left(times[i]);
            if (g <= 0.0) continue;  // IPCW weight undefined, term excluded
            acc += s * s / g;
        } else if (times[i] > t) {
            if (gt <= 0.0) continue;
            acc += (s - 1.0) * (s - 1.0) / gt;
        }
    }
    return acc / static_cast<double>(n);
}

double ibs(const SurvivalEvaluator& preds, const std::vector<double>& times,
           const std::vector<int>& events) {
    const double t_max = *std::max_element(times.begin(), times.end());
    if (!(t_max > 0.0)) throw DegenerateCensoring("ibs: t_max must be positive");
    const StepFunction G = censoring_km(times, events);
    std::set<double> grid_set(times.begin(), times.end());
    grid_set.insert(0.0);
    grid_set.insert(t_max);
    const std::vector<double> grid(grid_set.begin(), grid_set.end());
    double acc = 0.0;
    double prev_t = grid[0], prev_bs = brier_at(preds, times, events, G, grid[0]);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const double bs = brier_at(preds, times, events, G, grid[k]);
        acc += 0.5 * (bs + prev_bs) * (grid[k] - prev_t);
        prev_t = grid[k];
        prev_bs = bs;
    }
    return acc / t_max;
}

GiniBalance gini_leaf_balance(const std::vector<int>& leaf_assignment,
                              const std::vector<int>& group) {
    if (group.empty() || group.size() != leaf_assignment.size())
        throw MissingGroupColumn("gini_leaf_balance: group labels required");
    std::map<int, std::pair<std::size_t, std::size_t>> leaves;  // leaf -> (count, in-group)
    for (std::size_t i = 0; i < leaf_assignment.size(); ++i) {
        auto& c = leaves[leaf_assignment[i]];
        c.first += 1;
        c.second += static_cast<std::size_t>(group[i]);
    }
    GiniBalance out;
    double wsum = 0.0;
    for (const auto& [leaf, c] : leaves) {
        const double p = static_cast<double>(c.second) / static_cast<double>(c.first);
        const double gini = 4.0 * p * (1.0 - p);
        out.simple_avg += gini;
        out.weighted_avg += gini * static_cast<double>(c.first);
        wsum += static_cast<double>(c.first);
    }
    out.simple_avg /= static_cast<double>(leaves.size());
    out.weighted_avg /= wsum;
    return out;
}

MetricReport compute_metrics(const SurvivalEvaluator& preds, const std::vector<double>& times,
                             const std::vector<int>& events) {
    MetricReport r;
    const StepFunction G = censoring_km(times, events);
    r.c_harrell = c_harrell(preds, times, events);
    r.c_uno = c_uno(preds, times, events, G);
    r.cd_auc = cd_auc(preds, times, events);
    r.ibs = ibs(preds, times, events);
    return r;
}

} // namespace sst
