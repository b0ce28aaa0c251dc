// Command-line front end: train / predict / evaluate / cv / fairness-sweep.
// Exit codes: 0 success, 2 usage or validation error, 3 runtime failure.
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "sst/dataset.hpp"
#include "sst/metrics.hpp"
#include "sst/model_io.hpp"
#include "sst/nodec.hpp"
#include "sst/objective.hpp"

namespace {

using namespace sst;

bool log_debug() {
    const char* v = std::getenv("SST_LOG");
    return v != nullptr && std::string(v) == "debug";
}

struct CommonArgs {
    std::string data, time_col = "time", event_col = "event", group_col;
};

struct TrainArgs {
    std::string family = "exp";
    int depth = 2;
    std::uint64_t seed = 0;
    std::string init = "random";
    double rho = 0.0;
    double lambda_beta = 0.0;
    int knots = 2;
    int restarts = 20;
    int max_iters = 10;
};

void add_common(CLI::App* app, CommonArgs& a) {
    app->add_option("--data", a.data, "input CSV")->required();
    app->add_option("--time-col", a.time_col, "observed-time column");
    app->add_option("--event-col", a.event_col, "event-indicator column");
    app->add_option("--group-col", a.group_col, "sensitive-group column");
}

void add_train(CLI::App* app, TrainArgs& a) {
    app->add_option("--family", a.family, "exp|weibull|llog|spline-po|spline-ph")
        ->check(CLI::IsMember({"exp", "weibull", "llog", "spline-po", "spline-ph"}));
    app->add_option("--depth", a.depth, "tree depth")->check(CLI::PositiveNumber);
    app->add_option("--seed", a.seed, "RNG seed");
    app->add_option("--init", a.init, "random|clustering")
        ->check(CLI::IsMember({"random", "clustering"}));
    app->add_option("--rho", a.rho, "fairness weight")->check(CLI::NonNegativeNumber);
    app->add_option("--lambda-beta", a.lambda_beta, "l2 weight")->check(CLI::NonNegativeNumber);
    app->add_option("--knots", a.knots, "internal spline knots")->check(CLI::NonNegativeNumber);
    app->add_option("--restarts", a.restarts, "initializations per fit")->check(CLI::PositiveNumber);
    app->add_option("--max-iters", a.max_iters, "macro iterations")->check(CLI::PositiveNumber);
}

TrainConfig to_config(const TrainArgs& a) {
    TrainConfig cfg;
    cfg.depth = a.depth;
    cfg.seed = a.seed;
    cfg.rho = a.rho;
    cfg.lambda_beta = a.lambda_beta;
    cfg.restarts = a.restarts;
    cfg.max_macro_iters = a.max_iters;
    cfg.init_mode = (a.init == "clustering") ? InitMode::Clustering : InitMode::Random;
    return cfg;
}

LeafModelSpec to_spec(const TrainArgs& a) {
    LeafModelSpec spec;
    spec.family = family_from_name(a.family);
    spec.knots_m = a.knots;
    return spec;
}

// Fingerprint of the preprocessed matrix, stable across runs.
std::string dataset_fingerprint(const SurvivalDataset& ds) {
    std::ostringstream buf;
    buf.precision(17);
    for (const auto& name : ds.feature_names) buf << name << ',';
    buf << '\n';
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (double v : ds.features[i]) buf << v << ',';
        buf << ds.times[i] << ',' << ds.events[i];
        if (ds.has_group()) buf << ',' << ds.group[i];
        buf << '\n';
    }
    return sha256_bytes(buf.str());
}

void write_manifest(const std::string& artifact, const nlohmann::json& config,
                    const std::string& fingerprint, double seconds) {
    nlohmann::json j{{"version", "sst-v1"},
                     {"config", config},
                     {"dataset_sha256", fingerprint},
                     {"elapsed_seconds", seconds}};
    std::ofstream out(artifact + ".manifest.json");
    out << j.dump(2) << "\n";
}

SurvivalEvaluator evaluator(const Model& m, const SurvivalDataset& ds) {
    return [&m, &ds](std::size_t i, double t) {
        const int leaf = hbp_leaf(m.params, ds.features[i]);
        return leaf_survival(m.spec, m.params.beta_at(leaf), ds.features[i], t);
    };
}

// Reorder the columns of a raw dataset to the model's schema.
SurvivalDataset align_schema(const SurvivalDataset& raw, const std::vector<std::string>& names) {
    std::vector<std::size_t> order;
    for (const auto& name : names) {
        const auto it = std::find(raw.feature_names.begin(), raw.feature_names.end(), name);
        if (it == raw.feature_names.end())
            throw SchemaMismatch("data is missing model feature \"" + name + "\"");
        order.push_back(static_cast<std::size_t>(it - raw.feature_names.begin()));
    }
    if (raw.p() != names.size())
        throw SchemaMismatch("data has extra feature columns not in the model");
    SurvivalDataset out = raw;
    out.feature_names = names;
    for (std::size_t i = 0; i < raw.n(); ++i) {
        for (std::size_t j = 0; j < order.size(); ++j) out.features[i][j] = raw.features[i][order[j]];
    }
    return out;
}

void write_history(const std::string& path, const std::vector<HistoryRow>& hist) {
    std::ofstream out(path);
    out.precision(17);
    out << "macro_iter,inner_iter,node,error,error_best,branch,eps1,eps2,eps3\n";
    for (const auto& r : hist)
        out << r.macro_iter << ',' << r.inner_iter << ',' << r.node << ',' << r.error << ','
            << r.error_best << ',' << branch_kind_name(r.branch) << ',' << r.eps1 << ',' << r.eps2
            << ',' << r.eps3 << '\n';
}

int cmd_train(const CommonArgs& c, const TrainArgs& t, const std::string& out_model,
              const std::string& out_history) {
    const auto t0 = std::chrono::steady_clock::now();
    const SurvivalDataset raw = load_csv(c.data, c.time_col, c.event_col, c.group_col);
    const Scaler sc = fit_scaler(raw);
    const SurvivalDataset ds = apply_scaler(raw, sc);

    LeafModelSpec spec = to_spec(t);
    const TrainConfig cfg = to_config(t);
    const TrainResult res = train_restarts(ds, spec, cfg);

    Model m{res.params, spec, raw.feature_names, sc};
    save_model(m, out_model);
    if (!out_history.empty()) write_history(out_history, res.history);

    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    nlohmann::json config{{"command", "train"},   {"family", t.family}, {"depth", t.depth},
                          {"seed", t.seed},       {"init", t.init},     {"rho", t.rho},
                          {"lambda_beta", t.lambda_beta}, {"knots", t.knots},
                          {"restarts", t.restarts}};
    write_manifest(out_model, config, dataset_fingerprint(ds), secs);
    if (log_debug()) std::cerr << "train: best error " << res.error_best << "\n";
    std::cout.precision(17);
    std::cout << "error_best," << res.error_best << "\n";
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& time_col, const std::string& event_col,
                const std::vector<double>& times, const std::string& out_path) {
    const Model m = load_model(model_path);
    SurvivalDataset raw = load_csv(data_path, time_col, event_col, "");
    raw = align_schema(raw, m.feature_names);
    const SurvivalDataset ds = apply_scaler(raw, m.scaler);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        out = &file;
    }
    out->precision(17);
    *out << "point_id,leaf,t,S\n";
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const int leaf = hbp_leaf(m.params, ds.features[i]);
        for (double t : times)
            *out << i << ',' << leaf << ',' << t << ','
                 << leaf_survival(m.spec, m.params.beta_at(leaf), ds.features[i], t) << '\n';
    }
    return 0;
}

int cmd_evaluate(const std::string& model_path, const CommonArgs& c, const std::string& out_path) {
    const Model m = load_model(model_path);
    SurvivalDataset raw = load_csv(c.data, c.time_col, c.event_col, c.group_col);
    raw = align_schema(raw, m.feature_names);
    const SurvivalDataset ds = apply_scaler(raw, m.scaler);

    const MetricReport r = compute_metrics(evaluator(m, ds), ds.times, ds.events);
    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        out = &file;
    }
    out->precision(17);
    *out << "c_harrell,c_uno,cd_auc,ibs";
    if (ds.has_group()) *out << ",fairness_penalty,gini_simple,gini_weighted";
    *out << '\n' << r.c_harrell << ',' << r.c_uno << ',' << r.cd_auc << ',' << r.ibs;
    if (ds.has_group()) {
        const double pen = fairness_penalty(ds, m.params, m.spec);
        std::vector<int> leaves(ds.n());
        for (std::size_t i = 0; i < ds.n(); ++i) leaves[i] = hbp_leaf(m.params, ds.features[i]);
        const GiniBalance g = gini_leaf_balance(leaves, ds.group);
        *out << ',' << pen << ',' << g.simple_avg << ',' << g.weighted_avg;
    }
    *out << '\n';
    return 0;
}

struct RunRow {
    int fold = 0, restart = 0;
    MetricReport train, test;
};

RunRow one_cv_run(const SurvivalDataset& raw, const FoldPlan& plan, int fold, int restart,
                  const TrainArgs& t) {
    const SurvivalDataset raw_train = raw.subset(fold_indices(plan, fold, false));
    const SurvivalDataset raw_test = raw.subset(fold_indices(plan, fold, true));
    const Scaler sc = fit_scaler(raw_train);
    const SurvivalDataset train_ds = apply_scaler(raw_train, sc);
    const SurvivalDataset test_ds = apply_scaler(raw_test, sc);

    LeafModelSpec spec = to_spec(t);
    TrainConfig cfg = to_config(t);
    cfg.restarts = 1;
    cfg.seed = t.seed + static_cast<std::uint64_t>(restart) +
               1000ULL * static_cast<std::uint64_t>(fold);
    const TrainResult res = train_restarts(train_ds, spec, cfg);

    Model m{res.params, spec, raw.feature_names, sc};
    RunRow row;
    row.fold = fold;
    row.restart = restart;
    row.train = compute_metrics(evaluator(m, train_ds), train_ds.times, train_ds.events);
    row.test = compute_metrics(evaluator(m, test_ds), test_ds.times, test_ds.events);
    return row;
}

int cmd_cv(const CommonArgs& c, const TrainArgs& t, int folds, int jobs,
           const std::string& out_path) {
    const SurvivalDataset raw = load_csv(c.data, c.time_col, c.event_col, c.group_col);
    const FoldPlan plan = kfold(raw, folds, t.seed);

    std::vector<std::pair<int, int>> tasks;
    for (int f = 0; f < folds; ++f)
        for (int r = 0; r < t.restarts; ++r) tasks.emplace_back(f, r);
    std::vector<RunRow> rows(tasks.size());
    std::vector<std::string> failures;
    std::mutex fail_mu;

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= tasks.size()) return;
            try {
                rows[k] = one_cv_run(raw, plan, tasks[k].first, tasks[k].second, t);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(fail_mu);
                failures.push_back(e.what());
            }
        }
    };
    const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (!failures.empty()) throw Error("cv run failed: " + failures.front());

    std::sort(rows.begin(), rows.end(), [](const RunRow& a, const RunRow& b) {
        return std::tie(a.fold, a.restart) < std::tie(b.fold, b.restart);
    });

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        out = &file;
    }
    out->precision(17);
    *out << "fold,restart,c_harrell_train,c_uno_train,cd_auc_train,ibs_train,"
            "c_harrell_test,c_uno_test,cd_auc_test,ibs_test\n";
    auto emit = [&](const RunRow& r, const std::string& tag) {
        *out << tag << r.train.c_harrell << ',' << r.train.c_uno << ',' << r.train.cd_auc << ','
             << r.train.ibs << ',' << r.test.c_harrell << ',' << r.test.c_uno << ','
             << r.test.cd_auc << ',' << r.test.ibs << '\n';
    };
    RunRow mean, sd;
    for (const auto& r : rows) {
        emit(r, std::to_string(r.fold) + "," + std::to_string(r.restart) + ",");
        for (auto [acc, v] : {std::pair{&mean.train.c_harrell, r.train.c_harrell},
                              {&mean.train.c_uno, r.train.c_uno},
                              {&mean.train.cd_auc, r.train.cd_auc},
                              {&mean.train.ibs, r.train.ibs},
                              {&mean.test.c_harrell, r.test.c_harrell},
                              {&mean.test.c_uno, r.test.c_uno},
                              {&mean.test.cd_auc, r.test.cd_auc},
                              {&mean.test.ibs, r.test.ibs}})
            *acc += v;
    }
    const double n = static_cast<double>(rows.size());
    for (double* v : {&mean.train.c_harrell, &mean.train.c_uno, &mean.train.cd_auc,
                      &mean.train.ibs, &mean.test.c_harrell, &mean.test.c_uno,
                      &mean.test.cd_auc, &mean.test.ibs})
        *v /= n;
    for (const auto& r : rows) {
        auto sq = [](double d) { return d * d; };
        sd.train.c_harrell += sq(r.train.c_harrell - mean.train.c_harrell);
        sd.train.c_uno += sq(r.train.c_uno - mean.train.c_uno);
        sd.train.cd_auc += sq(r.train.cd_auc - mean.train.cd_auc);
        sd.train.ibs += sq(r.train.ibs - mean.train.ibs);
        sd.test.c_harrell += sq(r.test.c_harrell - mean.test.c_harrell);
        sd.test.c_uno += sq(r.test.c_uno - mean.test.c_uno);
        sd.test.cd_auc += sq(r.test.cd_auc - mean.test.cd_auc);
        sd.test.ibs += sq(r.test.ibs - mean.test.ibs);
    }
    for (double* v : {&sd.train.c_harrell, &sd.train.c_uno, &sd.train.cd_auc, &sd.train.ibs,
                      &sd.test.c_harrell, &sd.test.c_uno, &sd.test.cd_auc, &sd.test.ibs})
        *v = std::sqrt(*v / n);
    emit(mean, "mean,,");
    emit(sd, "sd,,");
    return 0;
}

int cmd_fairness_sweep(const CommonArgs& c, const TrainArgs& t, int folds,
                       const std::string& out_path, const std::string& curves_path) {
    if (c.group_col.empty())
        throw MissingGroupColumn("fairness-sweep: --group-col is required");
    const SurvivalDataset raw = load_csv(c.data, c.time_col, c.event_col, c.group_col);
    const FoldPlan plan = kfold(raw, folds, t.seed);
    const SurvivalDataset raw_train = raw.subset(fold_indices(plan, 0, false));
    const SurvivalDataset raw_test = raw.subset(fold_indices(plan, 0, true));
    const Scaler sc = fit_scaler(raw_train);
    const SurvivalDataset train_ds = apply_scaler(raw_train, sc);
    const SurvivalDataset test_ds = apply_scaler(raw_test, sc);

    std::size_t n_g = 0;
    for (int g : train_ds.group) n_g += static_cast<std::size_t>(g);
    const std::size_t n_c = train_ds.n() - n_g;
    if (n_g == 0 || n_c == 0)
        throw MissingGroupColumn("fairness-sweep: both groups must be nonempty");
    const double base = 1.0 / (static_cast<double>(n_g) * static_cast<double>(n_c));
    const double steps[] = {0.0, 1.0, 5.0, 10.0, 15.0, 20.0};

    std::ofstream out(out_path.empty() ? "/dev/stdout" : out_path);
    out.precision(17);
    out << "rho,c_harrell_train,c_uno_train,cd_auc_train,ibs_train,"
           "c_harrell_test,c_uno_test,cd_auc_test,ibs_test,"
           "penalty_train,penalty_test,gini_simple,gini_weighted\n";
    std::ofstream curves;
    if (!curves_path.empty()) {
        curves.open(curves_path);
        curves.precision(17);
        curves << "rho,point_id,leaf,t,S\n";
    }
    const std::vector<double> grid = sorted_unique_times(train_ds);

    for (double step : steps) {
        TrainArgs ta = t;
        ta.rho = base * step;
        LeafModelSpec spec = to_spec(ta);
        TrainConfig cfg = to_config(ta);
        const TrainResult res = train_restarts(train_ds, spec, cfg);
        const Model m{res.params, spec, raw.feature_names, sc};

        const MetricReport mr_train =
            compute_metrics(evaluator(m, train_ds), train_ds.times, train_ds.events);
        const MetricReport mr_test =
            compute_metrics(evaluator(m, test_ds), test_ds.times, test_ds.events);
        const double pen_train = fairness_penalty(train_ds, m.params, m.spec);
        const double pen_test = fairness_penalty(test_ds, m.params, m.spec);
        std::vector<int> leaves(train_ds.n());
        for (std::size_t i = 0; i < train_ds.n(); ++i)
            leaves[i] = hbp_leaf(m.params, train_ds.features[i]);
        const GiniBalance g = gini_leaf_balance(leaves, train_ds.group);

        out << ta.rho << ',' << mr_train.c_harrell << ',' << mr_train.c_uno << ','
            << mr_train.cd_auc << ',' << mr_train.ibs << ',' << mr_test.c_harrell << ','
            << mr_test.c_uno << ',' << mr_test.cd_auc << ',' << mr_test.ibs << ',' << pen_train
            << ',' << pen_test << ',' << g.simple_avg << ',' << g.weighted_avg << '\n';

        if (curves.is_open()) {
            for (std::size_t i = 0; i < train_ds.n(); ++i)
                for (double tt : grid)
                    curves << ta.rho << ',' << i << ',' << leaves[i] << ',' << tt << ','
                           << leaf_survival(m.spec, m.params.beta_at(leaves[i]),
                                            train_ds.features[i], tt)
                           << '\n';
        }
        if (log_debug()) std::cerr << "sweep: rho " << ta.rho << " done\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"soft survival trees"};
    app.require_subcommand(1);

    CommonArgs common;
    TrainArgs targs;
    std::string out_model = "model.json", out_history, out_path, model_path, curves_path;
    std::vector<double> times;
    int folds = 5, jobs = 1;

    CLI::App* train = app.add_subcommand("train", "fit a tree and write a model file");
    add_common(train, common);
    add_train(train, targs);
    train->add_option("--out", out_model, "model JSON path");
    train->add_option("--history", out_history, "iteration history CSV path");

    CLI::App* predict = app.add_subcommand("predict", "per-point survival at given times");
    predict->add_option("--model", model_path, "model JSON")->required();
    predict->add_option("--data", common.data, "input CSV")->required();
    predict->add_option("--time-col", common.time_col, "observed-time column");
    predict->add_option("--event-col", common.event_col, "event-indicator column");
    predict->add_option("--times", times, "evaluation times")->required();
    predict->add_option("--out", out_path, "output CSV (default stdout)");

    CLI::App* evaluate = app.add_subcommand("evaluate", "metrics of a model on labeled data");
    evaluate->add_option("--model", model_path, "model JSON")->required();
    add_common(evaluate, common);
    evaluate->add_option("--out", out_path, "output CSV (default stdout)");

    CLI::App* cv = app.add_subcommand("cv", "k-fold cross-validated metrics");
    add_common(cv, common);
    add_train(cv, targs);
    cv->add_option("--folds", folds, "fold count")->check(CLI::Range(2, 1000000));
    cv->add_option("--jobs", jobs, "parallel workers")->check(CLI::PositiveNumber);
    cv->add_option("--out", out_path, "output CSV (default stdout)");

    CLI::App* sweep = app.add_subcommand("fairness-sweep", "metrics across the rho grid");
    add_common(sweep, common);
    add_train(sweep, targs);
    sweep->add_option("--folds", folds, "fold count")->check(CLI::Range(2, 1000000));
    sweep->add_option("--out", out_path, "sweep CSV (default stdout)");
    sweep->add_option("--curves", curves_path, "long-format survival-curve CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (train->parsed()) return cmd_train(common, targs, out_model, out_history);
        if (predict->parsed())
            return cmd_predict(model_path, common.data, common.time_col, common.event_col, times,
                               out_path);
        if (evaluate->parsed()) return cmd_evaluate(model_path, common, out_path);
        if (cv->parsed()) return cmd_cv(common, targs, folds, jobs, out_path);
        if (sweep->parsed()) return cmd_fairness_sweep(common, targs, folds, out_path, curves_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
