#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sst/dataset.hpp"

using namespace sst;

namespace {

struct TempCsv {
    std::string path;
    explicit TempCsv(const std::string& content) {
        static int counter = 0;
        path = (std::filesystem::temp_directory_path() /
                ("sst_test_" + std::to_string(counter++) + ".csv"))
                   .string();
        std::ofstream out(path);
        out << content;
    }
    ~TempCsv() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("load_csv basics") {
    TempCsv f("t,c,x1\n1.0,1,0.5\n2.0,0,0.7\n3.5,1,0.9\n");
    SurvivalDataset ds = load_csv(f.path, "t", "c");
    CHECK(ds.n() == 3);
    CHECK(ds.p() == 1);
    CHECK(ds.feature_names == std::vector<std::string>{"x1"});
    CHECK(ds.times[1] == 2.0);
    CHECK(ds.events[1] == 0);
    CHECK_FALSE(ds.has_group());
}

TEST_CASE("load_csv validation errors") {
    TempCsv bad_event("t,c,x1\n1.0,2,0.5\n");
    CHECK_THROWS_AS(load_csv(bad_event.path, "t", "c"), BadEventFlag);

    TempCsv bad_time("t,c,x1\n-1.0,1,0.5\n");
    CHECK_THROWS_AS(load_csv(bad_time.path, "t", "c"), NonPositiveTime);

    TempCsv ok("t,c,x1\n1.0,1,0.5\n");
    CHECK_THROWS_AS(load_csv(ok.path, "missing", "c"), MissingColumn);

    TempCsv bad_num("t,c,x1\n1.0,1,abc\n");
    CHECK_THROWS_AS(load_csv(bad_num.path, "t", "c"), ParseError);
}

TEST_CASE("load_csv quoting and group column") {
    TempCsv f("\"t\",c,x1,grp\n1.0,1,\"1.5\",0\n2.0,0,2.5,1\n");
    SurvivalDataset ds = load_csv(f.path, "t", "c", "grp");
    CHECK(ds.n() == 2);
    CHECK(ds.features[0][0] == doctest::Approx(1.5));
    CHECK(ds.has_group());
    CHECK(ds.group == std::vector<int>{0, 1});
}

TEST_CASE("preprocess hand examples") {
    // continuous column (>10 distinct values would be continuous; with 3 rows
    // the heuristic marks it categorical, but min-max output is identical)
    TempCsv f("t,c,a,b\n1,1,2,5\n2,1,4,5\n3,1,6,5\n");
    SurvivalDataset ds = preprocess(load_csv(f.path, "t", "c"));
    CHECK(ds.features[0][0] == doctest::Approx(0.0));
    CHECK(ds.features[1][0] == doctest::Approx(0.5));
    CHECK(ds.features[2][0] == doctest::Approx(1.0));
    // constant column maps to 0
    for (int i = 0; i < 3; ++i) CHECK(ds.features[static_cast<std::size_t>(i)][1] == 0.0);
}

TEST_CASE("preprocess imputes the missing middle value to the mean") {
    TempCsv f("t,c,a\n1,1,1\n2,1,\n3,1,3\n");
    SurvivalDataset ds = preprocess(load_csv(f.path, "t", "c"));
    CHECK(ds.features[0][0] == doctest::Approx(0.0));
    CHECK(ds.features[1][0] == doctest::Approx(0.5));
    CHECK(ds.features[2][0] == doctest::Approx(1.0));
}

TEST_CASE("categorical mode imputation") {
    TempCsv f("t,c,a\n1,1,7\n2,1,7\n3,1,9\n4,1,na\n");
    SurvivalDataset ds = preprocess(load_csv(f.path, "t", "c"));
    // mode is 7 -> scales to 0
    CHECK(ds.features[3][0] == doctest::Approx(0.0));
}

TEST_CASE("all-missing column") {
    TempCsv f("t,c,a\n1,1,\n2,1,nan\n");
    CHECK_THROWS_AS(preprocess(load_csv(f.path, "t", "c")), AllMissingColumn);
}

TEST_CASE("preprocessing is idempotent") {
    TempCsv f("t,c,a,b\n1,1,2,1\n2,0,4,9\n3,1,6,4\n4,1,5,2\n");
    SurvivalDataset once = preprocess(load_csv(f.path, "t", "c"));
    SurvivalDataset twice = preprocess(once);
    for (std::size_t i = 0; i < once.n(); ++i)
        for (std::size_t j = 0; j < once.p(); ++j)
            CHECK(twice.features[i][j] == doctest::Approx(once.features[i][j]).epsilon(1e-12));
}

TEST_CASE("scaler reuse on held-out rows") {
    TempCsv f("t,c,a\n1,1,10\n2,1,20\n3,1,30\n");
    SurvivalDataset raw = load_csv(f.path, "t", "c");
    Scaler sc = fit_scaler(raw);
    TempCsv g("t,c,a\n1,1,40\n");
    SurvivalDataset held = apply_scaler(load_csv(g.path, "t", "c"), sc);
    // outside the training range: scaled with training min/max, not clipped to fit
    CHECK(held.features[0][0] == doctest::Approx(1.5));
}

TEST_CASE("kfold sizes and determinism") {
    SurvivalDataset ds;
    auto fill = [&](std::size_t n) {
        ds.feature_names = {"x"};
        ds.features.assign(n, {0.0});
        ds.times.assign(n, 1.0);
        ds.events.assign(n, 1);
    };
    fill(10);
    FoldPlan plan = kfold(ds, 5, 42);
    for (int f = 0; f < 5; ++f) CHECK(fold_indices(plan, f, true).size() == 2);

    fill(11);
    FoldPlan plan11 = kfold(ds, 5, 42);
    std::vector<std::size_t> sizes;
    for (int f = 0; f < 5; ++f) sizes.push_back(fold_indices(plan11, f, true).size());
    std::sort(sizes.begin(), sizes.end());
    CHECK(sizes == std::vector<std::size_t>{2, 2, 2, 2, 3});

    FoldPlan again = kfold(ds, 5, 42);
    CHECK(again.assignments == plan11.assignments);
    FoldPlan other = kfold(ds, 5, 43);
    CHECK(other.assignments != plan11.assignments);

    CHECK_THROWS_AS(kfold(ds, 12, 0), TooFewRows);
}

TEST_CASE("subset keeps rows aligned") {
    SurvivalDataset ds;
    ds.feature_names = {"x"};
    ds.features = {{1.0}, {2.0}, {3.0}};
    ds.times = {10.0, 20.0, 30.0};
    ds.events = {1, 0, 1};
    ds.group = {0, 1, 1};
    SurvivalDataset sub = ds.subset({2, 0});
    CHECK(sub.n() == 2);
    CHECK(sub.times == std::vector<double>{30.0, 10.0});
    CHECK(sub.events == std::vector<int>{1, 1});
    CHECK(sub.group == std::vector<int>{1, 0});
    CHECK(sub.features[0][0] == 3.0);
}
