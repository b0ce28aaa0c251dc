#include <random>

#include "doctest.h"
#include "sst/survdist.hpp"

using namespace sst;

namespace {

// Central finite-difference gradient of the NLL in beta.
std::vector<double> fd_grad(Family f, std::vector<double> beta, const std::vector<double>& x,
                            double t, int c) {
    std::vector<double> g(beta.size());
    for (std::size_t j = 0; j < beta.size(); ++j) {
        const double h = 1e-6 * (1.0 + std::fabs(beta[j]));
        const double keep = beta[j];
        beta[j] = keep + h;
        const double up = parametric_nll(f, beta, x, t, c);
        beta[j] = keep - h;
        const double dn = parametric_nll(f, beta, x, t, c);
        beta[j] = keep;
        g[j] = (up - dn) / (2.0 * h);
    }
    return g;
}

} // namespace

TEST_CASE("hazard hand values") {
    // Exp mu=1: h == 1
    std::vector<double> b_exp{0.0};
    std::vector<double> x{};
    CHECK(parametric_hazard(Family::Exp, b_exp, x, 0.5) == doctest::Approx(1.0));
    CHECK(parametric_hazard(Family::Exp, b_exp, x, 7.0) == doctest::Approx(1.0));

    // Weibull alpha=1, scale mu=2: h == 1/2
    std::vector<double> b_wei{std::log(2.0), 0.0};
    CHECK(parametric_hazard(Family::Weibull, b_wei, x, 3.0) == doctest::Approx(0.5).epsilon(1e-12));

    // Llog mu=1, alpha=2, t=1: h = 2/(1+1) = 1
    std::vector<double> b_llog{0.0, std::log(2.0)};
    CHECK(parametric_hazard(Family::LogLogistic, b_llog, x, 1.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cumulative hazard hand values") {
    std::vector<double> x{};
    // Exp rate mu=2, t=0.5 -> 1
    std::vector<double> b_exp{std::log(2.0)};
    CHECK(parametric_cumhaz(Family::Exp, b_exp, x, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
    // Weibull mu=1, alpha=2, t=3 -> 9
    std::vector<double> b_wei{0.0, std::log(2.0)};
    CHECK(parametric_cumhaz(Family::Weibull, b_wei, x, 3.0) == doctest::Approx(9.0).epsilon(1e-10));
    // Llog t=mu -> log 2 for any alpha
    std::vector<double> b_llog{std::log(1.7), std::log(5.0)};
    CHECK(parametric_cumhaz(Family::LogLogistic, b_llog, x, 1.7) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("survival hand values") {
    std::vector<double> x{};
    std::vector<double> b_exp{0.0};
    CHECK(parametric_survival(Family::Exp, b_exp, x, 0.0) == 1.0);
    CHECK(parametric_survival(Family::Exp, b_exp, x, 1.0) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    std::vector<double> b_llog{std::log(3.0), std::log(2.0)};
    CHECK(parametric_survival(Family::LogLogistic, b_llog, x, 3.0) ==
          doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("nll hand values") {
    std::vector<double> x{};
    std::vector<double> b_exp{0.0};
    CHECK(parametric_nll(Family::Exp, b_exp, x, 2.0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(parametric_nll(Family::Exp, b_exp, x, 2.0, 1) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(parametric_nll(Family::Exp, b_exp, x, 0.0, 1), NonPositiveTime);
}

TEST_CASE("Weibull with alpha = 1 reduces to Exponential") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::uniform_real_distribution<double> ut(0.05, 5.0);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> x{uni(rng), uni(rng)};
        std::vector<double> gw{uni(rng), uni(rng), uni(rng), 0.0};  // a = 0 -> alpha = 1
        // Exp rate = 1/mu: gamma_exp = -gamma_weibull
        std::vector<double> ge{-gw[0], -gw[1], -gw[2]};
        const double t = ut(rng);
        const int c = static_cast<int>(rng() % 2);
        CHECK(parametric_nll(Family::Weibull, gw, x, t, c) ==
              doctest::Approx(parametric_nll(Family::Exp, ge, x, t, c)).epsilon(1e-10));
    }
}

TEST_CASE("nll gradients match finite differences") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::uniform_real_distribution<double> ut(0.1, 4.0);
    for (Family f : {Family::Exp, Family::Weibull, Family::LogLogistic}) {
        for (int rep = 0; rep < 200; ++rep) {
            std::vector<double> x{uni(rng), uni(rng)};
            std::vector<double> beta(3 + ancillary_count(f));
            for (double& v : beta) v = uni(rng);
            const double t = ut(rng);
            const int c = static_cast<int>(rng() % 2);
            std::vector<double> g(beta.size(), 0.0);
            parametric_nll_grad(f, beta, x, t, c, g);
            const auto fd = fd_grad(f, beta, x, t, c);
            for (std::size_t j = 0; j < g.size(); ++j)
                CHECK(g[j] == doctest::Approx(fd[j]).epsilon(1e-5));
        }
    }
}

TEST_CASE("survival gradients match finite differences") {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (Family f : {Family::Exp, Family::Weibull, Family::LogLogistic}) {
        for (int rep = 0; rep < 100; ++rep) {
            std::vector<double> x{uni(rng)};
            std::vector<double> beta(2 + ancillary_count(f));
            for (double& v : beta) v = uni(rng);
            const double t = 0.2 + 2.0 * (uni(rng) + 1.0);
            std::vector<double> g(beta.size(), 0.0);
            parametric_survival_grad(f, beta, x, t, g, 1.0);
            for (std::size_t j = 0; j < beta.size(); ++j) {
                const double h = 1e-6 * (1.0 + std::fabs(beta[j]));
                std::vector<double> bp = beta, bm = beta;
                bp[j] += h;
                bm[j] -= h;
                const double fd = (parametric_survival(f, bp, x, t) -
                                   parametric_survival(f, bm, x, t)) /
                                  (2.0 * h);
                CHECK(g[j] == doctest::Approx(fd).epsilon(2e-5));
            }
        }
    }
}

TEST_CASE("weighted gradient accumulation") {
    std::vector<double> x{0.5};
    std::vector<double> beta{0.2, -0.3};
    std::vector<double> g1(2, 0.0), g2(2, 0.0);
    parametric_nll_grad(Family::Exp, beta, x, 1.5, 1, g1, 1.0);
    parametric_nll_grad(Family::Exp, beta, x, 1.5, 1, g2, 0.25);
    parametric_nll_grad(Family::Exp, beta, x, 1.5, 1, g2, 0.75);
    for (int j = 0; j < 2; ++j) CHECK(g1[j] == doctest::Approx(g2[j]).epsilon(1e-12));
}
