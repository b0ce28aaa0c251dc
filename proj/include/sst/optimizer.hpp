#pragma once
#include <functional>
#include <vector>

#include "sst/errors.hpp"

namespace sst {

// f(x, grad): returns the value; fills *grad when grad != nullptr.
using ObjFn = std::function<double(const std::vector<double>&, std::vector<double>*)>;

enum class SolveStatus { Converged, MaxIter, LineSearchFail, FallbackUsed, NonFinite };

struct SolveOptions {
    int max_iter = 500;
    double gtol = 1e-6;
    int lbfgs_memory = 10;
    double armijo_c = 1e-4;
    int max_line_search = 50;
    int nm_max_iter = 40000;
    bool allow_fallback = true;
};

struct SolveReport {
    std::vector<double> x;
    double f = 0.0;
    double gnorm = 0.0;
    int iterations = 0;
    SolveStatus status = SolveStatus::Converged;
};

// Monotone unconstrained minimization: limited-memory quasi-Newton descent
// with Armijo backtracking; restarts once through a Nelder-Mead simplex if a
// non-finite value or gradient is encountered mid-run.
SolveReport minimize(const ObjFn& f, std::vector<double> x0, const SolveOptions& opts = {});

// Derivative-free simplex search; best-so-far is nonincreasing.
SolveReport nelder_mead(const ObjFn& f, std::vector<double> x0, int max_iter, double ftol = 1e-10);

} // namespace sst
