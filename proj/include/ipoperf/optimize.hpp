#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

namespace ipoperf::optimize
{

// Objectives are maximized. Infeasible points return -infinity.
using Objective = std::function<double(const Eigen::VectorXd &)>;
// Returns the objective and writes its gradient.
using ObjectiveWithGradient = std::function<double(const Eigen::VectorXd &, Eigen::VectorXd &)>;

struct Result
{
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

struct NelderMeadOptions
{
    Eigen::VectorXd initial_step;  // per-coordinate simplex edge
    int max_iterations = 500;
    double tolerance = 1e-8;       // spread of objective values across the simplex
};

// The start point is a simplex vertex, so value >= objective(start).
Result nelder_mead(const Objective &objective, const Eigen::VectorXd &start, const NelderMeadOptions &options);

struct BfgsOptions
{
    int max_iterations = 200;
    // Converged after one sub-tolerance improvement with a flat gradient, or three in a row.
    double tolerance = 1e-8;
    double gradient_tolerance = 1e-4;  // infinity norm; relaxed to cbrt(eps)*|f| for large objectives
};

// Quasi-Newton ascent with a backtracking line search; accepted steps never decrease the objective.
Result bfgs(const ObjectiveWithGradient &objective, const Eigen::VectorXd &start, const BfgsOptions &options);

// Per-coordinate step max(1e-5, 1e-4 |x_i|).
Eigen::VectorXd hessian_steps(const Eigen::VectorXd &x);

Eigen::MatrixXd central_hessian(const Objective &objective, const Eigen::VectorXd &x, const Eigen::VectorXd &steps);

// Square roots of diag((-H)^-1) for a log-likelihood Hessian H. Coordinates caught in a
// singular or indefinite direction come back empty.
std::vector<std::optional<double>> inverse_hessian_std_errors(const Eigen::MatrixXd &hessian);

}  // namespace ipoperf::optimize
