#include "ipoperf/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ipoperf::optimize
{

namespace
{

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double sanitize(double v) { return std::isnan(v) ? kNegInf : v; }

}  // namespace

Result nelder_mead(const Objective &objective, const Eigen::VectorXd &start, const NelderMeadOptions &options)
{
    const Eigen::Index n = start.size();
    if (options.initial_step.size() != n)
        throw std::invalid_argument("nelder_mead: initial_step has the wrong size");

    Result result;
    auto eval = [&](const Eigen::VectorXd &x) {
        ++result.evaluations;
        return sanitize(objective(x));
    };

    std::vector<Eigen::VectorXd> vertex(static_cast<std::size_t>(n + 1), start);
    std::vector<double> value(static_cast<std::size_t>(n + 1));
    value[0] = eval(start);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        auto &v = vertex[static_cast<std::size_t>(i + 1)];
        v(i) += options.initial_step(i);
        value[static_cast<std::size_t>(i + 1)] = eval(v);
    }

    std::vector<std::size_t> order(vertex.size());
    Eigen::VectorXd centroid(n);
    while (true)
    {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value[a] > value[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second_worst = order[order.size() - 2];

        const double spread = value[best] - value[worst];
        if (std::isfinite(spread) && spread < options.tolerance)
        {
            result.converged = true;
            break;
        }
        if (result.iterations >= options.max_iterations)
            break;
        ++result.iterations;

        centroid.setZero();
        for (std::size_t k = 0; k + 1 < order.size(); ++k)
            centroid += vertex[order[k]];
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd reflected = centroid + (centroid - vertex[worst]);
        const double f_reflected = eval(reflected);
        if (f_reflected > value[best])
        {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - vertex[worst]);
            const double f_expanded = eval(expanded);
            if (f_expanded > f_reflected)
            {
                vertex[worst] = expanded;
                value[worst] = f_expanded;
            }
            else
            {
                vertex[worst] = reflected;
                value[worst] = f_reflected;
            }
            continue;
        }
        if (f_reflected > value[second_worst])
        {
            vertex[worst] = reflected;
            value[worst] = f_reflected;
            continue;
        }

        const bool outside = f_reflected > value[worst];
        const Eigen::VectorXd contracted =
            outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                    : Eigen::VectorXd(centroid + 0.5 * (vertex[worst] - centroid));
        const double f_contracted = eval(contracted);
        if (f_contracted > (outside ? f_reflected : value[worst]))
        {
            vertex[worst] = contracted;
            value[worst] = f_contracted;
            continue;
        }

        for (std::size_t k = 1; k < order.size(); ++k)
        {
            auto &v = vertex[order[k]];
            v = vertex[best] + 0.5 * (v - vertex[best]);
            value[order[k]] = eval(v);
        }
    }

    const auto best = static_cast<std::size_t>(std::max_element(value.begin(), value.end()) - value.begin());
    result.x = vertex[best];
    result.value = value[best];
    return result;
}

Result bfgs(const ObjectiveWithGradient &objective, const Eigen::VectorXd &start, const BfgsOptions &options)
{
    const Eigen::Index n = start.size();
    Result result;
    Eigen::VectorXd x = start;
    Eigen::VectorXd g(n);
    double f = sanitize(objective(x, g));
    ++result.evaluations;
    if (!std::isfinite(f) || !g.allFinite())
    {
        result.x = x;
        result.value = f;
        return result;
    }

    // Inverse Hessian approximation of -f.
    Eigen::MatrixXd inv_h = Eigen::MatrixXd::Identity(n, n);
    bool fresh = true;
    int stalled = 0;
    Eigen::VectorXd x_new(n), g_new(n);
    // The gradient of a sum of many terms cannot be resolved below a few ulps of the sum.
    const double noise = std::cbrt(std::numeric_limits<double>::epsilon());
    auto flat = [&](const Eigen::VectorXd &grad, double value) {
        return grad.lpNorm<Eigen::Infinity>() < std::max(options.gradient_tolerance, noise * std::abs(value));
    };

    while (result.iterations < options.max_iterations)
    {
        ++result.iterations;
        Eigen::VectorXd direction = inv_h * g;
        if (direction.dot(g) <= 0.0)
        {
            inv_h.setIdentity();
            fresh = true;
            direction = g;
        }
        // Keep the first trial step bounded in the unit-scaled coordinates.
        const double length = direction.lpNorm<Eigen::Infinity>();
        double step = length > 1.0 ? 1.0 / length : 1.0;

        double f_new = kNegInf;
        bool accepted = false;
        for (int k = 0; k < 40; ++k)
        {
            x_new = x + step * direction;
            f_new = sanitize(objective(x_new, g_new));
            ++result.evaluations;
            if (std::isfinite(f_new) && g_new.allFinite() && f_new >= f + 1e-4 * step * direction.dot(g))
            {
                accepted = true;
                break;
            }
            step *= 0.5;
        }

        if (!accepted)
        {
            if (!fresh)
            {
                inv_h.setIdentity();
                fresh = true;
                continue;
            }
            // Not even a tiny steepest-ascent step helps: a local maximum to working precision.
            result.converged = true;
            break;
        }

        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = g - g_new;  // gradient change of -f
        const double improvement = f_new - f;
        x = x_new;
        f = f_new;
        g = g_new;

        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm())
        {
            if (fresh)
            {
                inv_h *= sy / y.dot(y);
                fresh = false;
            }
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd left = Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
            inv_h = left * inv_h * left.transpose() + rho * s * s.transpose();
        }

        // Successive sub-tolerance improvements also count: at a kink of the objective (a
        // variance hitting its floor) the gradient never vanishes but the ascent is over.
        stalled = improvement < options.tolerance ? stalled + 1 : 0;
        if ((stalled >= 1 && flat(g, f)) || stalled >= 3)
        {
            result.converged = true;
            break;
        }
    }

    result.x = x;
    result.value = f;
    return result;
}

Eigen::VectorXd hessian_steps(const Eigen::VectorXd &x)
{
    return (1e-4 * x.cwiseAbs()).cwiseMax(1e-5);
}

Eigen::MatrixXd central_hessian(const Objective &objective, const Eigen::VectorXd &x, const Eigen::VectorXd &steps)
{
    const Eigen::Index n = x.size();
    Eigen::MatrixXd h(n, n);
    const double f0 = objective(x);
    Eigen::VectorXd p = x;
    for (Eigen::Index i = 0; i < n; ++i)
    {
        const double hi = steps(i);
        p(i) = x(i) + hi;
        const double fp = objective(p);
        p(i) = x(i) - hi;
        const double fm = objective(p);
        p(i) = x(i);
        h(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);

        for (Eigen::Index j = 0; j < i; ++j)
        {
            const double hj = steps(j);
            auto corner = [&](double si, double sj) {
                p(i) = x(i) + si * hi;
                p(j) = x(j) + sj * hj;
                const double v = objective(p);
                p(i) = x(i);
                p(j) = x(j);
                return v;
            };
            const double v = (corner(1, 1) - corner(1, -1) - corner(-1, 1) + corner(-1, -1)) / (4.0 * hi * hj);
            h(i, j) = v;
            h(j, i) = v;
        }
    }
    return h;
}

std::vector<std::optional<double>> inverse_hessian_std_errors(const Eigen::MatrixXd &hessian)
{
    const Eigen::Index n = hessian.rows();
    std::vector<std::optional<double>> se(static_cast<std::size_t>(n));
    if (!hessian.allFinite())
        return se;

    const Eigen::MatrixXd information = -0.5 * (hessian + hessian.transpose());
    const double scale = information.cwiseAbs().maxCoeff();
    if (!(scale > 0.0))
        return se;

    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < n; ++i)
        if (information.row(i).cwiseAbs().maxCoeff() > 1e-14 * scale)
            active.push_back(i);

    while (!active.empty())
    {
        const auto m = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixXd sub(m, m);
        for (Eigen::Index a = 0; a < m; ++a)
            for (Eigen::Index b = 0; b < m; ++b)
                sub(a, b) = information(active[a], active[b]);

        // Equilibrate so the eigenvalue test is insensitive to parameter units.
        const Eigen::VectorXd d = sub.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
        const Eigen::MatrixXd scaled = d.asDiagonal() * sub * d.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled);
        const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
        std::vector<bool> affected(static_cast<std::size_t>(m), false);
        bool any_bad = false;
        for (Eigen::Index k = 0; k < m; ++k)
        {
            if (eig.eigenvalues()(k) > 1e-10 * top)
                continue;
            any_bad = true;
            for (Eigen::Index a = 0; a < m; ++a)
                if (std::abs(eig.eigenvectors()(a, k)) > 1e-2)
                    affected[static_cast<std::size_t>(a)] = true;
        }
        if (!any_bad)
        {
            const Eigen::MatrixXd inverse = d.asDiagonal() * eig.eigenvectors() *
                                            eig.eigenvalues().cwiseInverse().asDiagonal() *
                                            eig.eigenvectors().transpose() * d.asDiagonal();
            for (Eigen::Index a = 0; a < m; ++a)
                if (inverse(a, a) > 0.0 && std::isfinite(inverse(a, a)))
                    se[static_cast<std::size_t>(active[a])] = std::sqrt(inverse(a, a));
            break;
        }
        std::vector<Eigen::Index> keep;
        for (Eigen::Index a = 0; a < m; ++a)
            if (!affected[static_cast<std::size_t>(a)])
                keep.push_back(active[a]);
        if (keep.size() == active.size())
            break;  // the null direction is spread thinly over everything: nothing is identified
        active = std::move(keep);
    }
    return se;
}

}  // namespace ipoperf::optimize
