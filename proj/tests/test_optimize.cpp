#include "support.hpp"

#include "ipoperf/optimize.hpp"

#include <random>

using namespace ipoperf::optimize;

namespace
{

// -1/2 sum (x_i - m_i)^2 / v_i: maximum at m, standard errors sqrt(v).
struct Quadratic
{
    Eigen::VectorXd m, v;

    double operator()(const Eigen::VectorXd &x) const { return -0.5 * ((x - m).array().square() / v.array()).sum(); }
    double operator()(const Eigen::VectorXd &x, Eigen::VectorXd &g) const
    {
        g = -((x - m).array() / v.array()).matrix();
        return (*this)(x);
    }
};

double rosenbrock(const Eigen::VectorXd &x, Eigen::VectorXd &g)
{
    const double a = 1.0 - x(0), b = x(1) - x(0) * x(0);
    g.resize(2);
    g << 2.0 * a + 400.0 * x(0) * b, -200.0 * b;
    return -(a * a + 100.0 * b * b);
}

}  // namespace

TEST_CASE("nelder-mead climbs a quadratic")
{
    Quadratic q{Eigen::Vector3d(1.0, -2.0, 0.5), Eigen::Vector3d(1.0, 4.0, 0.25)};
    NelderMeadOptions opt;
    opt.initial_step = Eigen::VectorXd::Constant(3, 0.5);
    opt.max_iterations = 2000;
    opt.tolerance = 1e-14;
    const Eigen::VectorXd start = Eigen::VectorXd::Zero(3);
    const auto r = nelder_mead(q, start, opt);
    CHECK(r.converged);
    CHECK(r.value >= q(start));
    CHECK((r.x - q.m).cwiseAbs().maxCoeff() < 1e-4);
    CHECK(r.evaluations > r.iterations);
}

TEST_CASE("nelder-mead never returns worse than its start and honours the iteration cap")
{
    Quadratic q{Eigen::Vector2d(3.0, 3.0), Eigen::Vector2d(1.0, 1.0)};
    NelderMeadOptions opt;
    opt.initial_step = Eigen::VectorXd::Constant(2, 0.1);
    opt.max_iterations = 3;
    const Eigen::VectorXd start = Eigen::VectorXd::Zero(2);
    const auto r = nelder_mead(q, start, opt);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 3);
    CHECK(r.value >= q(start));

    opt.initial_step = Eigen::VectorXd::Constant(3, 0.1);
    CHECK_THROWS(nelder_mead(q, start, opt));
}

TEST_CASE("nelder-mead treats NaN as infeasible")
{
    auto f = [](const Eigen::VectorXd &x) { return x(0) < 0.0 ? std::nan("") : -(x(0) - 1.0) * (x(0) - 1.0); };
    NelderMeadOptions opt;
    opt.initial_step = Eigen::VectorXd::Constant(1, 0.5);
    opt.max_iterations = 500;
    const auto r = nelder_mead(f, Eigen::VectorXd::Constant(1, 0.2), opt);
    CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("bfgs finds the maximum of a quadratic and of rosenbrock")
{
    Quadratic q{Eigen::Vector4d(1.0, -2.0, 0.5, 10.0), Eigen::Vector4d(1.0, 4.0, 0.25, 9.0)};
    BfgsOptions opt;
    opt.gradient_tolerance = 1e-9;
    opt.tolerance = 1e-14;
    const auto r = bfgs(q, Eigen::VectorXd::Zero(4), opt);
    CHECK(r.converged);
    CHECK((r.x - q.m).cwiseAbs().maxCoeff() < 1e-6);

    opt.max_iterations = 2000;
    const auto rb = bfgs(rosenbrock, Eigen::Vector2d(-1.2, 1.0), opt);
    CHECK(rb.converged);
    CHECK(rb.x(0) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(rb.x(1) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("bfgs steps never decrease the objective")
{
    std::vector<double> seen;
    auto f = [&](const Eigen::VectorXd &x, Eigen::VectorXd &g) {
        const double v = rosenbrock(x, g);
        seen.push_back(v);
        return v;
    };
    BfgsOptions opt;
    opt.max_iterations = 50;
    const Eigen::VectorXd start = Eigen::Vector2d(-1.2, 1.0);
    Eigen::VectorXd g;
    const double f0 = rosenbrock(start, g);
    const auto r = bfgs(f, start, opt);
    CHECK(r.value >= f0);
    CHECK(r.iterations <= 50);
}

TEST_CASE("bfgs stops at a kink where the gradient never vanishes")
{
    // -|x| has its maximum at a corner; the line search stalls there
    auto f = [](const Eigen::VectorXd &x, Eigen::VectorXd &g) {
        g = -x.array().sign().matrix();
        return -x.cwiseAbs().sum();
    };
    const auto r = bfgs(f, Eigen::Vector2d(0.7, -0.3), {});
    CHECK(r.converged);
    CHECK(r.value > -1e-6);
}

TEST_CASE("bfgs reports a start that cannot be evaluated")
{
    auto f = [](const Eigen::VectorXd &, Eigen::VectorXd &g) {
        g = Eigen::VectorXd::Zero(1);
        return -std::numeric_limits<double>::infinity();
    };
    const auto r = bfgs(f, Eigen::VectorXd::Zero(1), {});
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 0);
}

TEST_CASE("hessian steps are relative with a floor")
{
    const auto s = hessian_steps(Eigen::Vector3d(0.0, 2.0, -1000.0));
    CHECK(s(0) == 1e-5);
    CHECK(s(1) == doctest::Approx(2e-4));
    CHECK(s(2) == doctest::Approx(0.1));
}

TEST_CASE("quadratic log-likelihood gives standard errors sqrt(v)")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.01, 10.0);
    for (int trial = 0; trial < 50; ++trial)
    {
        const int n = 1 + static_cast<int>(rng() % 6);
        Quadratic q{Eigen::VectorXd(n), Eigen::VectorXd(n)};
        for (int i = 0; i < n; ++i)
        {
            q.m(i) = u(rng) - 5.0;
            q.v(i) = u(rng) * u(rng);
        }
        const Eigen::MatrixXd h = central_hessian(q, q.m, hessian_steps(q.m));
        for (int i = 0; i < n; ++i)
            CHECK(h(i, i) == doctest::Approx(-1.0 / q.v(i)).epsilon(1e-5));
        const auto se = inverse_hessian_std_errors(h);
        for (int i = 0; i < n; ++i)
        {
            REQUIRE(se[static_cast<std::size_t>(i)].has_value());
            CHECK(*se[static_cast<std::size_t>(i)] == doctest::Approx(std::sqrt(q.v(i))).epsilon(1e-5));
        }
    }
}

TEST_CASE("correlated information matrix inverts exactly")
{
    Eigen::Matrix2d info;
    info << 4.0, 1.0, 1.0, 2.0;
    const auto se = inverse_hessian_std_errors(-info);
    const Eigen::Matrix2d cov = info.inverse();
    CHECK(*se[0] == doctest::Approx(std::sqrt(cov(0, 0))));
    CHECK(*se[1] == doctest::Approx(std::sqrt(cov(1, 1))));
}

TEST_CASE("singular or indefinite hessians leave the affected errors unavailable")
{
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    h(0, 0) = -4.0;  // coordinates 1 and 2 carry no information
    auto se = inverse_hessian_std_errors(h);
    REQUIRE(se[0].has_value());
    CHECK(*se[0] == doctest::Approx(0.5));
    CHECK_FALSE(se[1].has_value());
    CHECK_FALSE(se[2].has_value());

    // a perfectly collinear pair
    Eigen::Matrix3d c;
    c << -1.0, -1.0, 0.0, -1.0, -1.0, 0.0, 0.0, 0.0, -9.0;
    se = inverse_hessian_std_errors(c);
    CHECK_FALSE(se[0].has_value());
    CHECK_FALSE(se[1].has_value());
    REQUIRE(se[2].has_value());
    CHECK(*se[2] == doctest::Approx(1.0 / 3.0));

    // a saddle: positive curvature along coordinate 0
    Eigen::Matrix2d s;
    s << 1.0, 0.0, 0.0, -1.0;
    const auto ss = inverse_hessian_std_errors(s);
    CHECK_FALSE(ss[0].has_value());
    CHECK(ss[1].has_value());

    CHECK(std::ranges::none_of(inverse_hessian_std_errors(Eigen::Matrix2d::Zero()), [](auto v) { return v.has_value(); }));
    Eigen::Matrix2d bad = Eigen::Matrix2d::Identity();
    bad(0, 1) = std::nan("");
    CHECK(std::ranges::none_of(inverse_hessian_std_errors(bad), [](auto v) { return v.has_value(); }));
}
