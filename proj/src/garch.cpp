#include "ipoperf/garch.hpp"

#include "ipoperf/optimize.hpp"

#include <unsupported/Eigen/AutoDiff>

#include <boost/math/distributions/normal.hpp>

#include <algorithm>

namespace ipoperf
{

const std::array<const char *, kGarchCoefficients> kCoefficientNames = {"c1", "c2", "c3", "c4", "c5", "c6"};

DummySeries::DummySeries(Vector<double> values) : values_(std::move(values))
{
    for (Eigen::Index t = 0; t < values_.size(); ++t)
        if (values_(t) != 0.0 && values_(t) != 1.0)
            throw std::invalid_argument("DummySeries: value at " + std::to_string(t) + " is not 0 or 1");
}

GarchData::GarchData(Vector<double> y_, Vector<double> x_, DummySeries d_)
    : y(std::move(y_)), x(std::move(x_)), d(std::move(d_))
{
    if (y.size() == 0 || y.size() != x.size() || y.size() != d.size())
        throw std::invalid_argument("GarchData: y, x and dummy must have equal, non-zero lengths");
    if (!y.allFinite() || !x.allFinite())
        throw std::invalid_argument("GarchData: non-finite return");
}

void GarchSpec::validate() const
{
    if (!(significance_level > 0.0 && significance_level < 1.0))
        throw std::invalid_argument("GarchSpec: significance level must lie in (0, 1)");
    if (!(variance_floor > 0.0))
        throw std::invalid_argument("GarchSpec: variance floor must be positive");
    if (max_iterations < 1 || !(ll_tolerance > 0.0))
        throw std::invalid_argument("GarchSpec: iteration limit and tolerance must be positive");
}

const char *to_string(Verdict v)
{
    switch (v)
    {
    case Verdict::significant:
        return "significant";
    case Verdict::not_significant:
        return "not significant";
    case Verdict::indeterminate:
        return "indeterminate";
    }
    return "?";
}

Vector<double> variance_recursion(const Vector<double> &e, const DummySeries &d, const GarchParams &params,
                                  double variance_floor, std::optional<double> initial_variance)
{
    if (e.size() == 0)
        throw std::invalid_argument("variance_recursion: empty residual series");
    if (d.size() != e.size())
        throw std::invalid_argument("variance_recursion: dummy length differs from residuals");
    Vector<double> h;
    if (!variance_recursion_into(e, d.values(), params, variance_floor, initial_variance, h))
        throw NonFiniteVariance("variance_recursion: non-finite conditional variance");
    return h;
}

DummySeries build_dummy(std::span<const DividendEvent> dividends, const EventClock &clock,
                        std::vector<std::string> *warnings)
{
    const int months = clock.populated_months();
    Vector<double> values = Vector<double>::Zero(months);
    for (const auto &ev : dividends)
    {
        if (clock.trading_days() > 0 && !(clock.day(1) < ev.event_date))
        {
            if (warnings)
                warnings->push_back(ev.symbol + ": dividend on " + format_date(ev.event_date) +
                                    " is not after listing; ignored");
            continue;
        }
        if (auto month = clock.month_containing(ev.event_date))
            values(*month - 1) = 1.0;
    }
    return DummySeries(std::move(values));
}

namespace
{

using Gradient6 = Eigen::Matrix<double, kGarchCoefficients, 1>;
using AD = Eigen::AutoDiffScalar<Gradient6>;

// Largest log-likelihood loss tolerated on a single finite-difference probe.
constexpr double kMaxProbeDrop = 2.0;

double sample_sd(const Vector<double> &v)
{
    const double mean = v.mean();
    return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size()));
}

// Optimizer coordinates. Unconstrained: theta = scale * phi. Constrained: c3 = scale3 exp(phi3)
// and (c4, c5) = (e^a, e^b) / (1 + e^a + e^b), which keeps c3 > 0, c4, c5 >= 0, c4 + c5 < 1.
struct Coordinates
{
    Gradient6 scale;
    bool constrained = false;

    template <typename Scalar>
    GarchParamsT<Scalar> to_params(const Vector<Scalar> &phi) const
    {
        using std::exp;
        GarchParamsT<Scalar> p;
        p.c1 = scale(0) * phi(0);
        p.c2 = scale(1) * phi(1);
        p.c6 = scale(5) * phi(5);
        if (!constrained)
        {
            p.c3 = scale(2) * phi(2);
            p.c4 = scale(3) * phi(3);
            p.c5 = scale(4) * phi(4);
            return p;
        }
        const Scalar a = clamp(phi(3));
        const Scalar b = clamp(phi(4));
        const Scalar ea = exp(a);
        const Scalar eb = exp(b);
        const Scalar denom = 1.0 + ea + eb;
        p.c3 = scale(2) * exp(clamp(phi(2)));
        p.c4 = ea / denom;
        p.c5 = eb / denom;
        return p;
    }

    Eigen::VectorXd from_params(const GarchParams &p) const
    {
        Eigen::VectorXd phi(kGarchCoefficients);
        phi(0) = p.c1 / scale(0);
        phi(1) = p.c2 / scale(1);
        phi(5) = p.c6 / scale(5);
        if (!constrained)
        {
            phi(2) = p.c3 / scale(2);
            phi(3) = p.c4 / scale(3);
            phi(4) = p.c5 / scale(4);
            return phi;
        }
        const double rest = 1.0 - p.c4 - p.c5;
        phi(2) = std::log(p.c3 / scale(2));
        phi(3) = std::log(p.c4 / rest);
        phi(4) = std::log(p.c5 / rest);
        return phi;
    }

    template <typename Scalar>
    static Scalar clamp(const Scalar &v)
    {
        constexpr double bound = 30.0;
        if (v > bound)
            return Scalar(bound);
        if (v < -bound)
            return Scalar(-bound);
        return v;
    }
};

Coordinates make_coordinates(const GarchData &data, double residual_var, bool constrained)
{
    const double k = std::sqrt(residual_var);
    const double sd_x = sample_sd(data.x);
    Coordinates c;
    c.scale << k, sd_x > 0.0 ? k / sd_x : 1.0, residual_var, 1.0, 1.0, residual_var;
    c.constrained = constrained;
    return c;
}

}  // namespace

GarchParams starting_values(const GarchData &data)
{
    const Eigen::Index n = data.size();
    if (!(sample_sd(data.y) > 0.0))
        throw DegenerateData("stock returns have zero variance");
    Eigen::MatrixXd design(n, 2);
    design.col(0).setOnes();
    design.col(1) = data.x;
    const Eigen::Vector2d beta = design.colPivHouseholderQr().solve(data.y);

    GarchParams p;
    p.c1 = beta(0);
    p.c2 = beta(1);
    const double s2 = residual_variance(residuals(data, p));
    // roundoff-sized residuals: y is an exact linear function of x
    if (!(std::sqrt(s2) > 1e-10 * sample_sd(data.y)))
        throw DegenerateData("mean-equation residuals have zero variance");
    p.c3 = 0.05 * s2;
    p.c4 = 0.05;
    p.c5 = 0.90;
    p.c6 = 0.0;
    return p;
}

CoefficientErrors std_errors(const GarchData &data, const GarchParams &params, const GarchSpec &spec)
{
    const double s2 = residual_variance(residuals(data, params));
    const Coordinates scaled = make_coordinates(data, s2 > 0.0 ? s2 : 1.0, false);
    const Eigen::VectorXd psi = scaled.from_params(params);
    const double at_optimum = log_likelihood(data, params, spec.variance_floor);
    double lowest = at_optimum;
    const optimize::Objective objective = [&](const Eigen::VectorXd &v) {
        const double ll = log_likelihood(data, scaled.to_params<double>(v), spec.variance_floor);
        lowest = std::min(lowest, ll);
        return ll;
    };
    const Eigen::MatrixXd hessian = optimize::central_hessian(objective, psi, optimize::hessian_steps(psi));

    CoefficientErrors se;
    // A probe one step away that loses more than a couple of nats means the curvature is not
    // resolvable at this step (the implied error is smaller than the step itself), typically a
    // fit pressed against a collapsing variance. Report nothing rather than invent precision.
    if (!(at_optimum - lowest <= kMaxProbeDrop))
        return se;
    const auto se_scaled = optimize::inverse_hessian_std_errors(hessian);

    for (int i = 0; i < kGarchCoefficients; ++i)
        if (se_scaled[static_cast<std::size_t>(i)])
            se[static_cast<std::size_t>(i)] = scaled.scale(i) * *se_scaled[static_cast<std::size_t>(i)];
    return se;
}

double critical_value(double level)
{
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("critical_value: level must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - 0.5 * level);
}

Verdict coefficient_verdict(double estimate, std::optional<double> std_error, double level)
{
    if (!std_error || !(*std_error > 0.0) || !std::isfinite(*std_error))
        return Verdict::indeterminate;
    return std::abs(estimate / *std_error) > critical_value(level) ? Verdict::significant : Verdict::not_significant;
}

Significance significance(const GarchParams &params, const CoefficientErrors &std_errors, double level)
{
    const double critical = critical_value(level);
    const Vector<double> theta = params.to_vector();
    Significance out;
    for (std::size_t i = 0; i < kGarchCoefficients; ++i)
    {
        const auto &se = std_errors[i];
        if (!se || !(*se > 0.0) || !std::isfinite(*se))
            continue;
        const double t = theta(static_cast<Eigen::Index>(i)) / *se;
        out.t_stats[i] = t;
        out.significant[i] = std::abs(t) > critical;
    }
    out.dividend_effect = !out.t_stats[5]      ? Verdict::indeterminate
                          : out.significant[5] ? Verdict::significant
                                               : Verdict::not_significant;
    return out;
}

GarchFit estimate(const GarchData &data, const GarchSpec &spec)
{
    spec.validate();
    if (data.size() < kMinGarchObservations)
        throw std::invalid_argument("estimate: need at least " + std::to_string(kMinGarchObservations) +
                                    " observations, have " + std::to_string(data.size()));

    const GarchParams start = starting_values(data);
    const double s2 = residual_variance(residuals(data, start));
    const Coordinates coords = make_coordinates(data, s2, spec.constrain_stationarity);
    const Eigen::VectorXd phi0 = coords.from_params(start);

    const optimize::Objective objective = [&](const Eigen::VectorXd &phi) {
        return log_likelihood(data, coords.to_params<double>(phi), spec.variance_floor);
    };
    const optimize::ObjectiveWithGradient with_gradient = [&](const Eigen::VectorXd &phi, Eigen::VectorXd &grad) {
        Vector<AD> phi_ad(kGarchCoefficients);
        for (int i = 0; i < kGarchCoefficients; ++i)
            phi_ad(i) = AD(phi(i), kGarchCoefficients, i);
        const AD ll = log_likelihood(data, coords.to_params<AD>(phi_ad), spec.variance_floor);
        grad = ll.derivatives();
        return ll.value();
    };

    GarchFit fit;
    fit.dummy_inert = data.d.inert();
    fit.start_log_likelihood = objective(phi0);

    optimize::NelderMeadOptions nm;
    nm.initial_step.resize(kGarchCoefficients);
    if (spec.constrain_stationarity)
        nm.initial_step << 0.1, 0.1, 0.3, 0.3, 0.3, 0.02;
    else
        nm.initial_step << 0.1, 0.1, 0.02, 0.05, 0.05, 0.02;
    nm.max_iterations = std::min(spec.max_iterations, 200);
    nm.tolerance = spec.ll_tolerance;
    const auto simplex = optimize::nelder_mead(objective, phi0, nm);

    optimize::BfgsOptions qn;
    qn.max_iterations = std::max(spec.max_iterations - simplex.iterations, 1);
    qn.tolerance = spec.ll_tolerance;
    qn.gradient_tolerance = 1e-4;
    auto polished = optimize::bfgs(with_gradient, simplex.x, qn);
    if (!(polished.value >= simplex.value))
        polished = simplex;

    fit.params = coords.to_params<double>(polished.x);
    fit.log_likelihood = polished.value;
    fit.iterations = simplex.iterations + polished.iterations;
    fit.converged = polished.converged && std::isfinite(polished.value) && fit.iterations <= spec.max_iterations;

    const Vector<double> e = residuals(data, fit.params);
    if (!variance_recursion_into(e, data.d.values(), fit.params, spec.variance_floor, std::nullopt,
                                 fit.conditional_variances))
        fit.converged = false;

    if (fit.converged)
        fit.std_errors = std_errors(data, fit.params, spec);
    const auto sig = significance(fit.params, fit.std_errors, spec.significance_level);
    fit.t_stats = sig.t_stats;
    fit.significant = sig.significant;
    fit.dividend_effect = sig.dividend_effect;
    return fit;
}

CohortVerdict cohort_verdict(std::span<const GarchFit> fits)
{
    if (fits.empty())
        throw std::invalid_argument("cohort_verdict: no fits");
    CohortVerdict v;
    v.total = static_cast<int>(fits.size());
    v.significant = static_cast<int>(
        std::count_if(fits.begin(), fits.end(), [](const GarchFit &f) { return f.dividend_effect == Verdict::significant; }));
    v.significant_influence = 2 * v.significant >= v.total;
    v.conclusion = v.significant_influence ? "significant influence" : "no significant influence";
    return v;
}

}  // namespace ipoperf
