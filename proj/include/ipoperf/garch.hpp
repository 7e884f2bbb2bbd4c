#pragma once

#include "ipoperf/common.hpp"
#include "ipoperf/data_ingest.hpp"
#include "ipoperf/event_study.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

namespace ipoperf
{

inline constexpr int kGarchCoefficients = 6;
inline constexpr int kMinGarchObservations = 10;

// Mean equation y = c1 + c2 x + e; variance equation
// h_t = c3 + c4 e_{t-1}^2 + c5 h_{t-1} + c6 d_t.
template <typename Scalar>
struct GarchParamsT
{
    Scalar c1{0};  // mean intercept
    Scalar c2{0};  // market beta
    Scalar c3{0};  // variance intercept
    Scalar c4{0};  // ARCH
    Scalar c5{0};  // GARCH
    Scalar c6{0};  // dividend dummy

    static GarchParamsT from_vector(const Vector<Scalar> &v)
    {
        return {v(0), v(1), v(2), v(3), v(4), v(5)};
    }

    Vector<Scalar> to_vector() const
    {
        Vector<Scalar> v(kGarchCoefficients);
        v << c1, c2, c3, c4, c5, c6;
        return v;
    }

    template <typename Other>
    GarchParamsT<Other> cast() const
    {
        return {Other(c1), Other(c2), Other(c3), Other(c4), Other(c5), Other(c6)};
    }

    bool stationary() const { return c3 > Scalar(0) && c4 >= Scalar(0) && c5 >= Scalar(0) && c4 + c5 < Scalar(1); }
};

using GarchParams = GarchParamsT<double>;

extern const std::array<const char *, kGarchCoefficients> kCoefficientNames;

// 0/1 indicator of dividend periods.
class DummySeries
{
  public:
    DummySeries() = default;
    explicit DummySeries(Vector<double> values);
    static DummySeries zeros(Eigen::Index n) { return DummySeries(Vector<double>::Zero(n)); }

    const Vector<double> &values() const { return values_; }
    Eigen::Index size() const { return values_.size(); }
    // True when no period is marked, so c6 has no effect on the likelihood.
    bool inert() const { return values_.size() == 0 || values_.maxCoeff() == 0.0; }

  private:
    Vector<double> values_;
};

struct GarchData
{
    Vector<double> y;  // stock returns
    Vector<double> x;  // market returns
    DummySeries d;

    GarchData() = default;
    // Equal, non-zero lengths and finite values.
    GarchData(Vector<double> y, Vector<double> x, DummySeries d);

    Eigen::Index size() const { return y.size(); }
};

struct GarchSpec
{
    bool constrain_stationarity = false;
    double variance_floor = 1e-12;
    double significance_level = 0.05;
    int max_iterations = 2000;
    double ll_tolerance = 1e-8;

    void validate() const;
};

enum class Verdict
{
    significant,
    not_significant,
    indeterminate
};

const char *to_string(Verdict v);

using CoefficientErrors = std::array<std::optional<double>, kGarchCoefficients>;

struct GarchFit
{
    GarchParams params;
    CoefficientErrors std_errors;
    CoefficientErrors t_stats;
    std::array<bool, kGarchCoefficients> significant{};
    Verdict dividend_effect = Verdict::indeterminate;
    double log_likelihood = 0.0;
    double start_log_likelihood = 0.0;
    bool converged = false;
    int iterations = 0;
    Vector<double> conditional_variances;
    bool dummy_inert = false;
};

class NonFiniteVariance : public std::domain_error
{
  public:
    using std::domain_error::domain_error;
};

class DegenerateData : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

namespace detail
{

template <typename Scalar>
double value_of(const Scalar &s)
{
    if constexpr (std::is_arithmetic_v<Scalar>)
        return static_cast<double>(s);
    else
        return s.value();
}

}  // namespace detail

template <typename Scalar>
Scalar residual(const Scalar &y, const Scalar &x, const Scalar &c1, const Scalar &c2)
{
    return y - c1 - c2 * x;
}

template <typename Scalar>
Vector<Scalar> residuals(const GarchData &data, const GarchParamsT<Scalar> &p)
{
    Vector<Scalar> e(data.size());
    for (Eigen::Index t = 0; t < data.size(); ++t)
        e(t) = residual(Scalar(data.y(t)), Scalar(data.x(t)), p.c1, p.c2);
    return e;
}

// Population variance (divisor T) of the residuals; presample value for h_1.
template <typename Scalar>
Scalar residual_variance(const Vector<Scalar> &e)
{
    const auto n = static_cast<double>(e.size());
    Scalar mean(0);
    for (Eigen::Index t = 0; t < e.size(); ++t)
        mean += e(t);
    mean /= n;
    Scalar ss(0);
    for (Eigen::Index t = 0; t < e.size(); ++t)
        ss += (e(t) - mean) * (e(t) - mean);
    return ss / n;
}

// Fills h. Returns false when an intermediate value is not finite.
template <typename Scalar>
bool variance_recursion_into(const Vector<Scalar> &e, const Vector<double> &d, const GarchParamsT<Scalar> &p,
                             double variance_floor, std::optional<double> initial_variance, Vector<Scalar> &h)
{
    const Eigen::Index n = e.size();
    h.resize(n);
    if (n == 0)
        return true;
    h(0) = initial_variance ? Scalar(*initial_variance) : residual_variance(e);
    if (h(0) < variance_floor)
        h(0) = Scalar(variance_floor);
    for (Eigen::Index t = 1; t < n; ++t)
    {
        h(t) = p.c3 + p.c4 * e(t - 1) * e(t - 1) + p.c5 * h(t - 1) + p.c6 * d(t);
        if (!std::isfinite(detail::value_of(h(t))))
            return false;
        if (h(t) < variance_floor)
            h(t) = Scalar(variance_floor);
    }
    return std::isfinite(detail::value_of(h(0)));
}

// Throws NonFiniteVariance when the parameters make the recursion diverge.
Vector<double> variance_recursion(const Vector<double> &e, const DummySeries &d, const GarchParams &params,
                                  double variance_floor = 1e-12, std::optional<double> initial_variance = {});

// Gaussian quasi-log-likelihood; -infinity at infeasible points.
template <typename Scalar>
Scalar log_likelihood(const GarchData &data, const GarchParamsT<Scalar> &p, double variance_floor = 1e-12,
                      std::optional<double> initial_variance = {})
{
    using std::log;
    const Vector<Scalar> e = residuals(data, p);
    Vector<Scalar> h;
    if (!variance_recursion_into(e, data.d.values(), p, variance_floor, initial_variance, h))
        return Scalar(-std::numeric_limits<double>::infinity());
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    Scalar ll(0);
    for (Eigen::Index t = 0; t < e.size(); ++t)
        ll += -half_log_2pi - 0.5 * log(h(t)) - e(t) * e(t) / (2.0 * h(t));
    if (!std::isfinite(detail::value_of(ll)))
        return Scalar(-std::numeric_limits<double>::infinity());
    return ll;
}

// Marks each populated event month whose window holds a dividend date. Dividends on or before
// the listing day are ignored with a warning.
DummySeries build_dummy(std::span<const DividendEvent> dividends, const EventClock &clock,
                        std::vector<std::string> *warnings = nullptr);

// Least-squares mean equation, then variance-targeted (c3, c4, c5, c6) = (0.05 s^2, 0.05, 0.90, 0).
GarchParams starting_values(const GarchData &data);

// Quasi-maximum likelihood fit. Throws DegenerateData for zero-variance returns.
GarchFit estimate(const GarchData &data, const GarchSpec &spec = {});

// Inverse negative Hessian (central differences) at the fitted parameters.
CoefficientErrors std_errors(const GarchData &data, const GarchParams &params, const GarchSpec &spec = {});

// Two-sided normal critical value, e.g. 1.959964 at 0.05.
double critical_value(double level);

struct Significance
{
    CoefficientErrors t_stats;
    std::array<bool, kGarchCoefficients> significant{};
    Verdict dividend_effect = Verdict::indeterminate;
};

Significance significance(const GarchParams &params, const CoefficientErrors &std_errors, double level = 0.05);

// Single-coefficient form of the |estimate / se| > critical rule.
Verdict coefficient_verdict(double estimate, std::optional<double> std_error, double level = 0.05);

struct CohortVerdict
{
    int significant = 0;
    int total = 0;
    bool significant_influence = false;
    std::string conclusion;
};

CohortVerdict cohort_verdict(std::span<const GarchFit> fits);

}  // namespace ipoperf
