#include "ipoperf/event_study.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ipoperf
{

int event_month_of(int day_index, int month_days)
{
    if (day_index < 1)
        throw std::out_of_range("event_month_of: day index " + std::to_string(day_index) + " < 1");
    if (month_days < 1)
        throw std::invalid_argument("event_month_of: month length must be positive");
    if (day_index == 1)
        return kInitialPeriod;
    return (day_index - 2) / month_days + 1;
}

EventClock::EventClock(std::vector<Date> trading_days, EventClockOptions options)
    : days_(std::move(trading_days)), options_(options)
{
    if (options_.months < 1 || options_.month_days < 1)
        throw std::invalid_argument("EventClock: months and month_days must be positive");
}

Date EventClock::day(int day_index) const
{
    if (day_index < 1 || static_cast<std::size_t>(day_index) > days_.size())
        throw std::out_of_range("EventClock: day " + std::to_string(day_index) + " outside the observed range");
    return days_[static_cast<std::size_t>(day_index - 1)];
}

int EventClock::populated_months() const
{
    if (days_.empty())
        return 0;
    const auto full = static_cast<int>((days_.size() - 1) / static_cast<std::size_t>(options_.month_days));
    return std::min(full, options_.months);
}

std::optional<int> EventClock::month_containing(Date date) const
{
    const int months = populated_months();
    if (months == 0 || !(day(1) < date) || day(last_day_of_month(months)) < date)
        return std::nullopt;
    // First boundary close on or after the date closes the month that contains it.
    for (int t = 1; t <= months; ++t)
        if (!(day(last_day_of_month(t)) < date))
            return t;
    return std::nullopt;
}

SecurityEventReturns monthly_returns(const PriceSeries &security, const PriceSeries &benchmark,
                                     const RosterEntry &entry, const EventClockOptions &options)
{
    const auto &obs = security.observations();
    auto first = std::lower_bound(obs.begin(), obs.end(), entry.listing_date,
                                  [](const PricePoint &p, Date d) { return p.date < d; });
    std::vector<Date> days;
    std::vector<double> closes;
    std::vector<double> bench_closes;
    for (auto it = first; it != obs.end(); ++it)
    {
        const auto bench = benchmark.close_on(it->date);
        if (!bench)
            throw std::invalid_argument(security.symbol() + ": date " + format_date(it->date) +
                                        " missing from the benchmark; align the panel first");
        days.push_back(it->date);
        closes.push_back(it->close);
        bench_closes.push_back(*bench);
    }

    SecurityEventReturns out;
    out.clock = EventClock(std::move(days), options);
    const int months = out.clock.populated_months();
    if (months < 1)
        throw InsufficientHistory(security.symbol() + ": fewer than one complete event month after listing");

    out.first_close = closes.front();
    out.security.symbol = security.symbol();
    out.security.grade = entry.grade;
    out.security.complete = months == options.months;
    out.security.monthly_returns.resize(months);
    out.security.boundary_closes.resize(months + 1);
    out.benchmark.monthly_returns.resize(months);
    out.benchmark.boundary_closes.resize(months + 1);

    const auto at = [&](int day_index) { return static_cast<std::size_t>(day_index - 1); };
    out.security.boundary_closes(0) = closes[at(1)];
    out.benchmark.boundary_closes(0) = bench_closes[at(1)];
    for (int t = 1; t <= months; ++t)
    {
        const auto start = at(out.clock.first_day_of_month(t) - 1);
        const auto end = at(out.clock.last_day_of_month(t));
        out.security.boundary_closes(t) = closes[end];
        out.benchmark.boundary_closes(t) = bench_closes[end];
        out.security.monthly_returns(t - 1) = closes[end] / closes[start] - 1.0;
        out.benchmark.monthly_returns(t - 1) = bench_closes[end] / bench_closes[start] - 1.0;
    }
    return out;
}

double average_adjusted_return(std::span<const double> adjusted_returns)
{
    if (adjusted_returns.empty())
        throw std::domain_error("average_adjusted_return: no security populated in this event month");
    return std::accumulate(adjusted_returns.begin(), adjusted_returns.end(), 0.0) /
           static_cast<double>(adjusted_returns.size());
}

namespace
{

double price_ratio_return(const Vector<double> &boundary_closes, int months, const std::string &what)
{
    if (months < 1 || boundary_closes.size() < months + 1)
        throw IncompleteWindow(what + ": holding period needs " + std::to_string(months) + " event months, have " +
                               std::to_string(std::max<Eigen::Index>(boundary_closes.size() - 1, 0)));
    return boundary_closes(months) / boundary_closes(0) - 1.0;
}

}  // namespace

double buy_and_hold_return(const EventSeries &series, int months)
{
    return price_ratio_return(series.boundary_closes, months, series.symbol);
}

double buy_and_hold_return(const BenchmarkEventSeries &series, int months)
{
    return price_ratio_return(series.boundary_closes, months, "benchmark");
}

WealthRelative wealth_relative(double avg_ipo_bhr, double avg_benchmark_bhr)
{
    const double denominator = 1.0 + avg_benchmark_bhr;
    if (!(denominator > 0.0))
        throw std::domain_error("wealth_relative: benchmark total return <= -100%");
    WealthRelative wr;
    wr.ratio = (1.0 + avg_ipo_bhr) / denominator;
    wr.verdict = wr.ratio > 1.0 ? Performance::outperform
                 : wr.ratio < 1.0 ? Performance::underperform
                                  : Performance::neutral;
    return wr;
}

FirstDayReturn first_day_return(double offer_price, double first_close)
{
    if (!(offer_price > 0.0) || !(first_close > 0.0))
        throw std::invalid_argument("first_day_return: prices must be positive");
    FirstDayReturn r;
    r.value = first_close / offer_price - 1.0;
    r.pricing = r.value > 0.0 ? Pricing::underpriced : r.value < 0.0 ? Pricing::overpriced : Pricing::flat;
    return r;
}

const char *to_string(Performance p)
{
    switch (p)
    {
    case Performance::outperform:
        return "outperform";
    case Performance::underperform:
        return "underperform";
    case Performance::neutral:
        return "neutral";
    }
    return "?";
}

const char *to_string(Pricing p)
{
    switch (p)
    {
    case Pricing::underpriced:
        return "underpriced";
    case Pricing::overpriced:
        return "overpriced";
    case Pricing::flat:
        return "flat";
    }
    return "?";
}

double median(std::vector<double> values)
{
    if (values.empty())
        throw std::domain_error("median of an empty set");
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace
{

ReturnPath make_path(std::span<const SecurityEventReturns> cohort, int horizon, bool adjusted)
{
    ReturnPath path;
    path.average.resize(horizon);
    std::vector<double> month_values;
    for (int t = 0; t < horizon; ++t)
    {
        month_values.clear();
        for (const auto &s : cohort)
        {
            if (s.security.monthly_returns.size() <= t)
                continue;
            const double r = s.security.monthly_returns(t);
            month_values.push_back(adjusted ? adjusted_return(r, s.benchmark.monthly_returns(t)) : r);
        }
        path.average(t) = average_adjusted_return(month_values);
        if (path.average(t) < 0.0)
            ++path.negative_months;
    }
    path.cumulative = cumulative_returns(path.average);
    return path;
}

}  // namespace

CohortSummary cohort_summary(std::span<const SecurityEventReturns> cohort, int months)
{
    if (cohort.empty())
        throw std::invalid_argument("cohort_summary: empty cohort");
    if (months < 1)
        throw std::invalid_argument("cohort_summary: months must be positive");

    CohortSummary summary;
    summary.grade = cohort.front().security.grade;
    summary.n = static_cast<int>(cohort.size());

    Eigen::Index longest = 0;
    for (const auto &s : cohort)
    {
        if (s.security.grade != summary.grade)
            throw std::invalid_argument("cohort_summary: mixed grades in one cohort");
        longest = std::max(longest, s.security.monthly_returns.size());
    }
    const int horizon = static_cast<int>(std::min<Eigen::Index>(longest, months));
    summary.raw = make_path(cohort, horizon, false);
    summary.adjusted = make_path(cohort, horizon, true);

    std::vector<double> ipo_bhr;
    std::vector<double> bench_bhr;
    for (const auto &s : cohort)
    {
        if (s.security.monthly_returns.size() < months)
            continue;
        ipo_bhr.push_back(buy_and_hold_return(s.security, months));
        bench_bhr.push_back(buy_and_hold_return(s.benchmark, months));
    }
    summary.n_complete = static_cast<int>(ipo_bhr.size());
    if (!ipo_bhr.empty())
    {
        const auto n = static_cast<double>(ipo_bhr.size());
        HoldingPeriodStats stats;
        stats.high = *std::max_element(ipo_bhr.begin(), ipo_bhr.end());
        stats.low = *std::min_element(ipo_bhr.begin(), ipo_bhr.end());
        stats.mean = std::accumulate(ipo_bhr.begin(), ipo_bhr.end(), 0.0) / n;
        stats.median = median(ipo_bhr);
        summary.hpr = stats;
        summary.mean_ipo_bhr = stats.mean;
        summary.mean_benchmark_bhr = std::accumulate(bench_bhr.begin(), bench_bhr.end(), 0.0) / n;
        summary.wealth_relative = wealth_relative(*summary.mean_ipo_bhr, *summary.mean_benchmark_bhr);
    }
    return summary;
}

}  // namespace ipoperf
