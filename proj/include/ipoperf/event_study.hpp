#pragma once

#include "ipoperf/common.hpp"
#include "ipoperf/data_ingest.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ipoperf
{

struct EventClockOptions
{
    int months = 36;
    int month_days = 21;
};

// Returned by event_month_of for the listing day itself.
inline constexpr int kInitialPeriod = 0;

// Listing day is day 1 (initial period); day d >= 2 falls in month ceil((d - 1) / month_days).
int event_month_of(int day_index, int month_days = 21);

// A security's trading days counted from its listing day. Month t spans the returns earned on
// days month_days*(t-1)+2 .. month_days*t+1, i.e. from the close of day month_days*(t-1)+1 to
// the close of day month_days*t+1.
class EventClock
{
  public:
    EventClock() = default;
    EventClock(std::vector<Date> trading_days, EventClockOptions options);

    const EventClockOptions &options() const { return options_; }
    std::size_t trading_days() const { return days_.size(); }
    Date day(int day_index) const;  // 1-based

    // Months with a full window of trading days, capped at options().months.
    int populated_months() const;

    int first_day_of_month(int month) const { return options_.month_days * (month - 1) + 2; }
    int last_day_of_month(int month) const { return options_.month_days * month + 1; }

    // Month whose window (close of its start day, close of its last day] contains the date.
    std::optional<int> month_containing(Date date) const;

  private:
    std::vector<Date> days_;
    EventClockOptions options_;
};

struct EventSeries
{
    std::string symbol;
    int grade = 0;
    Vector<double> monthly_returns;  // index t-1 holds month t
    Vector<double> boundary_closes;  // closes on days 1, L+1, 2L+1, ...; size = months + 1
    bool complete = false;
};

struct BenchmarkEventSeries
{
    Vector<double> monthly_returns;
    Vector<double> boundary_closes;
};

struct SecurityEventReturns
{
    EventSeries security;
    BenchmarkEventSeries benchmark;
    EventClock clock;
    double first_close = 0.0;  // close on the listing day
};

// The security has less than one complete event month.
class InsufficientHistory : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

// Buy-and-hold needs the full horizon.
class IncompleteWindow : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

// Security must already be aligned to the benchmark calendar.
SecurityEventReturns monthly_returns(const PriceSeries &security, const PriceSeries &benchmark,
                                     const RosterEntry &entry, const EventClockOptions &options = {});

template <typename Scalar>
constexpr Scalar adjusted_return(Scalar security_return, Scalar benchmark_return)
{
    return security_return - benchmark_return;
}

// Equally weighted mean of the adjusted returns populated in one event month.
double average_adjusted_return(std::span<const double> adjusted_returns);

// Running sum of the average returns.
template <typename Derived>
Vector<typename Derived::Scalar> cumulative_returns(const Eigen::MatrixBase<Derived> &average_returns)
{
    Vector<typename Derived::Scalar> car(average_returns.size());
    typename Derived::Scalar running(0);
    for (Eigen::Index t = 0; t < average_returns.size(); ++t)
    {
        running += average_returns(t);
        car(t) = running;
    }
    return car;
}

// Price-ratio return over months 1..months. Throws IncompleteWindow for partial series.
double buy_and_hold_return(const EventSeries &series, int months = 36);
double buy_and_hold_return(const BenchmarkEventSeries &series, int months = 36);

enum class Performance
{
    outperform,
    underperform,
    neutral
};

struct WealthRelative
{
    double ratio = 1.0;
    Performance verdict = Performance::neutral;
};

WealthRelative wealth_relative(double avg_ipo_bhr, double avg_benchmark_bhr);

enum class Pricing
{
    underpriced,
    overpriced,
    flat
};

struct FirstDayReturn
{
    double value = 0.0;
    Pricing pricing = Pricing::flat;
};

FirstDayReturn first_day_return(double offer_price, double first_close);

const char *to_string(Performance p);
const char *to_string(Pricing p);

struct ReturnPath
{
    Vector<double> average;     // AR_t
    Vector<double> cumulative;  // CAR_{1,t}
    int negative_months = 0;    // months with AR_t < 0
};

struct HoldingPeriodStats
{
    double high = 0.0;
    double low = 0.0;
    double mean = 0.0;
    double median = 0.0;
};

struct CohortSummary
{
    int grade = 0;
    int n = 0;
    int n_complete = 0;
    ReturnPath raw;
    ReturnPath adjusted;
    std::optional<HoldingPeriodStats> hpr;
    std::optional<double> mean_ipo_bhr;
    std::optional<double> mean_benchmark_bhr;
    std::optional<WealthRelative> wealth_relative;
};

// Per-grade statistics. AR_t averages over the securities still populated at t; the path stops at
// the first month no security reaches. Holding-period statistics use complete securities only.
CohortSummary cohort_summary(std::span<const SecurityEventReturns> cohort, int months = 36);

// Middle value, or the mean of the two middle values for an even count.
double median(std::vector<double> values);

}  // namespace ipoperf
