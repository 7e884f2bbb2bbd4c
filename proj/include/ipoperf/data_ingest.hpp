#pragma once

#include "ipoperf/common.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ipoperf
{

struct PricePoint
{
    Date date;
    double close = 0.0;

    friend bool operator==(const PricePoint &, const PricePoint &) = default;
};

// Dated closes for one security or index. Dates strictly increase and closes are positive.
class PriceSeries
{
  public:
    PriceSeries() = default;
    PriceSeries(std::string symbol, std::vector<PricePoint> observations);

    const std::string &symbol() const { return symbol_; }
    const std::vector<PricePoint> &observations() const { return observations_; }
    std::size_t size() const { return observations_.size(); }
    bool empty() const { return observations_.empty(); }

    // Close on an exact date, if observed.
    std::optional<double> close_on(Date date) const;
    bool contains(Date date) const { return close_on(date).has_value(); }

    friend bool operator==(const PriceSeries &, const PriceSeries &) = default;

  private:
    std::string symbol_;
    std::vector<PricePoint> observations_;
};

using PriceCollection = std::map<std::string, PriceSeries>;

struct RosterEntry
{
    std::string symbol;
    int grade = 0;
    Date listing_date;
    std::optional<double> offer_price;

    friend bool operator==(const RosterEntry &, const RosterEntry &) = default;
};

struct DividendEvent
{
    std::string symbol;
    Date event_date;
    double amount = 0.0;

    friend bool operator==(const DividendEvent &, const DividendEvent &) = default;
};

PriceCollection load_prices(const std::filesystem::path &path);
PriceCollection read_prices(std::istream &in, const std::string &source_name);
void write_prices(std::ostream &out, const PriceCollection &series);

// Header `symbol,grade,listing_date`, optionally followed by `,offer_price`.
std::vector<RosterEntry> load_roster(const std::filesystem::path &path);
std::vector<RosterEntry> read_roster(std::istream &in, const std::string &source_name);
void write_roster(std::ostream &out, std::span<const RosterEntry> roster);

// Entry g-1 holds the number of grade-g securities.
std::array<int, 5> grade_counts(std::span<const RosterEntry> roster);

std::vector<DividendEvent> load_dividends(const std::filesystem::path &path);
std::vector<DividendEvent> read_dividends(std::istream &in, const std::string &source_name);
void write_dividends(std::ostream &out, std::span<const DividendEvent> dividends);

struct AlignOptions
{
    int months = 36;
    int month_days = 21;
    double max_missing_fraction = 0.05;
};

struct PanelInputs
{
    PriceSeries benchmark;
    PriceCollection securities;
    std::vector<RosterEntry> roster;
    std::vector<DividendEvent> dividends;
};

// Immutable once built; every security date is a benchmark date.
struct AlignedPanel
{
    PriceSeries benchmark;
    PriceCollection securities;
    std::vector<RosterEntry> roster;
    std::vector<DividendEvent> dividends;
    std::vector<std::string> warnings;

    const RosterEntry *find_roster(const std::string &symbol) const;
};

// Restricts every security to benchmark trading days. Roster symbols without a series are an
// error; series without a roster entry are dropped with a warning.
AlignedPanel align(PanelInputs inputs, const AlignOptions &options = {});
AlignedPanel align(const AlignedPanel &panel, const AlignOptions &options = {});

}  // namespace ipoperf
