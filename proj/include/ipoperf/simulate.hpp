#pragma once

#include "ipoperf/data_ingest.hpp"
#include "ipoperf/garch.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <variant>
#include <vector>

namespace ipoperf
{

struct MarketProcess
{
    double mean = 0.0;
    double volatility = 1.0;
};

struct SimConfig
{
    GarchParams truth{0.0, 1.0, 0.1, 0.1, 0.8, 0.0};
    int length = 1000;
    // Bernoulli probability per period, or an explicit 0/1 series of the emitted length.
    std::variant<double, Vector<double>> dummy = 0.0;
    MarketProcess market;
    // Replaces the drawn market returns when set.
    std::optional<Vector<double>> market_path;
    std::uint64_t seed = 1;
    int burn_in = 200;

    void validate() const;
};

struct SimulatedPath
{
    GarchData data;
    Vector<double> h;  // true conditional variances of the emitted periods
};

class InfeasibleParams : public std::domain_error
{
  public:
    using std::domain_error::domain_error;
};

// Deterministic in the config: the same seed gives bitwise identical output.
SimulatedPath simulate_path(const SimConfig &config);

// Replication r uses seed + r. Entries are empty where estimation threw.
std::vector<std::optional<GarchFit>> replicate_fits(const SimConfig &config, int replications,
                                                    const GarchSpec &spec = {}, int threads = 0);

struct CoefficientRecovery
{
    double truth = 0.0;
    double mean_estimate = 0.0;
    double bias = 0.0;
    double rmse = 0.0;
    double mc_sd = 0.0;    // spread of the estimates across replications
    double mean_se = 0.0;  // average reported standard error
    std::optional<double> coverage;  // share of +-1.96 se intervals covering the truth
};

struct RecoveryReport
{
    std::array<CoefficientRecovery, kGarchCoefficients> coefficients;
    int replications = 0;
    int converged = 0;
    int excluded = 0;
};

// Aggregates converged fits only; non-converged or failed replications are counted as excluded.
RecoveryReport summarize_recovery(const GarchParams &truth, std::span<const std::optional<GarchFit>> fits);

RecoveryReport recovery_experiment(const SimConfig &config, int replications, const GarchSpec &spec = {},
                                   int threads = 0);

// Neumaier-compensated sum.
double compensated_sum(std::span<const double> values);

struct SyntheticPanelConfig
{
    int securities = 10;
    int planted = 2;  // the first `planted` securities carry planted_delta
    int months = 36;
    int month_days = 21;
    GarchParams null_truth{0.005, 1.0, 0.002, 0.1, 0.5, 0.0};
    double planted_delta = 0.03;
    double dividend_probability = 0.3;
    int listing_stagger_days = 5;
    std::uint64_t seed = 7;
};

struct SyntheticPanel
{
    PriceSeries benchmark;
    PriceCollection securities;
    std::vector<RosterEntry> roster;
    std::vector<DividendEvent> dividends;
    std::vector<std::string> planted_symbols;
};

// Monthly GARCH returns laid onto a weekday calendar: each security's price compounds from a base
// of 100 on its listing day and steps at every event-month boundary, so its event-month returns
// reproduce the simulated series exactly.
SyntheticPanel make_synthetic_panel(const SyntheticPanelConfig &config);

// Writes prices.csv, benchmark.csv, roster.csv and dividends.csv.
void write_panel(const std::filesystem::path &directory, const SyntheticPanel &panel);

}  // namespace ipoperf
