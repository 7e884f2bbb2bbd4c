#pragma once

#include "ipoperf/garch.hpp"
#include "ipoperf/simulate.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>

namespace ipoperf::cli
{

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;

// Effective parameters of one run. Precedence: command-line flags, then the config file, then
// these defaults.
struct RunConfig
{
    std::filesystem::path prices;
    std::filesystem::path benchmark;
    std::filesystem::path roster;
    std::filesystem::path dividends;
    std::filesystem::path out = "out";
    int months = 36;
    int month_days = 21;
    GarchSpec garch;
    std::uint64_t seed = 20110101;
    int reps = 50;
    int threads = 0;

    // simulate
    int length = 1000;
    GarchParams truth{0.0, 1.0, 0.1, 0.1, 0.8, 0.0};
    double dummy_prob = 0.3;
    double market_mean = 0.0;
    double market_vol = 1.0;
    std::filesystem::path write_panel;
    int panel_securities = 10;
    int panel_planted = 2;
    double planted_delta = 0.03;

    void validate() const;
};

// Sets one key (config-file spelling, e.g. `month_days`). Throws InputError for unknown keys
// or unparseable values.
void set_option(RunConfig &config, const std::string &key, const std::string &value);

// Flat `key=value` lines; `#` starts a comment.
std::map<std::string, std::string> read_config_file(const std::filesystem::path &path);

// Every effective parameter as `key=value`, one per line, sorted by key.
std::string echo_config(const RunConfig &config);

int cmd_eventstudy(const RunConfig &config, std::ostream &out, std::ostream &err);
int cmd_garch(const RunConfig &config, std::ostream &out, std::ostream &err);
int cmd_simulate(const RunConfig &config, std::ostream &out, std::ostream &err);
// eventstudy and garch into one bundle.
int cmd_report(const RunConfig &config, std::ostream &out, std::ostream &err);

// argv-style entry point; args[0] is the program name.
int run(std::span<const std::string> args, std::ostream &out, std::ostream &err);

}  // namespace ipoperf::cli
