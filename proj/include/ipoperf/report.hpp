#pragma once

#include "ipoperf/event_study.hpp"
#include "ipoperf/garch.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ipoperf
{

// One output file, rendered in memory.
struct Artifact
{
    std::string name;
    std::string content;
};

struct FirstDayRecord
{
    std::string symbol;
    int grade = 0;
    double offer_price = 0.0;
    double first_close = 0.0;
    FirstDayReturn result;
};

struct SecurityFit
{
    std::string symbol;
    int grade = 0;
    std::optional<GarchFit> fit;  // empty when estimation was impossible
    std::string note;
};

struct ReportMetadata
{
    std::string command;
    std::string generated_at;
    std::map<std::string, std::string> input_digests;
};

struct ReportBundle
{
    std::vector<CohortSummary> cohorts;
    std::vector<SecurityFit> fits;
    std::optional<CohortVerdict> verdict;
    std::vector<FirstDayRecord> first_day;
    ReportMetadata metadata;
    double significance_level = 0.05;
    int months = 36;
};

// Grades appear at most once and every fit names a roster symbol.
void validate_bundle(const ReportBundle &bundle, std::span<const RosterEntry> roster);

// Round-half-to-even at the given number of decimals, fixed notation, no negative zero.
std::string round_half_even(double value, int decimals);
std::string render_percent(double fraction);
std::string render_ratio(double ratio);
// Four decimals; magnitudes below 1e-4 switch to the 8.01E-05 style.
std::string render_coefficient(double value);
// "coef*(se)", with "(na)" when the standard error is unavailable.
std::string render_cell(double coefficient, std::optional<double> std_error, bool significant);

// table_raw.csv, table_adjusted.csv, table_hpr.csv, table_wr.csv
std::vector<Artifact> render_cohort_tables(const ReportBundle &bundle);
// table_first_day.csv
Artifact render_first_day_table(const ReportBundle &bundle);
// table_garch.csv: coefficient(se) cells with significance stars and a footnote.
Artifact render_garch_table(std::span<const SecurityFit> fits, double level = 0.05);
// garch_fits.csv: full precision, one row per security.
Artifact render_fit_csv(std::span<const SecurityFit> fits);
// garch_verdict.txt
Artifact render_verdict(const CohortVerdict &verdict);
// plot_grade_<g>.csv for grades 1..5, full precision.
std::vector<Artifact> render_plot_data(const ReportBundle &bundle);

// Sorted index of artifact names and SHA-256 digests.
Artifact render_manifest(std::span<const Artifact> artifacts);
Artifact render_metadata(const ReportMetadata &metadata);

void write_artifacts(const std::filesystem::path &directory, std::span<const Artifact> artifacts);

}  // namespace ipoperf
