#include "ipoperf/report.hpp"

#include "ipoperf/digest.hpp"

#include <json.hpp>

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace ipoperf
{

namespace
{

const char *kNa = "na";

std::string opt_percent(const std::optional<double> &v) { return v ? render_percent(*v) : kNa; }

const CohortSummary *find_grade(const ReportBundle &bundle, int grade)
{
    for (const auto &c : bundle.cohorts)
        if (c.grade == grade)
            return &c;
    return nullptr;
}

std::string car_table(const ReportBundle &bundle, bool adjusted)
{
    std::ostringstream out;
    out << "grade,n,months,negative_months,car_pct\n";
    for (const auto &c : bundle.cohorts)
    {
        const auto &path = adjusted ? c.adjusted : c.raw;
        out << c.grade << ',' << c.n << ',' << path.cumulative.size() << ',' << path.negative_months << ','
            << (path.cumulative.size() > 0 ? render_percent(path.cumulative(path.cumulative.size() - 1)) : kNa)
            << '\n';
    }
    return out.str();
}

std::string format_level(double level)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", level * 100.0);
    return buf;
}

}  // namespace

void validate_bundle(const ReportBundle &bundle, std::span<const RosterEntry> roster)
{
    std::set<int> grades;
    for (const auto &c : bundle.cohorts)
        if (!grades.insert(c.grade).second)
            throw std::invalid_argument("report bundle: grade " + std::to_string(c.grade) + " appears twice");
    for (const auto &f : bundle.fits)
        if (std::none_of(roster.begin(), roster.end(), [&](const RosterEntry &e) { return e.symbol == f.symbol; }))
            throw std::invalid_argument("report bundle: fit for " + f.symbol + " has no roster entry");
}

std::string round_half_even(double value, int decimals)
{
    if (!std::isfinite(value))
        return kNa;
    const double scale = std::pow(10.0, decimals);
    const int saved = std::fegetround();
    std::fesetround(FE_TONEAREST);
    const double rounded = std::nearbyint(value * scale);
    std::fesetround(saved);

    const auto units = static_cast<long long>(std::abs(rounded));
    const auto divisor = static_cast<long long>(scale);
    std::string out = rounded < 0.0 && units != 0 ? "-" : "";
    out += std::to_string(units / divisor);
    if (decimals > 0)
    {
        std::string frac = std::to_string(units % divisor);
        out += '.' + std::string(static_cast<std::size_t>(decimals) - frac.size(), '0') + frac;
    }
    return out;
}

std::string render_percent(double fraction) { return round_half_even(fraction * 100.0, 2); }

std::string render_ratio(double ratio) { return round_half_even(ratio, 4); }

std::string render_coefficient(double value)
{
    if (value != 0.0 && std::abs(value) < 1e-4)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2E", value);
        return buf;
    }
    return round_half_even(value, 4);
}

std::string render_cell(double coefficient, std::optional<double> std_error, bool significant)
{
    return render_coefficient(coefficient) + (significant ? "*" : "") + "(" +
           (std_error ? render_coefficient(*std_error) : std::string(kNa)) + ")";
}

std::vector<Artifact> render_cohort_tables(const ReportBundle &bundle)
{
    std::vector<Artifact> out;
    out.push_back({"table_raw.csv", car_table(bundle, false)});
    out.push_back({"table_adjusted.csv", car_table(bundle, true)});

    std::ostringstream hpr;
    hpr << "grade,n_complete,high_pct,low_pct,mean_pct,median_pct\n";
    for (const auto &c : bundle.cohorts)
    {
        hpr << c.grade << ',' << c.n_complete << ',';
        if (c.hpr)
            hpr << render_percent(c.hpr->high) << ',' << render_percent(c.hpr->low) << ','
                << render_percent(c.hpr->mean) << ',' << render_percent(c.hpr->median) << '\n';
        else
            hpr << "na,na,na,na\n";
    }
    out.push_back({"table_hpr.csv", hpr.str()});

    std::ostringstream wr;
    wr << "grade,n_complete,mean_ipo_bhr_pct,mean_benchmark_bhr_pct,wr_ratio,wr_pct,verdict\n";
    for (const auto &c : bundle.cohorts)
    {
        wr << c.grade << ',' << c.n_complete << ',' << opt_percent(c.mean_ipo_bhr) << ','
           << opt_percent(c.mean_benchmark_bhr) << ',';
        if (c.wealth_relative)
            wr << render_ratio(c.wealth_relative->ratio) << ',' << render_percent(c.wealth_relative->ratio) << ','
               << to_string(c.wealth_relative->verdict) << '\n';
        else
            wr << "na,na,na\n";
    }
    out.push_back({"table_wr.csv", wr.str()});
    return out;
}

Artifact render_first_day_table(const ReportBundle &bundle)
{
    std::ostringstream out;
    out << "symbol,grade,offer_price,first_close,first_day_return_pct,classification\n";
    for (const auto &r : bundle.first_day)
        out << r.symbol << ',' << r.grade << ',' << format_exact(r.offer_price) << ',' << format_exact(r.first_close)
            << ',' << render_percent(r.result.value) << ',' << to_string(r.result.pricing) << '\n';
    return {"table_first_day.csv", out.str()};
}

Artifact render_garch_table(std::span<const SecurityFit> fits, double level)
{
    std::ostringstream out;
    out << "company,c1,index,c3,resid_sq_lag,garch_lag,dummy,dividend_effect,note\n";
    for (const auto &sf : fits)
    {
        out << sf.symbol;
        std::string note = sf.note;
        auto add_note = [&](const std::string &n) { note += (note.empty() ? "" : "; ") + n; };
        if (sf.fit)
        {
            const auto &fit = *sf.fit;
            const Vector<double> theta = fit.params.to_vector();
            for (std::size_t i = 0; i < kGarchCoefficients; ++i)
                out << ',' << render_cell(theta(static_cast<Eigen::Index>(i)), fit.std_errors[i], fit.significant[i]);
            out << ',' << to_string(fit.dividend_effect);
            if (!fit.converged)
                add_note("not converged");
            if (!fit.params.stationary())
                add_note("non-stationary");
            if (fit.dummy_inert)
                add_note("dummy inert: indeterminate or zero-effect");
            else if (fit.converged && std::none_of(fit.std_errors.begin(), fit.std_errors.end(),
                                                   [](const auto &se) { return se.has_value(); }))
                add_note("standard errors unavailable");
        }
        else
        {
            out << ",na,na,na,na,na,na," << to_string(Verdict::indeterminate);
        }
        out << ',' << note << '\n';
    }
    out << "*Indicates statistical significance at " << format_level(level) << "% level\n";
    return {"table_garch.csv", out.str()};
}

Artifact render_fit_csv(std::span<const SecurityFit> fits)
{
    std::ostringstream out;
    out << "symbol,c1,se1,c2,se2,c3,se3,c4,se4,c5,se5,c6,se6,loglik,converged\n";
    for (const auto &sf : fits)
    {
        out << sf.symbol;
        if (sf.fit)
        {
            const Vector<double> theta = sf.fit->params.to_vector();
            for (std::size_t i = 0; i < kGarchCoefficients; ++i)
            {
                const auto &se = sf.fit->std_errors[i];
                out << ',' << format_exact(theta(static_cast<Eigen::Index>(i))) << ','
                    << (se ? format_exact(*se) : kNa);
            }
            out << ',' << format_exact(sf.fit->log_likelihood) << ',' << (sf.fit->converged ? "true" : "false");
        }
        else
        {
            for (int i = 0; i < 2 * kGarchCoefficients + 1; ++i)
                out << ",na";
            out << ",false";
        }
        out << '\n';
    }
    return {"garch_fits.csv", out.str()};
}

Artifact render_verdict(const CohortVerdict &verdict)
{
    std::ostringstream out;
    out << verdict.significant << " out of " << verdict.total << " dummy coefficients significant\n"
        << "conclusion: " << verdict.conclusion << '\n';
    return {"garch_verdict.txt", out.str()};
}

std::vector<Artifact> render_plot_data(const ReportBundle &bundle)
{
    std::vector<Artifact> out;
    for (int grade = 1; grade <= 5; ++grade)
    {
        std::ostringstream s;
        s << "event_month,car_raw,car_adjusted\n";
        if (const auto *c = find_grade(bundle, grade))
            for (Eigen::Index t = 0; t < c->adjusted.cumulative.size(); ++t)
                s << t + 1 << ',' << format_exact(c->raw.cumulative(t)) << ','
                  << format_exact(c->adjusted.cumulative(t)) << '\n';
        out.push_back({"plot_grade_" + std::to_string(grade) + ".csv", s.str()});
    }
    return out;
}

Artifact render_manifest(std::span<const Artifact> artifacts)
{
    std::vector<const Artifact *> sorted;
    for (const auto &a : artifacts)
        sorted.push_back(&a);
    std::sort(sorted.begin(), sorted.end(), [](const Artifact *a, const Artifact *b) { return a->name < b->name; });
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (const auto *a : sorted)
        entries.push_back({{"name", a->name}, {"bytes", a->content.size()}, {"sha256", sha256_hex(a->content)}});
    nlohmann::ordered_json doc;
    doc["artifacts"] = entries;
    return {"manifest.json", doc.dump(2) + "\n"};
}

Artifact render_metadata(const ReportMetadata &metadata)
{
    nlohmann::ordered_json doc;
    doc["command"] = metadata.command;
    doc["generated_at"] = metadata.generated_at;
    nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
    for (const auto &[path, digest] : metadata.input_digests)
        inputs[path] = digest;
    doc["inputs"] = inputs;
    return {"run_metadata.json", doc.dump(2) + "\n"};
}

void write_artifacts(const std::filesystem::path &directory, std::span<const Artifact> artifacts)
{
    std::filesystem::create_directories(directory);
    for (const auto &a : artifacts)
    {
        std::ofstream out(directory / a.name, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write " + (directory / a.name).string());
        out << a.content;
    }
}

}  // namespace ipoperf
