#include "ipoperf/cli.hpp"

#include "ipoperf/data_ingest.hpp"
#include "ipoperf/digest.hpp"
#include "ipoperf/event_study.hpp"
#include "ipoperf/parallel.hpp"
#include "ipoperf/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <ctime>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

namespace ipoperf::cli
{

namespace
{

template <typename T>
T parse_value(const std::string &key, const std::string &value)
{
    T out{};
    const auto *end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (value.empty() || ec != std::errc{} || ptr != end)
        throw InputError("option " + key + ": cannot parse '" + value + "'");
    return out;
}

bool parse_bool(const std::string &key, const std::string &value)
{
    if (value == "true" || value == "1" || value == "yes" || value == "on")
        return true;
    if (value == "false" || value == "0" || value == "no" || value == "off")
        return false;
    throw InputError("option " + key + ": expected a boolean, got '" + value + "'");
}

using Setter = std::function<void(RunConfig &, const std::string &, const std::string &)>;
using Getter = std::function<std::string(const RunConfig &)>;

struct OptionSlot
{
    Setter set;
    Getter get;
};

template <typename T, typename Field>
OptionSlot numeric(Field field)
{
    return {[field](RunConfig &c, const std::string &k, const std::string &v) { field(c) = parse_value<T>(k, v); },
            [field](const RunConfig &c) {
                if constexpr (std::is_floating_point_v<T>)
                    return format_exact(field(c));
                else
                    return std::to_string(field(c));
            }};
}

template <typename Field>
OptionSlot path_slot(Field field)
{
    return {[field](RunConfig &c, const std::string &, const std::string &v) { field(c) = v; },
            [field](const RunConfig &c) { return field(c).string(); }};
}

const std::map<std::string, OptionSlot> &option_table()
{
    static const std::map<std::string, OptionSlot> table = {
        {"prices", path_slot([](auto &c) -> auto & { return c.prices; })},
        {"benchmark", path_slot([](auto &c) -> auto & { return c.benchmark; })},
        {"roster", path_slot([](auto &c) -> auto & { return c.roster; })},
        {"dividends", path_slot([](auto &c) -> auto & { return c.dividends; })},
        {"out", path_slot([](auto &c) -> auto & { return c.out; })},
        {"write_panel", path_slot([](auto &c) -> auto & { return c.write_panel; })},
        {"months", numeric<int>([](auto &c) -> auto & { return c.months; })},
        {"month_days", numeric<int>([](auto &c) -> auto & { return c.month_days; })},
        {"level", numeric<double>([](auto &c) -> auto & { return c.garch.significance_level; })},
        {"variance_floor", numeric<double>([](auto &c) -> auto & { return c.garch.variance_floor; })},
        {"max_iterations", numeric<int>([](auto &c) -> auto & { return c.garch.max_iterations; })},
        {"ll_tolerance", numeric<double>([](auto &c) -> auto & { return c.garch.ll_tolerance; })},
        {"constrained",
         {[](RunConfig &c, const std::string &k, const std::string &v) {
              c.garch.constrain_stationarity = parse_bool(k, v);
          },
          [](const RunConfig &c) { return std::string(c.garch.constrain_stationarity ? "true" : "false"); }}},
        {"seed", numeric<std::uint64_t>([](auto &c) -> auto & { return c.seed; })},
        {"reps", numeric<int>([](auto &c) -> auto & { return c.reps; })},
        {"threads", numeric<int>([](auto &c) -> auto & { return c.threads; })},
        {"length", numeric<int>([](auto &c) -> auto & { return c.length; })},
        {"c1", numeric<double>([](auto &c) -> auto & { return c.truth.c1; })},
        {"c2", numeric<double>([](auto &c) -> auto & { return c.truth.c2; })},
        {"omega", numeric<double>([](auto &c) -> auto & { return c.truth.c3; })},
        {"alpha", numeric<double>([](auto &c) -> auto & { return c.truth.c4; })},
        {"beta", numeric<double>([](auto &c) -> auto & { return c.truth.c5; })},
        {"delta", numeric<double>([](auto &c) -> auto & { return c.truth.c6; })},
        {"dummy_prob", numeric<double>([](auto &c) -> auto & { return c.dummy_prob; })},
        {"market_mean", numeric<double>([](auto &c) -> auto & { return c.market_mean; })},
        {"market_vol", numeric<double>([](auto &c) -> auto & { return c.market_vol; })},
        {"securities", numeric<int>([](auto &c) -> auto & { return c.panel_securities; })},
        {"planted", numeric<int>([](auto &c) -> auto & { return c.panel_planted; })},
        {"planted_delta", numeric<double>([](auto &c) -> auto & { return c.planted_delta; })},
    };
    return table;
}

std::string utc_timestamp()
{
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void require_path(const std::filesystem::path &path, const char *flag)
{
    if (path.empty())
        throw InputError(std::string("missing required input --") + flag);
    if (!std::filesystem::exists(path))
        throw InputError(path.string(), 0, "file not found");
}

struct Pipeline
{
    AlignedPanel panel;
    std::vector<SecurityEventReturns> returns;  // roster order, usable securities only
    std::vector<std::string> warnings;
    ReportMetadata metadata;
};

Pipeline load_pipeline(const RunConfig &config, bool need_dividends, const std::string &command)
{
    require_path(config.prices, "prices");
    require_path(config.benchmark, "benchmark");
    require_path(config.roster, "roster");
    if (need_dividends || !config.dividends.empty())
        require_path(config.dividends, "dividends");

    Pipeline p;
    p.metadata.command = command;
    p.metadata.generated_at = utc_timestamp();

    PanelInputs inputs;
    inputs.securities = load_prices(config.prices);
    auto bench = load_prices(config.benchmark);
    if (bench.size() != 1)
        throw InputError(config.benchmark.string(), 0,
                         "benchmark file must hold exactly one series, found " + std::to_string(bench.size()));
    inputs.benchmark = std::move(bench.begin()->second);
    inputs.roster = load_roster(config.roster);
    if (!config.dividends.empty())
        inputs.dividends = load_dividends(config.dividends);

    for (const auto *path : {&config.prices, &config.benchmark, &config.roster, &config.dividends})
        if (!path->empty())
            p.metadata.input_digests[path->string()] = sha256_file(*path);

    AlignOptions align_options;
    align_options.months = config.months;
    align_options.month_days = config.month_days;
    p.panel = align(std::move(inputs), align_options);
    p.warnings = p.panel.warnings;

    const EventClockOptions clock{config.months, config.month_days};
    for (const auto &entry : p.panel.roster)
    {
        try
        {
            p.returns.push_back(
                monthly_returns(p.panel.securities.at(entry.symbol), p.panel.benchmark, entry, clock));
            if (!p.returns.back().security.complete)
                p.warnings.push_back(entry.symbol + ": partial history (" +
                                     std::to_string(p.returns.back().security.monthly_returns.size()) + " of " +
                                     std::to_string(config.months) + " months); excluded from HPR and WR");
        }
        catch (const InsufficientHistory &e)
        {
            p.warnings.push_back(std::string(e.what()) + "; excluded from the long-run study");
        }
    }
    return p;
}

void build_event_study(const RunConfig &config, const Pipeline &p, ReportBundle &bundle)
{
    for (int grade = 1; grade <= 5; ++grade)
    {
        std::vector<SecurityEventReturns> cohort;
        for (const auto &r : p.returns)
            if (r.security.grade == grade)
                cohort.push_back(r);
        if (!cohort.empty())
            bundle.cohorts.push_back(cohort_summary(cohort, config.months));
    }
    for (const auto &r : p.returns)
    {
        const auto *entry = p.panel.find_roster(r.security.symbol);
        if (!entry || !entry->offer_price)
            continue;
        bundle.first_day.push_back(
            {entry->symbol, entry->grade, *entry->offer_price, r.first_close, first_day_return(*entry->offer_price, r.first_close)});
    }
}

void build_garch(const RunConfig &config, Pipeline &p, ReportBundle &bundle)
{
    std::vector<const SecurityEventReturns *> usable;
    for (const auto &r : p.returns)
    {
        if (r.security.monthly_returns.size() >= kMinGarchObservations)
            usable.push_back(&r);
        else
            p.warnings.push_back(r.security.symbol + ": fewer than " + std::to_string(kMinGarchObservations) +
                                 " usable months; not fitted");
    }

    std::vector<SecurityFit> fits(usable.size());
    std::vector<std::vector<std::string>> fit_warnings(usable.size());
    parallel_for(static_cast<int>(usable.size()), config.threads, [&](int i) {
        const auto &r = *usable[static_cast<std::size_t>(i)];
        auto &sf = fits[static_cast<std::size_t>(i)];
        sf.symbol = r.security.symbol;
        sf.grade = r.security.grade;
        std::vector<DividendEvent> own;
        for (const auto &d : p.panel.dividends)
            if (d.symbol == sf.symbol)
                own.push_back(d);
        try
        {
            GarchData data(r.security.monthly_returns, r.benchmark.monthly_returns,
                           build_dummy(own, r.clock, &fit_warnings[static_cast<std::size_t>(i)]));
            sf.fit = estimate(data, config.garch);
        }
        catch (const DegenerateData &e)
        {
            sf.note = e.what();
        }
    });
    for (auto &w : fit_warnings)
        p.warnings.insert(p.warnings.end(), w.begin(), w.end());

    bundle.fits = std::move(fits);
    std::vector<GarchFit> fitted;
    for (const auto &sf : bundle.fits)
        if (sf.fit)
            fitted.push_back(*sf.fit);
    if (!fitted.empty())
        bundle.verdict = cohort_verdict(fitted);
    else
        p.warnings.push_back("no security could be fitted; no cohort verdict");
}

void write_manifest(const std::filesystem::path &dir, std::span<const Artifact> artifacts)
{
    const auto path = dir / "manifest.json";
    std::map<std::string, nlohmann::ordered_json> entries;
    if (std::ifstream in(path); in)
    {
        const auto previous = nlohmann::ordered_json::parse(in, nullptr, false);
        if (!previous.is_discarded() && previous.contains("artifacts"))
            for (const auto &e : previous["artifacts"])
                if (e.contains("name") && std::filesystem::exists(dir / e["name"].get<std::string>()))
                    entries[e["name"].get<std::string>()] = e;
    }
    const auto fresh = nlohmann::ordered_json::parse(render_manifest(artifacts).content);
    for (const auto &e : fresh["artifacts"])
        entries[e["name"].get<std::string>()] = e;
    nlohmann::ordered_json doc;
    doc["artifacts"] = nlohmann::ordered_json::array();
    for (auto &[name, e] : entries)
        doc["artifacts"].push_back(e);
    write_artifacts(dir, std::vector<Artifact>{{"manifest.json", doc.dump(2) + "\n"}});
}

void finish(const RunConfig &config, const std::string &command, std::vector<Artifact> artifacts,
            const ReportMetadata &metadata)
{
    artifacts.push_back({"config_" + command + ".txt", echo_config(config)});
    write_artifacts(config.out, artifacts);
    write_manifest(config.out, artifacts);
    auto meta = render_metadata(metadata);
    meta.name = "run_metadata_" + command + ".json";
    write_artifacts(config.out, std::vector<Artifact>{meta});
}

void print_warnings(const std::vector<std::string> &warnings, std::ostream &err)
{
    for (const auto &w : warnings)
        err << "warning: " << w << '\n';
}

template <typename Body>
int guarded(std::ostream &err, Body &&body)
{
    try
    {
        return body();
    }
    catch (const InputError &e)
    {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }
    catch (const InfeasibleParams &e)
    {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }
    catch (const std::exception &e)
    {
        err << "error: internal: " << e.what() << '\n';
        return kExitInternal;
    }
}

void print_first_day_summary(const ReportBundle &bundle, std::ostream &out)
{
    if (bundle.first_day.empty())
        return;
    int under = 0, over = 0, flat = 0;
    for (const auto &r : bundle.first_day)
        (r.result.pricing == Pricing::underpriced ? under : r.result.pricing == Pricing::overpriced ? over : flat)++;
    out << "first-day returns: " << under << " underpriced, " << over << " overpriced, " << flat << " flat\n";
}

}  // namespace

void RunConfig::validate() const
{
    if (months < 1 || month_days < 1)
        throw InputError("months and month_days must be at least 1");
    try
    {
        garch.validate();
    }
    catch (const std::invalid_argument &e)
    {
        throw InputError(e.what());
    }
    if (reps < 2 || length < 2)
        throw InputError("reps and length must be at least 2");
}

void set_option(RunConfig &config, const std::string &key, const std::string &value)
{
    const auto &table = option_table();
    auto it = table.find(key);
    if (it == table.end())
        throw InputError("unknown option '" + key + "'");
    it->second.set(config, key, value);
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw InputError(path.string(), 0, "cannot open config file");
    std::map<std::string, std::string> values;
    std::string line;
    std::size_t line_no = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line))
    {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError(path.string(), line_no, "expected key=value");
        auto key = trim(line.substr(0, eq));
        std::replace(key.begin(), key.end(), '-', '_');
        values[key] = trim(line.substr(eq + 1));
    }
    return values;
}

std::string echo_config(const RunConfig &config)
{
    std::ostringstream out;
    for (const auto &[key, slot] : option_table())
        out << key << '=' << slot.get(config) << '\n';
    return out.str();
}

int cmd_eventstudy(const RunConfig &config, std::ostream &out, std::ostream &err)
{
    return guarded(err, [&] {
        config.validate();
        auto p = load_pipeline(config, false, "eventstudy");
        ReportBundle bundle;
        bundle.months = config.months;
        bundle.metadata = p.metadata;
        build_event_study(config, p, bundle);
        validate_bundle(bundle, p.panel.roster);

        auto artifacts = render_cohort_tables(bundle);
        artifacts.push_back(render_first_day_table(bundle));
        for (auto &a : render_plot_data(bundle))
            artifacts.push_back(std::move(a));
        finish(config, "eventstudy", std::move(artifacts), bundle.metadata);

        print_warnings(p.warnings, err);
        out << "event study: " << p.returns.size() << " securities in " << bundle.cohorts.size()
            << " grade cohorts; tables written to " << config.out.string() << '\n';
        print_first_day_summary(bundle, out);
        return kExitOk;
    });
}

int cmd_garch(const RunConfig &config, std::ostream &out, std::ostream &err)
{
    return guarded(err, [&] {
        config.validate();
        auto p = load_pipeline(config, true, "garch");
        ReportBundle bundle;
        bundle.metadata = p.metadata;
        bundle.significance_level = config.garch.significance_level;
        build_garch(config, p, bundle);
        validate_bundle(bundle, p.panel.roster);

        std::vector<Artifact> artifacts{render_garch_table(bundle.fits, config.garch.significance_level),
                                        render_fit_csv(bundle.fits)};
        if (bundle.verdict)
            artifacts.push_back(render_verdict(*bundle.verdict));
        finish(config, "garch", std::move(artifacts), bundle.metadata);

        print_warnings(p.warnings, err);
        if (bundle.verdict)
            out << bundle.verdict->significant << " out of " << bundle.verdict->total
                << " dummy coefficients significant (" << bundle.verdict->conclusion << ")\n";
        return kExitOk;
    });
}

int cmd_report(const RunConfig &config, std::ostream &out, std::ostream &err)
{
    return guarded(err, [&] {
        config.validate();
        auto p = load_pipeline(config, true, "report");
        ReportBundle bundle;
        bundle.months = config.months;
        bundle.metadata = p.metadata;
        bundle.significance_level = config.garch.significance_level;
        build_event_study(config, p, bundle);
        build_garch(config, p, bundle);
        validate_bundle(bundle, p.panel.roster);

        auto artifacts = render_cohort_tables(bundle);
        artifacts.push_back(render_first_day_table(bundle));
        for (auto &a : render_plot_data(bundle))
            artifacts.push_back(std::move(a));
        artifacts.push_back(render_garch_table(bundle.fits, config.garch.significance_level));
        artifacts.push_back(render_fit_csv(bundle.fits));
        if (bundle.verdict)
            artifacts.push_back(render_verdict(*bundle.verdict));
        finish(config, "report", std::move(artifacts), bundle.metadata);

        print_warnings(p.warnings, err);
        print_first_day_summary(bundle, out);
        if (bundle.verdict)
            out << bundle.verdict->significant << " out of " << bundle.verdict->total
                << " dummy coefficients significant (" << bundle.verdict->conclusion << ")\n";
        return kExitOk;
    });
}

int cmd_simulate(const RunConfig &config, std::ostream &out, std::ostream &err)
{
    return guarded(err, [&] {
        config.validate();
        if (!config.write_panel.empty())
        {
            SyntheticPanelConfig pc;
            pc.securities = config.panel_securities;
            pc.planted = config.panel_planted;
            pc.planted_delta = config.planted_delta;
            pc.months = config.months;
            pc.month_days = config.month_days;
            pc.dividend_probability = config.dummy_prob;
            pc.seed = config.seed;
            try
            {
                write_panel(config.write_panel, make_synthetic_panel(pc));
            }
            catch (const std::invalid_argument &e)
            {
                throw InputError(e.what());
            }
            out << "synthetic panel written to " << config.write_panel.string() << '\n';
            return kExitOk;
        }

        SimConfig sim;
        sim.truth = config.truth;
        sim.length = config.length;
        sim.dummy = config.dummy_prob;
        sim.market = {config.market_mean, config.market_vol};
        sim.seed = config.seed;
        try
        {
            sim.validate();
        }
        catch (const std::invalid_argument &e)
        {
            throw InputError(e.what());
        }
        const auto report = recovery_experiment(sim, config.reps, config.garch, config.threads);

        std::ostringstream table;
        table << "coefficient,truth,mean_estimate,bias,rmse,mc_sd,mean_se,coverage\n";
        for (std::size_t i = 0; i < kGarchCoefficients; ++i)
        {
            const auto &c = report.coefficients[i];
            table << kCoefficientNames[i] << ',' << format_exact(c.truth) << ',' << format_exact(c.mean_estimate)
                  << ',' << format_exact(c.bias) << ',' << format_exact(c.rmse) << ',' << format_exact(c.mc_sd)
                  << ',' << format_exact(c.mean_se) << ',' << (c.coverage ? format_exact(*c.coverage) : "na")
                  << '\n';
        }
        std::ostringstream summary;
        summary << "replications=" << report.replications << "\nconverged=" << report.converged
                << "\nexcluded=" << report.excluded << "\nlength=" << config.length << "\nseed=" << config.seed
                << '\n';

        ReportMetadata meta;
        meta.command = "simulate";
        meta.generated_at = utc_timestamp();
        finish(config, "simulate", {{"simulation.csv", table.str()}, {"simulation_summary.txt", summary.str()}},
               meta);
        out << "simulation: " << report.converged << " of " << report.replications
            << " replications converged; report written to " << config.out.string() << '\n';
        if (report.excluded > 0)
            err << "warning: " << report.excluded << " replication(s) excluded (non-converged or failed)\n";
        return kExitOk;
    });
}

int run(std::span<const std::string> args, std::ostream &out, std::ostream &err)
{
    CLI::App app{"IPO long-run performance and dividend-effect GARCH toolkit", "ipoperf"};
    app.require_subcommand(1);

    std::map<std::string, std::string> given;
    std::string config_file;
    app.add_option("--config", config_file, "Flat key=value config file");

    struct FlagSpec
    {
        const char *flag;
        const char *help;
    };
    static constexpr FlagSpec kValueFlags[] = {
        {"prices", "Security prices CSV (symbol,date,close)"},
        {"benchmark", "Benchmark index CSV (symbol,date,close)"},
        {"roster", "Grade roster CSV (symbol,grade,listing_date[,offer_price])"},
        {"dividends", "Dividend calendar CSV (symbol,event_date,amount)"},
        {"out", "Output directory"},
        {"months", "Event months in the horizon"},
        {"month-days", "Trading days per event month"},
        {"level", "Significance level for coefficient tests"},
        {"seed", "Random seed"},
        {"reps", "Simulation replications"},
        {"length", "Simulated series length"},
        {"threads", "Worker threads (0 = all cores)"},
        {"max-iterations", "Optimizer iteration limit"},
        {"ll-tolerance", "Log-likelihood convergence tolerance"},
        {"variance-floor", "Lower bound on conditional variances"},
        {"omega", "Simulated variance intercept"},
        {"alpha", "Simulated ARCH coefficient"},
        {"beta", "Simulated GARCH coefficient"},
        {"delta", "Simulated dummy coefficient"},
        {"c1", "Simulated mean intercept"},
        {"c2", "Simulated market beta"},
        {"dummy-prob", "Share of dummy periods in simulation"},
        {"write-panel", "simulate: write a synthetic price panel to this directory"},
        {"securities", "simulate --write-panel: number of securities"},
        {"planted", "simulate --write-panel: securities with a planted dividend effect"},
        {"planted-delta", "simulate --write-panel: planted dummy coefficient"},
    };
    std::map<std::string, std::string> raw;
    std::vector<std::pair<std::string, CLI::Option *>> options;
    for (const auto &f : kValueFlags)
    {
        std::string key = f.flag;
        std::replace(key.begin(), key.end(), '-', '_');
        options.emplace_back(key, app.add_option(std::string("--") + f.flag, raw[key], f.help));
    }
    auto *constrained = app.add_flag("--constrained", "Impose c3 > 0, c4, c5 >= 0, c4 + c5 < 1");

    auto *eventstudy = app.add_subcommand("eventstudy", "Long-run performance tables and plot data");
    auto *garch = app.add_subcommand("garch", "GARCH(1,1) dividend-effect fits");
    auto *simulate = app.add_subcommand("simulate", "Parameter-recovery experiment or synthetic panel");
    auto *report = app.add_subcommand("report", "Event study and GARCH fits in one bundle");
    for (auto *sub : {eventstudy, garch, simulate, report})
        sub->fallthrough();

    std::vector<const char *> argv;
    for (const auto &a : args)
        argv.push_back(a.c_str());
    try
    {
        app.parse(static_cast<int>(argv.size()), argv.data());
    }
    catch (const CLI::ParseError &e)
    {
        std::ostringstream help_out, help_err;
        const int code = app.exit(e, help_out, help_err);
        out << help_out.str();
        err << help_err.str();
        return code == 0 ? kExitOk : kExitInput;
    }

    RunConfig config;
    const int status = guarded(err, [&] {
        if (!config_file.empty())
            for (const auto &[key, value] : read_config_file(config_file))
                set_option(config, key, value);
        for (const auto &[key, opt] : options)
            if (opt->count() > 0)
                set_option(config, key, raw[key]);
        if (constrained->count() > 0)
            config.garch.constrain_stationarity = true;
        return kExitOk;
    });
    if (status != kExitOk)
        return status;

    if (eventstudy->parsed())
        return cmd_eventstudy(config, out, err);
    if (garch->parsed())
        return cmd_garch(config, out, err);
    if (simulate->parsed())
        return cmd_simulate(config, out, err);
    return cmd_report(config, out, err);
}

}  // namespace ipoperf::cli
