#include "ipoperf/simulate.hpp"

#include "ipoperf/parallel.hpp"

#include <algorithm>
#include <fstream>
#include <random>

namespace ipoperf
{

void SimConfig::validate() const
{
    if (length < 2)
        throw std::invalid_argument("SimConfig: length must be at least 2");
    if (burn_in < 0)
        throw std::invalid_argument("SimConfig: burn-in must be non-negative");
    if (!(market.volatility > 0.0))
        throw std::invalid_argument("SimConfig: market volatility must be positive");
    if (const auto *p = std::get_if<double>(&dummy); p && !(*p >= 0.0 && *p <= 1.0))
        throw std::invalid_argument("SimConfig: dummy probability must lie in [0, 1]");
    if (const auto *v = std::get_if<Vector<double>>(&dummy); v && v->size() != length)
        throw std::invalid_argument("SimConfig: explicit dummy length differs from series length");
    if (market_path && market_path->size() != length)
        throw std::invalid_argument("SimConfig: market path length differs from series length");
}

SimulatedPath simulate_path(const SimConfig &config)
{
    config.validate();
    const auto &p = config.truth;
    const int n = config.length;

    std::mt19937_64 engine(config.seed);
    std::normal_distribution<double> standard_normal(0.0, 1.0);

    Vector<double> d(n);
    if (const auto *prob = std::get_if<double>(&config.dummy))
    {
        std::mt19937_64 dummy_engine(config.seed ^ 0x9E3779B97F4A7C15ULL);
        std::bernoulli_distribution coin(*prob);
        for (int t = 0; t < n; ++t)
            d(t) = coin(dummy_engine) ? 1.0 : 0.0;
    }
    else
    {
        d = std::get<Vector<double>>(config.dummy);
    }

    const double persistence = p.c4 + p.c5;
    double h = persistence < 1.0 ? p.c3 / (1.0 - persistence) : p.c3;
    double e = 0.0;
    auto check = [&](double value, int step) {
        if (!(value > 0.0) || !std::isfinite(value))
            throw InfeasibleParams("simulate_path: conditional variance " + std::to_string(value) + " at step " +
                                   std::to_string(step) + " is not positive");
    };
    check(h, 0);

    for (int s = 0; s < config.burn_in; ++s)
    {
        if (s > 0)
            h = p.c3 + p.c4 * e * e + p.c5 * h;
        check(h, s);
        e = standard_normal(engine) * std::sqrt(h);
    }

    Vector<double> x(n), y(n), hs(n);
    for (int t = 0; t < n; ++t)
    {
        if (t > 0 || config.burn_in > 0)
            h = p.c3 + p.c4 * e * e + p.c5 * h + p.c6 * d(t);
        else
            h += p.c6 * d(t);
        check(h, config.burn_in + t);
        const double market = config.market.mean + config.market.volatility * standard_normal(engine);
        x(t) = config.market_path ? (*config.market_path)(t) : market;
        e = standard_normal(engine) * std::sqrt(h);
        hs(t) = h;
        y(t) = p.c1 + p.c2 * x(t) + e;
    }
    return {GarchData(std::move(y), std::move(x), DummySeries(std::move(d))), std::move(hs)};
}

std::vector<std::optional<GarchFit>> replicate_fits(const SimConfig &config, int replications,
                                                    const GarchSpec &spec, int threads)
{
    if (replications < 1)
        throw std::invalid_argument("replicate_fits: need at least one replication");
    config.validate();
    // Surface infeasible truths before spawning work.
    simulate_path(config);

    std::vector<std::optional<GarchFit>> fits(static_cast<std::size_t>(replications));
    parallel_for(replications, threads, [&](int r) {
        SimConfig local = config;
        local.seed = config.seed + static_cast<std::uint64_t>(r);
        try
        {
            fits[static_cast<std::size_t>(r)] = estimate(simulate_path(local).data, spec);
        }
        catch (const DegenerateData &)
        {
        }
        catch (const InfeasibleParams &)
        {
        }
    });
    return fits;
}

double compensated_sum(std::span<const double> values)
{
    double sum = 0.0;
    double carry = 0.0;
    for (double v : values)
    {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            carry += (sum - t) + v;
        else
            carry += (v - t) + sum;
        sum = t;
    }
    return sum + carry;
}

RecoveryReport summarize_recovery(const GarchParams &truth, std::span<const std::optional<GarchFit>> fits)
{
    RecoveryReport report;
    report.replications = static_cast<int>(fits.size());
    std::vector<const GarchFit *> kept;
    for (const auto &f : fits)
        if (f && f->converged)
            kept.push_back(&*f);
    report.converged = static_cast<int>(kept.size());
    report.excluded = report.replications - report.converged;

    const Vector<double> true_vec = truth.to_vector();
    const double z = critical_value(0.05);
    for (int i = 0; i < kGarchCoefficients; ++i)
    {
        auto &c = report.coefficients[static_cast<std::size_t>(i)];
        c.truth = true_vec(i);
        if (kept.empty())
            continue;
        std::vector<double> est, sq_err, se;
        int covered = 0;
        for (const auto *f : kept)
        {
            const double v = f->params.to_vector()(i);
            est.push_back(v);
            sq_err.push_back((v - c.truth) * (v - c.truth));
            if (const auto &s = f->std_errors[static_cast<std::size_t>(i)])
            {
                se.push_back(*s);
                if (std::abs(v - c.truth) <= z * *s)
                    ++covered;
            }
        }
        const auto n = static_cast<double>(est.size());
        c.mean_estimate = compensated_sum(est) / n;
        c.bias = c.mean_estimate - c.truth;
        c.rmse = std::sqrt(compensated_sum(sq_err) / n);
        if (est.size() > 1)
        {
            std::vector<double> dev;
            for (double v : est)
                dev.push_back((v - c.mean_estimate) * (v - c.mean_estimate));
            c.mc_sd = std::sqrt(compensated_sum(dev) / (n - 1.0));
        }
        if (!se.empty())
        {
            c.mean_se = compensated_sum(se) / static_cast<double>(se.size());
            c.coverage = static_cast<double>(covered) / static_cast<double>(se.size());
        }
    }
    return report;
}

RecoveryReport recovery_experiment(const SimConfig &config, int replications, const GarchSpec &spec, int threads)
{
    if (replications < 2)
        throw std::invalid_argument("recovery_experiment: need at least two replications");
    const auto fits = replicate_fits(config, replications, spec, threads);
    return summarize_recovery(config.truth, fits);
}

namespace
{

std::vector<Date> weekday_calendar(Date first, std::size_t count)
{
    std::vector<Date> days;
    days.reserve(count);
    for (Date d = first; days.size() < count; d += std::chrono::days{1})
    {
        const std::chrono::weekday wd{d};
        if (wd != std::chrono::Saturday && wd != std::chrono::Sunday)
            days.push_back(d);
    }
    return days;
}

std::string panel_symbol(int i)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "SYN%02d", i + 1);
    return buf;
}

}  // namespace

SyntheticPanel make_synthetic_panel(const SyntheticPanelConfig &config)
{
    if (config.securities < 1 || config.planted < 0 || config.planted > config.securities)
        throw std::invalid_argument("make_synthetic_panel: planted count must lie in [0, securities]");
    if (config.months < 2 || config.month_days < 1 || config.listing_stagger_days < 0)
        throw std::invalid_argument("make_synthetic_panel: bad calendar settings");

    const int span = config.months * config.month_days + 1;
    const auto total = static_cast<std::size_t>(config.listing_stagger_days * (config.securities - 1) + span + 5);
    const auto calendar = weekday_calendar(Date{std::chrono::year{2011} / 1 / 3}, total);

    std::mt19937_64 engine(config.seed);
    std::normal_distribution<double> daily(0.0003, 0.01);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<PricePoint> bench;
    double level = 5000.0;
    for (std::size_t i = 0; i < calendar.size(); ++i)
    {
        if (i > 0)
            level *= std::exp(daily(engine));
        bench.push_back({calendar[i], level});
    }

    SyntheticPanel panel;
    for (int i = 0; i < config.securities; ++i)
    {
        const std::string symbol = panel_symbol(i);
        const std::size_t listing = static_cast<std::size_t>(i * config.listing_stagger_days);
        const auto L = static_cast<std::size_t>(config.month_days);

        SimConfig sim;
        sim.truth = config.null_truth;
        if (i < config.planted)
        {
            sim.truth.c6 = config.planted_delta;
            panel.planted_symbols.push_back(symbol);
        }
        sim.length = config.months;
        sim.seed = config.seed * 1000 + static_cast<std::uint64_t>(i);
        Vector<double> market(config.months), dummy(config.months);
        for (int t = 0; t < config.months; ++t)
        {
            const auto tt = static_cast<std::size_t>(t);
            market(t) = bench[listing + (tt + 1) * L].close / bench[listing + tt * L].close - 1.0;
            dummy(t) = unit(engine) < config.dividend_probability ? 1.0 : 0.0;
        }
        sim.market_path = market;
        sim.dummy = dummy;
        const auto path = simulate_path(sim);

        std::vector<PricePoint> prices;
        double close = 100.0;
        prices.push_back({calendar[listing], close});
        for (int t = 0; t < config.months; ++t)
        {
            const auto tt = static_cast<std::size_t>(t);
            const double gross = 1.0 + path.data.y(t);
            if (!(gross > 0.0))
                throw InfeasibleParams("make_synthetic_panel: simulated return below -100% for " + symbol);
            for (std::size_t k = 1; k <= L; ++k)
            {
                if (k == L)
                    close *= gross;
                prices.push_back({calendar[listing + tt * L + k], close});
            }
            if (dummy(t) == 1.0)
                panel.dividends.push_back({symbol, calendar[listing + tt * L + 1 + L / 2], 1.0 + 0.5 * (t % 4)});
        }
        panel.securities.emplace(symbol, PriceSeries(symbol, std::move(prices)));

        RosterEntry entry;
        entry.symbol = symbol;
        entry.grade = 1 + i % 5;
        entry.listing_date = calendar[listing];
        entry.offer_price = std::round(100.0 / (1.0 + (unit(engine) * 0.5 - 0.2)) * 100.0) / 100.0;
        panel.roster.push_back(entry);
    }
    panel.benchmark = PriceSeries("BENCH", std::move(bench));
    return panel;
}

void write_panel(const std::filesystem::path &directory, const SyntheticPanel &panel)
{
    std::filesystem::create_directories(directory);
    auto open = [&](const char *name) {
        std::ofstream out(directory / name, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write " + (directory / name).string());
        return out;
    };
    {
        auto out = open("prices.csv");
        write_prices(out, panel.securities);
    }
    {
        auto out = open("benchmark.csv");
        write_prices(out, PriceCollection{{panel.benchmark.symbol(), panel.benchmark}});
    }
    {
        auto out = open("roster.csv");
        write_roster(out, panel.roster);
    }
    {
        auto out = open("dividends.csv");
        write_dividends(out, panel.dividends);
    }
}

}  // namespace ipoperf
