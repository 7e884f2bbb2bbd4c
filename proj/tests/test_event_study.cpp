#include "support.hpp"
#include "oracles.hpp"

#include "ipoperf/event_study.hpp"

#include <json.hpp>

#include <map>
#include <random>

using namespace ipoperf;

namespace
{

// Security and benchmark series over consecutive weekdays with the given closes.
SecurityEventReturns returns_of(const std::vector<double> &closes, const std::vector<double> &bench, int grade = 1,
                                EventClockOptions options = {})
{
    const auto cal = oracle::weekdays(Date{std::chrono::year{2012} / 1 / 2}, static_cast<int>(bench.size()));
    std::vector<PricePoint> s, b;
    for (std::size_t i = 0; i < bench.size(); ++i)
    {
        b.push_back({cal[i], bench[i]});
        if (i < closes.size())
            s.push_back({cal[i], closes[i]});
    }
    return monthly_returns(PriceSeries("X", s), PriceSeries("B", b), RosterEntry{"X", grade, cal[0], std::nullopt},
                           options);
}

std::vector<double> random_walk(std::mt19937_64 &rng, int n, double start = 100.0, double sd = 0.02)
{
    std::normal_distribution<double> z(0.0, sd);
    std::vector<double> out{start};
    while (static_cast<int>(out.size()) < n)
        out.push_back(out.back() * std::exp(z(rng)));
    return out;
}

}  // namespace

TEST_CASE("event clock maps trading days onto event months")
{
    CHECK(event_month_of(1) == kInitialPeriod);
    CHECK(event_month_of(2) == 1);
    CHECK(event_month_of(22) == 1);
    CHECK(event_month_of(23) == 2);
    CHECK(event_month_of(757) == 36);
    CHECK(event_month_of(758) == 37);
    CHECK_THROWS_AS(event_month_of(0), std::out_of_range);
    CHECK_THROWS_AS(event_month_of(-4), std::out_of_range);
    CHECK_THROWS(event_month_of(5, 0));
}

TEST_CASE("event months partition the days after listing into equal windows")
{
    for (int L : {1, 5, 21, 22})
    {
        std::map<int, int> count;
        for (int day = 2; day <= 36 * L + 1; ++day)
        {
            const int m = event_month_of(day, L);
            CHECK(m == (day - 2) / L + 1);  // integer ceil((day-1)/L)
            ++count[m];
        }
        CHECK(count.size() == 36u);
        for (const auto &[m, c] : count)
            CHECK(c == L);
    }
}

TEST_CASE("month one runs from the listing-day close to the day-22 close")
{
    std::vector<double> closes(30, 100.0);
    for (int day = 22; day <= 30; ++day)
        closes[static_cast<std::size_t>(day - 1)] = 110.0;
    const auto r = returns_of(closes, std::vector<double>(30, 1000.0));
    REQUIRE(r.security.monthly_returns.size() == 1);
    CHECK(r.security.monthly_returns(0) == doctest::Approx(0.10).epsilon(1e-14));
    CHECK(r.benchmark.monthly_returns(0) == 0.0);
    CHECK(r.first_close == 100.0);
    CHECK(r.clock.first_day_of_month(1) == 2);
    CHECK(r.clock.last_day_of_month(1) == 22);
    CHECK(r.clock.last_day_of_month(36) == 757);
    CHECK_FALSE(r.security.complete);
}

TEST_CASE("constant prices earn nothing")
{
    const auto r = returns_of(std::vector<double>(800, 42.0), std::vector<double>(800, 7.0));
    REQUIRE(r.security.monthly_returns.size() == 36);
    CHECK(r.security.complete);
    CHECK(r.security.monthly_returns.cwiseAbs().maxCoeff() == 0.0);
    CHECK(buy_and_hold_return(r.security) == 0.0);
}

TEST_CASE("too little history is reported as such")
{
    CHECK_THROWS_AS(returns_of(std::vector<double>(21, 1.0), std::vector<double>(50, 1.0)), InsufficientHistory);
    CHECK_NOTHROW(returns_of(std::vector<double>(22, 1.0), std::vector<double>(50, 1.0)));
    // a listing after the last quote
    const auto cal = oracle::weekdays(Date{std::chrono::year{2012} / 1 / 2}, 40);
    std::vector<PricePoint> pts;
    for (const auto &day : cal)
        pts.push_back({day, 1.0});
    CHECK_THROWS_AS(monthly_returns(PriceSeries("X", pts), PriceSeries("B", pts),
                                    RosterEntry{"X", 1, cal.back() + std::chrono::days{3}, std::nullopt}),
                    InsufficientHistory);
}

TEST_CASE("an unaligned security is rejected")
{
    const auto cal = oracle::weekdays(Date{std::chrono::year{2012} / 1 / 2}, 40);
    std::vector<PricePoint> s, b;
    for (std::size_t i = 0; i < cal.size(); ++i)
    {
        s.push_back({cal[i], 1.0});
        if (i != 10)
            b.push_back({cal[i], 1.0});
    }
    CHECK_THROWS_AS(monthly_returns(PriceSeries("X", s), PriceSeries("B", b), RosterEntry{"X", 1, cal[0], {}}),
                    std::invalid_argument);
}

TEST_CASE("monthly returns match a window-slicing oracle")
{
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 25; ++trial)
    {
        const int n = 22 + static_cast<int>(rng() % 800);
        const auto closes = random_walk(rng, n);
        const auto bench = random_walk(rng, n + 10, 5000.0, 0.01);
        for (int L : {21, 10})
        {
            const auto r = returns_of(closes, bench, 1, {36, L});
            const auto want = oracle::sliced_month_returns(closes, 36, L);
            const auto want_b = oracle::sliced_month_returns(bench, 36, L);
            REQUIRE(r.security.monthly_returns.size() == static_cast<Eigen::Index>(want.size()));
            CHECK(r.clock.populated_months() == static_cast<int>(want.size()));
            for (std::size_t t = 0; t < want.size(); ++t)
            {
                CHECK(oracle::agree(r.security.monthly_returns(static_cast<Eigen::Index>(t)), want[t], 1e-12));
                CHECK(oracle::agree(r.benchmark.monthly_returns(static_cast<Eigen::Index>(t)), want_b[t], 1e-12));
            }
        }
    }
}

TEST_CASE("month_containing follows the window boundaries")
{
    const auto r = returns_of(std::vector<double>(100, 1.0), std::vector<double>(100, 1.0));
    CHECK_FALSE(r.clock.month_containing(r.clock.day(1)).has_value());
    CHECK(r.clock.month_containing(r.clock.day(2)) == 1);
    CHECK(r.clock.month_containing(r.clock.day(22)) == 1);
    CHECK(r.clock.month_containing(r.clock.day(23)) == 2);
    // anything after the day-22 close belongs to month 2, weekends included
    CHECK(r.clock.month_containing(r.clock.day(22) + std::chrono::days{1}) == 2);
    CHECK(r.clock.month_containing(r.clock.day(85)) == 4);
    CHECK_FALSE(r.clock.month_containing(r.clock.day(86)).has_value());  // month 5 is incomplete
    CHECK_THROWS(r.clock.day(0));
    CHECK_THROWS(r.clock.day(101));
}

TEST_CASE("adjusted returns, averages and cumulative sums")
{
    CHECK(adjusted_return(0.05, 0.03) == doctest::Approx(0.02));
    CHECK(adjusted_return(-0.10, 0.02) == doctest::Approx(-0.12));
    CHECK(adjusted_return(0.0, 0.0) == 0.0);
    CHECK(adjusted_return(0.25f, 0.25f) == 0.0f);

    const std::vector<double> three{0.01, -0.02, 0.04};
    CHECK(average_adjusted_return(three) == doctest::Approx(0.01));
    CHECK_THROWS_AS(average_adjusted_return(std::span<const double>{}), std::domain_error);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    std::vector<double> fifty(50);
    for (auto &v : fifty)
        v = u(rng);
    double sum = 0.0;
    for (double v : fifty)
        sum += v;
    CHECK(average_adjusted_return(fifty) == doctest::Approx(sum / 50.0).epsilon(1e-14));

    Vector<double> ar(3);
    ar << 0.01, -0.02, 0.04;
    const auto car = cumulative_returns(ar);
    CHECK(car(0) == doctest::Approx(0.01));
    CHECK(car(1) == doctest::Approx(-0.01));
    CHECK(car(2) == doctest::Approx(0.03));

    Vector<double> path(36);
    for (auto &v : path)
        v = u(rng);
    const auto c = cumulative_returns(path);
    double run = 0.0;
    for (Eigen::Index t = 0; t < 36; ++t)
    {
        run += path(t);
        CHECK(c(t) == doctest::Approx(run).epsilon(1e-14));
    }
    CHECK(cumulative_returns(Vector<double>()).size() == 0);
}

TEST_CASE("buy-and-hold uses the boundary closes")
{
    std::vector<double> closes(757, 100.0);
    closes[756] = 150.0;
    const auto r = returns_of(closes, std::vector<double>(757, 10.0));
    CHECK(buy_and_hold_return(r.security) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(buy_and_hold_return(r.benchmark) == 0.0);
    CHECK(buy_and_hold_return(r.security, 12) == 0.0);

    const auto partial = returns_of(std::vector<double>(400, 1.0), std::vector<double>(800, 1.0));
    CHECK(partial.security.monthly_returns.size() == 19);
    CHECK_THROWS_AS(buy_and_hold_return(partial.security), IncompleteWindow);
    CHECK_THROWS_AS(buy_and_hold_return(partial.security, 0), IncompleteWindow);
}

TEST_CASE("buy-and-hold equals compounded monthly returns")
{
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 200; ++trial)
    {
        const auto closes = random_walk(rng, 757 + static_cast<int>(rng() % 30), 10.0 + trial, 0.03);
        const auto r = returns_of(closes, random_walk(rng, 800, 100.0, 0.01));
        double gross = 1.0;
        for (Eigen::Index t = 0; t < 36; ++t)
            gross *= 1.0 + r.security.monthly_returns(t);
        CHECK(oracle::agree(buy_and_hold_return(r.security), gross - 1.0, 1e-12));
        CHECK(oracle::agree(buy_and_hold_return(r.security),
                            closes[756] / closes[0] - 1.0, 1e-14));
    }
}

TEST_CASE("wealth relative and its verdict")
{
    CHECK(wealth_relative(0.1, 0.1).ratio == doctest::Approx(1.0));
    CHECK(wealth_relative(0.1, 0.1).verdict == Performance::neutral);
    CHECK(wealth_relative(-0.5, 0.0).ratio == doctest::Approx(0.5));
    CHECK(wealth_relative(-0.5, 0.0).verdict == Performance::underperform);
    CHECK(wealth_relative(0.25, 0.0).ratio == doctest::Approx(1.25));
    CHECK(wealth_relative(0.25, 0.0).verdict == Performance::outperform);
    CHECK_THROWS_AS(wealth_relative(0.1, -1.0), std::domain_error);
    CHECK_THROWS_AS(wealth_relative(0.1, -1.5), std::domain_error);
    CHECK(std::string(to_string(Performance::outperform)) == "outperform");
    CHECK(std::string(to_string(Performance::underperform)) == "underperform");
    CHECK(std::string(to_string(Performance::neutral)) == "neutral");

    // increasing in the IPO return, decreasing in the benchmark return
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-0.9, 3.0);
    for (int i = 0; i < 1000; ++i)
    {
        const double a = u(rng), b = u(rng), bump = 0.001 + 0.1 * std::abs(u(rng));
        CHECK(wealth_relative(a + bump, b).ratio > wealth_relative(a, b).ratio);
        CHECK(wealth_relative(a, b + bump).ratio < wealth_relative(a, b).ratio);
        const auto w = wealth_relative(a, b);
        CHECK((w.ratio > 1.0) == (a > b));
        CHECK((w.ratio < 1.0) == (a < b));
    }
}

TEST_CASE("first-day returns classify pricing")
{
    CHECK(first_day_return(100.0, 120.0).value == doctest::Approx(0.2));
    CHECK(first_day_return(100.0, 120.0).pricing == Pricing::underpriced);
    CHECK(first_day_return(100.0, 90.0).value == doctest::Approx(-0.1));
    CHECK(first_day_return(100.0, 90.0).pricing == Pricing::overpriced);
    CHECK(first_day_return(100.0, 100.0).value == 0.0);
    CHECK(first_day_return(100.0, 100.0).pricing == Pricing::flat);
    CHECK_THROWS(first_day_return(0.0, 1.0));
    CHECK_THROWS(first_day_return(1.0, -1.0));
    CHECK(std::string(to_string(Pricing::underpriced)) == "underpriced");

    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(0.5, 200.0);
    for (int i = 0; i < 1000; ++i)
    {
        const double offer = u(rng);
        const double close = i % 10 == 0 ? offer : u(rng);
        const auto r = first_day_return(offer, close);
        const int classes = (r.pricing == Pricing::underpriced) + (r.pricing == Pricing::overpriced) +
                            (r.pricing == Pricing::flat);
        CHECK(classes == 1);
        CHECK((r.pricing == Pricing::underpriced) == (close > offer));
        CHECK((r.pricing == Pricing::overpriced) == (close < offer));
        CHECK((r.pricing == Pricing::flat) == (close == offer));
    }
}

TEST_CASE("median of odd and even counts")
{
    CHECK(median({3.0}) == 3.0);
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK(median({-1.0, 1.0}) == 0.0);
    CHECK_THROWS(median({}));
}

TEST_CASE("cohort paths telescope and shift with a constant")
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (int trial = 0; trial < 1000; ++trial)
    {
        const auto months = 1 + static_cast<Eigen::Index>(rng() % 36);
        Vector<double> ar(months);
        for (auto &v : ar)
            v = u(rng);
        const auto car = cumulative_returns(ar);
        for (Eigen::Index t = 1; t < months; ++t)
            CHECK(car(t) - car(t - 1) == doctest::Approx(ar(t)).epsilon(1e-12));
        CHECK(car(0) == ar(0));
        const double k = u(rng);
        const auto shifted = cumulative_returns(Vector<double>(ar.array() + k));
        for (Eigen::Index t = 0; t < months; ++t)
            CHECK(shifted(t) == doctest::Approx(car(t) + static_cast<double>(t + 1) * k).epsilon(1e-12));
    }
}

TEST_CASE("cohort summary on hand-built cohorts")
{
    SUBCASE("a security that tracks the benchmark has zero adjusted returns")
    {
        std::mt19937_64 rng(29);
        const auto bench = random_walk(rng, 800);
        std::vector<double> scaled;
        for (double b : bench)
            scaled.push_back(0.37 * b);
        std::vector<SecurityEventReturns> cohort{returns_of(scaled, bench, 2), returns_of(bench, bench, 2)};
        const auto s = cohort_summary(cohort);
        CHECK(s.grade == 2);
        CHECK(s.n == 2);
        CHECK(s.n_complete == 2);
        CHECK(s.adjusted.average.cwiseAbs().maxCoeff() < 1e-14);
        CHECK(s.adjusted.cumulative.cwiseAbs().maxCoeff() < 1e-13);
        REQUIRE(s.wealth_relative.has_value());
        CHECK(s.wealth_relative->ratio == doctest::Approx(1.0).epsilon(1e-13));
    }
    SUBCASE("rising prices have no negative raw months")
    {
        std::vector<double> up;
        for (int i = 0; i < 800; ++i)
            up.push_back(10.0 * std::pow(1.001, i));
        std::vector<SecurityEventReturns> cohort{returns_of(up, std::vector<double>(800, 1.0), 3)};
        const auto s = cohort_summary(cohort);
        CHECK(s.raw.negative_months == 0);
        CHECK(s.adjusted.negative_months == 0);
        CHECK((s.raw.average.array() > 0.0).all());
        REQUIRE(s.hpr.has_value());
        CHECK(s.hpr->high == s.hpr->low);
        CHECK(s.hpr->mean == doctest::Approx(std::pow(1.001, 756) - 1.0).epsilon(1e-12));
    }
    SUBCASE("partial securities enter the paths but not the holding-period statistics")
    {
        std::mt19937_64 rng(31);
        const auto bench = random_walk(rng, 900, 5000.0, 0.01);
        const auto a = random_walk(rng, 800), b = random_walk(rng, 300);
        std::vector<SecurityEventReturns> cohort{returns_of(a, bench, 4), returns_of(b, bench, 4)};
        const auto s = cohort_summary(cohort);
        CHECK(s.n == 2);
        CHECK(s.n_complete == 1);
        CHECK(s.raw.average.size() == 36);
        const double m0 = 0.5 * (cohort[0].security.monthly_returns(0) + cohort[1].security.monthly_returns(0));
        CHECK(s.raw.average(0) == doctest::Approx(m0).epsilon(1e-14));
        CHECK(s.raw.average(20) == cohort[0].security.monthly_returns(20));
        CHECK(s.hpr->median == s.hpr->mean);
    }
    SUBCASE("only partial securities")
    {
        std::vector<SecurityEventReturns> cohort{returns_of(std::vector<double>(300, 1.0), std::vector<double>(800, 1.0))};
        const auto s = cohort_summary(cohort);
        CHECK(s.raw.average.size() == 14);
        CHECK(s.n_complete == 0);
        CHECK_FALSE(s.hpr.has_value());
        CHECK_FALSE(s.wealth_relative.has_value());
    }
    SUBCASE("a shorter horizon truncates the path")
    {
        std::vector<SecurityEventReturns> cohort{returns_of(std::vector<double>(800, 1.0), std::vector<double>(800, 1.0))};
        CHECK(cohort_summary(cohort, 12).raw.average.size() == 12);
        CHECK(cohort_summary(cohort, 12).n_complete == 1);
    }
    SUBCASE("bad cohorts")
    {
        CHECK_THROWS(cohort_summary(std::span<const SecurityEventReturns>{}));
        std::vector<SecurityEventReturns> mixed{returns_of(std::vector<double>(100, 1.0), std::vector<double>(100, 1.0), 1),
                                                returns_of(std::vector<double>(100, 1.0), std::vector<double>(100, 1.0), 2)};
        CHECK_THROWS(cohort_summary(mixed));
    }
}

TEST_CASE("random panels agree with the brute-force cohort")
{
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 20; ++trial)
    {
        const auto panel = oracle::random_panel(rng, 1 + static_cast<int>(rng() % 8), 3);
        std::vector<SecurityEventReturns> cohort;
        for (const auto &entry : panel.roster)
            cohort.push_back(monthly_returns(panel.securities.at(entry.symbol), panel.benchmark, entry));
        const auto s = cohort_summary(cohort);
        const auto want = oracle::cohort(panel.members);
        REQUIRE(s.raw.average.size() == static_cast<Eigen::Index>(want.ar_raw.size()));
        for (std::size_t t = 0; t < want.ar_raw.size(); ++t)
        {
            const auto i = static_cast<Eigen::Index>(t);
            CHECK(oracle::agree(s.raw.average(i), want.ar_raw[t]));
            CHECK(oracle::agree(s.adjusted.average(i), want.ar_adj[t]));
            CHECK(oracle::agree(s.raw.cumulative(i), want.car_raw[t]));
            CHECK(oracle::agree(s.adjusted.cumulative(i), want.car_adj[t]));
        }
        CHECK(s.n_complete == want.n_complete);
        CHECK(s.wealth_relative.has_value() == want.wr.has_value());
        if (want.wr)
            CHECK(oracle::agree(s.wealth_relative->ratio, *want.wr));
    }
}

TEST_CASE("bundled fixture reproduces its independently computed summary")
{
    const auto dir = testing::kFixtures / "panel";
    PanelInputs in;
    const auto bench = load_prices(dir / "benchmark.csv");
    REQUIRE(bench.size() == 1);
    in.benchmark = bench.begin()->second;
    in.securities = load_prices(dir / "prices.csv");
    in.roster = load_roster(dir / "roster.csv");
    in.dividends = load_dividends(dir / "dividends.csv");
    const auto panel = align(std::move(in));

    const auto expected = nlohmann::json::parse(testing::slurp(testing::kFixtures / "expected_summary.json"));
    REQUIRE(expected["grades"].size() == 5);

    std::map<int, std::vector<SecurityEventReturns>> by_grade;
    std::map<std::string, SecurityEventReturns> by_symbol;
    for (const auto &entry : panel.roster)
    {
        auto r = monthly_returns(panel.securities.at(entry.symbol), panel.benchmark, entry);
        by_symbol.emplace(entry.symbol, r);
        by_grade[entry.grade].push_back(std::move(r));
    }

    auto check_path = [](const ReturnPath &got, const nlohmann::json &want) {
        REQUIRE(got.average.size() == static_cast<Eigen::Index>(want["average"].size()));
        for (Eigen::Index t = 0; t < got.average.size(); ++t)
        {
            CHECK(testing::close_rel(got.average(t), want["average"][static_cast<std::size_t>(t)].get<double>(), 1e-12, 1e-15));
            CHECK(testing::close_rel(got.cumulative(t), want["cumulative"][static_cast<std::size_t>(t)].get<double>(), 1e-12, 1e-15));
        }
        CHECK(got.negative_months == want["negative_months"].get<int>());
    };

    for (const auto &g : expected["grades"])
    {
        const int grade = g["grade"].get<int>();
        CAPTURE(grade);
        const auto s = cohort_summary(by_grade.at(grade));
        CHECK(s.n == g["n"].get<int>());
        CHECK(s.n_complete == g["n_complete"].get<int>());
        check_path(s.raw, g["raw"]);
        check_path(s.adjusted, g["adjusted"]);
        REQUIRE(s.hpr.has_value() == g.contains("hpr"));
        if (!s.hpr)
            continue;
        CHECK(testing::close_rel(s.hpr->high, g["hpr"]["high"].get<double>(), 1e-12));
        CHECK(testing::close_rel(s.hpr->low, g["hpr"]["low"].get<double>(), 1e-12));
        CHECK(testing::close_rel(s.hpr->mean, g["hpr"]["mean"].get<double>(), 1e-12));
        CHECK(testing::close_rel(s.hpr->median, g["hpr"]["median"].get<double>(), 1e-12));
        CHECK(testing::close_rel(*s.mean_ipo_bhr, g["mean_ipo_bhr"].get<double>(), 1e-12));
        CHECK(testing::close_rel(*s.mean_benchmark_bhr, g["mean_benchmark_bhr"].get<double>(), 1e-12));
        CHECK(testing::close_rel(s.wealth_relative->ratio, g["wealth_relative"].get<double>(), 1e-12));
    }

    for (const auto &f : expected["first_day"])
    {
        const auto symbol = f["symbol"].get<std::string>();
        const auto *entry = panel.find_roster(symbol);
        REQUIRE(entry != nullptr);
        REQUIRE(entry->offer_price.has_value());
        const auto r = first_day_return(*entry->offer_price, by_symbol.at(symbol).first_close);
        CHECK(testing::close_rel(r.value, f["return"].get<double>(), 1e-12, 1e-15));
        CHECK(std::string(to_string(r.pricing)) == f["classification"].get<std::string>());
    }
}
