#include "ipoperf/data_ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace ipoperf
{

namespace
{

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true)
    {
        const auto comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return fields;
}

// Line-oriented reader over a delimited file with a fixed header.
class CsvReader
{
  public:
    CsvReader(std::istream &in, std::string source) : in_(in), source_(std::move(source)) {}

    // Returns the header fields, or nothing for a zero-byte file.
    std::optional<std::vector<std::string>> header()
    {
        std::string line;
        if (!next_line(line))
            return std::nullopt;
        if (line.starts_with("\xEF\xBB\xBF"))
            line.erase(0, 3);
        std::vector<std::string> out;
        for (auto f : split_fields(line))
            out.emplace_back(f);
        return out;
    }

    // Next non-blank data row.
    bool row(std::vector<std::string_view> &fields)
    {
        while (next_line(current_))
        {
            if (trim(current_).empty())
                continue;
            fields = split_fields(current_);
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string &message) const { throw InputError(source_, line_no_, message); }

    std::size_t line_number() const { return line_no_; }
    const std::string &source() const { return source_; }

  private:
    bool next_line(std::string &line)
    {
        if (!std::getline(in_, line))
            return false;
        ++line_no_;
        return true;
    }

    std::istream &in_;
    std::string source_;
    std::string current_;
    std::size_t line_no_ = 0;
};

double parse_number(const CsvReader &reader, std::string_view text, const char *what)
{
    double value = 0.0;
    const auto *end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value))
        reader.fail(std::string("malformed ") + what + " '" + std::string(text) + "'");
    return value;
}

Date parse_date_field(const CsvReader &reader, std::string_view text, const char *what)
{
    auto date = parse_date(text);
    if (!date)
        reader.fail(std::string("unparseable ") + what + " '" + std::string(text) + "'");
    return *date;
}

void expect_header(CsvReader &reader, const std::vector<std::string> &got, std::span<const std::string_view> expected)
{
    bool ok = got.size() == expected.size();
    for (std::size_t i = 0; ok && i < got.size(); ++i)
        ok = got[i] == expected[i];
    if (!ok)
    {
        std::string want;
        for (auto e : expected)
            want += (want.empty() ? "" : ",") + std::string(e);
        reader.fail("expected header '" + want + "'");
    }
}

void expect_fields(const CsvReader &reader, const std::vector<std::string_view> &fields, std::size_t count)
{
    if (fields.size() != count)
        reader.fail("malformed row: expected " + std::to_string(count) + " fields, found " +
                    std::to_string(fields.size()));
}

std::ifstream open_input(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError(path.string(), 0, "cannot open file");
    return in;
}

}  // namespace

PriceSeries::PriceSeries(std::string symbol, std::vector<PricePoint> observations)
    : symbol_(std::move(symbol)), observations_(std::move(observations))
{
    for (std::size_t i = 0; i < observations_.size(); ++i)
    {
        if (!(observations_[i].close > 0.0) || !std::isfinite(observations_[i].close))
            throw std::invalid_argument("PriceSeries " + symbol_ + ": non-positive close on " +
                                        format_date(observations_[i].date));
        if (i > 0 && !(observations_[i - 1].date < observations_[i].date))
            throw std::invalid_argument("PriceSeries " + symbol_ + ": dates not strictly increasing at " +
                                        format_date(observations_[i].date));
    }
}

std::optional<double> PriceSeries::close_on(Date date) const
{
    auto it = std::lower_bound(observations_.begin(), observations_.end(), date,
                               [](const PricePoint &p, Date d) { return p.date < d; });
    if (it == observations_.end() || it->date != date)
        return std::nullopt;
    return it->close;
}

PriceCollection read_prices(std::istream &in, const std::string &source_name)
{
    static constexpr std::string_view kHeader[] = {"symbol", "date", "close"};
    CsvReader reader(in, source_name);
    PriceCollection result;
    auto header = reader.header();
    if (!header)
        return result;
    expect_header(reader, *header, kHeader);

    struct Row
    {
        PricePoint point;
        std::size_t line;
    };
    std::map<std::string, std::vector<Row>> grouped;
    std::vector<std::string_view> fields;
    while (reader.row(fields))
    {
        expect_fields(reader, fields, 3);
        if (fields[0].empty())
            reader.fail("empty symbol");
        const Date date = parse_date_field(reader, fields[1], "date");
        const double close = parse_number(reader, fields[2], "close");
        if (!(close > 0.0))
            reader.fail("non-positive close " + std::string(fields[2]));
        grouped[std::string(fields[0])].push_back({{date, close}, reader.line_number()});
    }

    for (auto &[symbol, rows] : grouped)
    {
        std::stable_sort(rows.begin(), rows.end(), [](const Row &a, const Row &b) { return a.point.date < b.point.date; });
        std::vector<PricePoint> points;
        points.reserve(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
        {
            if (i > 0 && rows[i].point.date == rows[i - 1].point.date)
            {
                const auto line = std::max(rows[i].line, rows[i - 1].line);
                throw InputError(source_name, line,
                                 "duplicate (symbol,date) (" + symbol + "," + format_date(rows[i].point.date) + ")");
            }
            points.push_back(rows[i].point);
        }
        result.emplace(symbol, PriceSeries(symbol, std::move(points)));
    }
    return result;
}

PriceCollection load_prices(const std::filesystem::path &path)
{
    auto in = open_input(path);
    return read_prices(in, path.string());
}

void write_prices(std::ostream &out, const PriceCollection &series)
{
    out << "symbol,date,close\n";
    for (const auto &[symbol, s] : series)
        for (const auto &p : s.observations())
            out << symbol << ',' << format_date(p.date) << ',' << format_exact(p.close) << '\n';
}

std::vector<RosterEntry> read_roster(std::istream &in, const std::string &source_name)
{
    static constexpr std::string_view kHeader[] = {"symbol", "grade", "listing_date"};
    static constexpr std::string_view kHeaderWithOffer[] = {"symbol", "grade", "listing_date", "offer_price"};
    CsvReader reader(in, source_name);
    std::vector<RosterEntry> roster;
    auto header = reader.header();
    if (!header)
        return roster;
    const bool with_offer = header->size() == 4;
    if (with_offer)
        expect_header(reader, *header, kHeaderWithOffer);
    else
        expect_header(reader, *header, kHeader);

    std::set<std::string> seen;
    std::vector<std::string_view> fields;
    while (reader.row(fields))
    {
        expect_fields(reader, fields, with_offer ? 4 : 3);
        RosterEntry entry;
        entry.symbol = std::string(fields[0]);
        if (entry.symbol.empty())
            reader.fail("empty symbol");
        if (!seen.insert(entry.symbol).second)
            reader.fail("duplicate roster symbol " + entry.symbol);

        int grade = 0;
        const auto *end = fields[1].data() + fields[1].size();
        auto [ptr, ec] = std::from_chars(fields[1].data(), end, grade);
        if (fields[1].empty() || ec != std::errc{} || ptr != end)
            reader.fail("malformed grade '" + std::string(fields[1]) + "'");
        if (grade < 1 || grade > 5)
            reader.fail("grade " + std::to_string(grade) + " outside the five-point scale 1-5");
        entry.grade = grade;
        entry.listing_date = parse_date_field(reader, fields[2], "listing_date");
        if (with_offer && !fields[3].empty())
        {
            const double offer = parse_number(reader, fields[3], "offer_price");
            if (!(offer > 0.0))
                reader.fail("non-positive offer_price " + std::string(fields[3]));
            entry.offer_price = offer;
        }
        roster.push_back(std::move(entry));
    }
    return roster;
}

std::vector<RosterEntry> load_roster(const std::filesystem::path &path)
{
    auto in = open_input(path);
    return read_roster(in, path.string());
}

void write_roster(std::ostream &out, std::span<const RosterEntry> roster)
{
    const bool with_offer = std::any_of(roster.begin(), roster.end(), [](const auto &e) { return e.offer_price; });
    out << "symbol,grade,listing_date" << (with_offer ? ",offer_price\n" : "\n");
    for (const auto &e : roster)
    {
        out << e.symbol << ',' << e.grade << ',' << format_date(e.listing_date);
        if (with_offer)
            out << ',' << (e.offer_price ? format_exact(*e.offer_price) : "");
        out << '\n';
    }
}

std::array<int, 5> grade_counts(std::span<const RosterEntry> roster)
{
    std::array<int, 5> counts{};
    for (const auto &e : roster)
        if (e.grade >= 1 && e.grade <= 5)
            ++counts[e.grade - 1];
    return counts;
}

std::vector<DividendEvent> read_dividends(std::istream &in, const std::string &source_name)
{
    static constexpr std::string_view kHeader[] = {"symbol", "event_date", "amount"};
    CsvReader reader(in, source_name);
    std::vector<DividendEvent> events;
    auto header = reader.header();
    if (!header)
        return events;
    expect_header(reader, *header, kHeader);

    std::vector<std::string_view> fields;
    while (reader.row(fields))
    {
        expect_fields(reader, fields, 3);
        DividendEvent ev;
        ev.symbol = std::string(fields[0]);
        if (ev.symbol.empty())
            reader.fail("empty symbol");
        ev.event_date = parse_date_field(reader, fields[1], "event_date");
        ev.amount = parse_number(reader, fields[2], "amount");
        if (ev.amount < 0.0)
            reader.fail("negative dividend amount " + std::string(fields[2]));
        events.push_back(std::move(ev));
    }
    std::stable_sort(events.begin(), events.end(), [](const DividendEvent &a, const DividendEvent &b) {
        return std::tie(a.symbol, a.event_date) < std::tie(b.symbol, b.event_date);
    });
    return events;
}

std::vector<DividendEvent> load_dividends(const std::filesystem::path &path)
{
    auto in = open_input(path);
    return read_dividends(in, path.string());
}

void write_dividends(std::ostream &out, std::span<const DividendEvent> dividends)
{
    out << "symbol,event_date,amount\n";
    for (const auto &d : dividends)
        out << d.symbol << ',' << format_date(d.event_date) << ',' << format_exact(d.amount) << '\n';
}

const RosterEntry *AlignedPanel::find_roster(const std::string &symbol) const
{
    auto it = std::find_if(roster.begin(), roster.end(), [&](const RosterEntry &e) { return e.symbol == symbol; });
    return it == roster.end() ? nullptr : &*it;
}

AlignedPanel align(PanelInputs inputs, const AlignOptions &options)
{
    if (inputs.benchmark.empty())
        throw InputError("benchmark series is empty");
    if (options.months < 1 || options.month_days < 1)
        throw std::invalid_argument("align: months and month_days must be positive");

    AlignedPanel panel;
    const auto &bench = inputs.benchmark.observations();
    std::set<std::string> roster_symbols;
    for (const auto &entry : inputs.roster)
    {
        roster_symbols.insert(entry.symbol);
        if (!inputs.securities.contains(entry.symbol))
            throw InputError("roster symbol " + entry.symbol + " has no price series");
    }

    const std::size_t window_days = static_cast<std::size_t>(options.months) * options.month_days + 1;
    for (auto &[symbol, series] : inputs.securities)
    {
        if (!roster_symbols.contains(symbol))
        {
            panel.warnings.push_back(symbol + ": price series has no roster entry; series rejected");
            continue;
        }
        std::vector<PricePoint> kept;
        kept.reserve(series.size());
        std::size_t dropped = 0;
        for (const auto &p : series.observations())
        {
            if (inputs.benchmark.contains(p.date))
                kept.push_back(p);
            else
                ++dropped;
        }
        if (kept.empty())
            throw InputError(symbol + ": no dates overlap the benchmark calendar; series unusable");
        if (dropped > 0)
            panel.warnings.push_back(symbol + ": dropped " + std::to_string(dropped) +
                                     " observation(s) on dates absent from the benchmark");

        const auto &entry = *std::find_if(inputs.roster.begin(), inputs.roster.end(),
                                          [&](const RosterEntry &e) { return e.symbol == symbol; });
        auto first = std::lower_bound(bench.begin(), bench.end(), entry.listing_date,
                                      [](const PricePoint &p, Date d) { return p.date < d; });
        const auto available = static_cast<std::size_t>(bench.end() - first);
        const auto window = std::min(window_days, available);
        PriceSeries aligned(symbol, std::move(kept));
        std::size_t missing = 0;
        for (std::size_t i = 0; i < window; ++i)
            if (!aligned.contains(first[i].date))
                ++missing;
        if (window > 0 && static_cast<double>(missing) > options.max_missing_fraction * static_cast<double>(window))
            panel.warnings.push_back(symbol + ": missing " + std::to_string(missing) + " of " +
                                     std::to_string(window) + " benchmark days in its event window");
        panel.securities.emplace(symbol, std::move(aligned));
    }

    for (auto &d : inputs.dividends)
    {
        if (roster_symbols.contains(d.symbol))
            panel.dividends.push_back(std::move(d));
        else
            panel.warnings.push_back(d.symbol + ": dividend on " + format_date(d.event_date) +
                                     " has no roster entry; ignored");
    }
    panel.benchmark = std::move(inputs.benchmark);
    panel.roster = std::move(inputs.roster);
    return panel;
}

AlignedPanel align(const AlignedPanel &panel, const AlignOptions &options)
{
    return align(PanelInputs{panel.benchmark, panel.securities, panel.roster, panel.dividends}, options);
}

}  // namespace ipoperf
