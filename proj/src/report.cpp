#include "rtlat/report.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>

#include "rtlat/errors.hpp"

namespace rtlat {

int64_t parse_fixed_ms(const std::string& text) {
    if (text.empty())
        throw Error(Errc::MalformedCsv, "empty number");
    size_t pos = 0;
    bool neg = false;
    if (text[0] == '-' || text[0] == '+') {
        neg = text[0] == '-';
        pos = 1;
    }
    int64_t whole = 0;
    size_t digits = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
        whole = whole * 10 + (text[pos] - '0');
        ++pos;
        ++digits;
    }
    if (digits == 0)
        throw Error(Errc::MalformedCsv, "not a number: " + text);
    int64_t frac = 0;
    size_t frac_digits = 0;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
            if (frac_digits < 6) {
                frac = frac * 10 + (text[pos] - '0');
                ++frac_digits;
            } else if (text[pos] != '0') {
                throw Error(Errc::MalformedCsv, "sub-nanosecond precision: " + text);
            }
            ++pos;
        }
    }
    if (pos != text.size())
        throw Error(Errc::MalformedCsv, "trailing characters: " + text);
    while (frac_digits < 6) {
        frac *= 10;
        ++frac_digits;
    }
    const int64_t ns = whole * 1'000'000 + frac;
    return neg ? -ns : ns;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ','))
        out.push_back(field);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

} // namespace

DiffReport report_diff(std::istream& frames_csv) {
    std::string line;
    if (!std::getline(frames_csv, line))
        throw Error(Errc::MalformedCsv, "empty file");
    const auto header = split_csv_line(line);
    const auto find_col = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw Error(Errc::MalformedCsv, "missing column " + name);
        return static_cast<size_t>(it - header.begin());
    };
    const size_t e2e_col = find_col("e2e_ms");
    const size_t s2s_col = find_col("s2s_ms");

    DiffReport rep;
    size_t line_no = 1;
    while (std::getline(frames_csv, line)) {
        ++line_no;
        if (line.empty())
            continue;
        const auto fields = split_csv_line(line);
        if (fields.size() <= std::max(e2e_col, s2s_col))
            throw Error(Errc::MalformedCsv, "line " + std::to_string(line_no) + ": too few fields");
        const int64_t diff = parse_fixed_ms(fields[s2s_col]) - parse_fixed_ms(fields[e2e_col]);
        if (rep.samples == 0) {
            rep.min_diff_ns = rep.max_diff_ns = diff;
        } else {
            rep.min_diff_ns = std::min(rep.min_diff_ns, diff);
            rep.max_diff_ns = std::max(rep.max_diff_ns, diff);
        }
        rep.sum_diff_ns += diff;
        ++rep.samples;
    }
    return rep;
}

DiffReport report_diff_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::MalformedCsv, "cannot open " + path);
    return report_diff(in);
}

} // namespace rtlat
