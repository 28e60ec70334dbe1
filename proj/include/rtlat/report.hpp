#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace rtlat {

/// Per-sample s2s - e2e over a frames.csv, parsed as exact fixed-point
/// decimals so a constant difference shows up as exactly constant.
struct DiffReport {
    size_t samples = 0;
    int64_t min_diff_ns = 0;
    int64_t max_diff_ns = 0;
    int64_t sum_diff_ns = 0;

    double mean_ms() const {
        return samples == 0 ? 0.0
                            : static_cast<double>(sum_diff_ns) / static_cast<double>(samples) / 1e6;
    }
    bool constant() const { return samples > 0 && min_diff_ns == max_diff_ns; }
};

// Millisecond decimal string ("60.000000", "-5.5") to exact nanoseconds.
// Throws MalformedCsv for anything else or finer-than-ns precision.
int64_t parse_fixed_ms(const std::string& text);

// Reads a frames.csv produced by the runner. Throws MalformedCsv.
DiffReport report_diff(std::istream& frames_csv);
DiffReport report_diff_file(const std::string& path);

} // namespace rtlat
