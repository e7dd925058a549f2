#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "adsbtrack/linalg.hpp"

namespace adsbtrack::eval {

// rmse_total uses the 1/(3N) normalization of the tracking objective;
// per-axis values use the usual 1/N so they read as meters per axis.
struct ErrorReport {
    double rmse_x = 0.0;
    double rmse_y = 0.0;
    double rmse_z = 0.0;
    double rmse_total = 0.0;
    std::vector<double> mae_trace;
};

namespace detail {
inline void check_aligned(std::size_t a, std::size_t b) {
    if (a != b || a == 0)
        throw DataError("estimate/truth length mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
}
}  // namespace detail

// Per-step (|dx| + |dy| + |dz|) / 3.
inline std::vector<double> mae_trace(std::span<const Vec> estimates, std::span<const Vec> truth) {
    detail::check_aligned(estimates.size(), truth.size());
    std::vector<double> out(estimates.size());
    for (std::size_t k = 0; k < estimates.size(); ++k) {
        const Vec d = estimates[k].head(3) - truth[k].head(3);
        out[k] = (std::abs(d(0)) + std::abs(d(1)) + std::abs(d(2))) / 3.0;
    }
    return out;
}

inline ErrorReport rmse(std::span<const Vec> estimates, std::span<const Vec> truth) {
    detail::check_aligned(estimates.size(), truth.size());
    ErrorReport r;
    double sx = 0.0, sy = 0.0, sz = 0.0;
    for (std::size_t k = 0; k < estimates.size(); ++k) {
        const Vec d = estimates[k].head(3) - truth[k].head(3);
        sx += d(0) * d(0);
        sy += d(1) * d(1);
        sz += d(2) * d(2);
    }
    const double n = static_cast<double>(estimates.size());
    r.rmse_x = std::sqrt(sx / n);
    r.rmse_y = std::sqrt(sy / n);
    r.rmse_z = std::sqrt(sz / n);
    r.rmse_total = std::sqrt((sx + sy + sz) / (3.0 * n));
    r.mae_trace = mae_trace(estimates, truth);
    return r;
}

struct ComparisonRow {
    std::string name;
    ErrorReport report;
    double reduction_pct = 0.0;  // 100 * (1 - rmse_total / baseline rmse_total)
};

inline std::vector<ComparisonRow> compare(const std::vector<std::pair<std::string, ErrorReport>>& reports,
                                          const std::string& baseline) {
    const ErrorReport* base = nullptr;
    for (const auto& [name, rep] : reports)
        if (name == baseline) base = &rep;
    if (!base) throw DataError("baseline '" + baseline + "' not among the reports");

    std::vector<ComparisonRow> rows;
    rows.reserve(reports.size());
    for (const auto& [name, rep] : reports)
        rows.push_back({name, rep, 100.0 * (1.0 - rep.rmse_total / base->rmse_total)});
    return rows;
}

}  // namespace adsbtrack::eval
