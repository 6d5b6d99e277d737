#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pianoeval/ir_metrics.hpp"
#include "pianoeval/perf_metrics.hpp"

namespace pianoeval {

/// Every result for one ground-truth / estimate pair.
struct MetricReport {
    std::string pair_id;
    PRF frame;
    PRF note_offset;
    PRF note_offset_velocity;
    MusicalMetrics musical;
    std::map<std::string, std::string> tags;  // e.g. split, model, condition

    friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

inline constexpr std::size_t kReportMetricCount = 9 + kMusicalMetricCount;

/// Flat metric column names: the nine IR values, then the musical metrics.
const std::array<std::string, kReportMetricCount>& report_metric_names();

/// Values in `report_metric_names()` order.
std::array<std::optional<double>, kReportMetricCount> report_metric_values(const MetricReport& report);

std::optional<std::size_t> report_metric_index(std::string_view name);

struct GroupRow {
    std::vector<std::string> key;  // one value per group_by key
    std::size_t reports = 0;
    std::array<std::optional<double>, kReportMetricCount> mean{};
    std::array<std::size_t, kReportMetricCount> undefined{};  // reports excluded from each mean
};

struct GroupTable {
    std::vector<std::string> group_by;
    std::vector<GroupRow> rows;  // sorted by key
};

class ReportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Means per group; undefined values are excluded from a metric's mean and counted.
GroupTable aggregate(std::span<const MetricReport> reports, std::span<const std::string> group_by);

enum class ReportFormat { csv, json };

std::string emit(std::span<const MetricReport> reports, ReportFormat format);
std::string emit(const GroupTable& table, ReportFormat format);

std::vector<MetricReport> reports_from_json(std::string_view text);

/// Fixed-point, 6 decimals, "NA" for undefined.
std::string format_value(const std::optional<double>& v);

}  // namespace pianoeval
