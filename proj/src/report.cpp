#include "pianoeval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "pianoeval/csv.hpp"

namespace pianoeval {

using Json = nlohmann::ordered_json;

const std::array<std::string, kReportMetricCount>& report_metric_names() {
    static const std::array<std::string, kReportMetricCount> names = [] {
        std::array<std::string, kReportMetricCount> n;
        std::size_t i = 0;
        for (const char* group : {"frame", "note_offset", "note_offset_velocity"})
            for (const char* part : {"precision", "recall", "f1"}) n[i++] = std::string(group) + "_" + part;
        for (auto m : kMusicalMetricNames) n[i++] = std::string(m);
        return n;
    }();
    return names;
}

std::array<std::optional<double>, kReportMetricCount> report_metric_values(const MetricReport& r) {
    std::array<std::optional<double>, kReportMetricCount> v;
    std::size_t i = 0;
    for (const PRF* prf : {&r.frame, &r.note_offset, &r.note_offset_velocity}) {
        v[i++] = prf->precision;
        v[i++] = prf->recall;
        v[i++] = prf->f1;
    }
    for (const auto& m : r.musical.values()) v[i++] = m;
    return v;
}

std::optional<std::size_t> report_metric_index(std::string_view name) {
    const auto& names = report_metric_names();
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
}

std::string format_value(const std::optional<double>& v) {
    if (!v) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", *v == 0.0 ? 0.0 : *v);  // no "-0.000000"
    return buf;
}

// ---------------------------------------------------------------------------
// Aggregation

GroupTable aggregate(std::span<const MetricReport> reports, std::span<const std::string> group_by) {
    GroupTable table;
    table.group_by.assign(group_by.begin(), group_by.end());

    std::map<std::vector<std::string>, std::vector<const MetricReport*>> groups;
    for (const auto& r : reports) {
        std::vector<std::string> key;
        for (const auto& k : group_by) {
            auto it = r.tags.find(k);
            if (it == r.tags.end()) throw ReportError("unknown tag key '" + k + "' on report '" + r.pair_id + "'");
            key.push_back(it->second);
        }
        groups[key].push_back(&r);
    }

    for (const auto& [key, members] : groups) {
        GroupRow row;
        row.key = key;
        row.reports = members.size();
        std::array<double, kReportMetricCount> sum{};
        std::array<std::size_t, kReportMetricCount> defined{};
        for (const auto* r : members) {
            const auto v = report_metric_values(*r);
            for (std::size_t m = 0; m < kReportMetricCount; ++m) {
                if (v[m]) {
                    sum[m] += *v[m];
                    ++defined[m];
                } else {
                    ++row.undefined[m];
                }
            }
        }
        for (std::size_t m = 0; m < kReportMetricCount; ++m)
            if (defined[m]) row.mean[m] = sum[m] / static_cast<double>(defined[m]);
        table.rows.push_back(std::move(row));
    }
    return table;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr std::size_t kFirstMusical = 9;

Json json_value(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json prf_json(const PRF& p) { return Json{{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}}; }

PRF prf_from(const Json& j) {
    return PRF{j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()};
}

Json report_json(const MetricReport& r) {
    Json musical = Json::object();
    const auto mv = r.musical.values();
    for (std::size_t i = 0; i < kMusicalMetricCount; ++i) musical[std::string(kMusicalMetricNames[i])] = json_value(mv[i]);
    Json tags = Json::object();
    for (const auto& [k, v] : r.tags) tags[k] = v;
    return Json{{"pair_id", r.pair_id},
                {"frame", prf_json(r.frame)},
                {"note_offset", prf_json(r.note_offset)},
                {"note_offset_velocity", prf_json(r.note_offset_velocity)},
                {"musical", musical},
                {"tags", tags}};
}

std::vector<std::string> tag_columns(std::span<const MetricReport> reports) {
    std::set<std::string> keys;
    for (const auto& r : reports)
        for (const auto& [k, v] : r.tags) keys.insert(k);
    const auto& metrics = report_metric_names();
    for (const auto& k : keys)
        if (k == "pair_id" || std::find(metrics.begin(), metrics.end(), k) != metrics.end())
            throw ReportError("tag key '" + k + "' collides with a report column");
    return {keys.begin(), keys.end()};
}

}  // namespace

std::string emit(std::span<const MetricReport> reports, ReportFormat format) {
    if (format == ReportFormat::json) {
        Json arr = Json::array();
        for (const auto& r : reports) arr.push_back(report_json(r));
        return arr.dump(2) + "\n";
    }
    const auto tags = tag_columns(reports);
    std::vector<std::string> header{"pair_id"};
    header.insert(header.end(), tags.begin(), tags.end());
    for (const auto& m : report_metric_names()) header.push_back(m);

    std::string out = csv_line(header);
    for (const auto& r : reports) {
        std::vector<std::string> row{r.pair_id};
        for (const auto& k : tags) {
            auto it = r.tags.find(k);
            row.push_back(it == r.tags.end() ? "" : it->second);
        }
        for (const auto& v : report_metric_values(r)) row.push_back(format_value(v));
        out += csv_line(row);
    }
    return out;
}

std::string emit(const GroupTable& table, ReportFormat format) {
    const auto& names = report_metric_names();
    if (format == ReportFormat::json) {
        Json groups = Json::array();
        for (const auto& row : table.rows) {
            Json key = Json::object();
            for (std::size_t k = 0; k < table.group_by.size(); ++k) key[table.group_by[k]] = row.key[k];
            Json means = Json::object();
            Json undefined = Json::object();
            for (std::size_t m = 0; m < kReportMetricCount; ++m) {
                means[names[m]] = json_value(row.mean[m]);
                if (m >= kFirstMusical) undefined[names[m]] = row.undefined[m];
            }
            groups.push_back(Json{{"key", key}, {"reports", row.reports}, {"means", means}, {"undefined", undefined}});
        }
        return Json{{"group_by", table.group_by}, {"groups", groups}}.dump(2) + "\n";
    }

    std::vector<std::string> header = table.group_by;
    header.push_back("reports");
    for (const auto& m : names) header.push_back(m);
    for (std::size_t m = kFirstMusical; m < kReportMetricCount; ++m) header.push_back(names[m] + "_undefined");
    std::string out = csv_line(header);
    for (const auto& row : table.rows) {
        std::vector<std::string> fields = row.key;
        fields.push_back(std::to_string(row.reports));
        for (const auto& v : row.mean) fields.push_back(format_value(v));
        for (std::size_t m = kFirstMusical; m < kReportMetricCount; ++m) fields.push_back(std::to_string(row.undefined[m]));
        out += csv_line(fields);
    }
    return out;
}

std::vector<MetricReport> reports_from_json(std::string_view text) {
    std::vector<MetricReport> out;
    try {
        const Json arr = Json::parse(text);
        if (!arr.is_array()) throw ReportError("report JSON must be an array");
        for (const auto& j : arr) {
            MetricReport r;
            r.pair_id = j.at("pair_id").get<std::string>();
            r.frame = prf_from(j.at("frame"));
            r.note_offset = prf_from(j.at("note_offset"));
            r.note_offset_velocity = prf_from(j.at("note_offset_velocity"));
            std::array<std::optional<double>, kMusicalMetricCount> mv;
            const auto& musical = j.at("musical");
            for (std::size_t i = 0; i < kMusicalMetricCount; ++i) {
                const auto& v = musical.at(std::string(kMusicalMetricNames[i]));
                if (!v.is_null()) mv[i] = v.get<double>();
            }
            r.musical = MusicalMetrics::from_values(mv);
            for (const auto& [k, v] : j.at("tags").items()) r.tags[k] = v.get<std::string>();
            out.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ReportError(std::string("malformed report JSON: ") + e.what());
    }
    return out;
}

}  // namespace pianoeval
