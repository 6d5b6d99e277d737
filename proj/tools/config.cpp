#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "pianoeval/csv.hpp"

namespace pianoeval::cli {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double to_double(std::string_view key, std::string_view value) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(v))
        throw ConfigError("config '" + std::string(key) + "': not a number: '" + std::string(value) + "'");
    return v;
}

int to_int(std::string_view key, std::string_view value) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw ConfigError("config '" + std::string(key) + "': not an integer: '" + std::string(value) + "'");
    return v;
}

double positive(std::string_view key, std::string_view value) {
    const double v = to_double(key, value);
    if (!(v > 0.0)) throw ConfigError("config '" + std::string(key) + "' must be > 0");
    return v;
}

double non_negative(std::string_view key, std::string_view value) {
    const double v = to_double(key, value);
    if (!(v >= 0.0)) throw ConfigError("config '" + std::string(key) + "' must be >= 0");
    return v;
}

std::string shortest(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void apply_config_entry(RunConfig& cfg, std::string_view key, std::string_view raw) {
    const auto value = trim(raw);
    auto& m = cfg.eval.musical;
    if (key == "frame_length") {
        cfg.eval.frame_length = positive(key, value);
    } else if (key == "chord_epsilon") {
        m.streams.chord_epsilon = positive(key, value);
    } else if (key == "grid_step") {
        m.grid.step = positive(key, value);
    } else if (key == "min_samples") {
        m.grid.min_samples = to_int(key, value);
        if (m.grid.min_samples < 2) throw ConfigError("config 'min_samples' must be >= 2");
    } else if (key == "window_length") {
        m.windows.window_length = positive(key, value);
    } else if (key == "hop") {
        m.windows.hop = positive(key, value);
    } else if (key == "ce_weighting") {
        if (value == "duration")
            m.windows.weighting = CeWeighting::duration;
        else if (value == "duration_velocity")
            m.windows.weighting = CeWeighting::duration_velocity;
        else
            throw ConfigError("config 'ce_weighting' must be duration or duration_velocity");
    } else if (key == "spiral_radius") {
        m.spiral.radius = positive(key, value);
    } else if (key == "spiral_rise") {
        m.spiral.rise = positive(key, value);
    } else if (key == "kor_min_ioi") {
        m.kor_min_ioi = non_negative(key, value);
    } else if (key == "dynamics_hold") {
        m.dynamics_hold = non_negative(key, value);
    } else if (key == "onset_tolerance") {
        cfg.eval.tolerances.onset = non_negative(key, value);
    } else if (key == "offset_min_tolerance") {
        cfg.eval.tolerances.offset_min = non_negative(key, value);
    } else if (key == "offset_ratio") {
        cfg.eval.tolerances.offset_ratio = non_negative(key, value);
    } else if (key == "velocity_tolerance") {
        cfg.eval.tolerances.velocity = non_negative(key, value);
    } else if (key == "pedal_mode") {
        if (value == "extend")
            cfg.pedal = PedalMode::extend;
        else if (value == "ignore")
            cfg.pedal = PedalMode::ignore;
        else
            throw ConfigError("config 'pedal_mode' must be ignore or extend");
    } else if (key == "format") {
        if (value == "csv")
            cfg.format = ReportFormat::csv;
        else if (value == "json")
            cfg.format = ReportFormat::json;
        else
            throw ConfigError("config 'format' must be csv or json");
    } else {
        throw ConfigError("unknown config key '" + std::string(key) + "'");
    }
}

RunConfig parse_run_config(std::string_view text, RunConfig base) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        apply_config_entry(base, trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    const auto& w = base.eval.musical.windows;
    if (w.hop > w.window_length) throw ConfigError("config 'hop' must not exceed 'window_length'");
    return base;
}

std::string serialize_run_config(const RunConfig& cfg) {
    const auto& m = cfg.eval.musical;
    std::ostringstream s;
    s << "frame_length = " << shortest(cfg.eval.frame_length) << "\n"
      << "chord_epsilon = " << shortest(m.streams.chord_epsilon) << "\n"
      << "grid_step = " << shortest(m.grid.step) << "\n"
      << "min_samples = " << m.grid.min_samples << "\n"
      << "window_length = " << shortest(m.windows.window_length) << "\n"
      << "hop = " << shortest(m.windows.hop) << "\n"
      << "ce_weighting = " << (m.windows.weighting == CeWeighting::duration ? "duration" : "duration_velocity") << "\n"
      << "spiral_radius = " << shortest(m.spiral.radius) << "\n"
      << "spiral_rise = " << shortest(m.spiral.rise) << "\n"
      << "kor_min_ioi = " << shortest(m.kor_min_ioi) << "\n"
      << "dynamics_hold = " << shortest(m.dynamics_hold) << "\n"
      << "onset_tolerance = " << shortest(cfg.eval.tolerances.onset) << "\n"
      << "offset_min_tolerance = " << shortest(cfg.eval.tolerances.offset_min) << "\n"
      << "offset_ratio = " << shortest(cfg.eval.tolerances.offset_ratio) << "\n"
      << "velocity_tolerance = " << shortest(cfg.eval.tolerances.velocity) << "\n"
      << "pedal_mode = " << (cfg.pedal == PedalMode::extend ? "extend" : "ignore") << "\n"
      << "format = " << (cfg.format == ReportFormat::csv ? "csv" : "json") << "\n";
    return s.str();
}

Manifest parse_manifest(std::string_view text, const std::string& base_dir) {
    const CsvTable table = parse_csv(text);
    const auto ref_col = table.column("ref");
    const auto est_col = table.column("est");
    if (!ref_col || !est_col) throw ConfigError("manifest header must contain 'ref' and 'est' columns");
    const auto id_col = table.column("pair_id");

    Manifest m;
    for (std::size_t c = 0; c < table.header.size(); ++c)
        if (c != *ref_col && c != *est_col && (!id_col || c != *id_col)) m.tag_keys.push_back(table.header[c]);

    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        if (path.is_relative() && !base_dir.empty()) path = std::filesystem::path(base_dir) / path;
        return path.string();
    };
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        ManifestRow mr;
        if (row[*ref_col].empty() || row[*est_col].empty())
            throw ConfigError("manifest row " + std::to_string(r + 1) + " has an empty path");
        mr.ref_path = resolve(row[*ref_col]);
        mr.est_path = resolve(row[*est_col]);
        mr.pair_id = id_col ? row[*id_col] : row[*est_col];
        for (std::size_t c = 0; c < table.header.size(); ++c)
            if (c != *ref_col && c != *est_col && (!id_col || c != *id_col)) mr.tags[table.header[c]] = row[c];
        m.rows.push_back(std::move(mr));
    }
    return m;
}

}  // namespace pianoeval::cli
