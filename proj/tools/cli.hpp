#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pianoeval/evaluate.hpp"
#include "pianoeval/midi.hpp"
#include "pianoeval/report.hpp"

namespace pianoeval::cli {

enum ExitCode : int {
    kOk = 0,
    kParseFailure = 2,  // unparseable input, bad usage, unknown metric/column
    kIoFailure = 3,
    kAllRowsFailed = 4,
};

struct RunConfig {
    EvaluationConfig eval;
    PedalMode pedal = PedalMode::extend;
    ReportFormat format = ReportFormat::csv;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sets one `key = value` entry. Unknown keys and out-of-range values throw ConfigError.
void apply_config_entry(RunConfig& cfg, std::string_view key, std::string_view value);

/// Flat key=value document; '#' starts a comment. Entries override `base`.
RunConfig parse_run_config(std::string_view text, RunConfig base = {});

std::string serialize_run_config(const RunConfig& cfg);

struct ManifestRow {
    std::string ref_path;
    std::string est_path;
    std::string pair_id;
    std::map<std::string, std::string> tags;
};

struct Manifest {
    std::vector<std::string> tag_keys;
    std::vector<ManifestRow> rows;
};

/// CSV with `ref` and `est` columns; an optional `pair_id` column, every other column is a tag.
/// Relative paths are resolved against `base_dir`.
Manifest parse_manifest(std::string_view text, const std::string& base_dir = {});

/// Options for one batch run, also used directly by tests.
struct BatchOptions {
    std::string manifest_path;
    std::string output_dir = ".";
    int jobs = 1;
    std::vector<std::string> group_by;  // each entry is a comma-separated key list
};

int cmd_evaluate(const std::string& ref_path, const std::string& est_path, const RunConfig& cfg,
                 const std::string& output, std::ostream& out, std::ostream& err);
int cmd_batch(const BatchOptions& opts, const RunConfig& cfg, std::ostream& out, std::ostream& err);

struct PerturbOptions {
    std::string input_wav;
    std::string output_dir = ".";
    std::vector<std::optional<double>> snr_levels;  // nullopt = none
    std::vector<std::optional<double>> rt60_levels;
    std::vector<std::string> ir_files;
    std::uint64_t seed = 0;
    bool pcm16 = false;
};

/// Parses "none,24,12,6" style lists; "none" maps to nullopt.
std::vector<std::optional<double>> parse_level_list(std::string_view text);

int cmd_perturb(const PerturbOptions& opts, std::ostream& out, std::ostream& err);
int cmd_stats(const std::string& reports_csv, const std::string& metric, const std::string& group_key,
              std::ostream& out, std::ostream& err);

/// Full command-line entry point.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pianoeval::cli
