#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "cli.hpp"
#include "pianoeval/audio.hpp"
#include "pianoeval/csv.hpp"
#include "pianoeval/io.hpp"
#include "pianoeval/stats.hpp"

namespace pianoeval::cli {

namespace fs = std::filesystem;

namespace {

std::string extension(ReportFormat f) { return f == ReportFormat::csv ? ".csv" : ".json"; }

Performance load_performance(const std::string& path, PedalMode pedal) {
    const auto bytes = read_file_bytes(path);
    try {
        return parse_midi(bytes, pedal);
    } catch (const MidiParseError& e) {
        throw MidiParseError(path + ": parse error: " + e.what(), e.byte_offset());
    }
}

void ensure_directory(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

std::vector<std::string> split_keys(const std::string& text) {
    std::vector<std::string> keys;
    std::stringstream s(text);
    std::string k;
    while (std::getline(s, k, ','))
        if (!k.empty()) keys.push_back(k);
    return keys;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// evaluate

int cmd_evaluate(const std::string& ref_path, const std::string& est_path, const RunConfig& cfg,
                 const std::string& output, std::ostream& out, std::ostream& err) {
    try {
        const auto ref = load_performance(ref_path, cfg.pedal);
        const auto est = load_performance(est_path, cfg.pedal);
        const MetricReport report = evaluate_pair(ref, est, cfg.eval, est_path);
        const std::string text = emit(std::span(&report, 1), cfg.format);
        if (output.empty() || output == "-")
            out << text;
        else
            write_text_file(output, text);
        return kOk;
    } catch (const MidiParseError& e) {
        err << e.what() << "\n";
        return kParseFailure;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kIoFailure;
    } catch (const std::invalid_argument& e) {
        err << "invalid configuration: " << e.what() << "\n";
        return kParseFailure;
    }
}

// ---------------------------------------------------------------------------
// batch

int cmd_batch(const BatchOptions& opts, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    Manifest manifest;
    try {
        const auto text = read_text_file(opts.manifest_path);
        manifest = parse_manifest(text, fs::path(opts.manifest_path).parent_path().string());
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kIoFailure;
    } catch (const std::exception& e) {
        err << opts.manifest_path << ": " << e.what() << "\n";
        return kParseFailure;
    }

    std::vector<std::vector<std::string>> groupings;
    for (const auto& spec : opts.group_by) {
        auto keys = split_keys(spec);
        for (const auto& k : keys)
            if (std::find(manifest.tag_keys.begin(), manifest.tag_keys.end(), k) == manifest.tag_keys.end()) {
                err << "unknown group-by key '" << k << "' (not a manifest tag column)\n";
                return kParseFailure;
            }
        groupings.push_back(std::move(keys));
    }
    if (groupings.empty()) groupings.emplace_back();

    const std::size_t n = manifest.rows.size();
    std::vector<std::optional<MetricReport>> reports(n);
    std::vector<std::string> failures(n);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            const auto& row = manifest.rows[i];
            try {
                const auto ref = load_performance(row.ref_path, cfg.pedal);
                const auto est = load_performance(row.est_path, cfg.pedal);
                reports[i] = evaluate_pair(ref, est, cfg.eval, row.pair_id, row.tags);
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        }
    };
    const int jobs = std::clamp(opts.jobs, 1, 256);
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::vector<MetricReport> ok;
    std::string failure_csv = csv_line({"row", "ref", "est", "reason"});
    for (std::size_t i = 0; i < n; ++i) {
        if (reports[i])
            ok.push_back(std::move(*reports[i]));
        else
            failure_csv += csv_line({std::to_string(i + 1), manifest.rows[i].ref_path, manifest.rows[i].est_path, failures[i]});
    }

    try {
        ensure_directory(opts.output_dir);
        const fs::path dir(opts.output_dir);
        write_text_file((dir / ("reports" + extension(cfg.format))).string(), emit(ok, cfg.format));
        write_text_file((dir / "failures.csv").string(), failure_csv);
        for (const auto& keys : groupings) {
            const std::string name = keys.empty() ? "aggregate" : "aggregate_" + join(keys, "+");
            write_text_file((dir / (name + extension(cfg.format))).string(), emit(aggregate(ok, keys), cfg.format));
        }
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kIoFailure;
    }

    for (std::size_t i = 0; i < n; ++i)
        if (!reports[i]) err << "row " << (i + 1) << " failed: " << failures[i] << "\n";
    out << "evaluated " << ok.size() << " of " << n << " rows (" << (n - ok.size()) << " failed); output in "
        << opts.output_dir << "\n";
    return ok.empty() ? kAllRowsFailed : kOk;
}

// ---------------------------------------------------------------------------
// perturb

std::vector<std::optional<double>> parse_level_list(std::string_view text) {
    std::vector<std::optional<double>> levels;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string_view::npos) comma = text.size();
        const auto token = text.substr(pos, comma - pos);
        pos = comma + 1;
        if (token.empty()) continue;
        if (token == "none" || token == "inf") {
            levels.emplace_back();
            continue;
        }
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(v))
            throw std::invalid_argument("bad level '" + std::string(token) + "'");
        levels.emplace_back(v);
    }
    return levels;
}

int cmd_perturb(const PerturbOptions& opts, std::ostream& out, std::ostream& err) {
    try {
        const AudioBuffer input = read_wav(read_file_bytes(opts.input_wav));

        std::vector<ReverbLevel> reverbs;
        std::uint64_t ir_index = 0;
        for (const auto& rt : opts.rt60_levels) {
            if (!rt) {
                reverbs.push_back({"rtnone", std::nullopt});
                continue;
            }
            if (!(*rt > 0.0)) throw std::invalid_argument("rt60 levels must be positive");
            reverbs.push_back({"rt" + format_level(*rt), synth_ir(*rt, input.sample_rate, cell_seed(~opts.seed, ir_index++))});
        }
        for (const auto& file : opts.ir_files) {
            AudioBuffer ir = read_wav(read_file_bytes(file));
            reverbs.push_back({"ir" + fs::path(file).stem().string(), std::move(ir)});
        }
        if (std::none_of(reverbs.begin(), reverbs.end(), [](const ReverbLevel& r) { return !r.ir; }))
            reverbs.insert(reverbs.begin(), ReverbLevel{"rtnone", std::nullopt});

        std::vector<std::optional<double>> snrs = opts.snr_levels;
        if (std::none_of(snrs.begin(), snrs.end(), [](const auto& s) { return !s; })) snrs.insert(snrs.begin(), std::nullopt);

        const auto grid = apply_condition_grid(input, snrs, reverbs, opts.seed);
        ensure_directory(opts.output_dir);
        for (const auto& [cond, audio] : grid) {
            const auto path = fs::path(opts.output_dir) / (cond.name() + ".wav");
            write_file_bytes(path.string(), write_wav(audio, opts.pcm16 ? WavEncoding::pcm16 : WavEncoding::float32));
            out << path.string() << "\n";
        }
        return kOk;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kIoFailure;
    } catch (const WavError& e) {
        err << "unsupported WAV: " << e.what() << "\n";
        return kParseFailure;
    } catch (const std::invalid_argument& e) {
        err << "invalid perturbation: " << e.what() << "\n";
        return kParseFailure;
    }
}

// ---------------------------------------------------------------------------
// stats

int cmd_stats(const std::string& reports_csv, const std::string& metric, const std::string& group_key,
              std::ostream& out, std::ostream& err) {
    CsvTable table;
    try {
        table = parse_csv(read_text_file(reports_csv));
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return kIoFailure;
    } catch (const CsvError& e) {
        err << reports_csv << ": " << e.what() << "\n";
        return kParseFailure;
    }
    const auto value_col = table.column(metric);
    if (!value_col) {
        err << "unknown metric column '" << metric << "'\n";
        return kParseFailure;
    }
    const auto group_col = table.column(group_key);
    if (!group_col) {
        err << "unknown group column '" << group_key << "'\n";
        return kParseFailure;
    }

    std::map<std::string, std::vector<double>> groups;
    std::size_t skipped = 0;
    for (const auto& row : table.rows) {
        const auto& cell = row[*value_col];
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (cell == "NA" || cell.empty()) {
            ++skipped;
            continue;
        }
        if (ec != std::errc() || ptr != cell.data() + cell.size()) {
            err << "non-numeric value '" << cell << "' in column '" << metric << "'\n";
            return kParseFailure;
        }
        groups[row[*group_col]].push_back(v);
    }
    if (groups.size() < 2) {
        err << "need at least 2 groups in column '" << group_key << "', found " << groups.size() << "\n";
        return kParseFailure;
    }

    std::vector<std::vector<double>> values;
    std::size_t total = 0;
    for (auto& [k, v] : groups) {
        total += v.size();
        values.push_back(v);
    }
    KWResult kw;
    try {
        kw = kruskal_wallis(values);
    } catch (const std::invalid_argument& e) {
        err << e.what() << "\n";
        return kParseFailure;
    }

    char buf[128];
    out << "metric: " << metric << "\n";
    out << "group_by: " << group_key << "\n";
    out << "groups: " << groups.size() << " (n = " << total << ", NA skipped = " << skipped << ")\n";
    std::snprintf(buf, sizeof buf, "H = %.6f\ndf = %d\np = %.6g\n", kw.h, kw.df, kw.p);
    out << buf;
    out << (kw.significant() ? "significant" : "not significant") << " at alpha = " << kSignificanceAlpha << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// entry point

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Piano transcription evaluation: IR metrics, musical metrics, audio perturbation and statistics"};
    app.require_subcommand(1);

    std::string config_path;
    std::string format;
    std::string pedal;
    std::vector<std::string> overrides;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key=value run configuration file");
        sub->add_option("--format", format, "report format")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--pedal", pedal, "sustain pedal handling")->check(CLI::IsMember({"ignore", "extend"}));
        sub->add_option("--set", overrides, "override one configuration entry, key=value (repeatable)");
    };

    std::string ref_path, est_path, output;
    auto* evaluate = app.add_subcommand("evaluate", "score one estimate MIDI against a reference MIDI");
    evaluate->add_option("ref", ref_path, "reference MIDI file")->required();
    evaluate->add_option("est", est_path, "estimated MIDI file")->required();
    evaluate->add_option("--output", output, "output file (default: stdout)");
    add_common(evaluate);

    BatchOptions batch_opts;
    auto* batch = app.add_subcommand("batch", "score every row of a manifest CSV (columns ref,est plus tags)");
    batch->add_option("manifest", batch_opts.manifest_path, "manifest CSV")->required();
    batch->add_option("--output", batch_opts.output_dir, "output directory");
    batch->add_option("--jobs", batch_opts.jobs, "parallel rows")->check(CLI::PositiveNumber);
    batch->add_option("--group-by", batch_opts.group_by, "tag keys to aggregate by; comma-separate for one joint grouping (repeatable)");
    add_common(batch);

    PerturbOptions perturb_opts;
    std::string snr_text = "none,24,12,6";
    std::string rt60_text;
    auto* perturb = app.add_subcommand(
        "perturb",
        "write reverb x noise degraded copies of a WAV file\n"
        "Outputs are named snr<level>_rt<rt60>.wav for synthetic reverb or snr<level>_ir<stem>.wav\n"
        "for IR files, with 'none' for the dry / noiseless level, e.g. snr12_rt1.85.wav, snrnone_rtnone.wav.");
    perturb->add_option("input", perturb_opts.input_wav, "input WAV (PCM16 or float32, 1-2 channels)")->required();
    perturb->add_option("--output", perturb_opts.output_dir, "output directory");
    perturb->add_option("--snr", snr_text, "comma-separated SNR levels in dB, 'none' for no noise")->capture_default_str();
    perturb->add_option("--rt60", rt60_text,
                        "comma-separated synthetic RT60 levels in seconds (default none,0.19,1.85,10.5 unless --ir is given)");
    perturb->add_option("--ir", perturb_opts.ir_files, "impulse response WAV file (repeatable)");
    perturb->add_option("--seed", perturb_opts.seed, "random seed");
    perturb->add_flag("--pcm16", perturb_opts.pcm16, "write 16-bit PCM instead of float32");

    std::string reports_csv, metric = "note_offset_f1", group_key;
    auto* stats = app.add_subcommand("stats", "Kruskal-Wallis test of one metric across groups of a report CSV");
    stats->add_option("reports", reports_csv, "report CSV written by evaluate/batch")->required();
    stats->add_option("--metric", metric, "metric column")->capture_default_str();
    stats->add_option("--group-by", group_key, "grouping column")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kParseFailure;
    }

    auto build_config = [&](RunConfig& cfg) -> int {
        try {
            if (!config_path.empty()) cfg = parse_run_config(read_text_file(config_path), cfg);
            for (const auto& o : overrides) {
                const auto eq = o.find('=');
                if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + o + "'");
                apply_config_entry(cfg, o.substr(0, eq), o.substr(eq + 1));
            }
            if (!format.empty()) apply_config_entry(cfg, "format", format);
            if (!pedal.empty()) apply_config_entry(cfg, "pedal_mode", pedal);
            validate(cfg.eval.musical);
        } catch (const IoError& e) {
            err << "I/O error: " << e.what() << "\n";
            return kIoFailure;
        } catch (const std::exception& e) {
            err << e.what() << "\n";
            return kParseFailure;
        }
        return kOk;
    };

    if (evaluate->parsed() || batch->parsed()) {
        RunConfig cfg;
        if (int rc = build_config(cfg); rc != kOk) return rc;
        if (evaluate->parsed()) return cmd_evaluate(ref_path, est_path, cfg, output, out, err);
        return cmd_batch(batch_opts, cfg, out, err);
    }
    if (perturb->parsed()) {
        try {
            perturb_opts.snr_levels = parse_level_list(snr_text);
            perturb_opts.rt60_levels = parse_level_list(
                !rt60_text.empty() ? rt60_text : (perturb_opts.ir_files.empty() ? "none,0.19,1.85,10.5" : "none"));
        } catch (const std::invalid_argument& e) {
            err << e.what() << "\n";
            return kParseFailure;
        }
        return cmd_perturb(perturb_opts, out, err);
    }
    return cmd_stats(reports_csv, metric, group_key, out, err);
}

}  // namespace pianoeval::cli
