#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "generators.hpp"
#include "pianoeval/audio.hpp"
#include "pianoeval/csv.hpp"
#include "pianoeval/io.hpp"
#include "smf_writer.hpp"

using namespace pianoeval;
using namespace pianoeval::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("pianoeval_test_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "pianoeval");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

void write_midi(const std::string& path, const Performance& perf) {
    write_file_bytes(path, testsupport::write_performance(perf));
}

Performance sample_performance(std::uint64_t seed) {
    testsupport::Rng rng(seed);
    return testsupport::random_performance(rng, {120, 200});
}

}  // namespace

TEST_CASE("run config parsing") {
    const auto cfg = parse_run_config("# comment\nframe_length = 0.02\nhop=0.25 # half\npedal_mode = ignore\nformat=json\n");
    CHECK(cfg.eval.frame_length == 0.02);
    CHECK(cfg.eval.musical.windows.hop == 0.25);
    CHECK(cfg.pedal == PedalMode::ignore);
    CHECK(cfg.format == ReportFormat::json);
    CHECK_THROWS_AS(parse_run_config("bogus = 1"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("frame_length = -1"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("min_samples = 1"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("hop = 2"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("frame_length"), ConfigError);

    RunConfig custom;
    custom.eval.musical.grid.step = 0.05;
    custom.eval.musical.windows.weighting = CeWeighting::duration_velocity;
    custom.pedal = PedalMode::ignore;
    const auto back = parse_run_config(serialize_run_config(custom));
    CHECK(serialize_run_config(back) == serialize_run_config(custom));
    CHECK(back.eval.musical.grid.step == 0.05);
}

TEST_CASE("manifest parsing") {
    const auto m = parse_manifest("ref,est,model,split\na.mid,b.mid,x,test\n/abs/c.mid,d.mid,y,\n", "/data");
    CHECK(m.tag_keys == std::vector<std::string>{"model", "split"});
    REQUIRE(m.rows.size() == 2);
    CHECK(m.rows[0].ref_path == "/data/a.mid");
    CHECK(m.rows[1].ref_path == "/abs/c.mid");
    CHECK(m.rows[1].tags.at("split").empty());
    CHECK_THROWS(parse_manifest("ref,model\na.mid,x\n"));
    CHECK_THROWS(parse_manifest("ref,est\n,b.mid\n"));
}

TEST_CASE("level lists") {
    const auto levels = parse_level_list("none,24,12.5");
    REQUIRE(levels.size() == 3);
    CHECK_FALSE(levels[0].has_value());
    CHECK(*levels[2] == 12.5);
    CHECK_THROWS(parse_level_list("12,abc"));
}

TEST_CASE("evaluate command") {
    TempDir dir("evaluate");
    const auto perf = sample_performance(1);
    write_midi(dir / "ref.mid", perf);
    write_midi(dir / "empty.mid", Performance{});

    SUBCASE("self evaluation") {
        const auto r = run_cli({"evaluate", dir / "ref.mid", dir / "ref.mid"});
        REQUIRE(r.code == 0);
        const auto t = parse_csv(r.out);
        REQUIRE(t.rows.size() == 1);
        for (const char* col : {"frame_f1", "note_offset_f1", "note_offset_velocity_f1"})
            CHECK(t.rows[0][*t.column(col)] == "1.000000");
        for (auto name : kMusicalMetricNames) {
            const auto& cell = t.rows[0][*t.column(name)];
            CHECK((cell == "NA" || cell == "1.000000"));
        }
    }
    SUBCASE("empty estimate") {
        const auto r = run_cli({"evaluate", dir / "ref.mid", dir / "empty.mid", "--format", "json"});
        REQUIRE(r.code == 0);
        const auto reports = reports_from_json(r.out);
        REQUIRE(reports.size() == 1);
        CHECK(reports[0].frame.f1 == 0.0);
        CHECK(reports[0].note_offset.f1 == 0.0);
        for (const auto& v : reports[0].musical.values()) CHECK_FALSE(v.has_value());
    }
    SUBCASE("output file") {
        const auto r = run_cli({"evaluate", dir / "ref.mid", dir / "ref.mid", "--output", dir / "out.csv"});
        CHECK(r.code == 0);
        CHECK(fs::exists(dir / "out.csv"));
    }
    SUBCASE("missing file") {
        CHECK(run_cli({"evaluate", dir / "ref.mid", dir / "nope.mid"}).code == 3);
    }
    SUBCASE("corrupt file names the file and offset") {
        write_file_bytes(dir / "bad.mid", std::vector<std::uint8_t>{'M', 'T', 'h', 'd', 0, 0, 0, 6, 0, 2, 0, 1, 0, 96});
        const auto r = run_cli({"evaluate", dir / "ref.mid", dir / "bad.mid"});
        CHECK(r.code == 2);
        CHECK(r.err.find("bad.mid") != std::string::npos);
        CHECK(r.err.find("byte offset 8") != std::string::npos);
    }
    SUBCASE("bad usage and config") {
        CHECK(run_cli({"evaluate", dir / "ref.mid"}).code == 2);
        CHECK(run_cli({"evaluate", dir / "ref.mid", dir / "ref.mid", "--format", "xml"}).code == 2);
        CHECK(run_cli({"evaluate", dir / "ref.mid", dir / "ref.mid", "--set", "hop=7"}).code == 2);
        CHECK(run_cli({"evaluate", dir / "ref.mid", dir / "ref.mid", "--config", dir / "none.cfg"}).code == 3);
        CHECK(run_cli({}).code == 2);
    }
    SUBCASE("flags override the config file") {
        write_text_file(dir / "run.cfg", "format = json\n");
        const auto json = run_cli({"evaluate", dir / "ref.mid", dir / "ref.mid", "--config", dir / "run.cfg"});
        CHECK(json.out.front() == '[');
        const auto csv = run_cli({"evaluate", dir / "ref.mid", dir / "ref.mid", "--config", dir / "run.cfg", "--format", "csv"});
        CHECK(csv.out.rfind("pair_id", 0) == 0);
    }
    SUBCASE("help") {
        const auto r = run_cli({"--help"});
        CHECK(r.code == 0);
        CHECK(r.out.find("perturb") != std::string::npos);
    }
}

TEST_CASE("batch command") {
    TempDir dir("batch");
    for (int i = 0; i < 3; ++i) write_midi(dir / ("p" + std::to_string(i) + ".mid"), sample_performance(10 + i));
    write_file_bytes(dir / "corrupt.mid", std::vector<std::uint8_t>{'n', 'o', 'p', 'e'});
    write_text_file(dir / "good.csv",
                    "ref,est,model\np0.mid,p0.mid,a\np1.mid,p2.mid,a\np2.mid,p1.mid,b\n");
    write_text_file(dir / "mixed.csv",
                    "ref,est,model\np0.mid,p0.mid,a\np1.mid,corrupt.mid,a\np2.mid,p1.mid,b\n");
    write_text_file(dir / "empty.csv", "ref,est,model\n");
    write_text_file(dir / "bad.csv", "ref,est\ncorrupt.mid,corrupt.mid\n");

    SUBCASE("all rows valid") {
        const auto r = run_cli({"batch", dir / "good.csv", "--output", dir / "out", "--group-by", "model"});
        REQUIRE(r.code == 0);
        const auto reports = parse_csv(read_text_file(dir / "out/reports.csv"));
        CHECK(reports.rows.size() == 3);
        const auto agg = parse_csv(read_text_file(dir / "out/aggregate_model.csv"));
        CHECK(agg.rows.size() == 2);
        CHECK(parse_csv(read_text_file(dir / "out/failures.csv")).rows.empty());
    }
    SUBCASE("one corrupt row") {
        const auto r = run_cli({"batch", dir / "mixed.csv", "--output", dir / "out"});
        REQUIRE(r.code == 0);
        CHECK(parse_csv(read_text_file(dir / "out/reports.csv")).rows.size() == 2);
        const auto failures = parse_csv(read_text_file(dir / "out/failures.csv"));
        REQUIRE(failures.rows.size() == 1);
        CHECK(failures.rows[0][0] == "2");
        CHECK(fs::exists(dir / "out/aggregate.csv"));
    }
    SUBCASE("isolation and determinism across job counts") {
        run_cli({"batch", dir / "good.csv", "--output", dir / "a", "--jobs", "1"});
        run_cli({"batch", dir / "mixed.csv", "--output", dir / "b", "--jobs", "3"});
        const auto a = parse_csv(read_text_file(dir / "a/reports.csv"));
        const auto b = parse_csv(read_text_file(dir / "b/reports.csv"));
        CHECK(a.rows[0] == b.rows[0]);
        CHECK(a.rows[2] == b.rows[1]);
        run_cli({"batch", dir / "good.csv", "--output", dir / "c", "--jobs", "4"});
        CHECK(read_text_file(dir / "a/reports.csv") == read_text_file(dir / "c/reports.csv"));
    }
    SUBCASE("empty or all-failed manifests") {
        CHECK(run_cli({"batch", dir / "empty.csv", "--output", dir / "out"}).code == 4);
        CHECK(run_cli({"batch", dir / "bad.csv", "--output", dir / "out"}).code == 4);
        CHECK(run_cli({"batch", dir / "missing.csv", "--output", dir / "out"}).code == 3);
        CHECK(run_cli({"batch", dir / "good.csv", "--output", dir / "out", "--group-by", "split"}).code == 2);
    }
    SUBCASE("joint grouping and json") {
        write_text_file(dir / "tagged.csv", "ref,est,model,split\np0.mid,p0.mid,a,t\np1.mid,p2.mid,a,v\n");
        const auto r = run_cli({"batch", dir / "tagged.csv", "--output", dir / "out", "--group-by", "model,split",
                                "--group-by", "split", "--format", "json"});
        REQUIRE(r.code == 0);
        CHECK(fs::exists(dir / "out/aggregate_model+split.json"));
        CHECK(fs::exists(dir / "out/aggregate_split.json"));
        CHECK(reports_from_json(read_text_file(dir / "out/reports.json")).size() == 2);
    }
}

TEST_CASE("perturb command") {
    TempDir dir("perturb");
    write_file_bytes(dir / "in.wav", write_wav(testsupport::test_tone(0.2, 8000, 2)));

    const auto r = run_cli({"perturb", dir / "in.wav", "--output", dir / "out", "--seed", "5"});
    REQUIRE(r.code == 0);
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir.path / "out")) names.push_back(e.path().filename().string());
    CHECK(names.size() == 16);
    CHECK(fs::exists(dir / "out/snr12_rt1.85.wav"));
    CHECK(fs::exists(dir / "out/snrnone_rt10.5.wav"));
    CHECK(read_wav(read_file_bytes(dir / "out/snrnone_rtnone.wav")) == read_wav(read_file_bytes(dir / "in.wav")));

    run_cli({"perturb", dir / "in.wav", "--output", dir / "again", "--seed", "5"});
    for (const auto& n : names) CHECK(read_file_bytes(dir / ("out/" + n)) == read_file_bytes(dir / ("again/" + n)));

    SUBCASE("impulse response files") {
        write_file_bytes(dir / "hall.wav", write_wav(synth_ir(0.1, 8000, 1)));
        const auto ir = run_cli({"perturb", dir / "in.wav", "--output", dir / "ir", "--ir", dir / "hall.wav", "--snr", "none,6",
                                 "--pcm16"});
        REQUIRE(ir.code == 0);
        CHECK(fs::exists(dir / "ir/snr6_irhall.wav"));
        CHECK(fs::exists(dir / "ir/snrnone_rtnone.wav"));
    }
    SUBCASE("errors") {
        write_file_bytes(dir / "bad.wav", std::vector<std::uint8_t>(60, 1));
        CHECK(run_cli({"perturb", dir / "bad.wav", "--output", dir / "x"}).code == 2);
        CHECK(run_cli({"perturb", dir / "nope.wav", "--output", dir / "x"}).code == 3);
        CHECK(run_cli({"perturb", dir / "in.wav", "--output", dir / "x", "--snr", "loud"}).code == 2);
    }
    SUBCASE("help documents the naming pattern") {
        const auto h = run_cli({"perturb", "--help"});
        CHECK(h.out.find("snr12_rt1.85") != std::string::npos);
    }
}

TEST_CASE("stats command") {
    TempDir dir("stats");
    write_text_file(dir / "r.csv",
                    "pair_id,model,note_offset_f1\n"
                    "a,x,1\nb,x,2\nc,x,3\nd,y,4\ne,y,5\nf,y,6\ng,z,7\nh,z,8\ni,z,9\nj,z,NA\n");
    const auto r = run_cli({"stats", dir / "r.csv", "--group-by", "model"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("H = 7.200000") != std::string::npos);
    CHECK(r.out.find("df = 2") != std::string::npos);
    CHECK(r.out.find("p = 0.0273237") != std::string::npos);
    CHECK(r.out.find("\nsignificant at alpha = 0.05") != std::string::npos);

    write_text_file(dir / "same.csv", "pair_id,model,note_offset_f1\na,x,1\nb,x,2\nc,y,1\nd,y,2\n");
    const auto same = run_cli({"stats", dir / "same.csv", "--group-by", "model"});
    CHECK(same.code == 0);
    CHECK(same.out.find("not significant at alpha = 0.05") != std::string::npos);

    write_text_file(dir / "one.csv", "pair_id,model,note_offset_f1\na,x,1\nb,x,2\nc,x,3\n");
    CHECK(run_cli({"stats", dir / "one.csv", "--group-by", "model"}).code == 2);
    CHECK(run_cli({"stats", dir / "r.csv", "--group-by", "split"}).code == 2);
    CHECK(run_cli({"stats", dir / "r.csv", "--group-by", "model", "--metric", "nope"}).code == 2);
    CHECK(run_cli({"stats", dir / "missing.csv", "--group-by", "model"}).code == 3);
}
