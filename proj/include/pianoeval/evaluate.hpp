#pragma once

#include <map>
#include <string>

#include "pianoeval/midi.hpp"
#include "pianoeval/perf_metrics.hpp"
#include "pianoeval/report.hpp"

namespace pianoeval {

struct EvaluationConfig {
    double frame_length = 0.010;
    MatchTolerances tolerances;
    MusicalConfig musical;
};

/// Frame, note-offset and note-offset-velocity scores plus the eight musical correlations.
MetricReport evaluate_pair(const Performance& ref, const Performance& est, const EvaluationConfig& cfg = {},
                           std::string pair_id = {}, std::map<std::string, std::string> tags = {});

}  // namespace pianoeval
