#include "pianoeval/evaluate.hpp"

namespace pianoeval {

MetricReport evaluate_pair(const Performance& ref, const Performance& est, const EvaluationConfig& cfg,
                           std::string pair_id, std::map<std::string, std::string> tags) {
    MetricReport r;
    r.pair_id = std::move(pair_id);
    r.tags = std::move(tags);
    r.frame = frame_metrics(build_piano_roll(ref, cfg.frame_length), build_piano_roll(est, cfg.frame_length));
    r.note_offset = note_metrics(ref.notes, est.notes, MatchMode::onset_offset, cfg.tolerances);
    r.note_offset_velocity = note_metrics(ref.notes, est.notes, MatchMode::onset_offset_velocity, cfg.tolerances);
    r.musical = compute_musical_metrics(ref, est, cfg.musical);
    return r;
}

}  // namespace pianoeval
