#include "pianoeval/ir_metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace pianoeval {

namespace {

double snapped_ratio(double t, double frame_length) {
    const double x = t / frame_length;
    const double r = std::round(x);
    return std::abs(x - r) < 1e-9 ? r : x;
}

}  // namespace

std::int64_t frame_floor(double t, double frame_length) {
    return static_cast<std::int64_t>(std::floor(snapped_ratio(t, frame_length)));
}

std::int64_t frame_ceil(double t, double frame_length) {
    return static_cast<std::int64_t>(std::ceil(snapped_ratio(t, frame_length)));
}

PianoRoll build_piano_roll(const Performance& perf, double frame_length) {
    if (!(frame_length > 0.0)) throw std::invalid_argument("frame_length must be positive");
    const auto frames = std::max<std::int64_t>(0, frame_ceil(perf.end_time, frame_length));
    PianoRoll roll{RollMatrix::Zero(kPitchCount, frames), frame_length};
    for (const auto& n : perf.notes) {
        const auto first = std::max<std::int64_t>(0, frame_floor(n.onset, frame_length));
        const auto last = std::min<std::int64_t>(frames - 1, std::max(first, frame_ceil(n.offset, frame_length) - 1));
        if (first > last) continue;
        roll.active.row(n.pitch).segment(first, last - first + 1).setOnes();
    }
    return roll;
}

PRF prf_from_counts(std::size_t true_positive, std::size_t n_est, std::size_t n_ref) {
    PRF out;
    out.precision = n_est ? static_cast<double>(true_positive) / static_cast<double>(n_est) : 0.0;
    out.recall = n_ref ? static_cast<double>(true_positive) / static_cast<double>(n_ref) : 0.0;
    const double s = out.precision + out.recall;
    out.f1 = s > 0.0 ? 2.0 * out.precision * out.recall / s : 0.0;
    return out;
}

PRF frame_metrics(const PianoRoll& ref, const PianoRoll& est) {
    if (std::abs(ref.frame_length - est.frame_length) > 1e-12)
        throw std::invalid_argument("piano rolls have different frame lengths");
    const Eigen::Index common = std::min(ref.frames(), est.frames());
    // Cells beyond the shorter roll are zero padding, so they only add to the totals.
    const auto tp = (ref.active.leftCols(common) * est.active.leftCols(common)).cast<std::size_t>().sum();
    const auto n_ref = ref.active.cast<std::size_t>().sum();
    const auto n_est = est.active.cast<std::size_t>().sum();
    return prf_from_counts(tp, n_est, n_ref);
}

// ---------------------------------------------------------------------------
// Note matching

namespace {

bool within(double value, double tolerance) { return value <= tolerance + kToleranceSlack; }

bool offset_ok(const Note& r, const Note& e, const MatchTolerances& tol) {
    const double allowed = std::max(tol.offset_min, tol.offset_ratio * r.duration());
    return within(std::abs(e.offset - r.offset), allowed);
}

CandidateGraph timing_candidates(std::span<const Note> ref, std::span<const Note> est, bool check_offset,
                                 const MatchTolerances& tol) {
    std::array<std::vector<std::size_t>, kPitchCount> by_pitch;
    for (std::size_t j = 0; j < est.size(); ++j) by_pitch.at(est[j].pitch).push_back(j);
    for (auto& bucket : by_pitch)
        std::stable_sort(bucket.begin(), bucket.end(),
                         [&](std::size_t a, std::size_t b) { return est[a].onset < est[b].onset; });

    CandidateGraph graph(ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const Note& r = ref[i];
        const auto& bucket = by_pitch.at(r.pitch);
        auto lo = std::lower_bound(bucket.begin(), bucket.end(), r.onset - tol.onset - kToleranceSlack,
                                   [&](std::size_t j, double t) { return est[j].onset < t; });
        auto& adj = graph[i];
        for (auto it = lo; it != bucket.end() && est[*it].onset <= r.onset + tol.onset + kToleranceSlack; ++it) {
            const Note& e = est[*it];
            if (!within(std::abs(e.onset - r.onset), tol.onset)) continue;
            if (check_offset && !offset_ok(r, e, tol)) continue;
            adj.push_back(*it);
        }
        std::stable_sort(adj.begin(), adj.end(), [&](std::size_t a, std::size_t b) {
            return std::abs(est[a].onset - r.onset) < std::abs(est[b].onset - r.onset);
        });
    }
    return graph;
}

// Affine map from raw estimate velocity to min-max scaled reference velocity, fitted by
// least squares over every timing-valid candidate pair.
struct VelocityFit {
    double slope = 0.0;
    double intercept = 0.0;
};

VelocityFit fit_velocity(std::span<const Note> est, const CandidateGraph& graph,
                         std::span<const double> scaled_ref) {
    double n = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < graph.size(); ++i)
        for (auto j : graph[i]) {
            n += 1;
            sx += est[j].velocity;
            sy += scaled_ref[i];
        }
    if (n == 0) return {};
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < graph.size(); ++i)
        for (auto j : graph[i]) {
            const double dx = est[j].velocity - mx;
            sxx += dx * dx;
            sxy += dx * (scaled_ref[i] - my);
        }
    if (sxx == 0.0) return {0.0, my};
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

}  // namespace

CandidateGraph candidate_pairs(std::span<const Note> ref, std::span<const Note> est, MatchMode mode,
                               const MatchTolerances& tol) {
    CandidateGraph graph = timing_candidates(ref, est, mode != MatchMode::onset, tol);
    if (mode != MatchMode::onset_offset_velocity || ref.empty()) return graph;

    int vmin = 127, vmax = 0;
    for (const auto& r : ref) {
        vmin = std::min(vmin, r.velocity);
        vmax = std::max(vmax, r.velocity);
    }
    const double range = vmax - vmin;
    std::vector<double> scaled(ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) scaled[i] = range > 0 ? (ref[i].velocity - vmin) / range : 0.0;

    const VelocityFit fit = fit_velocity(est, graph, scaled);
    for (std::size_t i = 0; i < graph.size(); ++i) {
        auto& adj = graph[i];
        std::erase_if(adj, [&](std::size_t j) {
            return !within(std::abs(fit.slope * est[j].velocity + fit.intercept - scaled[i]), tol.velocity);
        });
    }
    return graph;
}

std::vector<std::pair<std::size_t, std::size_t>> maximum_matching(const CandidateGraph& graph, std::size_t n_est) {
    constexpr std::size_t kFree = std::numeric_limits<std::size_t>::max();
    constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max();
    const std::size_t n_ref = graph.size();
    std::vector<std::size_t> match_ref(n_ref, kFree), match_est(n_est, kFree), dist(n_ref);

    for (std::size_t u = 0; u < n_ref; ++u)
        for (auto v : graph[u])
            if (match_est[v] == kFree) {
                match_ref[u] = v;
                match_est[v] = u;
                break;
            }

    auto bfs = [&] {
        std::queue<std::size_t> q;
        bool found = false;
        for (std::size_t u = 0; u < n_ref; ++u) {
            if (match_ref[u] == kFree) {
                dist[u] = 0;
                q.push(u);
            } else {
                dist[u] = kInf;
            }
        }
        while (!q.empty()) {
            const auto u = q.front();
            q.pop();
            for (auto v : graph[u]) {
                const auto w = match_est[v];
                if (w == kFree)
                    found = true;
                else if (dist[w] == kInf) {
                    dist[w] = dist[u] + 1;
                    q.push(w);
                }
            }
        }
        return found;
    };

    std::vector<std::size_t> cursor(n_ref);
    auto dfs = [&](auto&& self, std::size_t u) -> bool {
        for (auto& k = cursor[u]; k < graph[u].size(); ++k) {
            const auto v = graph[u][k];
            const auto w = match_est[v];
            if (w == kFree || (dist[w] == dist[u] + 1 && self(self, w))) {
                match_ref[u] = v;
                match_est[v] = u;
                ++k;
                return true;
            }
        }
        dist[u] = kInf;
        return false;
    };

    while (bfs()) {
        std::fill(cursor.begin(), cursor.end(), 0);
        for (std::size_t u = 0; u < n_ref; ++u)
            if (match_ref[u] == kFree) dfs(dfs, u);
    }

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t u = 0; u < n_ref; ++u)
        if (match_ref[u] != kFree) pairs.emplace_back(u, match_ref[u]);
    return pairs;
}

NoteMatching match_notes(std::span<const Note> ref, std::span<const Note> est, MatchMode mode,
                         const MatchTolerances& tol) {
    NoteMatching m;
    m.pairs = maximum_matching(candidate_pairs(ref, est, mode, tol), est.size());
    std::vector<bool> ref_used(ref.size()), est_used(est.size());
    for (auto [i, j] : m.pairs) {
        ref_used[i] = true;
        est_used[j] = true;
    }
    for (std::size_t i = 0; i < ref.size(); ++i)
        if (!ref_used[i]) m.unmatched_ref.push_back(i);
    for (std::size_t j = 0; j < est.size(); ++j)
        if (!est_used[j]) m.unmatched_est.push_back(j);
    return m;
}

PRF note_metrics(std::span<const Note> ref, std::span<const Note> est, MatchMode mode, const MatchTolerances& tol) {
    const auto m = match_notes(ref, est, mode, tol);
    return prf_from_counts(m.pairs.size(), est.size(), ref.size());
}

}  // namespace pianoeval
