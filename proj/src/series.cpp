#include "pianoeval/series.hpp"

#include <cmath>
#include <stdexcept>

namespace pianoeval {

void FeatureSeries::push(double time, double value) {
    if (!std::isfinite(time) || !std::isfinite(value)) throw std::invalid_argument("non-finite sample");
    if (!samples_.empty()) {
        if (time == samples_.back().time) return;
        if (time < samples_.back().time) throw std::invalid_argument("sample times must increase");
    }
    samples_.push_back({time, value});
}

}  // namespace pianoeval
