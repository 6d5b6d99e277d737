#pragma once

#include <cstddef>
#include <vector>

namespace pianoeval {

struct Sample {
    double time = 0.0;
    double value = 0.0;

    friend bool operator==(const Sample&, const Sample&) = default;
};

/// Time-stamped scalar sequence with strictly increasing times.
class FeatureSeries {
public:
    FeatureSeries() = default;

    /// Appends a sample. A sample at the last sample's time is dropped (first one wins);
    /// an earlier time is a contract violation.
    void push(double time, double value);

    const std::vector<Sample>& samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    const Sample& operator[](std::size_t i) const { return samples_[i]; }
    auto begin() const { return samples_.begin(); }
    auto end() const { return samples_.end(); }

    friend bool operator==(const FeatureSeries&, const FeatureSeries&) = default;

private:
    std::vector<Sample> samples_;
};

}  // namespace pianoeval
