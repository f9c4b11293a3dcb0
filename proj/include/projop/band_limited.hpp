#pragma once

/// Seeded generator of smooth random functions used for compacts, training data and probes.

#include "projop/function_space.hpp"

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace projop {

/// Random band-limited function on [-1,1]^d: a sum of a few low-frequency
/// sinusoids with random amplitudes and phases.
class BandLimited {
public:
    BandLimited(std::mt19937_64& rng, int dimension, int modes = 4, double max_frequency = 2.0)
        : dimension_(dimension) {
        std::uniform_real_distribution<double> amp(-1.0, 1.0), phase(0.0, 6.283185307179586),
            freq(0.0, max_frequency);
        for (int m = 0; m < modes; ++m) {
            Mode mode;
            mode.amplitude = amp(rng);
            mode.phase = phase(rng);
            for (int j = 0; j < dimension; ++j) mode.frequency.push_back(freq(rng));
            modes_.push_back(mode);
        }
        offset_ = amp(rng);
    }

    double operator()(std::span<const double> x) const {
        double v = offset_;
        for (const auto& m : modes_) {
            double arg = m.phase;
            for (std::size_t j = 0; j < x.size(); ++j) arg += m.frequency[j] * x[j];
            v += m.amplitude * std::sin(arg);
        }
        return v;
    }

private:
    struct Mode {
        double amplitude = 0.0;
        double phase = 0.0;
        std::vector<double> frequency;
    };
    int dimension_;
    double offset_ = 0.0;
    std::vector<Mode> modes_;
};

inline SampledFunction random_band_limited(std::mt19937_64& rng, const QuadraturePtr& quad, int modes = 4,
                                           double max_frequency = 2.0) {
    BandLimited fn(rng, quad->dimension(), modes, max_frequency);
    return sample(quad, fn);
}

} // namespace projop
