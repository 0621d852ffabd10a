#pragma once

#include <cstdint>
#include <optional>

#include "hnsynth/io.hpp"

namespace hnsynth {

// Runs the analysis front-end and packages the result with the settings used.
// When `f0` is given it replaces the built-in tracker; its hop must match and
// it is cut or padded with unvoiced frames to ceil(len/hop) frames.
FeatureBundle analyze_to_bundle(const Waveform& x, const Settings& settings,
                                const std::optional<F0Contour>& f0 = std::nullopt);

// Harmonic part plus seeded noise part, trimmed to bundle.num_samples.
Waveform synthesize_bundle(const FeatureBundle& bundle, std::uint64_t seed);

}  // namespace hnsynth
