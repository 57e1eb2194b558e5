#pragma once

#include <cstdint>
#include <functional>
#include <random>

namespace wflevy {

using Rng = std::mt19937_64;

/// Deterministic generator for stream `stream` derived from a base seed.
/// Streams with distinct indices are decorrelated through splitmix64 mixing.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

/// Runs body(stream) for stream = 0 .. n_streams-1 on up to `threads`
/// workers. Results must be written into per-stream slots by the body;
/// callers reduce them in stream order, so output does not depend on the
/// worker count.
void for_each_stream(int n_streams, int threads, const std::function<void(int)>& body);

/// Number of streams used by batch estimators. Fixed, independent of the
/// thread count, so that results only depend on (seed, samples).
inline constexpr int kDefaultStreams = 16;

}  // namespace wflevy
