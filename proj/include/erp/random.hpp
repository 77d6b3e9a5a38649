#pragma once

#include <cstdint>
#include <random>

namespace erp {

/// Purpose tags used to derive independent substreams from one run seed.
enum class StreamTag : std::uint32_t {
    equity = 1,
    jumps = 2,
    implied_vol = 3,
    shuffle = 4,
    init = 5,
};

/// Random stream owned by a single simulated path.
///
/// Each (seed, path, tag) triple maps to its own Mersenne Twister state, so the
/// draws of path `i` never depend on how many other paths are simulated or on
/// which thread simulates them.
class PathStream {
public:
    PathStream(std::uint64_t seed, std::uint64_t path, StreamTag tag);

    /// Uniform draw on the open interval (0, 1).
    double uniform();

    /// Standard normal draw by inversion of the uniform draw.
    double normal();

    /// Poisson count with the given mean, sampled by inversion.
    unsigned poisson(double mean);

private:
    std::mt19937_64 engine_;
};

/// Inverse of the standard normal CDF for p in (0, 1).
double normal_quantile(double p);

/// Derives a child seed from a parent seed and a numeric label.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t label);

}  // namespace erp
