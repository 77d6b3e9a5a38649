#include "erp/random.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>

namespace erp {

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t path, StreamTag tag) {
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed & 0xffffffffu),
        static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(path & 0xffffffffu),
        static_cast<std::uint32_t>(path >> 32),
        static_cast<std::uint32_t>(tag),
    };
    return std::mt19937_64(seq);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

PathStream::PathStream(std::uint64_t seed, std::uint64_t path, StreamTag tag)
    : engine_(seeded_engine(seed, path, tag)) {}

double PathStream::uniform() {
    // 53 random bits, shifted by half a unit so 0 and 1 are never produced.
    const std::uint64_t bits = engine_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double PathStream::normal() { return normal_quantile(uniform()); }

unsigned PathStream::poisson(double mean) {
    const double u = uniform();
    double p = std::exp(-mean);
    double cdf = p;
    unsigned k = 0;
    while (u > cdf) {
        ++k;
        p *= mean / k;
        const double next = cdf + p;
        if (next == cdf) break;  // tail underflow
        cdf = next;
    }
    return k;
}

double normal_quantile(double p) {
    return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t label) {
    return splitmix64(splitmix64(parent) ^ (label * 0x100000001b3ULL));
}

}  // namespace erp
