#include "pergarch/random.hpp"

#include <string>

namespace pergarch {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

RandomStream::RandomStream(std::uint64_t seed) : key_(splitmix64(seed)), engine_(key_) {}

RandomStream RandomStream::child(std::string_view name) const {
    RandomStream out(0);
    out.key_ = splitmix64(key_ ^ fnv1a64(name));
    out.engine_.seed(out.key_);
    return out;
}

RandomStream RandomStream::child(std::uint64_t index) const {
    return child("replicate:" + std::to_string(index));
}

double RandomStream::uniform() {
    // generate_canonical may round up to 1.0 on some standard libraries
    double u = 1.0;
    while (u >= 1.0) {
        u = std::generate_canonical<double, 53>(engine_);
    }
    return u;
}

double RandomStream::uniform_open() {
    double u = 0.0;
    do {
        u = uniform();
    } while (u == 0.0);
    return u;
}

double RandomStream::normal(double mean, double stddev) {
    std::normal_distribution<double> dist(mean, stddev);
    return dist(engine_);
}

}  // namespace pergarch
