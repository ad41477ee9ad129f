#include "fedhead/rng.hpp"

#include "fedhead/errors.hpp"

#include <cmath>

namespace fedhead {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(base);
    for (std::uint64_t p : path) {
        s = splitmix64(s ^ splitmix64(p));
    }
    return s;
}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw InvalidArgument("uniform_int: empty range");
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(engine_()); // full 64-bit range
    const auto value = static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(engine_()) * span) >> 64);
    return lo + static_cast<std::int64_t>(value);
}

double Rng::gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // Box-Muller; u clamped away from 0 to keep log finite.
    double u = uniform();
    if (u <= 0.0) u = 0x1.0p-53;
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double theta = 2.0 * 3.14159265358979323846 * v;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

double Rng::gamma(double shape) {
    if (!(shape > 0.0)) throw InvalidArgument("gamma: shape must be > 0");
    if (shape < 1.0) {
        const double u = 1.0 - uniform(); // (0, 1]
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = 0.0;
        double v = 0.0;
        do {
            x = gaussian();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = 1.0 - uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

std::vector<double> Rng::dirichlet(double alpha, std::size_t k) {
    if (!(alpha > 0.0)) throw InvalidArgument("dirichlet: alpha must be > 0");
    if (k == 0) throw InvalidArgument("dirichlet: k must be >= 1");
    std::vector<double> draws(k);
    double total = 0.0;
    for (auto& d : draws) {
        d = gamma(alpha);
        total += d;
    }
    if (total <= 0.0) {
        // All gammas underflowed; fall back to uniform proportions.
        for (auto& d : draws) d = 1.0 / static_cast<double>(k);
        return draws;
    }
    for (auto& d : draws) d /= total;
    return draws;
}

} // namespace fedhead
