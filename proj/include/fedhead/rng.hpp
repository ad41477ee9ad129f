#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace fedhead {

// Mixes a base seed with a path of stream identifiers (client id, epoch,
// purpose tag, ...) into a fresh seed. splitmix64 applied per element keeps
// derived streams decorrelated from each other and from the base.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

// Deterministic RNG. std::mt19937_64 supplies the bit stream; all value
// mappings are spelled out here instead of going through std distributions,
// so sequences are identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // 53-bit mantissa draw in [0, 1).
    double uniform();
    double uniform(double lo, double hi);

    // Inclusive integer range.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    double gaussian();

    // Gamma(shape, 1), Marsaglia-Tsang.
    double gamma(double shape);

    // Symmetric Dirichlet over k components.
    std::vector<double> dirichlet(double alpha, std::size_t k);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(
                uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace fedhead
