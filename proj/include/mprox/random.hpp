#pragma once

#include <cstdint>
#include <random>

#include "mprox/linalg.hpp"

namespace mprox {

// Bit-level conversions only, so sequences agree across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    int index(int n) { return static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }

    /// Exponential(1) variates normalized to a flat Dirichlet sample.
    Vec dirichlet(int n)
    {
        Vec out(n);
        for (int i = 0; i < n; ++i) out(i) = -std::log1p(-uniform());
        return out / out.sum();
    }

private:
    std::mt19937_64 gen_;
};

} // namespace mprox
