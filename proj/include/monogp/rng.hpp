#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace monogp {

// Deterministic RNG wrapper. std::normal_distribution's draw sequence is
// implementation-defined, so normals come from an explicit Box-Muller
// transform over mt19937_64 uniforms to keep outputs bit-stable.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() {  // in [0, 1)
        return std::generate_canonical<double, 53>(gen_);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double std) { return mean + std * normal(); }

    std::uint64_t integer(std::uint64_t n) {  // in [0, n)
        return gen_() % n;
    }

  private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace monogp
