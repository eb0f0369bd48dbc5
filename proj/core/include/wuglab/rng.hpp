#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace wuglab {

// Deterministic RNG with hand-rolled distributions. std::mt19937_64's output
// sequence is pinned by the standard, but the std distributions are not, so
// uniform/normal/shuffle are implemented here to keep results identical
// across standard libraries.
class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t u64() { return eng_(); }

    // [0, 1) with 53 bits of resolution.
    double uniform() {
        return static_cast<double>(u64() >> 11) * 0x1.0p-53;
    }

    // Unbiased integer in [0, n) via rejection.
    uint64_t below(uint64_t n);

    double normal(double mu, double sigma);

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    template <class T>
    const T& pick(const std::vector<T>& v) {
        return v[static_cast<size_t>(below(v.size()))];
    }

    // Engine + Box-Muller spare, serialized as text (used by checkpoints).
    std::string save_state() const;
    void load_state(const std::string& s);

  private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Stable seed derivation for independent sub-streams, keyed by a label.
uint64_t derive_seed(uint64_t base, std::string_view label);

} // namespace wuglab
