#include "wuglab/rng.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace wuglab {

uint64_t Rng::below(uint64_t n) {
    if (n == 0) return 0;
    uint64_t threshold = (~n + 1) % n; // 2^64 mod n
    for (;;) {
        uint64_t r = u64();
        if (r >= threshold) return r % n;
    }
}

double Rng::normal(double mu, double sigma) {
    if (has_spare_) {
        has_spare_ = false;
        return mu + spare_ * sigma;
    }
    // Box-Muller; 1-u keeps log() away from zero.
    double u = 1.0 - uniform();
    double v = uniform();
    double r = std::sqrt(-2.0 * std::log(u));
    double z0 = r * std::cos(2.0 * M_PI * v);
    double z1 = r * std::sin(2.0 * M_PI * v);
    spare_ = z1;
    has_spare_ = true;
    return mu + z0 * sigma;
}

std::string Rng::save_state() const {
    std::ostringstream os;
    os << eng_ << " " << (has_spare_ ? 1 : 0);
    if (has_spare_) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), " %a", spare_);
        os << buf;
    }
    return os.str();
}

void Rng::load_state(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
    int flag = 0;
    is >> flag;
    has_spare_ = flag != 0;
    spare_ = 0.0;
    if (has_spare_) {
        std::string hex;
        is >> hex;
        spare_ = std::strtod(hex.c_str(), nullptr);
    }
}

uint64_t derive_seed(uint64_t base, std::string_view label) {
    // FNV-1a over the label, then splitmix64-style finalization with the base.
    uint64_t h = 1469598103934665603ull;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    uint64_t z = base + 0x9e3779b97f4a7c15ull + h;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace wuglab
