#include "engorgio/dims.hpp"
#include "engorgio/error.hpp"
#include "engorgio/format.hpp"
#include "engorgio/rng.hpp"

#include <charconv>
#include <string>

namespace engorgio {

void ModelDims::validate() const {
    auto require = [](bool ok, const char* field) {
        if (!ok) {
            throw ConfigError(std::string("model dims: invalid field '") + field + "'");
        }
    };
    require(vocab >= 4, "vocab");
    require(hidden >= 1, "hidden");
    require(layers >= 1, "layers");
    require(heads >= 1 && hidden % heads == 0, "heads");
    require(max_context >= 2, "max_context");
    require(mlp_ratio >= 1, "mlp_ratio");
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view stream) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : stream) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::uint64_t z = root ^ h;
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double Rng::uniform_open() {
    double u = uniform();
    while (u <= 0.0) {
        u = uniform();
    }
    return u;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace engorgio
