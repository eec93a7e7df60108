#pragma once

// Context indexing shared by every module.
//
// A context a_{1:r} over an alphabet of size m is stored as the base-m
// integer whose least significant digit is the most recent symbol a_r.
// Appending a symbol b to a context of length r therefore yields the
// length-(r+1) index c*m + b, and sliding a fixed-length window is
// (c*m + b) mod m^r.

#include <cstdint>
#include <span>
#include <vector>

#include "morder/error.hpp"

namespace morder {

using Symbol = std::uint32_t;

// m^r, throwing if the result does not fit in 64 bits.
inline std::uint64_t checked_pow(std::uint64_t m, std::uint32_t r) {
    std::uint64_t out = 1;
    for (std::uint32_t k = 0; k < r; ++k) {
        if (m != 0 && out > UINT64_MAX / m) {
            throw InvalidArgument("context space m^r overflows 64 bits");
        }
        out *= m;
    }
    return out;
}

inline std::uint64_t encode_context(std::span<const Symbol> symbols, std::uint32_t m) {
    std::uint64_t c = 0;
    for (Symbol s : symbols) c = c * m + s;
    return c;
}

// Inverse of encode_context for a context of length r.
inline std::vector<Symbol> decode_context(std::uint64_t c, std::uint32_t m, std::uint32_t r) {
    std::vector<Symbol> out(r);
    for (std::uint32_t k = r; k-- > 0;) {
        out[k] = static_cast<Symbol>(c % m);
        c /= m;
    }
    return out;
}

}  // namespace morder
