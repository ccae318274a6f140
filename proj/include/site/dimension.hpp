#pragma once

#include <array>
#include <cstddef>
#include <string>

namespace site {

/// Exponents of the 7 SI base dimensions, ordered (M, L, T, I, Theta, N, J).
/// The all-zero vector is a dimensionless quantity.
struct DimVector {
    std::array<int, 7> exp{};

    constexpr int& operator[](std::size_t i) { return exp[i]; }
    constexpr int operator[](std::size_t i) const { return exp[i]; }

    constexpr bool operator==(const DimVector&) const = default;

    constexpr bool is_dimensionless() const {
        for (int e : exp)
            if (e != 0) return false;
        return true;
    }

    friend constexpr DimVector operator+(const DimVector& a, const DimVector& b) {
        DimVector r;
        for (std::size_t i = 0; i < 7; ++i) r.exp[i] = a.exp[i] + b.exp[i];
        return r;
    }
    friend constexpr DimVector operator-(const DimVector& a, const DimVector& b) {
        DimVector r;
        for (std::size_t i = 0; i < 7; ++i) r.exp[i] = a.exp[i] - b.exp[i];
        return r;
    }
    friend constexpr DimVector operator*(int k, const DimVector& a) {
        DimVector r;
        for (std::size_t i = 0; i < 7; ++i) r.exp[i] = k * a.exp[i];
        return r;
    }
};

inline constexpr DimVector dimensionless() { return DimVector{}; }

/// Compact text form, e.g. "[1,-1,-2,0,0,0,0]".
std::string to_string(const DimVector& d);

} // namespace site
