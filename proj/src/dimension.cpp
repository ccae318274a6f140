#include "site/dimension.hpp"

#include <sstream>

namespace site {

std::string to_string(const DimVector& d) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < 7; ++i) {
        if (i) os << ',';
        os << d.exp[i];
    }
    os << ']';
    return os.str();
}

} // namespace site
