#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>

namespace mlms::csv {

/// Round-trippable decimal form of a double ("%.17g").
inline std::string num(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string hex64(std::uint64_t x)
{
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

/// "# key: value" comment lines at the top of every output file.
inline void write_provenance(std::ostream& os, const std::string& digest, std::uint64_t seed)
{
    os << "# config_digest: " << digest << '\n' << "# seed: " << seed << '\n';
}

} // namespace mlms::csv
