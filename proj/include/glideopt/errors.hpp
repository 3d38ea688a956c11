#pragma once

#include <stdexcept>
#include <string>

namespace glideopt {

// Single exception type for domain errors (bad inputs, grid too small,
// singular Hessians, boundary refusals). The message carries the diagnosis.
class GlidepathError : public std::runtime_error {
public:
    explicit GlidepathError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace glideopt
