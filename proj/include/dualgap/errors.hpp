#pragma once

#include <stdexcept>
#include <string>

namespace dualgap {

// Error categories mirror the CLI exit codes: config 2, precondition 3, numerical 4.

struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

struct precondition_error : std::runtime_error {
    explicit precondition_error(const std::string& what) : std::runtime_error(what) {}
};

struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw precondition_error(what);
}

}  // namespace dualgap
