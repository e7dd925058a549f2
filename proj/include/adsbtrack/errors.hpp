#pragma once

#include <stdexcept>
#include <string>

namespace adsbtrack {

// Exit-code mapping used by the CLI: config errors -> 2, data errors -> 3,
// numerical divergence -> 4.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg, long step_index = -1)
        : std::runtime_error(msg), step(step_index) {}
    long step;
};

}  // namespace adsbtrack
