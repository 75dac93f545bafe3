#pragma once

#include <stdexcept>
#include <string>

namespace attnlego {

// Error categories shared by every module. Invalid arguments use
// std::invalid_argument directly.

struct IndexError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct BusyError : std::logic_error {
    using std::logic_error::logic_error;
};

struct PreconditionError : std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace attnlego
