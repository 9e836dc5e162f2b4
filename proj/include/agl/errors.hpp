#pragma once

#include <stdexcept>

namespace agl {

// One exception class per CLI exit-code class; see tools/agl_cli.cpp for the mapping.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OracleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace agl
