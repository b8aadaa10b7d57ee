#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dinn {

// Thrown when tensor extents do not line up (conv channel mismatch,
// dense width mismatch, checkpoint/model disagreement, ...).
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad run configuration: invalid flag combinations, empty datasets,
// label width vs. domain count mismatch.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// File format / filesystem failures.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Precondition violations on values (non-one-hot labels, probabilities
// outside [0,1], non-scalar loss, ...).
class InvalidArgument : public std::runtime_error {
public:
    explicit InvalidArgument(const std::string& msg) : std::runtime_error(msg) {}
};

// Worker count used by the parallel kernels. 1 selects the serial
// reference path. Reproducibility is guaranteed for a fixed count;
// pure-gather kernels are additionally invariant to it.
int threads();
void set_threads(int n);

// Reads DINN_THREADS from the environment, if set. Returns the resolved
// worker count.
int init_threads_from_env();

}  // namespace dinn
