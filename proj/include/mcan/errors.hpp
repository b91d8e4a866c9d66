// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mcan {

// Shape/dimension mismatches between tensors or against an op contract.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error("shape error: " + msg) {}
};

// Bad argument values (negative sigma, labels outside {0,1}, count < 2, ...).
struct ValueError : std::runtime_error {
    explicit ValueError(const std::string& msg) : std::runtime_error("value error: " + msg) {}
};

// Input outside a function's mathematical domain (mask value outside [0,1]).
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error("domain error: " + msg) {}
};

// Attribute or axis index out of range.
struct IndexError : std::runtime_error {
    explicit IndexError(const std::string& msg) : std::runtime_error("index error: " + msg) {}
};

// Operation requested on a component disabled by configuration.
struct DisabledError : std::logic_error {
    explicit DisabledError(const std::string& msg) : std::logic_error("disabled: " + msg) {}
};

// File-format violations (attribute files, image headers), with location when known.
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error("format error: " + msg) {}
};

// Filesystem read/write failures.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error("io error: " + msg) {}
};

// Non-finite values where the training contract requires finite ones.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error("numeric error: " + msg) {}
};

// Checkpoint loading failures, one type per failure class so callers can
// distinguish an incompatible file from a damaged one.
struct CheckpointVersionError : std::runtime_error {
    explicit CheckpointVersionError(const std::string& msg)
        : std::runtime_error("checkpoint version error: " + msg) {}
};
struct CheckpointTruncatedError : std::runtime_error {
    explicit CheckpointTruncatedError(const std::string& msg)
        : std::runtime_error("checkpoint truncated: " + msg) {}
};
struct CheckpointChecksumError : std::runtime_error {
    explicit CheckpointChecksumError(const std::string& msg)
        : std::runtime_error("checkpoint checksum error: " + msg) {}
};

}  // namespace mcan
