#pragma once

#include <stdexcept>
#include <string>

namespace fcc {

// Caller broke a documented precondition (bad shape, nonpositive tolerance,
// unsupported norm, ...). These indicate bugs at the call site, not bad data.
class contract_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Serialized input (model file, IDX file, CSV, JSON config) is malformed.
// Carries the byte offset where reading failed when one is known.
class parse_error : public std::runtime_error {
public:
    explicit parse_error(const std::string& what, long long byte_offset = -1)
        : std::runtime_error(byte_offset >= 0
                                 ? what + " (byte offset " + std::to_string(byte_offset) + ")"
                                 : what),
          offset_(byte_offset) {}

    long long byte_offset() const noexcept { return offset_; }

private:
    long long offset_;
};

// File declares a format revision (or magic string) this build does not know.
class version_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A NaN or Inf reached a boundary that must stay finite.
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace fcc
