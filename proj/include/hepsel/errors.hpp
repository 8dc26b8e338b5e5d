#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hepsel {

// Base for every data error raised by the library. The CLI maps these to
// exit code 2; anything else is a bug or a usage error.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class malformed_trace_error : public error {
public:
    using error::error;
};

class parse_error : public error {
public:
    parse_error(std::size_t line, const std::string & what)
        : error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class duplicate_key_error : public error {
public:
    using error::error;
};

class no_centroid_error : public error {
public:
    using error::error;
};

class empty_pool_error : public error {
public:
    using error::error;
};

class unsupported_payload_error : public error {
public:
    using error::error;
};

class missing_label_error : public error {
public:
    using error::error;
};

class infeasible_n_error : public error {
public:
    using error::error;
};

class spec_error : public error {
public:
    using error::error;
};

class io_error : public error {
public:
    using error::error;
};

} // namespace hepsel
