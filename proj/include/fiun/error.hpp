// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace fiun {

enum class Status {
    ok = 0,
    param_error = 1,
    invariant_error = 2,
    config_error = 3,
    io_error = 4,
    internal_error = 5,
};

const char* status_name(Status s);

class Error : public std::runtime_error {
public:
    Error(Status status, const std::string& msg) : std::runtime_error(msg), status_(status) {}
    Status status() const { return status_; }

private:
    Status status_;
};

class ParamError : public Error {
public:
    explicit ParamError(const std::string& msg) : Error(Status::param_error, msg) {}
};

class InvariantError : public Error {
public:
    explicit InvariantError(const std::string& msg) : Error(Status::invariant_error, msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(Status::config_error, msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(Status::io_error, msg) {}
};

} // namespace fiun
