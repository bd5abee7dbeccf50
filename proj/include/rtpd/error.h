// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace rtpd {

// Precondition violation on a public operation (bad shapes, bad ranges).
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// An ArchSpec whose layer geometry cannot be realised.
class InvalidArchitecture : public std::invalid_argument {
public:
    explicit InvalidArchitecture(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed or inconsistent experiment configuration. `path` names the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& what)
        : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

// Percent-of-teacher requested where the (shifted) teacher score is not positive.
class UndefinedPercentage : public std::domain_error {
public:
    explicit UndefinedPercentage(const std::string& what) : std::domain_error(what) {}
};

} // namespace rtpd
