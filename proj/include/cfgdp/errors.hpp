// Copyright (C) 2026 cfgdp contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace cfgdp {

// Non-finite values where finite math was required.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration values (ranges, missing fields, unknown keys).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed on-disk artifacts; carries the byte offset where parsing failed.
struct ParseError : std::runtime_error {
    ParseError(const std::string& what, long long offset)
        : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
          byte_offset(offset) {}
    long long byte_offset;
};

}  // namespace cfgdp
