// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tiersplit {

enum class ErrorCode {
    parse,
    cycle,
    unreachable,
    missing_parameter,
    invalid_dimension,
    non_integral_shape,
    shape_mismatch,
    unknown_vertex,
    incomplete_assignment,
    size_guard,
    invalid_tile,
    grid_too_fine,
    missing_profile,
    invalid_bandwidth,
    invalid_scenario,
    verification_failed,
};

std::string_view to_string(ErrorCode code);

/// Single exception type used across the library. The code lets callers (the
/// CLI in particular) map failures onto exit statuses without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace tiersplit
