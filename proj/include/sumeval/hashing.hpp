#pragma once

#include <string>
#include <string_view>

namespace sumeval {

/// Lowercase hex SHA-256 of the bytes of `data`.
std::string sha256_hex(std::string_view data);

/// Current UTC time as ISO-8601 with second precision, e.g. 2024-05-01T12:00:00Z.
std::string utc_now_iso8601();

}  // namespace sumeval
