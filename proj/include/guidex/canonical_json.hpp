#pragma once

// Canonical text form shared by every emitted file: compact, keys in
// insertion order, numbers in shortest round-trip decimal.

#include <string>

#include <json.hpp>

namespace guidex {

using Json = nlohmann::ordered_json;

/// Shortest decimal that parses back to exactly `value`. Integral values
/// print without a fraction; negative zero prints as "0".
std::string format_number(double value);

/// Compact canonical serialization of `value`.
std::string canonical_dump(const Json& value);

}  // namespace guidex
