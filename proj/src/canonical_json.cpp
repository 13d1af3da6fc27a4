#include "guidex/canonical_json.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace guidex {

std::string format_number(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("non-finite number in canonical output");
  if (value == 0.0) return "0";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

namespace {

void dump_into(const Json& value, std::string& out) {
  switch (value.type()) {
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [key, item] : value.items()) {
        if (!first) out += ',';
        first = false;
        out += Json(key).dump();
        out += ':';
        dump_into(item, out);
      }
      out += '}';
      break;
    }
    case Json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (i) out += ',';
        dump_into(value[i], out);
      }
      out += ']';
      break;
    }
    case Json::value_t::number_float:
      out += format_number(value.get<double>());
      break;
    default:
      // Strings, booleans, null and integers already dump canonically.
      out += value.dump();
      break;
  }
}

}  // namespace

std::string canonical_dump(const Json& value) {
  std::string out;
  dump_into(value, out);
  return out;
}

}  // namespace guidex
