#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"

namespace mvlab::toml {

struct ParseError : std::runtime_error {
  int line, column;
  ParseError(const std::string& msg, int l, int c)
      : std::runtime_error("toml parse error at line " + std::to_string(l) + ", column " +
                           std::to_string(c) + ": " + msg),
        line(l),
        column(c) {}
};

// TOML subset: bare/dotted keys, [table] and [table.sub] headers, strings,
// integers, floats, booleans, flat arrays, comments. Everything the run
// configs use; full TOML is out of scope.
nlohmann::json parse(const std::string& text);

// Inverse for config echoing; nested objects become dotted table headers.
std::string dump(const nlohmann::json& obj);

}  // namespace mvlab::toml
