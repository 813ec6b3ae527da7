#include "mvlab/toml.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace mvlab::toml {

namespace {

using nlohmann::json;

struct Cursor {
  const std::string& text;
  size_t pos = 0;
  int line = 1;
  int col = 1;

  bool done() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  char take() {
    const char c = text[pos++];
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    return c;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line, col); }

  void skip_ws_inline() {
    while (!done() && (peek() == ' ' || peek() == '\t')) take();
  }
  void skip_to_eol() {
    while (!done() && peek() != '\n') take();
    if (!done()) take();
  }
  void expect_eol() {
    skip_ws_inline();
    if (done()) return;
    if (peek() == '#') {
      skip_to_eol();
      return;
    }
    if (peek() == '\r') take();
    if (done()) return;
    if (peek() != '\n') fail("unexpected trailing content");
    take();
  }
};

bool is_bare(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

std::string parse_key_part(Cursor& cur) {
  std::string key;
  while (!cur.done() && is_bare(cur.peek())) key += cur.take();
  if (key.empty()) cur.fail("expected a key");
  return key;
}

std::vector<std::string> parse_dotted_key(Cursor& cur) {
  std::vector<std::string> parts{parse_key_part(cur)};
  while (!cur.done() && cur.peek() == '.') {
    cur.take();
    parts.push_back(parse_key_part(cur));
  }
  return parts;
}

std::string parse_string(Cursor& cur) {
  cur.take();  // opening quote
  std::string out;
  while (true) {
    if (cur.done()) cur.fail("unterminated string");
    const char c = cur.take();
    if (c == '"') break;
    if (c == '\n') cur.fail("newline in string");
    if (c == '\\') {
      if (cur.done()) cur.fail("dangling escape");
      const char e = cur.take();
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: cur.fail(std::string("unsupported escape \\") + e);
      }
    } else {
      out += c;
    }
  }
  return out;
}

json parse_scalar(Cursor& cur) {
  if (cur.peek() == '"') return parse_string(cur);
  std::string tok;
  while (!cur.done() && cur.peek() != ',' && cur.peek() != ']' && cur.peek() != '#' &&
         cur.peek() != '\n' && cur.peek() != '\r' && cur.peek() != ' ' && cur.peek() != '\t')
    tok += cur.take();
  if (tok == "true") return true;
  if (tok == "false") return false;
  if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
  if (tok == "-inf") return -std::numeric_limits<double>::infinity();
  if (tok.empty()) cur.fail("expected a value");
  try {
    size_t used = 0;
    if (tok.find_first_of(".eE") == std::string::npos && tok != "-" && tok != "+") {
      const long long v = std::stoll(tok, &used);
      if (used == tok.size()) return v;
    }
    used = 0;
    const double v = std::stod(tok, &used);
    if (used == tok.size()) return v;
  } catch (const std::exception&) {
  }
  cur.fail("cannot parse value '" + tok + "'");
}

json parse_value(Cursor& cur) {
  cur.skip_ws_inline();
  if (cur.done()) cur.fail("expected a value");
  if (cur.peek() == '[') {
    cur.take();
    json arr = json::array();
    while (true) {
      cur.skip_ws_inline();
      if (cur.done()) cur.fail("unterminated array");
      if (cur.peek() == ']') {
        cur.take();
        break;
      }
      arr.push_back(parse_value(cur));
      cur.skip_ws_inline();
      if (!cur.done() && cur.peek() == ',') {
        cur.take();
        continue;
      }
      if (!cur.done() && cur.peek() == ']') {
        cur.take();
        break;
      }
      cur.fail("expected ',' or ']' in array");
    }
    return arr;
  }
  return parse_scalar(cur);
}

json* descend(json& root, const std::vector<std::string>& path, Cursor& cur) {
  json* node = &root;
  for (const auto& part : path) {
    if (!node->is_object()) cur.fail("key path collides with a scalar: " + part);
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
  }
  return node;
}

}  // namespace

nlohmann::json parse(const std::string& text) {
  json root = json::object();
  Cursor cur{text};
  json* table = &root;
  while (!cur.done()) {
    cur.skip_ws_inline();
    if (cur.done()) break;
    const char c = cur.peek();
    if (c == '\n' || c == '\r') {
      cur.take();
      continue;
    }
    if (c == '#') {
      cur.skip_to_eol();
      continue;
    }
    if (c == '[') {
      cur.take();
      if (!cur.done() && cur.peek() == '[') cur.fail("arrays of tables are not supported");
      const auto path = parse_dotted_key(cur);
      if (cur.done() || cur.peek() != ']') cur.fail("expected ']' after table name");
      cur.take();
      table = descend(root, path, cur);
      if (!table->is_object()) cur.fail("table name collides with a value");
      cur.expect_eol();
      continue;
    }
    const auto path = parse_dotted_key(cur);
    cur.skip_ws_inline();
    if (cur.done() || cur.peek() != '=') cur.fail("expected '=' after key");
    cur.take();
    const json value = parse_value(cur);
    json* node = table;
    for (size_t i = 0; i + 1 < path.size(); ++i) {
      node = &(*node)[path[i]];
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) cur.fail("key path collides with a value: " + path[i]);
    }
    if (node->contains(path.back())) cur.fail("duplicate key '" + path.back() + "'");
    (*node)[path.back()] = value;
    cur.expect_eol();
  }
  return root;
}

namespace {

void dump_scalar(std::ostream& os, const json& v) {
  if (v.is_string()) {
    os << '"';
    for (const char c : v.get<std::string>()) {
      switch (c) {
        case '"': os << "\\\""; break;
        case '\\': os << "\\\\"; break;
        case '\n': os << "\\n"; break;
        case '\t': os << "\\t"; break;
        default: os << c;
      }
    }
    os << '"';
  } else if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isinf(d)) {
      os << (d > 0 ? "inf" : "-inf");
    } else {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", d);
      os << buf;
      if (std::string(buf).find_first_of(".eEin") == std::string::npos) os << ".0";
    }
  } else {
    os << v.dump();
  }
}

void dump_table(std::ostream& os, const json& obj, const std::string& prefix) {
  for (const auto& [k, v] : obj.items()) {
    if (v.is_object()) continue;
    os << k << " = ";
    if (v.is_array()) {
      os << '[';
      for (size_t i = 0; i < v.size(); ++i) {
        if (i) os << ", ";
        dump_scalar(os, v[i]);
      }
      os << ']';
    } else {
      dump_scalar(os, v);
    }
    os << '\n';
  }
  for (const auto& [k, v] : obj.items()) {
    if (!v.is_object()) continue;
    const std::string path = prefix.empty() ? k : prefix + "." + k;
    os << "\n[" << path << "]\n";
    dump_table(os, v, path);
  }
}

}  // namespace

std::string dump(const nlohmann::json& obj) {
  std::ostringstream os;
  dump_table(os, obj, "");
  return os.str();
}

}  // namespace mvlab::toml
