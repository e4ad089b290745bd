#pragma once

#include <charconv>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "flatland/instance_io.hpp"

namespace flatland::detail {

// Line-oriented tokenizer that reports the offending line number.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  int line() const { return line_; }

  // Next non-empty line split on whitespace; throws at end of input.
  std::vector<std::string> next(const char* expecting) {
    std::string raw;
    while (std::getline(in_, raw)) {
      ++line_;
      std::istringstream ss(raw);
      std::vector<std::string> tokens;
      for (std::string tok; ss >> tok;) tokens.push_back(tok);
      if (!tokens.empty()) return tokens;
    }
    throw ParseError(line_ + 1, std::string("unexpected end of file, expected ") + expecting);
  }

  std::vector<std::string> expect(const char* keyword, std::size_t args) {
    auto tokens = next(keyword);
    if (tokens[0] != keyword)
      throw ParseError(line_, std::string("expected '") + keyword + "', found '" + tokens[0] + "'");
    if (tokens.size() != args + 1)
      throw ParseError(line_, std::string("'") + keyword + "' takes " + std::to_string(args) +
                                  " field(s)");
    return tokens;
  }

  template <class T>
  T number(const std::string& tok, const char* field) const {
    T value{};
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
      throw ParseError(line_, std::string("field '") + field + "': not a number: '" + tok + "'");
    return value;
  }

  double real(const std::string& tok, const char* field) const {
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ParseError(line_, std::string("field '") + field + "': not a number: '" + tok + "'");
    }
  }

 private:
  std::istream& in_;
  int line_ = 0;
};

}  // namespace flatland::detail
