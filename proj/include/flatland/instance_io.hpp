#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "flatland/scenario.hpp"

namespace flatland {

inline constexpr int kInstanceFormatVersion = 1;

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Text schema (one record per line):
//   flatland-instance 1
//   prng mt19937_64/splitmix64
//   size <width> <height>
//   seed <u64>
//   tmax <timestep>
//   malfunction <lambda> <min_duration> <max_duration>
//   grid
//   <height lines of width 4-digit hex transition masks>
//   cities <n>
//   <arrival x> <arrival y> <departure x> <departure y>      (n lines)
//   trains <m>
//   <id> <start x> <start y> <N|E|S|W> <goal x> <goal y> <cmax> <edt> <eat>   (m lines)
//   end
void write_instance(std::ostream& out, const Instance& instance);
// Structural parse only; throws ParseError.
Instance read_instance(std::istream& in);

void save_instance(const Instance& instance, const std::filesystem::path& path);
// Parses and validates; throws ParseError or ScenarioError (listing every violation).
Instance load_instance(const std::filesystem::path& path);

// Sidecar "flatland-malfunctions 1" followed by "<agent> <start> <duration>" lines.
void write_schedule(std::ostream& out, const MalfunctionSchedule& schedule);
MalfunctionSchedule read_schedule(std::istream& in, int agents);

}  // namespace flatland
