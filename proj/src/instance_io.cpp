#include "flatland/instance_io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include "flatland/rng.hpp"
#include "text_reader.hpp"

namespace flatland {

void write_instance(std::ostream& out, const Instance& inst) {
  const RailMap& map = inst.map;
  char buf[64];
  out << "flatland-instance " << kInstanceFormatVersion << '\n';
  out << "prng " << Rng::kName << '\n';
  out << "size " << map.width() << ' ' << map.height() << '\n';
  out << "seed " << inst.seed << '\n';
  out << "tmax " << inst.tmax << '\n';
  std::snprintf(buf, sizeof buf, "%.17g", inst.malfunction.rate);
  out << "malfunction " << buf << ' ' << inst.malfunction.min_duration << ' '
      << inst.malfunction.max_duration << '\n';
  out << "grid\n";
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      std::snprintf(buf, sizeof buf, "%04x", map.at(Cell{x, y}).mask());
      if (x) out << ' ';
      out << buf;
    }
    out << '\n';
  }
  out << "cities " << map.cities().size() << '\n';
  for (const City& c : map.cities())
    out << c.arrival.x << ' ' << c.arrival.y << ' ' << c.departure.x << ' ' << c.departure.y << '\n';
  out << "trains " << inst.trains.size() << '\n';
  for (const TrainSpec& t : inst.trains)
    out << t.id << ' ' << t.start.x << ' ' << t.start.y << ' ' << orientation_char(t.initial_orientation)
        << ' ' << t.goal.x << ' ' << t.goal.y << ' ' << t.cmax << ' ' << t.edt << ' ' << t.eat << '\n';
  out << "end\n";
}

Instance read_instance(std::istream& in) {
  detail::LineReader r(in);
  auto header = r.expect("flatland-instance", 1);
  if (r.number<int>(header[1], "version") != kInstanceFormatVersion)
    throw ParseError(r.line(), "unsupported instance version " + header[1]);
  auto prng = r.expect("prng", 1);
  if (prng[1] != Rng::kName) throw ParseError(r.line(), "unknown prng '" + prng[1] + "'");
  auto size = r.expect("size", 2);
  const int w = r.number<int>(size[1], "width");
  const int h = r.number<int>(size[2], "height");
  if (w <= 0 || h <= 0 || w > 4096 || h > 4096) throw ParseError(r.line(), "field 'size': out of range");

  Instance inst;
  inst.seed = r.number<std::uint64_t>(r.expect("seed", 1)[1], "seed");
  inst.tmax = r.number<int>(r.expect("tmax", 1)[1], "tmax");
  auto mal = r.expect("malfunction", 3);
  inst.malfunction.rate = r.real(mal[1], "lambda");
  inst.malfunction.min_duration = r.number<int>(mal[2], "min");
  inst.malfunction.max_duration = r.number<int>(mal[3], "max");

  r.expect("grid", 0);
  inst.map = RailMap(w, h);
  for (int y = 0; y < h; ++y) {
    auto row = r.next("grid row");
    if (static_cast<int>(row.size()) != w)
      throw ParseError(r.line(), "field 'grid': expected " + std::to_string(w) + " cells");
    for (int x = 0; x < w; ++x) {
      const std::string& tok = row[static_cast<std::size_t>(x)];
      unsigned mask = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), mask, 16);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || mask > 0xffff)
        throw ParseError(r.line(), "field 'grid': bad transition mask '" + tok + "'");
      inst.map.set({x, y}, Transitions(static_cast<std::uint16_t>(mask)));
    }
  }

  const int n = r.number<int>(r.expect("cities", 1)[1], "cities");
  if (n < 0) throw ParseError(r.line(), "field 'cities': negative count");
  for (int i = 0; i < n; ++i) {
    auto c = r.next("city");
    if (c.size() != 4) throw ParseError(r.line(), "field 'city': expected 4 coordinates");
    inst.map.cities().push_back({{r.number<int>(c[0], "arrival x"), r.number<int>(c[1], "arrival y")},
                                 {r.number<int>(c[2], "departure x"), r.number<int>(c[3], "departure y")}});
  }

  const int m = r.number<int>(r.expect("trains", 1)[1], "trains");
  if (m < 0) throw ParseError(r.line(), "field 'trains': negative count");
  for (int i = 0; i < m; ++i) {
    auto t = r.next("train");
    if (t.size() != 9) throw ParseError(r.line(), "field 'train': expected 9 fields");
    TrainSpec spec;
    spec.id = r.number<int>(t[0], "id");
    spec.start = {r.number<int>(t[1], "start x"), r.number<int>(t[2], "start y")};
    auto o = parse_orientation(t[3]);
    if (!o) throw ParseError(r.line(), "field 'orientation': expected N, E, S or W");
    spec.initial_orientation = *o;
    spec.goal = {r.number<int>(t[4], "goal x"), r.number<int>(t[5], "goal y")};
    spec.cmax = r.number<int>(t[6], "cmax");
    spec.edt = r.number<int>(t[7], "edt");
    spec.eat = r.number<int>(t[8], "eat");
    inst.trains.push_back(spec);
  }
  r.expect("end", 0);
  return inst;
}

void save_instance(const Instance& instance, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_instance(out, instance);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Instance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Instance inst = read_instance(in);
  auto errors = validate_instance(inst);
  if (!errors.empty()) {
    std::string msg = "invalid instance " + path.string() + ":";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ScenarioError(msg);
  }
  return inst;
}

void write_schedule(std::ostream& out, const MalfunctionSchedule& schedule) {
  out << "flatland-malfunctions 1\n";
  for (const auto& events : schedule)
    for (const MalfunctionEvent& e : events) out << e.agent << ' ' << e.start << ' ' << e.duration << '\n';
}

MalfunctionSchedule read_schedule(std::istream& in, int agents) {
  MalfunctionSchedule schedule(static_cast<std::size_t>(agents));
  std::string header;
  int line = 1;
  if (!std::getline(in, header) || header != "flatland-malfunctions 1")
    throw ParseError(line, "expected 'flatland-malfunctions 1'");
  for (std::string raw; std::getline(in, raw);) {
    ++line;
    if (raw.empty()) continue;
    std::istringstream ss(raw);
    MalfunctionEvent e;
    if (!(ss >> e.agent >> e.start >> e.duration) || e.agent < 0 || e.agent >= agents || e.duration < 1)
      throw ParseError(line, "bad malfunction record");
    auto& list = schedule[static_cast<std::size_t>(e.agent)];
    if (!list.empty() && list.back().start + list.back().duration > e.start)
      throw ParseError(line, "overlapping or unordered malfunction");
    list.push_back(e);
  }
  return schedule;
}

}  // namespace flatland
