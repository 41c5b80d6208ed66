#include "sensitest/path_io.hpp"

#include "sensitest/serialize.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace sensitest {

void write_path_csv(const ExperimentPath& path, std::ostream& out) {
  json header{{"rule", to_json(path.rule)}, {"seed", to_json(path.seed)}};
  if (uses_noise(path.rule)) header["noise"] = path.noise;
  out << "# " << header.dump() << '\n';
  out << "index,x,y\n";
  for (const auto& t : path.trials) out << t.index << ',' << format_double(t.x) << ',' << t.y << '\n';
}

std::string path_csv(const ExperimentPath& path) {
  std::ostringstream out;
  write_path_csv(path, out);
  return out.str();
}

namespace {

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && (s[start] == ' ' || s[start] == '\t')) ++start;
  return s.substr(start);
}

double parse_double(const std::string& text, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ParseError("line " + std::to_string(line) + ": cannot parse number '" + text + "'");
  }
  return v;
}

}  // namespace

ExperimentPath read_path_csv(std::istream& in) {
  ExperimentPath path{Bruceton{}, {}, {}, {}, {}};
  bool have_header = false;
  bool have_columns = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (have_header || have_columns) continue;
      json header;
      try {
        header = json::parse(line.substr(1));
      } catch (const json::exception& e) {
        throw ParseError("line " + std::to_string(line_no) + ": malformed JSON header: " + e.what());
      }
      try {
        path.rule = rule_from_json(header.at("rule"));
        if (header.contains("seed")) {
          path.seed = {header["seed"].value("master", std::uint64_t{0}), header["seed"].value("stream", std::uint64_t{0})};
        }
        if (header.contains("noise")) path.noise = header["noise"].get<std::vector<double>>();
      } catch (const ValidationError& e) {
        throw ParseError("path header: " + std::string(e.what()));
      } catch (const json::exception& e) {
        throw ParseError("path header: " + std::string(e.what()));
      }
      have_header = true;
      continue;
    }
    if (!have_columns) {
      if (line != "index,x,y") throw ParseError("line " + std::to_string(line_no) + ": expected column header index,x,y");
      have_columns = true;
      continue;
    }
    std::stringstream row(line);
    std::string a, b, c, extra;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c, ',') ||
        std::getline(row, extra, ',')) {
      throw ParseError("line " + std::to_string(line_no) + ": expected three columns");
    }
    Trial t;
    const double index = parse_double(trim(a), line_no);
    t.index = static_cast<std::size_t>(index);
    if (static_cast<double>(t.index) != index || t.index != path.trials.size() + 1) {
      throw ParseError("line " + std::to_string(line_no) + ": trial indices must run 1, 2, 3, ...");
    }
    t.x = parse_double(trim(b), line_no);
    const std::string y = trim(c);
    if (y != "0" && y != "1") throw ParseError("line " + std::to_string(line_no) + ": outcome must be 0 or 1");
    t.y = y == "1" ? 1 : 0;
    path.trials.push_back(t);
  }
  if (!have_columns) throw ParseError("missing column header index,x,y");
  if (!have_header) {
    path.rule = Bruceton{path.trials.empty() ? 0.0 : path.trials.front().x, 1.0};
    path.warnings.emplace_back("no header line: design rule unknown");
  }
  return path;
}

void save_path(const ExperimentPath& path, const std::string& filename) {
  std::ofstream out(filename);
  if (!out) throw std::runtime_error("cannot open '" + filename + "' for writing");
  write_path_csv(path, out);
  if (!out) throw std::runtime_error("write to '" + filename + "' failed");
}

ExperimentPath load_path(const std::string& filename) {
  std::ifstream in(filename);
  if (!in) throw std::runtime_error("cannot open '" + filename + "'");
  return read_path_csv(in);
}

}  // namespace sensitest
