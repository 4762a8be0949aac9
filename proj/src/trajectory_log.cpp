#include <fstream>
#include <istream>
#include <ostream>

#include "sensorimotor/episode.hpp"
#include "sensorimotor/text_io.hpp"

namespace sensorimotor {

namespace {

std::string header(Eigen::Index n, Eigen::Index m) {
  std::string h = "step";
  for (Eigen::Index i = 0; i < n; ++i) h += ",x" + std::to_string(i);
  for (Eigen::Index i = 0; i < n; ++i) h += ",u" + std::to_string(i);
  for (Eigen::Index i = 0; i < m; ++i) h += ",y" + std::to_string(i);
  h += ",err_norm,cost_J,diag";
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) h += ",a_" + std::to_string(r) + "_" + std::to_string(c);
  }
  h += ",boundary_flag";
  return h;
}

}  // namespace

void write_csv(std::ostream& out, const TrajectoryLog& log) {
  out << header(log.n, log.m) << '\n';
  for (const auto& row : log.rows) {
    if (row.x.size() != log.n || row.u.size() != log.n || row.y.size() != log.m ||
        row.A.rows() != log.m || row.A.cols() != log.n) {
      throw ContractError("write_csv: row " + std::to_string(row.step) + " has inconsistent dimensions");
    }
    out << row.step;
    for (Eigen::Index i = 0; i < log.n; ++i) out << ',' << format_double(row.x(i));
    for (Eigen::Index i = 0; i < log.n; ++i) out << ',' << format_double(row.u(i));
    for (Eigen::Index i = 0; i < log.m; ++i) out << ',' << format_double(row.y(i));
    out << ',' << format_double(row.err_norm) << ',' << format_double(row.cost_J) << ','
        << format_double(row.diag);
    for (Eigen::Index r = 0; r < log.m; ++r) {
      for (Eigen::Index c = 0; c < log.n; ++c) out << ',' << format_double(row.A(r, c));
    }
    out << ',' << (row.boundary ? 1 : 0) << '\n';
  }
}

TrajectoryLog read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("read_csv: missing header");
  TrajectoryLog log;
  for (auto name : split(line, ',')) {
    if (name.size() > 1 && name[0] == 'x' && name[1] != '_') ++log.n;
    if (name.size() > 1 && name[0] == 'y') ++log.m;
  }
  if (line != header(log.n, log.m)) throw InvalidInput("read_csv: unrecognised header");
  const std::size_t width = static_cast<std::size_t>(1 + 2 * log.n + log.m + 3 + log.m * log.n + 1);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != width) throw InvalidInput("read_csv: row has the wrong number of cells");
    std::size_t c = 0;
    auto take = [&](Eigen::Index count) {
      Vector v(count);
      for (Eigen::Index i = 0; i < count; ++i) v(i) = parse_double(cells[c++]);
      return v;
    };
    LogRow row;
    row.step = static_cast<int>(parse_double(cells[c++]));
    row.x = take(log.n);
    row.u = take(log.n);
    row.y = take(log.m);
    row.err_norm = parse_double(cells[c++]);
    row.cost_J = parse_double(cells[c++]);
    row.diag = parse_double(cells[c++]);
    row.A.resize(log.m, log.n);
    for (Eigen::Index r = 0; r < log.m; ++r) {
      for (Eigen::Index k = 0; k < log.n; ++k) row.A(r, k) = parse_double(cells[c++]);
    }
    const auto flag = cells[c++];
    if (flag != "0" && flag != "1") throw InvalidInput("read_csv: boundary_flag must be 0 or 1");
    row.boundary = flag == "1";
    log.rows.push_back(std::move(row));
  }
  if (!log.rows.empty()) log.steps = log.rows.back().step;
  return log;
}

void export_csv(const TrajectoryLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError(path, "cannot open CSV for writing");
  write_csv(out, log);
  out.flush();
  if (!out) throw FileError(path, "failed writing CSV");
}

TrajectoryLog import_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError(path, "cannot open CSV");
  return read_csv(in);
}

}  // namespace sensorimotor
