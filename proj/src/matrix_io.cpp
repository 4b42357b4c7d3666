#include "qprecon/matrix_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace qprecon::io {

namespace {

constexpr char kMmHeader[] = "%%MatrixMarket matrix coordinate real general";
constexpr char kBinaryMagic[8] = {'Q', 'P', 'R', 'D', 'N', 'S', 'E', '1'};

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ofstream out(path, mode);
  if (!out) throw ParseError("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ifstream in(path, mode);
  if (!in) throw ParseError("cannot open for reading: " + path.string());
  return in;
}

double parse_double(std::string_view token, const std::filesystem::path& path, long line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size())
    throw ParseError(path.string() + ":" + std::to_string(line) + ": bad numeric value '" +
                     std::string(token) + "'");
  return v;
}

long parse_long(std::string_view token, const std::filesystem::path& path, long line) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size())
    throw ParseError(path.string() + ":" + std::to_string(line) + ": bad integer '" +
                     std::string(token) + "'");
  return v;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

void write_matrix_market(const std::filesystem::path& path, const SparseCoord& m) {
  std::ofstream out = open_out(path);
  out << kMmHeader << "\n";
  out << m.rows() << " " << m.cols() << " " << m.nnz() << "\n";
  for (const auto& t : m.entries())
    out << (t.row + 1) << " " << (t.col + 1) << " " << format_double(t.value) << "\n";
  if (!out) throw ParseError("write failed: " + path.string());
}

SparseCoord read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  long lineno = 0;

  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  ++lineno;
  // Trim trailing CR for files written on other platforms.
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
  if (line != kMmHeader)
    throw ParseError(path.string() + ":1: expected header '" + kMmHeader + "'");

  long rows = -1, cols = -1, nnz = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '%') continue;
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != 3)
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": malformed size line");
    rows = parse_long(tok[0], path, lineno);
    cols = parse_long(tok[1], path, lineno);
    nnz = parse_long(tok[2], path, lineno);
    break;
  }
  if (rows < 1 || cols < 1 || nnz < 0)
    throw ParseError(path.string() + ": missing or invalid size line");

  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(nnz));
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '%') continue;
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != 3)
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected 'i j value'");
    const long i = parse_long(tok[0], path, lineno);
    const long j = parse_long(tok[1], path, lineno);
    const double v = parse_double(tok[2], path, lineno);
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": index (" +
                       std::to_string(i) + "," + std::to_string(j) + ") out of range for " +
                       std::to_string(rows) + "x" + std::to_string(cols));
    entries.push_back({static_cast<int>(i - 1), static_cast<int>(j - 1), v});
  }
  if (static_cast<long>(entries.size()) != nnz)
    throw ParseError(path.string() + ": entry count " + std::to_string(entries.size()) +
                     " does not match declared " + std::to_string(nnz));
  try {
    return SparseCoord(static_cast<int>(rows), static_cast<int>(cols), std::move(entries));
  } catch (const std::invalid_argument& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_dense_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out = open_out(path);
  for (long i = 0; i < m.rows(); ++i) {
    for (long j = 0; j < m.cols(); ++j) {
      if (j) out << ",";
      out << format_double(m(i, j));
    }
    out << "\n";
  }
  if (!out) throw ParseError("write failed: " + path.string());
}

Matrix read_dense_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view tok(line.data() + start,
                                 (comma == std::string::npos ? line.size() : comma) - start);
      row.push_back(parse_double(tok, path, lineno));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path.string() + ": empty matrix");
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

void write_dense_binary(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out = open_out(path, std::ios::binary);
  const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
  const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
  out.write(kBinaryMagic, sizeof(kBinaryMagic));
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!out) throw ParseError("write failed: " + path.string());
}

Matrix read_dense_binary(const std::filesystem::path& path) {
  std::ifstream in = open_in(path, std::ios::binary);
  char magic[8];
  std::uint32_t rows = 0, cols = 0;
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kBinaryMagic, sizeof(magic)) != 0)
    throw ParseError(path.string() + ": bad magic");
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!in || rows == 0 || cols == 0) throw ParseError(path.string() + ": bad header");
  Matrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!in) throw ParseError(path.string() + ": truncated payload");
  return m;
}

void write_trace_csv(const std::filesystem::path& path,
                     const std::vector<solvers::TraceRecord>& trace) {
  std::ofstream out = open_out(path);
  out << "iter,seconds,objective,gradnorm,recovery_error,test_rmse,stepsize,backtracks,ss,sy,yy\n";
  for (const auto& r : trace) {
    out << r.iter << "," << format_double(r.wall_seconds) << "," << format_double(r.objective)
        << "," << format_double(r.grad_norm) << ",";
    if (std::isfinite(r.recovery_error)) out << format_double(r.recovery_error);
    out << ",";
    if (r.test_rmse) out << format_double(*r.test_rmse);
    out << "," << format_double(r.stepsize) << "," << r.backtracks << ",";
    if (r.rbb) out << format_double((*r.rbb)[0]);
    out << ",";
    if (r.rbb) out << format_double((*r.rbb)[1]);
    out << ",";
    if (r.rbb) out << format_double((*r.rbb)[2]);
    out << "\n";
  }
  if (!out) throw ParseError("write failed: " + path.string());
}

}  // namespace qprecon::io
