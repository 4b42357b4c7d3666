#pragma once

#include "qprecon/solvers.hpp"
#include "qprecon/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace qprecon::io {

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Matrix Market "coordinate real general" with 1-based indices. Values are
/// written as shortest round-trip decimals, so write/read is bit exact.
void write_matrix_market(const std::filesystem::path& path, const SparseCoord& m);
SparseCoord read_matrix_market(const std::filesystem::path& path);

/// Dense matrices as CSV (one line per row, shortest round-trip values).
void write_dense_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_dense_csv(const std::filesystem::path& path);

/// Dense matrices as raw little-endian binary: an 8-byte magic, uint32 rows,
/// uint32 cols, then column-major doubles.
void write_dense_binary(const std::filesystem::path& path, const Matrix& m);
Matrix read_dense_binary(const std::filesystem::path& path);

/// Solver trace as CSV with the fixed header
/// iter,seconds,objective,gradnorm,recovery_error,test_rmse,stepsize,backtracks,ss,sy,yy
/// (empty fields where a column does not apply).
void write_trace_csv(const std::filesystem::path& path, const std::vector<solvers::TraceRecord>& trace);

/// Shortest decimal that parses back to exactly the same double.
std::string format_double(double v);

}  // namespace qprecon::io
