#include "minhash/sparse.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace minhash {

namespace {

std::string loc(const std::string& path, std::int64_t line) {
  return path + ":" + std::to_string(line) + ": ";
}

bool parse_i64(std::string_view s, std::int64_t& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

bool parse_f64(std::string_view s, double& out) {
  if (s.empty()) return false;
  std::string tmp(s);
  char* end = nullptr;
  out = std::strtod(tmp.c_str(), &end);
  return end == tmp.c_str() + tmp.size();
}

}  // namespace

double SparseMatrix::at(std::int64_t i, std::int64_t k) const {
  const auto cols = row_cols(i);
  const auto it = std::lower_bound(cols.begin(), cols.end(),
                                   static_cast<std::int32_t>(k));
  if (it == cols.end() || *it != k) return 0.0;
  return values[row_offsets[i] + (it - cols.begin())];
}

bool SparseMatrix::is_binary() const {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return v == 1.0; });
}

double SparseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

Eigen::VectorXd SparseMatrix::multiply(const Eigen::VectorXd& x) const {
  if (x.size() != n_cols)
    throw std::invalid_argument("multiply: vector length mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_rows);
  for (std::int64_t i = 0; i < n_rows; ++i) {
    double acc = 0.0;
    for (std::int64_t j = row_offsets[i]; j < row_offsets[i + 1]; ++j)
      acc += values[j] * x[col_indices[j]];
    out[i] = acc;
  }
  return out;
}

Eigen::MatrixXd SparseMatrix::dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_rows, n_cols);
  for (std::int64_t i = 0; i < n_rows; ++i)
    for (std::int64_t j = row_offsets[i]; j < row_offsets[i + 1]; ++j)
      out(i, col_indices[j]) = values[j];
  return out;
}

Eigen::VectorXd SparseMatrix::col_sq_norms() const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_cols);
  for (std::size_t j = 0; j < values.size(); ++j)
    out[col_indices[j]] += values[j] * values[j];
  return out;
}

SparseMatrix SparseMatrix::without_column(std::int64_t k) const {
  SparseBuilder b;
  for (std::int64_t i = 0; i < n_rows; ++i) {
    std::vector<std::int32_t> cols;
    std::vector<double> vals;
    for (std::int64_t j = row_offsets[i]; j < row_offsets[i + 1]; ++j) {
      if (col_indices[j] == k) continue;
      cols.push_back(col_indices[j]);
      vals.push_back(values[j]);
    }
    b.add_row(std::move(cols), std::move(vals));
  }
  return b.build(n_cols);
}

void SparseMatrix::validate() const {
  if (n_rows < 0 || n_cols < 0)
    throw std::invalid_argument("sparse matrix: negative dimensions");
  if (row_offsets.size() != static_cast<std::size_t>(n_rows) + 1)
    throw std::invalid_argument("sparse matrix: row_offsets length");
  if (row_offsets.front() != 0 ||
      row_offsets.back() != static_cast<std::int64_t>(values.size()))
    throw std::invalid_argument("sparse matrix: row_offsets endpoints");
  if (col_indices.size() != values.size())
    throw std::invalid_argument("sparse matrix: col/value length mismatch");
  for (std::int64_t i = 0; i < n_rows; ++i) {
    if (row_offsets[i] > row_offsets[i + 1])
      throw std::invalid_argument("sparse matrix: row_offsets not monotone");
    for (std::int64_t j = row_offsets[i]; j < row_offsets[i + 1]; ++j) {
      if (col_indices[j] < 0 || col_indices[j] >= n_cols)
        throw std::invalid_argument("sparse matrix: column index out of range");
      if (j > row_offsets[i] && col_indices[j] <= col_indices[j - 1])
        throw std::invalid_argument(
            "sparse matrix: column indices not strictly increasing");
      if (values[j] == 0.0 || !std::isfinite(values[j]))
        throw std::invalid_argument("sparse matrix: zero or non-finite value");
    }
  }
}

void SparseBuilder::add_row(std::vector<std::int32_t> cols,
                            std::vector<double> vals) {
  if (cols.size() != vals.size())
    throw std::invalid_argument("add_row: cols/vals length mismatch");
  rows_.push_back({std::move(cols), std::move(vals)});
}

SparseMatrix SparseBuilder::build(std::int64_t n_cols) {
  SparseMatrix m;
  m.n_rows = rows();
  m.n_cols = n_cols;
  m.row_offsets.reserve(rows_.size() + 1);
  m.row_offsets.push_back(0);
  for (auto& r : rows_) {
    m.col_indices.insert(m.col_indices.end(), r.cols.begin(), r.cols.end());
    m.values.insert(m.values.end(), r.vals.begin(), r.vals.end());
    m.row_offsets.push_back(static_cast<std::int64_t>(m.values.size()));
  }
  rows_.clear();
  m.validate();
  return m;
}

SvmlightData read_svmlight(const std::string& path, bool rescale) {
  std::ifstream in(path);
  if (!in) throw format_error("cannot open " + path);

  SparseBuilder builder;
  std::vector<double> labels;
  std::int64_t max_col = 0;
  double max_abs = 0.0;
  std::string line;
  std::int64_t lineno = 0;

  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ss(line);
    std::string tok;
    if (!(ss >> tok)) continue;  // blank line

    double label;
    if (!parse_f64(tok, label))
      throw format_error(loc(path, lineno) + "malformed label '" + tok + "'");
    labels.push_back(label);

    std::vector<std::int32_t> cols;
    std::vector<double> vals;
    std::int64_t prev = 0;
    while (ss >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw format_error(loc(path, lineno) + "expected idx:val, got '" + tok +
                           "'");
      std::int64_t idx;
      double val;
      if (!parse_i64(std::string_view(tok).substr(0, colon), idx) ||
          !parse_f64(std::string_view(tok).substr(colon + 1), val))
        throw format_error(loc(path, lineno) + "malformed feature '" + tok +
                           "'");
      if (idx < 1)
        throw format_error(loc(path, lineno) + "indices are 1-based");
      if (idx <= prev)
        throw format_error(loc(path, lineno) + "non-increasing index " +
                           std::to_string(idx));
      if (val == 0.0)
        throw format_error(loc(path, lineno) +
                           "explicit zero value at index " +
                           std::to_string(idx));
      prev = idx;
      cols.push_back(static_cast<std::int32_t>(idx - 1));
      vals.push_back(val);
      max_col = std::max(max_col, idx);
      max_abs = std::max(max_abs, std::abs(val));
    }
    builder.add_row(std::move(cols), std::move(vals));
  }
  if (labels.empty()) throw format_error(path + ": no rows");

  SvmlightData out;
  out.X = builder.build(max_col);
  if (max_abs > 1.0) {
    if (!rescale)
      throw format_error(path + ": |value| > 1 (max " +
                         std::to_string(max_abs) +
                         "); pass rescale to divide by the maximum");
    out.scale = max_abs;
    for (double& v : out.X.values) v /= max_abs;
  }
  out.y = Eigen::Map<const Eigen::VectorXd>(
      labels.data(), static_cast<Eigen::Index>(labels.size()));
  return out;
}

void write_svmlight(const std::string& path, const SparseMatrix& X,
                    const Eigen::VectorXd& y) {
  if (y.size() != X.n_rows)
    throw std::invalid_argument("write_svmlight: label length mismatch");
  std::ofstream out(path);
  if (!out) throw format_error("cannot write " + path);
  out.precision(std::numeric_limits<double>::max_digits10);
  for (std::int64_t i = 0; i < X.n_rows; ++i) {
    out << y[i];
    const auto cols = X.row_cols(i);
    const auto vals = X.row_vals(i);
    for (std::size_t j = 0; j < cols.size(); ++j)
      out << ' ' << (cols[j] + 1) << ':' << vals[j];
    out << '\n';
  }
}

namespace {

constexpr char kSparseMagic[8] = {'M', 'H', 'S', 'M', '0', '0', '0', '1'};

template <class T>
void write_raw(std::ofstream& out, const T* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * sizeof(T)));
}

template <class T>
void read_raw(std::ifstream& in, T* data, std::size_t count) {
  in.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(count * sizeof(T)));
  if (!in) throw format_error("binary container truncated");
}

}  // namespace

void write_sparse(const std::string& path, const SparseMatrix& X) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw format_error("cannot write " + path);
  out.write(kSparseMagic, sizeof(kSparseMagic));
  const std::uint64_t dims[3] = {static_cast<std::uint64_t>(X.n_rows),
                                 static_cast<std::uint64_t>(X.n_cols),
                                 static_cast<std::uint64_t>(X.nnz())};
  write_raw(out, dims, 3);
  write_raw(out, X.row_offsets.data(), X.row_offsets.size());
  write_raw(out, X.col_indices.data(), X.col_indices.size());
  write_raw(out, X.values.data(), X.values.size());
  if (!out) throw format_error("write failed: " + path);
}

SparseMatrix read_sparse(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw format_error("cannot open " + path);
  char magic[8];
  read_raw(in, magic, 8);
  if (std::memcmp(magic, kSparseMagic, 8) != 0)
    throw format_error(path + ": not a sparse container");
  std::uint64_t dims[3];
  read_raw(in, dims, 3);
  SparseMatrix X;
  X.n_rows = static_cast<std::int64_t>(dims[0]);
  X.n_cols = static_cast<std::int64_t>(dims[1]);
  X.row_offsets.resize(dims[0] + 1);
  X.col_indices.resize(dims[2]);
  X.values.resize(dims[2]);
  read_raw(in, X.row_offsets.data(), X.row_offsets.size());
  read_raw(in, X.col_indices.data(), X.col_indices.size());
  read_raw(in, X.values.data(), X.values.size());
  X.validate();
  return X;
}

SparsityProfile sparsity_profile(const SparseMatrix& X,
                                 const Eigen::VectorXd* signal) {
  if (X.n_rows < 1) throw std::invalid_argument("sparsity_profile: n >= 1");
  if (signal && signal->size() != X.n_rows)
    throw std::invalid_argument("sparsity_profile: signal length mismatch");

  SparsityProfile p;
  p.q_per_row.resize(X.n_rows);
  p.delta_per_row.resize(X.n_rows);
  p.q_min = std::numeric_limits<std::int64_t>::max();
  std::int64_t total = 0;
  for (std::int64_t i = 0; i < X.n_rows; ++i) {
    const std::int64_t q = X.row_nnz(i);
    p.q_per_row[i] = q;
    p.delta_per_row[i] = static_cast<double>(q) / static_cast<double>(X.n_cols);
    p.q_max = std::max(p.q_max, q);
    p.q_min = std::min(p.q_min, q);
    total += q;
    if (q == 0) p.has_empty_rows = true;
  }
  p.delta_bar = static_cast<double>(total) /
                (static_cast<double>(X.n_rows) * static_cast<double>(X.n_cols));

  if (signal) {
    p.has_signal = true;
    const double ss = signal->squaredNorm();
    if (ss > 0.0) {
      double acc = 0.0;
      for (std::int64_t i = 0; i < X.n_rows; ++i) {
        const double d = p.delta_per_row[i] - p.delta_bar;
        acc += (*signal)[i] * (*signal)[i] * d * d;
      }
      p.v_delta = acc / ss;
    }
  }
  return p;
}

SparseMatrix pad_equal_sparsity(const SparseMatrix& X) {
  if (!X.is_binary())
    throw incompat_error("pad_equal_sparsity requires a binary matrix");
  if (X.n_rows < 1) throw std::invalid_argument("pad_equal_sparsity: n >= 1");

  std::int64_t q_max = 0;
  std::int64_t q_min = std::numeric_limits<std::int64_t>::max();
  for (std::int64_t i = 0; i < X.n_rows; ++i) {
    q_max = std::max(q_max, X.row_nnz(i));
    q_min = std::min(q_min, X.row_nnz(i));
  }
  const std::int64_t extra = q_max - q_min;

  SparseBuilder b;
  for (std::int64_t i = 0; i < X.n_rows; ++i) {
    const auto cols = X.row_cols(i);
    std::vector<std::int32_t> c(cols.begin(), cols.end());
    const std::int64_t need = q_max - X.row_nnz(i);
    for (std::int64_t d = 0; d < need; ++d)
      c.push_back(static_cast<std::int32_t>(X.n_cols + d));
    b.add_row(std::move(c), std::vector<double>(
                                static_cast<std::size_t>(q_max), 1.0));
  }
  return b.build(X.n_cols + extra);
}

}  // namespace minhash
