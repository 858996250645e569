#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "minhash/common.hpp"

namespace minhash {

// Row-major (CSR) sparse matrix. Column indices are 0-based internally and
// strictly increasing within a row; stored values are non-zero. The svmlight
// reader enforces |value| <= 1, the regime the accuracy bounds assume;
// programmatic construction does not, so generators may carry raw draws.
struct SparseMatrix {
  std::int64_t n_rows = 0;
  std::int64_t n_cols = 0;
  std::vector<std::int64_t> row_offsets;  // length n_rows + 1
  std::vector<std::int32_t> col_indices;  // sorted within each row
  std::vector<double> values;

  std::int64_t nnz() const { return static_cast<std::int64_t>(values.size()); }

  std::int64_t row_nnz(std::int64_t i) const {
    return row_offsets[i + 1] - row_offsets[i];
  }

  std::span<const std::int32_t> row_cols(std::int64_t i) const {
    return {col_indices.data() + row_offsets[i],
            static_cast<std::size_t>(row_nnz(i))};
  }

  std::span<const double> row_vals(std::int64_t i) const {
    return {values.data() + row_offsets[i], static_cast<std::size_t>(row_nnz(i))};
  }

  // entry (i, k), 0 if not stored
  double at(std::int64_t i, std::int64_t k) const;

  bool is_binary() const;
  double max_abs() const;

  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd dense() const;
  Eigen::VectorXd col_sq_norms() const;

  // zeroed column k (used by the variable-importance re-hash oracle)
  SparseMatrix without_column(std::int64_t k) const;

  // throws on any violated structural invariant
  void validate() const;
};

class SparseBuilder {
 public:
  void add_row(std::vector<std::int32_t> cols, std::vector<double> vals);
  std::int64_t rows() const { return static_cast<std::int64_t>(rows_.size()); }
  SparseMatrix build(std::int64_t n_cols);

 private:
  struct Row {
    std::vector<std::int32_t> cols;
    std::vector<double> vals;
  };
  std::vector<Row> rows_;
};

struct SvmlightData {
  SparseMatrix X;
  Eigen::VectorXd y;
  double scale = 1.0;  // divisor applied when rescaling was requested
};

// `label idx:val ...` with 1-based strictly increasing indices. Explicit
// zeros are rejected (they would corrupt the non-zero index sets the hashes
// are built from). Values with |v| > 1 are an error unless `rescale`, which
// divides the whole matrix by max |v|.
SvmlightData read_svmlight(const std::string& path, bool rescale = false);
void write_svmlight(const std::string& path, const SparseMatrix& X,
                    const Eigen::VectorXd& y);

// binary container (magic, dims, three arrays, little-endian)
void write_sparse(const std::string& path, const SparseMatrix& X);
SparseMatrix read_sparse(const std::string& path);

struct SparsityProfile {
  std::vector<std::int64_t> q_per_row;
  std::int64_t q_max = 0;
  std::int64_t q_min = 0;
  std::vector<double> delta_per_row;
  double delta_bar = 0.0;
  // weighted variance of delta around delta_bar for a given signal f:
  // (1/||f||^2) sum f_i^2 (delta_i - delta_bar)^2; 0 without a signal
  double v_delta = 0.0;
  bool has_signal = false;
  bool has_empty_rows = false;  // rows with q_i = 0 break Geo(delta_i)

  bool equal_sparsity() const { return q_min == q_max; }
};

SparsityProfile sparsity_profile(const SparseMatrix& X,
                                 const Eigen::VectorXd* signal = nullptr);

// Appends q_max - min_i q_i dummy columns of ones so that every row has
// exactly q_max non-zeros; each row takes the lowest-index dummies first.
// Binary input required.
SparseMatrix pad_equal_sparsity(const SparseMatrix& X);

}  // namespace minhash
