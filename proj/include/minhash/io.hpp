#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "minhash/common.hpp"

namespace minhash {

using MatrixXi64 = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// dense containers: magic, u64 rows, u64 cols, column-major payload
void write_dense(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_dense(const std::string& path);

void write_dense_i64(const std::string& path, const MatrixXi64& m);
MatrixXi64 read_dense_i64(const std::string& path);

// one value per line
void write_vector_text(const std::string& path, const Eigen::VectorXd& v);
Eigen::VectorXd read_vector_text(const std::string& path);

}  // namespace minhash
