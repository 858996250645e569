#include "minhash/io.hpp"

#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

namespace minhash {

namespace {

constexpr char kDenseMagic[8] = {'M', 'H', 'D', 'N', '0', '0', '0', '1'};
constexpr char kIntMagic[8] = {'M', 'H', 'I', 'N', '0', '0', '0', '1'};

template <class Scalar>
void write_matrix(const std::string& path, const char* magic,
                  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw format_error("cannot write " + path);
  out.write(magic, 8);
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(m.rows()),
                                 static_cast<std::uint64_t>(m.cols())};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(Scalar) * m.size()));
  if (!out) throw format_error("write failed: " + path);
}

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> read_matrix(
    const std::string& path, const char* magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw format_error("cannot open " + path);
  char got[8];
  in.read(got, 8);
  if (!in || std::memcmp(got, magic, 8) != 0)
    throw format_error(path + ": wrong container magic");
  std::uint64_t dims[2];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in) throw format_error(path + ": truncated header");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(
      static_cast<Eigen::Index>(dims[0]), static_cast<Eigen::Index>(dims[1]));
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(Scalar) * m.size()));
  if (!in) throw format_error(path + ": truncated payload");
  return m;
}

}  // namespace

void write_dense(const std::string& path, const Eigen::MatrixXd& m) {
  write_matrix(path, kDenseMagic, m);
}

Eigen::MatrixXd read_dense(const std::string& path) {
  return read_matrix<double>(path, kDenseMagic);
}

void write_dense_i64(const std::string& path, const MatrixXi64& m) {
  write_matrix(path, kIntMagic, m);
}

MatrixXi64 read_dense_i64(const std::string& path) {
  return read_matrix<std::int64_t>(path, kIntMagic);
}

void write_vector_text(const std::string& path, const Eigen::VectorXd& v) {
  std::ofstream out(path);
  if (!out) throw format_error("cannot write " + path);
  out.precision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < v.size(); ++i) out << v[i] << '\n';
}

Eigen::VectorXd read_vector_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw format_error("cannot open " + path);
  std::vector<double> vals;
  double x;
  while (in >> x) vals.push_back(x);
  if (!in.eof()) throw format_error(path + ": malformed numeric data");
  return Eigen::Map<const Eigen::VectorXd>(
      vals.data(), static_cast<Eigen::Index>(vals.size()));
}

}  // namespace minhash
