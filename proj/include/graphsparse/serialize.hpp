#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace graphsparse {

/// Native-byte-order binary helpers for checkpoints. Files are only expected
/// to be read back on the machine family that wrote them.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& os) : os_(os) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T v) {
    os_.write(reinterpret_cast<const char*>(&v), sizeof v);
    check();
  }

  void put_string(const std::string& s) {
    put<std::uint64_t>(s.size());
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
    check();
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  void put_vector(const std::vector<T>& v) {
    put<std::uint64_t>(v.size());
    os_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
    check();
  }

  template <typename Derived>
  void put_matrix(const Eigen::PlainObjectBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    put<std::int64_t>(m.rows());
    put<std::int64_t>(m.cols());
    os_.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(Scalar)));
    check();
  }

 private:
  void check() {
    if (!os_) throw std::runtime_error("checkpoint write failed (disk full or unwritable path?)");
  }
  std::ostream& os_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& is) : is_(is) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    T v{};
    is_.read(reinterpret_cast<char*>(&v), sizeof v);
    check();
    return v;
  }

  std::string get_string() {
    const auto n = length();
    std::string s(n, '\0');
    is_.read(s.data(), static_cast<std::streamsize>(n));
    check();
    return s;
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  std::vector<T> get_vector() {
    const auto n = length();
    std::vector<T> v(n);
    is_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
    check();
    return v;
  }

  template <typename MatrixType>
  MatrixType get_matrix() {
    const auto rows = get<std::int64_t>();
    const auto cols = get<std::int64_t>();
    if (rows < 0 || cols < 0 || rows * cols > (std::int64_t{1} << 34)) corrupt();
    MatrixType m(rows, cols);
    is_.read(reinterpret_cast<char*>(m.data()),
             static_cast<std::streamsize>(m.size() * sizeof(typename MatrixType::Scalar)));
    check();
    return m;
  }

 private:
  std::uint64_t length() {
    const auto n = get<std::uint64_t>();
    if (n > (std::uint64_t{1} << 34)) corrupt();
    return n;
  }
  void check() {
    if (!is_) corrupt();
  }
  [[noreturn]] static void corrupt() { throw std::runtime_error("checkpoint is truncated or corrupt"); }
  std::istream& is_;
};

}  // namespace graphsparse
