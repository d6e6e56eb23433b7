#ifndef DCAN_COMMON_HPP
#define DCAN_COMMON_HPP

#include <Eigen/Dense>

#include <charconv>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dcan {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;
using Labels = std::vector<int>;

/// Which of the two coupled networks an operation addresses.
enum class View { x, y };

inline const char* to_string(View v) { return v == View::x ? "x" : "y"; }

/// Base for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or invariant-violating input data (files, matrices, labels).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Width or shape disagreement between a model and its input.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Data that cannot support the requested fit (zero variance, no pairs).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite objective value or gradient.
class DivergedError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration or usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

namespace detail {

template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream oss;
  (oss << ... << std::forward<Args>(args));
  return oss.str();
}

inline std::string shape(const Matrix& m) { return concat(m.rows(), "x", m.cols()); }

/// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Shortest decimal representation that round-trips exactly.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail
}  // namespace dcan

#endif  // DCAN_COMMON_HPP
