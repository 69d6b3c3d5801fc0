#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace trustpath::gnn {

/// Fixed-width binary code of a quantized value in [0,1], most significant bit first.
struct TrustEncoding {
  std::vector<std::uint8_t> bits;

  double decode() const;
  Eigen::VectorXd as_vector() const;
};

/// q = round(value * (2^bits - 1)), emitted big-endian.
TrustEncoding encode_trust(double value, std::size_t bits);
/// Encodes n / n_max; requires 1 <= n <= n_max.
TrustEncoding encode_frequency(std::size_t n, std::size_t n_max, std::size_t bits);

/// Trust class of `value` among `classes` equal-width bins over [0,1].
std::size_t trust_class(double value, std::size_t classes);
double bin_center(std::size_t cls, std::size_t classes);

}  // namespace trustpath::gnn
