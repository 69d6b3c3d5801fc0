#include "trustpath/trust_encoding.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "trustpath/errors.hpp"

namespace trustpath::gnn {

TrustEncoding encode_trust(double value, std::size_t bits) {
  if (bits == 0 || bits > 32) throw ModelError("trust encoding width must be in [1,32]");
  if (!(value >= 0.0 && value <= 1.0))
    throw DomainError(fmt::format("trust value {} outside [0,1]", value));
  const auto levels = static_cast<double>((std::uint64_t{1} << bits) - 1);
  const auto q = static_cast<std::uint64_t>(std::llround(value * levels));
  TrustEncoding enc;
  enc.bits.resize(bits);
  for (std::size_t i = 0; i < bits; ++i) enc.bits[i] = (q >> (bits - 1 - i)) & 1u;
  return enc;
}

TrustEncoding encode_frequency(std::size_t n, std::size_t n_max, std::size_t bits) {
  if (n_max == 0) throw DomainError("frequency normalizer must be positive");
  if (n == 0 || n > n_max)
    throw DomainError(fmt::format("frequency {} outside [1, {}]", n, n_max));
  return encode_trust(static_cast<double>(n) / static_cast<double>(n_max), bits);
}

double TrustEncoding::decode() const {
  std::uint64_t q = 0;
  for (auto b : bits) q = (q << 1) | b;
  const auto levels = static_cast<double>((std::uint64_t{1} << bits.size()) - 1);
  return static_cast<double>(q) / levels;
}

Eigen::VectorXd TrustEncoding::as_vector() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(bits.size()));
  for (std::size_t i = 0; i < bits.size(); ++i) v[static_cast<Eigen::Index>(i)] = bits[i];
  return v;
}

std::size_t trust_class(double value, std::size_t classes) {
  if (classes < 2) throw ModelError("need at least two trust classes");
  if (!(value >= 0.0 && value <= 1.0))
    throw DomainError(fmt::format("trust value {} outside [0,1]", value));
  const auto c = static_cast<std::size_t>(std::floor(value * static_cast<double>(classes)));
  return std::min(c, classes - 1);
}

double bin_center(std::size_t cls, std::size_t classes) {
  return (static_cast<double>(cls) + 0.5) / static_cast<double>(classes);
}

}  // namespace trustpath::gnn
