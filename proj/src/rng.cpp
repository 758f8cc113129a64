#include "mckv/rng.hpp"

namespace mckv {

std::vector<double> sample_increment(const NoiseStream& stream, std::int64_t step, std::size_t noise_dim) {
  std::vector<double> out(noise_dim);
  fill_normals(stream, step, out);
  return out;
}

}  // namespace mckv
