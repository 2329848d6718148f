#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "kgraph/common.hpp"

namespace kgraph {

// Point set in row-major storage. All coordinates are finite doubles.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<double> coords, std::size_t n, std::size_t d);

  static Dataset from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t n() const { return n_; }
  std::size_t dim() const { return d_; }

  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * d_, d_};
  }

  const std::vector<double>& coords() const { return coords_; }

 private:
  std::vector<double> coords_;
  std::size_t n_ = 0;
  std::size_t d_ = 0;
};

enum class DataFormat { csv, binary_f64 };

// csv: comma-separated reals, one point per row, no header.
// binary_f64: magic "KGD1", u64 n, u64 d, then n*d little-endian doubles.
Dataset load_dataset(const std::filesystem::path& path, DataFormat format);

void save_dataset_csv(const Dataset& data, const std::filesystem::path& path);
void save_dataset_binary(const Dataset& data, const std::filesystem::path& path);

// Pointwise scaling x -> c*x, used by the squared-kernel reduction.
Dataset scale_dataset(const Dataset& data, double c);

}  // namespace kgraph
