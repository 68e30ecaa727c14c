#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace liftcg {

// Dense row-major matrix of doubles. A 1x1 tensor acts as a scalar weight and
// scales vectors of any length; an r x c tensor maps length-c vectors to length r.
struct Tensor {
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::vector<double> data = {0.0};

  static Tensor scalar(double v) { return Tensor{1, 1, {v}}; }
  static Tensor zeros(std::size_t r, std::size_t c) { return Tensor{r, c, std::vector<double>(r * c, 0.0)}; }

  bool is_scalar() const noexcept { return rows == 1 && cols == 1; }
  std::size_t size() const noexcept { return data.size(); }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> span() noexcept { return data; }
  std::span<const double> span() const noexcept { return data; }

  bool operator==(const Tensor&) const = default;
};

}  // namespace liftcg
