// Row-major matrix and the labeled feature dataset with its CSV format.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace faultcast::learn {

struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(size_t r, size_t c) { return data[r * cols + c]; }
  double at(size_t r, size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(size_t r) const { return {data.data() + r * cols, cols}; }

  Matrix gather_rows(std::span<const uint32_t> idx) const;
  Matrix gather_cols(std::span<const int> idx) const;
};

/// Labeled rows: one feature vector and two observed rates per trace id.
struct Dataset {
  std::vector<std::string> ids;
  Matrix x;
  std::vector<double> success;
  std::vector<double> interruption;

  size_t size() const { return ids.size(); }
};

enum class Target { Success, Interruption };

const char* target_name(Target t);
const std::vector<double>& target_of(const Dataset& d, Target t);

/// Format: header `id,f0,...,f{d-1},success,interruption`, then one row per
/// line, dataset values at 9 significant digits.
Dataset parse_dataset_csv(std::string_view text);
std::string serialize_dataset_csv(const Dataset& d);

}  // namespace faultcast::learn
