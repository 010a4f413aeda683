#include "relaynet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "relaynet/error.hpp"

namespace relaynet {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::Dimension: return "dimension error";
    case ErrorCode::Numeric: return "numeric error";
    case ErrorCode::InfeasibleDistribution: return "infeasible distribution";
    case ErrorCode::MissingValueFunction: return "missing value function";
    case ErrorCode::NoSuccessfulRollouts: return "no successful rollouts";
    case ErrorCode::DegenerateLabels: return "degenerate labels";
    case ErrorCode::ConstructionAbandoned: return "construction abandoned";
    case ErrorCode::Config: return "config error";
    case ErrorCode::Io: return "io error";
    case ErrorCode::Version: return "version error";
    case ErrorCode::Corrupt: return "corrupt file";
  }
  return "unknown error";
}

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  require(element_count(shape_) == data_.size(), ErrorCode::Dimension,
          "tensor data length " + std::to_string(data_.size()) + " does not match shape");
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::vector(std::span<const double> values) {
  return Tensor({values.size()}, std::vector<double>(values.begin(), values.end()));
}

std::size_t Tensor::dim(std::size_t axis) const {
  require(axis < shape_.size(), ErrorCode::Dimension, "tensor axis out of range");
  return shape_[axis];
}

std::span<const double> Tensor::row(std::size_t r) const {
  if (rank() == 1) {
    require(r == 0, ErrorCode::Dimension, "row index out of range for rank-1 tensor");
    return data_;
  }
  require(rank() == 2 && r < shape_[0], ErrorCode::Dimension, "row index out of range");
  return std::span<const double>(data_).subspan(r * shape_[1], shape_[1]);
}

std::span<double> Tensor::row(std::size_t r) {
  if (rank() == 1) {
    require(r == 0, ErrorCode::Dimension, "row index out of range for rank-1 tensor");
    return data_;
  }
  require(rank() == 2 && r < shape_[0], ErrorCode::Dimension, "row index out of range");
  return std::span<double>(data_).subspan(r * shape_[1], shape_[1]);
}

bool all_finite(std::span<const double> values) noexcept {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

bool Tensor::all_finite() const noexcept { return relaynet::all_finite(data_); }

void Tensor::require_finite(std::string_view what) const {
  if (!all_finite()) fail(ErrorCode::Numeric, "non-finite value in " + std::string(what));
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

}  // namespace relaynet
