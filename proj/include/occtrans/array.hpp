#pragma once

#include <cmath>
#include <memory>
#include <span>

#include "occtrans/core.hpp"

namespace occtrans {

// Immutable shaped numeric buffer. Copies are cheap (shared data); values
// never mutate after construction, so arrays can be shared freely.
template <class T>
class Array {
 public:
  Array() = default;
  Array(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::make_shared<std::vector<T>>(std::move(data))) {
    if (numel(shape_) != static_cast<std::int64_t>(data_->size()))
      fail("array data length ", std::to_string(data_->size()), " does not match shape ",
           shape_str(shape_));
  }

  static Array zeros(Shape shape) {
    std::vector<T> d(static_cast<size_t>(numel(shape)), T(0));
    return Array(std::move(shape), std::move(d));
  }
  static Array full(Shape shape, T v) {
    std::vector<T> d(static_cast<size_t>(numel(shape)), v);
    return Array(std::move(shape), std::move(d));
  }
  static Array scalar(T v) { return Array(Shape{}, std::vector<T>{v}); }

  const Shape& shape() const { return shape_; }
  std::int64_t size() const { return data_ ? static_cast<std::int64_t>(data_->size()) : 0; }
  bool empty() const { return !data_; }

  std::span<const T> data() const { return {data_->data(), data_->size()}; }
  const T* ptr() const { return data_->data(); }
  T at(std::int64_t i) const { return (*data_)[static_cast<size_t>(i)]; }
  T item() const {
    if (size() != 1) fail("item() on non-scalar array of shape ", shape_str(shape_));
    return (*data_)[0];
  }

  bool finite() const {
    for (T v : *data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  template <class U>
  Array<U> cast() const {
    std::vector<U> d(data_->size());
    for (size_t i = 0; i < d.size(); ++i) d[i] = static_cast<U>((*data_)[i]);
    return Array<U>(shape_, std::move(d));
  }

  // same storage, new shape
  Array reshaped(Shape shape) const {
    if (numel(shape) != size())
      fail("cannot view ", shape_str(shape_), " as ", shape_str(shape));
    Array out;
    out.shape_ = std::move(shape);
    out.data_ = data_;
    return out;
  }

 private:
  Shape shape_;
  std::shared_ptr<const std::vector<T>> data_;
};

}  // namespace occtrans
