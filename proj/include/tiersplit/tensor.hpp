// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tiersplit/error.hpp"
#include "tiersplit/graph.hpp"

namespace tiersplit {

/// Dense W x H x D feature map; x varies fastest: index = x + W * (y + H * d).
template <class T>
class Tensor3 {
public:
    using value_type = T;

    Tensor3() = default;
    explicit Tensor3(Dims3 dims, T fill = T{}) : dims_(dims), values_(checked_count(dims), fill) {}
    Tensor3(Dims3 dims, std::vector<T> values) : dims_(dims), values_(std::move(values)) {
        if (static_cast<std::int64_t>(values_.size()) != checked_count(dims)) {
            throw Error(ErrorCode::shape_mismatch, "tensor holds " + std::to_string(values_.size()) +
                                                       " values, dims need " + std::to_string(dims.elements()));
        }
    }

    const Dims3& dims() const { return dims_; }
    std::int64_t width() const { return dims_.width; }
    std::int64_t height() const { return dims_.height; }
    std::int64_t depth() const { return dims_.depth; }

    std::size_t index(std::int64_t x, std::int64_t y, std::int64_t d) const {
        return static_cast<std::size_t>(x + dims_.width * (y + dims_.height * d));
    }
    T& at(std::int64_t x, std::int64_t y, std::int64_t d) { return values_[index(x, y, d)]; }
    const T& at(std::int64_t x, std::int64_t y, std::int64_t d) const { return values_[index(x, y, d)]; }

    std::vector<T>& values() { return values_; }
    const std::vector<T>& values() const { return values_; }

    bool operator==(const Tensor3&) const = default;

private:
    static std::int64_t checked_count(const Dims3& d) {
        if (d.width < 0 || d.height < 0 || d.depth < 0) throw Error(ErrorCode::invalid_dimension, "negative tensor dims");
        return d.elements();
    }

    Dims3 dims_;
    std::vector<T> values_;
};

}  // namespace tiersplit
