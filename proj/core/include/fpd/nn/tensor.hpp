#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fpd::nn {

struct Shape {
    std::size_t batch = 0;
    std::size_t channels = 0;
    std::size_t length = 0;

    std::size_t size() const noexcept { return batch * channels * length; }
    std::size_t per_sample() const noexcept { return channels * length; }
    bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

/// (batch, channels, length) tensor, row-major.
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(std::size_t batch, std::size_t channels, std::size_t length, double fill = 0.0);
    explicit Tensor3(Shape shape, double fill = 0.0);
    Tensor3(Shape shape, std::vector<double> data);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t batch() const noexcept { return shape_.batch; }
    std::size_t channels() const noexcept { return shape_.channels; }
    std::size_t length() const noexcept { return shape_.length; }
    std::size_t size() const noexcept { return data_.size(); }

    double& at(std::size_t b, std::size_t c, std::size_t l) {
        return data_[(b * shape_.channels + c) * shape_.length + l];
    }
    double at(std::size_t b, std::size_t c, std::size_t l) const {
        return data_[(b * shape_.channels + c) * shape_.length + l];
    }

    std::span<double> sample(std::size_t b) {
        return {data_.data() + b * shape_.per_sample(), shape_.per_sample()};
    }
    std::span<const double> sample(std::size_t b) const {
        return {data_.data() + b * shape_.per_sample(), shape_.per_sample()};
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::vector<double>& storage() noexcept { return data_; }

    bool operator==(const Tensor3&) const = default;

private:
    Shape shape_{};
    std::vector<double> data_;
};

/// Rows `indices` of the batch dimension, in order.
Tensor3 gather(const Tensor3& x, std::span<const std::size_t> indices);

}  // namespace fpd::nn
