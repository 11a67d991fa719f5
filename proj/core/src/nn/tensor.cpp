#include "fpd/nn/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "fpd/error.hpp"

namespace fpd::nn {

std::string to_string(const Shape& s) {
    std::ostringstream os;
    os << "(" << s.batch << ", " << s.channels << ", " << s.length << ")";
    return os.str();
}

Tensor3::Tensor3(std::size_t batch, std::size_t channels, std::size_t length, double fill)
    : shape_{batch, channels, length}, data_(batch * channels * length, fill) {}

Tensor3::Tensor3(Shape shape, double fill) : shape_(shape), data_(shape.size(), fill) {}

Tensor3::Tensor3(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size()) {
        throw DimensionError("Tensor3: data length does not match shape " + to_string(shape_));
    }
}

Tensor3 gather(const Tensor3& x, std::span<const std::size_t> indices) {
    Tensor3 out(indices.size(), x.channels(), x.length());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= x.batch()) {
            throw DimensionError("gather: index out of range");
        }
        const auto src = x.sample(indices[i]);
        std::copy(src.begin(), src.end(), out.sample(i).begin());
    }
    return out;
}

}  // namespace fpd::nn
