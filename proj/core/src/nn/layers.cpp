#include "fpd/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "fpd/error.hpp"

namespace fpd::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using CMapVec = Eigen::Map<const Eigen::VectorXd>;
using MapVec = Eigen::Map<Eigen::VectorXd>;

void kaiming_uniform(std::vector<double>& w, std::size_t fan_in, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : w) {
        v = dist(rng);
    }
}

void add_into(std::vector<double>& dst, std::span<const double> src) {
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] += src[i];
    }
}

}  // namespace

std::string_view to_string(LayerKind kind) noexcept {
    switch (kind) {
    case LayerKind::Conv1d: return "conv1d";
    case LayerKind::BatchNorm1d: return "batchnorm1d";
    case LayerKind::ReLU: return "relu";
    case LayerKind::Linear: return "linear";
    case LayerKind::GlobalAvgPool: return "global_avg_pool";
    case LayerKind::ResidualBlock: return "residual_block";
    case LayerKind::Sequential: return "sequential";
    }
    return "unknown";
}

// ---- Layer ----------------------------------------------------------------

void Layer::set_name(std::string name) {
    name_ = std::move(name);
    for (Parameter* p : parameters()) {
        p->owner = name_;
    }
}

Tensor3 Layer::forward(const Tensor3& x, Mode mode) {
    return mode == Mode::Train ? train_forward(x) : infer(x);
}

std::vector<const Parameter*> Layer::parameter_view() const {
    auto ps = const_cast<Layer*>(this)->parameters();
    return {ps.begin(), ps.end()};
}

std::vector<const std::vector<double>*> Layer::buffer_view() const {
    auto bs = const_cast<Layer*>(this)->buffers();
    return {bs.begin(), bs.end()};
}

void Layer::zero_grad() {
    for (Parameter* p : parameters()) {
        std::fill(p->grad.begin(), p->grad.end(), 0.0);
    }
}

void Layer::fail_shape(const std::string& detail) const {
    throw DimensionError(std::string(to_string(kind())) + " '" + name_ + "': " + detail);
}

void Layer::require_cache(bool cached) const {
    if (!cached) {
        throw StateError(std::string(to_string(kind())) + " '" + name_ +
                         "': backward called without a preceding training forward pass");
    }
}

// ---- Conv1d ---------------------------------------------------------------

Conv1d::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
               std::size_t stride, std::size_t padding)
    : in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride), padding_(padding),
      weight_("weight", out_channels * in_channels * kernel), bias_("bias", out_channels) {
    if (in_ == 0 || out_ == 0 || kernel_ == 0 || stride_ == 0) {
        throw ArgumentError("conv1d: channels, kernel and stride must be positive");
    }
}

Shape Conv1d::output_shape(const Shape& in) const {
    if (in.channels != in_) {
        fail_shape("expected " + std::to_string(in_) + " input channels, got shape " +
                   to_string(in));
    }
    const std::size_t padded = in.length + 2 * padding_;
    if (padded < kernel_) {
        fail_shape("input length " + std::to_string(in.length) + " shorter than kernel");
    }
    return {in.batch, out_, (padded - kernel_) / stride_ + 1};
}

void Conv1d::im2col(std::span<const double> sample, std::size_t length, std::size_t out_length,
                    std::vector<double>& col) const {
    col.assign(in_ * kernel_ * out_length, 0.0);
    for (std::size_t c = 0; c < in_; ++c) {
        const double* src = sample.data() + c * length;
        for (std::size_t k = 0; k < kernel_; ++k) {
            double* row = col.data() + (c * kernel_ + k) * out_length;
            for (std::size_t o = 0; o < out_length; ++o) {
                const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(o * stride_ + k) -
                                           static_cast<std::ptrdiff_t>(padding_);
                if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(length)) {
                    row[o] = src[pos];
                }
            }
        }
    }
}

Tensor3 Conv1d::infer(const Tensor3& x) const {
    const Shape os = output_shape(x.shape());
    Tensor3 y(os);
    const CMapMat w(weight_.value.data(), static_cast<Eigen::Index>(out_),
                    static_cast<Eigen::Index>(in_ * kernel_));
    const CMapVec b(bias_.value.data(), static_cast<Eigen::Index>(out_));
    std::vector<double> col;
    for (std::size_t n = 0; n < x.batch(); ++n) {
        im2col(x.sample(n), x.length(), os.length, col);
        const CMapMat cm(col.data(), static_cast<Eigen::Index>(in_ * kernel_),
                         static_cast<Eigen::Index>(os.length));
        MapMat out(y.sample(n).data(), static_cast<Eigen::Index>(out_),
                   static_cast<Eigen::Index>(os.length));
        out.noalias() = w * cm;
        out.colwise() += b;
    }
    return y;
}

Tensor3 Conv1d::train_forward(const Tensor3& x) {
    Tensor3 y = infer(x);
    input_ = x;
    cached_ = true;
    return y;
}

Tensor3 Conv1d::backward(const Tensor3& grad_out) {
    require_cache(cached_);
    const Shape os = output_shape(input_.shape());
    if (grad_out.shape() != os) {
        fail_shape("gradient shape " + to_string(grad_out.shape()) + " does not match output " +
                   to_string(os));
    }
    const auto rows = static_cast<Eigen::Index>(in_ * kernel_);
    const auto lo = static_cast<Eigen::Index>(os.length);
    const CMapMat w(weight_.value.data(), static_cast<Eigen::Index>(out_), rows);
    MapMat dw(weight_.grad.data(), static_cast<Eigen::Index>(out_), rows);
    MapVec db(bias_.grad.data(), static_cast<Eigen::Index>(out_));

    Tensor3 dx(input_.shape());
    std::vector<double> col;
    RowMat dcol(rows, lo);
    for (std::size_t n = 0; n < input_.batch(); ++n) {
        im2col(input_.sample(n), input_.length(), os.length, col);
        const CMapMat cm(col.data(), rows, lo);
        const CMapMat g(grad_out.sample(n).data(), static_cast<Eigen::Index>(out_), lo);
        dw.noalias() += g * cm.transpose();
        db += g.rowwise().sum();
        dcol.noalias() = w.transpose() * g;
        auto dst = dx.sample(n);
        for (std::size_t c = 0; c < in_; ++c) {
            for (std::size_t k = 0; k < kernel_; ++k) {
                const auto r = static_cast<Eigen::Index>(c * kernel_ + k);
                for (std::size_t o = 0; o < os.length; ++o) {
                    const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(o * stride_ + k) -
                                               static_cast<std::ptrdiff_t>(padding_);
                    if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(input_.length())) {
                        dst[c * input_.length() + static_cast<std::size_t>(pos)] +=
                            dcol(r, static_cast<Eigen::Index>(o));
                    }
                }
            }
        }
    }
    input_ = Tensor3();
    cached_ = false;
    return dx;
}

void Conv1d::reset_parameters(Rng& rng) {
    kaiming_uniform(weight_.value, in_ * kernel_, rng);
    std::fill(bias_.value.begin(), bias_.value.end(), 0.0);
}

nlohmann::json Conv1d::config() const {
    return {{"kind", to_string(kind())}, {"in", in_},           {"out", out_},
            {"kernel", kernel_},         {"stride", stride_},   {"padding", padding_}};
}

// ---- BatchNorm1d ----------------------------------------------------------

BatchNorm1d::BatchNorm1d(std::size_t channels, double momentum, double eps)
    : channels_(channels), momentum_(momentum), eps_(eps), gamma_("gamma", channels),
      beta_("beta", channels), running_mean_(channels, 0.0), running_var_(channels, 1.0) {
    if (channels_ == 0) {
        throw ArgumentError("batchnorm1d: channels must be positive");
    }
    std::fill(gamma_.value.begin(), gamma_.value.end(), 1.0);
}

Shape BatchNorm1d::output_shape(const Shape& in) const {
    if (in.channels != channels_) {
        fail_shape("expected " + std::to_string(channels_) + " channels, got shape " +
                   to_string(in));
    }
    return in;
}

Tensor3 BatchNorm1d::infer(const Tensor3& x) const {
    output_shape(x.shape());
    Tensor3 y(x.shape());
    for (std::size_t c = 0; c < channels_; ++c) {
        const double scale = gamma_.value[c] / std::sqrt(running_var_[c] + eps_);
        const double shift = beta_.value[c] - running_mean_[c] * scale;
        for (std::size_t n = 0; n < x.batch(); ++n) {
            for (std::size_t l = 0; l < x.length(); ++l) {
                y.at(n, c, l) = x.at(n, c, l) * scale + shift;
            }
        }
    }
    return y;
}

Tensor3 BatchNorm1d::train_forward(const Tensor3& x) {
    output_shape(x.shape());
    const std::size_t count = x.batch() * x.length();
    if (count < 2) {
        fail_shape("training needs more than one value per channel, got shape " +
                   to_string(x.shape()));
    }
    Tensor3 y(x.shape());
    normalized_ = Tensor3(x.shape());
    inv_std_.assign(channels_, 0.0);
    const double m = static_cast<double>(count);
    for (std::size_t c = 0; c < channels_; ++c) {
        double mean = 0.0;
        for (std::size_t n = 0; n < x.batch(); ++n) {
            for (std::size_t l = 0; l < x.length(); ++l) {
                mean += x.at(n, c, l);
            }
        }
        mean /= m;
        double var = 0.0;
        for (std::size_t n = 0; n < x.batch(); ++n) {
            for (std::size_t l = 0; l < x.length(); ++l) {
                const double d = x.at(n, c, l) - mean;
                var += d * d;
            }
        }
        var /= m;
        const double inv = 1.0 / std::sqrt(var + eps_);
        inv_std_[c] = inv;
        for (std::size_t n = 0; n < x.batch(); ++n) {
            for (std::size_t l = 0; l < x.length(); ++l) {
                const double xh = (x.at(n, c, l) - mean) * inv;
                normalized_.at(n, c, l) = xh;
                y.at(n, c, l) = gamma_.value[c] * xh + beta_.value[c];
            }
        }
        running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * mean;
        running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * var * m / (m - 1.0);
    }
    cached_ = true;
    return y;
}

Tensor3 BatchNorm1d::backward(const Tensor3& grad_out) {
    require_cache(cached_);
    if (grad_out.shape() != normalized_.shape()) {
        fail_shape("gradient shape " + to_string(grad_out.shape()) + " does not match output " +
                   to_string(normalized_.shape()));
    }
    const Shape s = normalized_.shape();
    const double m = static_cast<double>(s.batch * s.length);
    Tensor3 dx(s);
    for (std::size_t c = 0; c < channels_; ++c) {
        double sum_g = 0.0;
        double sum_gx = 0.0;
        for (std::size_t n = 0; n < s.batch; ++n) {
            for (std::size_t l = 0; l < s.length; ++l) {
                const double g = grad_out.at(n, c, l);
                sum_g += g;
                sum_gx += g * normalized_.at(n, c, l);
            }
        }
        gamma_.grad[c] += sum_gx;
        beta_.grad[c] += sum_g;
        const double k = gamma_.value[c] * inv_std_[c] / m;
        for (std::size_t n = 0; n < s.batch; ++n) {
            for (std::size_t l = 0; l < s.length; ++l) {
                dx.at(n, c, l) =
                    k * (m * grad_out.at(n, c, l) - sum_g - normalized_.at(n, c, l) * sum_gx);
            }
        }
    }
    normalized_ = Tensor3();
    cached_ = false;
    return dx;
}

void BatchNorm1d::reset_parameters(Rng& /*rng*/) {
    std::fill(gamma_.value.begin(), gamma_.value.end(), 1.0);
    std::fill(beta_.value.begin(), beta_.value.end(), 0.0);
    std::fill(running_mean_.begin(), running_mean_.end(), 0.0);
    std::fill(running_var_.begin(), running_var_.end(), 1.0);
}

nlohmann::json BatchNorm1d::config() const {
    return {{"kind", to_string(kind())},
            {"channels", channels_},
            {"momentum", momentum_},
            {"eps", eps_}};
}

// ---- ReLU -----------------------------------------------------------------

Tensor3 ReLU::infer(const Tensor3& x) const {
    Tensor3 y(x.shape());
    auto src = x.data();
    auto dst = y.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = src[i] > 0.0 ? src[i] : 0.0;
    }
    return y;
}

Tensor3 ReLU::train_forward(const Tensor3& x) {
    auto src = x.data();
    mask_.assign(src.size(), false);
    for (std::size_t i = 0; i < src.size(); ++i) {
        mask_[i] = src[i] > 0.0;
    }
    shape_ = x.shape();
    cached_ = true;
    return infer(x);
}

Tensor3 ReLU::backward(const Tensor3& grad_out) {
    require_cache(cached_);
    if (grad_out.shape() != shape_) {
        fail_shape("gradient shape " + to_string(grad_out.shape()) + " does not match output " +
                   to_string(shape_));
    }
    Tensor3 dx(shape_);
    auto g = grad_out.data();
    auto d = dx.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
        d[i] = mask_[i] ? g[i] : 0.0;
    }
    cached_ = false;
    return dx;
}

nlohmann::json ReLU::config() const {
    return {{"kind", to_string(kind())}};
}

void ReLU::append_activation_pattern(std::vector<bool>& out) const {
    out.insert(out.end(), mask_.begin(), mask_.end());
}

// ---- Linear ---------------------------------------------------------------

Linear::Linear(std::size_t in_features, std::size_t out_features)
    : in_(in_features), out_(out_features), weight_("weight", out_features * in_features),
      bias_("bias", out_features) {
    if (in_ == 0 || out_ == 0) {
        throw ArgumentError("linear: feature counts must be positive");
    }
}

Shape Linear::output_shape(const Shape& in) const {
    if (in.per_sample() != in_) {
        fail_shape("expected " + std::to_string(in_) + " features per sample, got shape " +
                   to_string(in));
    }
    return {in.batch, out_, 1};
}

Tensor3 Linear::infer(const Tensor3& x) const {
    const Shape os = output_shape(x.shape());
    Tensor3 y(os);
    const CMapMat w(weight_.value.data(), static_cast<Eigen::Index>(out_),
                    static_cast<Eigen::Index>(in_));
    const CMapVec b(bias_.value.data(), static_cast<Eigen::Index>(out_));
    // Sample by sample so a row's result never depends on what else is in the batch.
    for (std::size_t n = 0; n < x.batch(); ++n) {
        const CMapVec xi(x.sample(n).data(), static_cast<Eigen::Index>(in_));
        MapVec yi(y.sample(n).data(), static_cast<Eigen::Index>(out_));
        yi.noalias() = w * xi;
        yi += b;
    }
    return y;
}

Tensor3 Linear::train_forward(const Tensor3& x) {
    Tensor3 y = infer(x);
    input_ = x;
    cached_ = true;
    return y;
}

Tensor3 Linear::backward(const Tensor3& grad_out) {
    require_cache(cached_);
    const Shape os = output_shape(input_.shape());
    if (grad_out.shape() != os) {
        fail_shape("gradient shape " + to_string(grad_out.shape()) + " does not match output " +
                   to_string(os));
    }
    const auto nb = static_cast<Eigen::Index>(input_.batch());
    const CMapMat xs(input_.data().data(), nb, static_cast<Eigen::Index>(in_));
    const CMapMat g(grad_out.data().data(), nb, static_cast<Eigen::Index>(out_));
    const CMapMat w(weight_.value.data(), static_cast<Eigen::Index>(out_),
                    static_cast<Eigen::Index>(in_));
    MapMat dw(weight_.grad.data(), static_cast<Eigen::Index>(out_),
              static_cast<Eigen::Index>(in_));
    MapVec db(bias_.grad.data(), static_cast<Eigen::Index>(out_));
    dw.noalias() += g.transpose() * xs;
    db += g.colwise().sum().transpose();
    Tensor3 dx(input_.shape());
    MapMat dxm(dx.data().data(), nb, static_cast<Eigen::Index>(in_));
    dxm.noalias() = g * w;
    input_ = Tensor3();
    cached_ = false;
    return dx;
}

void Linear::reset_parameters(Rng& rng) {
    kaiming_uniform(weight_.value, in_, rng);
    std::fill(bias_.value.begin(), bias_.value.end(), 0.0);
}

nlohmann::json Linear::config() const {
    return {{"kind", to_string(kind())}, {"in", in_}, {"out", out_}};
}

// ---- GlobalAvgPool ----------------------------------------------------------

Shape GlobalAvgPool::output_shape(const Shape& in) const {
    if (in.length == 0) {
        fail_shape("empty length axis");
    }
    return {in.batch, in.channels, 1};
}

Tensor3 GlobalAvgPool::infer(const Tensor3& x) const {
    Tensor3 y(output_shape(x.shape()));
    const double inv = 1.0 / static_cast<double>(x.length());
    for (std::size_t n = 0; n < x.batch(); ++n) {
        for (std::size_t c = 0; c < x.channels(); ++c) {
            double s = 0.0;
            for (std::size_t l = 0; l < x.length(); ++l) {
                s += x.at(n, c, l);
            }
            y.at(n, c, 0) = s * inv;
        }
    }
    return y;
}

Tensor3 GlobalAvgPool::train_forward(const Tensor3& x) {
    in_shape_ = x.shape();
    cached_ = true;
    return infer(x);
}

Tensor3 GlobalAvgPool::backward(const Tensor3& grad_out) {
    require_cache(cached_);
    if (grad_out.shape() != output_shape(in_shape_)) {
        fail_shape("gradient shape " + to_string(grad_out.shape()) + " does not match output");
    }
    Tensor3 dx(in_shape_);
    const double inv = 1.0 / static_cast<double>(in_shape_.length);
    for (std::size_t n = 0; n < in_shape_.batch; ++n) {
        for (std::size_t c = 0; c < in_shape_.channels; ++c) {
            const double g = grad_out.at(n, c, 0) * inv;
            for (std::size_t l = 0; l < in_shape_.length; ++l) {
                dx.at(n, c, l) = g;
            }
        }
    }
    cached_ = false;
    return dx;
}

nlohmann::json GlobalAvgPool::config() const {
    return {{"kind", to_string(kind())}};
}

// ---- ResidualBlock --------------------------------------------------------

ResidualBlock::ResidualBlock(std::size_t in_channels, std::size_t out_channels, bool projection)
    : in_(in_channels), out_(out_channels), conv_a_(in_channels, out_channels, 3, 1, 1),
      bn_a_(out_channels), conv_b_(out_channels, out_channels, 3, 1, 1), bn_b_(out_channels) {
    if (projection) {
        shortcut_conv_ = std::make_unique<Conv1d>(in_channels, out_channels, 1);
        shortcut_bn_ = std::make_unique<BatchNorm1d>(out_channels);
    } else if (in_channels != out_channels) {
        throw DimensionError("residual_block: " + std::to_string(in_channels) + " -> " +
                             std::to_string(out_channels) +
                             " channels needs a projection shortcut");
    }
    set_name("");
}

ResidualBlock::ResidualBlock(const ResidualBlock& other)
    : Layer(other), in_(other.in_), out_(other.out_), conv_a_(other.conv_a_), bn_a_(other.bn_a_),
      relu_a_(other.relu_a_), conv_b_(other.conv_b_), bn_b_(other.bn_b_),
      relu_out_(other.relu_out_) {
    if (other.shortcut_conv_) {
        shortcut_conv_ = std::make_unique<Conv1d>(*other.shortcut_conv_);
        shortcut_bn_ = std::make_unique<BatchNorm1d>(*other.shortcut_bn_);
    }
}

void ResidualBlock::set_name(std::string name) {
    name_ = std::move(name);
    const std::string p = name_.empty() ? "" : name_ + ".";
    conv_a_.set_name(p + "conv_a");
    bn_a_.set_name(p + "bn_a");
    relu_a_.set_name(p + "relu_a");
    conv_b_.set_name(p + "conv_b");
    bn_b_.set_name(p + "bn_b");
    if (shortcut_conv_) {
        shortcut_conv_->set_name(p + "shortcut_conv");
        shortcut_bn_->set_name(p + "shortcut_bn");
    }
    relu_out_.set_name(p + "relu_out");
}

Shape ResidualBlock::output_shape(const Shape& in) const {
    if (in.channels != in_) {
        fail_shape("expected " + std::to_string(in_) + " input channels, got shape " +
                   to_string(in));
    }
    return bn_b_.output_shape(conv_b_.output_shape(conv_a_.output_shape(in)));
}

Tensor3 ResidualBlock::infer(const Tensor3& x) const {
    output_shape(x.shape());
    Tensor3 h = bn_b_.infer(conv_b_.infer(relu_a_.infer(bn_a_.infer(conv_a_.infer(x)))));
    const Tensor3 s = shortcut_conv_ ? shortcut_bn_->infer(shortcut_conv_->infer(x)) : x;
    auto hd = h.data();
    auto sd = s.data();
    for (std::size_t i = 0; i < hd.size(); ++i) {
        hd[i] += sd[i];
    }
    return relu_out_.infer(h);
}

Tensor3 ResidualBlock::train_forward(const Tensor3& x) {
    output_shape(x.shape());
    Tensor3 h = conv_a_.forward(x, Mode::Train);
    h = bn_a_.forward(h, Mode::Train);
    h = relu_a_.forward(h, Mode::Train);
    h = conv_b_.forward(h, Mode::Train);
    h = bn_b_.forward(h, Mode::Train);
    if (shortcut_conv_) {
        const Tensor3 s = shortcut_bn_->forward(shortcut_conv_->forward(x, Mode::Train), Mode::Train);
        add_into(h.storage(), s.data());
    } else {
        add_into(h.storage(), x.data());
    }
    return relu_out_.forward(h, Mode::Train);
}

Tensor3 ResidualBlock::backward(const Tensor3& grad_out) {
    const Tensor3 g = relu_out_.backward(grad_out);
    Tensor3 dx = conv_a_.backward(bn_a_.backward(relu_a_.backward(conv_b_.backward(bn_b_.backward(g)))));
    if (shortcut_conv_) {
        const Tensor3 ds = shortcut_conv_->backward(shortcut_bn_->backward(g));
        add_into(dx.storage(), ds.data());
    } else {
        add_into(dx.storage(), g.data());
    }
    return dx;
}

std::vector<Layer*> ResidualBlock::inner_layers() {
    return {&conv_a_, &bn_a_, &relu_a_, &conv_b_, &bn_b_};
}

std::vector<Parameter*> ResidualBlock::parameters() {
    std::vector<Parameter*> out;
    std::vector<Layer*> parts{&conv_a_, &bn_a_, &conv_b_, &bn_b_};
    if (shortcut_conv_) {
        parts.push_back(shortcut_conv_.get());
        parts.push_back(shortcut_bn_.get());
    }
    for (Layer* l : parts) {
        for (Parameter* p : l->parameters()) {
            out.push_back(p);
        }
    }
    return out;
}

std::vector<std::vector<double>*> ResidualBlock::buffers() {
    std::vector<std::vector<double>*> out;
    for (auto* b : bn_a_.buffers()) out.push_back(b);
    for (auto* b : bn_b_.buffers()) out.push_back(b);
    if (shortcut_bn_) {
        for (auto* b : shortcut_bn_->buffers()) out.push_back(b);
    }
    return out;
}

void ResidualBlock::reset_parameters(Rng& rng) {
    conv_a_.reset_parameters(rng);
    bn_a_.reset_parameters(rng);
    conv_b_.reset_parameters(rng);
    bn_b_.reset_parameters(rng);
    if (shortcut_conv_) {
        shortcut_conv_->reset_parameters(rng);
        shortcut_bn_->reset_parameters(rng);
    }
}

nlohmann::json ResidualBlock::config() const {
    return {{"kind", to_string(kind())},
            {"in", in_},
            {"out", out_},
            {"projection", has_projection()}};
}

void ResidualBlock::append_activation_pattern(std::vector<bool>& out) const {
    relu_a_.append_activation_pattern(out);
    relu_out_.append_activation_pattern(out);
}

// ---- Sequential -----------------------------------------------------------

Sequential::Sequential(const Sequential& other) : Layer(other) {
    layers_.reserve(other.layers_.size());
    for (const auto& l : other.layers_) {
        layers_.push_back(l->clone());
    }
}

Sequential& Sequential::operator=(const Sequential& other) {
    if (this != &other) {
        Sequential copy(other);
        *this = std::move(copy);
    }
    return *this;
}

void Sequential::push(std::unique_ptr<Layer> layer) {
    if (!layer) {
        throw ArgumentError("sequential: null layer");
    }
    layers_.push_back(std::move(layer));
    rename_children();
}

void Sequential::set_name(std::string name) {
    name_ = std::move(name);
    rename_children();
}

void Sequential::rename_children() {
    const std::string p = name_.empty() ? "" : name_ + ".";
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        layers_[i]->set_name(p + std::to_string(i) + ":" + std::string(to_string(layers_[i]->kind())));
    }
}

Shape Sequential::output_shape(const Shape& in) const {
    Shape s = in;
    for (const auto& l : layers_) {
        s = l->output_shape(s);
    }
    return s;
}

Tensor3 Sequential::infer(const Tensor3& x) const {
    Tensor3 h = x;
    for (const auto& l : layers_) {
        h = l->infer(h);
    }
    return h;
}

Tensor3 Sequential::train_forward(const Tensor3& x) {
    Tensor3 h = x;
    for (auto& l : layers_) {
        h = l->forward(h, Mode::Train);
    }
    return h;
}

Tensor3 Sequential::backward(const Tensor3& grad_out) {
    Tensor3 g = grad_out;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        g = (*it)->backward(g);
    }
    return g;
}

std::vector<Parameter*> Sequential::parameters() {
    std::vector<Parameter*> out;
    for (auto& l : layers_) {
        for (Parameter* p : l->parameters()) {
            out.push_back(p);
        }
    }
    return out;
}

std::vector<std::vector<double>*> Sequential::buffers() {
    std::vector<std::vector<double>*> out;
    for (auto& l : layers_) {
        for (auto* b : l->buffers()) {
            out.push_back(b);
        }
    }
    return out;
}

void Sequential::reset_parameters(Rng& rng) {
    for (auto& l : layers_) {
        l->reset_parameters(rng);
    }
}

nlohmann::json Sequential::config() const {
    nlohmann::json children = nlohmann::json::array();
    for (const auto& l : layers_) {
        children.push_back(l->config());
    }
    return {{"kind", to_string(kind())}, {"layers", children}};
}

void Sequential::append_activation_pattern(std::vector<bool>& out) const {
    for (const auto& l : layers_) {
        l->append_activation_pattern(out);
    }
}

// ---- factory --------------------------------------------------------------

std::unique_ptr<Layer> make_layer(const nlohmann::json& config) {
    if (!config.is_object() || !config.contains("kind")) {
        throw FormatError("layer config must be an object with a 'kind'");
    }
    const std::string kind = config.at("kind").get<std::string>();
    try {
        if (kind == "conv1d") {
            return std::make_unique<Conv1d>(
                config.at("in").get<std::size_t>(), config.at("out").get<std::size_t>(),
                config.at("kernel").get<std::size_t>(), config.value("stride", std::size_t{1}),
                config.value("padding", std::size_t{0}));
        }
        if (kind == "batchnorm1d") {
            return std::make_unique<BatchNorm1d>(config.at("channels").get<std::size_t>(),
                                                 config.value("momentum", 0.1),
                                                 config.value("eps", 1e-5));
        }
        if (kind == "relu") return std::make_unique<ReLU>();
        if (kind == "global_avg_pool") return std::make_unique<GlobalAvgPool>();
        if (kind == "linear") {
            return std::make_unique<Linear>(config.at("in").get<std::size_t>(),
                                            config.at("out").get<std::size_t>());
        }
        if (kind == "residual_block") {
            return std::make_unique<ResidualBlock>(config.at("in").get<std::size_t>(),
                                                   config.at("out").get<std::size_t>(),
                                                   config.value("projection", false));
        }
        if (kind == "sequential") {
            auto seq = std::make_unique<Sequential>();
            for (const auto& child : config.at("layers")) {
                seq->push(make_layer(child));
            }
            return seq;
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad " + kind + " layer config: " + e.what());
    }
    throw FormatError("unknown layer kind '" + kind + "'");
}

std::size_t parameter_count(const Layer& layer) {
    std::size_t n = 0;
    for (const Parameter* p : layer.parameter_view()) {
        n += p->value.size();
    }
    return n;
}

}  // namespace fpd::nn
