#pragma once

#include <cstddef>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fpd/nn/tensor.hpp"

namespace fpd::nn {

using Rng = std::mt19937_64;

enum class Mode { Train, Eval };

enum class LayerKind { Conv1d, BatchNorm1d, ReLU, Linear, GlobalAvgPool, ResidualBlock, Sequential };

std::string_view to_string(LayerKind kind) noexcept;

/// A learnable array and its accumulated gradient (same length).
struct Parameter {
    std::string name;
    std::string owner;  ///< name of the layer holding it
    std::vector<double> value;
    std::vector<double> grad;

    Parameter() = default;
    Parameter(std::string n, std::size_t size)
        : name(std::move(n)), value(size, 0.0), grad(size, 0.0) {}

    std::string qualified_name() const { return owner.empty() ? name : owner + "." + name; }
};

/// Base class of the trainable layer set.
///
/// forward(x, Mode::Train) caches what backward() needs; backward() consumes
/// that cache and accumulates parameter gradients (call zero_grad() between
/// steps). Eval-mode inference goes through the const infer() and never
/// touches layer state, so a frozen network can be shared across threads.
class Layer {
public:
    virtual ~Layer() = default;

    virtual LayerKind kind() const noexcept = 0;

    const std::string& name() const noexcept { return name_; }
    virtual void set_name(std::string name);

    /// Shape produced for input shape `in`; throws DimensionError naming the layer.
    virtual Shape output_shape(const Shape& in) const = 0;

    Tensor3 forward(const Tensor3& x, Mode mode);
    virtual Tensor3 infer(const Tensor3& x) const = 0;
    virtual Tensor3 backward(const Tensor3& grad_out) = 0;

    virtual std::vector<Parameter*> parameters() { return {}; }
    std::vector<const Parameter*> parameter_view() const;

    /// Non-learnable state that is persisted (batchnorm running statistics).
    virtual std::vector<std::vector<double>*> buffers() { return {}; }
    std::vector<const std::vector<double>*> buffer_view() const;

    /// Kaiming-uniform (fan-in) weights, zero biases, unit batchnorm scale.
    virtual void reset_parameters(Rng& /*rng*/) {}

    virtual std::unique_ptr<Layer> clone() const = 0;
    virtual nlohmann::json config() const = 0;

    /// ReLU on/off pattern of the last training forward pass (used by the
    /// finite-difference checker to detect kink crossings).
    virtual void append_activation_pattern(std::vector<bool>& /*out*/) const {}

    void zero_grad();

protected:
    virtual Tensor3 train_forward(const Tensor3& x) = 0;

    [[noreturn]] void fail_shape(const std::string& detail) const;
    void require_cache(bool cached) const;

    std::string name_;
};

class Conv1d final : public Layer {
public:
    Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
           std::size_t stride = 1, std::size_t padding = 0);

    LayerKind kind() const noexcept override { return LayerKind::Conv1d; }
    Shape output_shape(const Shape& in) const override;
    Tensor3 infer(const Tensor3& x) const override;
    Tensor3 backward(const Tensor3& grad_out) override;
    std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
    void reset_parameters(Rng& rng) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv1d>(*this); }
    nlohmann::json config() const override;

    Parameter& weight() noexcept { return weight_; }  ///< (out, in, kernel)
    Parameter& bias() noexcept { return bias_; }

protected:
    Tensor3 train_forward(const Tensor3& x) override;

private:
    void im2col(std::span<const double> sample, std::size_t length, std::size_t out_length,
                std::vector<double>& col) const;

    std::size_t in_, out_, kernel_, stride_, padding_;
    Parameter weight_;
    Parameter bias_;
    Tensor3 input_;
    bool cached_ = false;
};

class BatchNorm1d final : public Layer {
public:
    explicit BatchNorm1d(std::size_t channels, double momentum = 0.1, double eps = 1e-5);

    LayerKind kind() const noexcept override { return LayerKind::BatchNorm1d; }
    Shape output_shape(const Shape& in) const override;
    Tensor3 infer(const Tensor3& x) const override;
    Tensor3 backward(const Tensor3& grad_out) override;
    std::vector<Parameter*> parameters() override { return {&gamma_, &beta_}; }
    std::vector<std::vector<double>*> buffers() override { return {&running_mean_, &running_var_}; }
    void reset_parameters(Rng& rng) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNorm1d>(*this); }
    nlohmann::json config() const override;

    Parameter& gamma() noexcept { return gamma_; }
    Parameter& beta() noexcept { return beta_; }
    const std::vector<double>& running_mean() const noexcept { return running_mean_; }
    const std::vector<double>& running_var() const noexcept { return running_var_; }

protected:
    Tensor3 train_forward(const Tensor3& x) override;

private:
    std::size_t channels_;
    double momentum_, eps_;
    Parameter gamma_, beta_;
    std::vector<double> running_mean_, running_var_;
    Tensor3 normalized_;
    std::vector<double> inv_std_;
    bool cached_ = false;
};

class ReLU final : public Layer {
public:
    LayerKind kind() const noexcept override { return LayerKind::ReLU; }
    Shape output_shape(const Shape& in) const override { return in; }
    Tensor3 infer(const Tensor3& x) const override;
    Tensor3 backward(const Tensor3& grad_out) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<ReLU>(*this); }
    nlohmann::json config() const override;
    void append_activation_pattern(std::vector<bool>& out) const override;

protected:
    Tensor3 train_forward(const Tensor3& x) override;

private:
    std::vector<bool> mask_;
    Shape shape_{};
    bool cached_ = false;
};

/// Fully connected layer over the flattened (channels·length) sample; the
/// output has shape (batch, out_features, 1).
class Linear final : public Layer {
public:
    Linear(std::size_t in_features, std::size_t out_features);

    LayerKind kind() const noexcept override { return LayerKind::Linear; }
    Shape output_shape(const Shape& in) const override;
    Tensor3 infer(const Tensor3& x) const override;
    Tensor3 backward(const Tensor3& grad_out) override;
    std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
    void reset_parameters(Rng& rng) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Linear>(*this); }
    nlohmann::json config() const override;

    std::size_t in_features() const noexcept { return in_; }
    std::size_t out_features() const noexcept { return out_; }
    Parameter& weight() noexcept { return weight_; }  ///< (out, in)
    Parameter& bias() noexcept { return bias_; }

protected:
    Tensor3 train_forward(const Tensor3& x) override;

private:
    std::size_t in_, out_;
    Parameter weight_, bias_;
    Tensor3 input_;
    bool cached_ = false;
};

/// Mean over the length axis: (B, C, L) -> (B, C, 1).
class GlobalAvgPool final : public Layer {
public:
    LayerKind kind() const noexcept override { return LayerKind::GlobalAvgPool; }
    Shape output_shape(const Shape& in) const override;
    Tensor3 infer(const Tensor3& x) const override;
    Tensor3 backward(const Tensor3& grad_out) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<GlobalAvgPool>(*this); }
    nlohmann::json config() const override;

protected:
    Tensor3 train_forward(const Tensor3& x) override;

private:
    Shape in_shape_{};
    bool cached_ = false;
};

/// conv3-bn-relu-conv3-bn plus shortcut, followed by ReLU. A channel change
/// needs `projection` (1x1 conv + bn on the shortcut).
class ResidualBlock final : public Layer {
public:
    ResidualBlock(std::size_t in_channels, std::size_t out_channels, bool projection = false);
    ResidualBlock(const ResidualBlock& other);
    ResidualBlock& operator=(const ResidualBlock&) = delete;

    LayerKind kind() const noexcept override { return LayerKind::ResidualBlock; }
    void set_name(std::string name) override;
    Shape output_shape(const Shape& in) const override;
    Tensor3 infer(const Tensor3& x) const override;
    Tensor3 backward(const Tensor3& grad_out) override;
    std::vector<Parameter*> parameters() override;
    std::vector<std::vector<double>*> buffers() override;
    void reset_parameters(Rng& rng) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<ResidualBlock>(*this); }
    nlohmann::json config() const override;
    void append_activation_pattern(std::vector<bool>& out) const override;

    bool has_projection() const noexcept { return static_cast<bool>(shortcut_conv_); }
    /// Inner path layers in order: conv_a, bn_a, relu_a, conv_b, bn_b.
    std::vector<Layer*> inner_layers();

protected:
    Tensor3 train_forward(const Tensor3& x) override;

private:
    std::size_t in_, out_;
    Conv1d conv_a_;
    BatchNorm1d bn_a_;
    ReLU relu_a_;
    Conv1d conv_b_;
    BatchNorm1d bn_b_;
    std::unique_ptr<Conv1d> shortcut_conv_;
    std::unique_ptr<BatchNorm1d> shortcut_bn_;
    ReLU relu_out_;
};

/// Ordered layer stack.
class Sequential final : public Layer {
public:
    Sequential() = default;
    Sequential(const Sequential& other);
    Sequential& operator=(const Sequential& other);
    Sequential(Sequential&&) noexcept = default;
    Sequential& operator=(Sequential&&) noexcept = default;

    template <typename L, typename... Args>
    L& add(Args&&... args) {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L& ref = *layer;
        push(std::move(layer));
        return ref;
    }
    void push(std::unique_ptr<Layer> layer);

    std::size_t size() const noexcept { return layers_.size(); }
    Layer& at(std::size_t i) { return *layers_.at(i); }
    const Layer& at(std::size_t i) const { return *layers_.at(i); }

    LayerKind kind() const noexcept override { return LayerKind::Sequential; }
    void set_name(std::string name) override;
    Shape output_shape(const Shape& in) const override;
    Tensor3 infer(const Tensor3& x) const override;
    Tensor3 backward(const Tensor3& grad_out) override;
    std::vector<Parameter*> parameters() override;
    std::vector<std::vector<double>*> buffers() override;
    void reset_parameters(Rng& rng) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Sequential>(*this); }
    nlohmann::json config() const override;
    void append_activation_pattern(std::vector<bool>& out) const override;

protected:
    Tensor3 train_forward(const Tensor3& x) override;

private:
    void rename_children();

    std::vector<std::unique_ptr<Layer>> layers_;
};

/// Rebuilds a layer (with freshly zeroed parameters) from its config().
std::unique_ptr<Layer> make_layer(const nlohmann::json& config);

/// Total number of learnable scalars.
std::size_t parameter_count(const Layer& layer);

}  // namespace fpd::nn
