#include "fpd/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace fpd::nn {

namespace {

double probe(Layer& net, const Tensor3& x, const std::vector<double>& r,
             std::vector<bool>& pattern) {
    const Tensor3 y = net.forward(x, Mode::Train);
    pattern.clear();
    net.append_activation_pattern(pattern);
    double s = 0.0;
    const auto yd = y.data();
    for (std::size_t i = 0; i < yd.size(); ++i) {
        s += r[i] * yd[i];
    }
    return s;
}

double relative_error(double a, double n, double floor) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

/// Central difference of the probe loss with respect to *slot, retrying with
/// smaller steps while the ReLU pattern differs from the reference.
bool numeric_derivative(Layer& net, const Tensor3& x, double* slot, const std::vector<double>& r,
                        const std::vector<bool>& reference, const GradCheckOptions& opt,
                        double& out) {
    const double orig = *slot;
    std::vector<bool> pat_plus, pat_minus;
    double h = opt.step;
    for (int attempt = 0; attempt <= opt.refinements; ++attempt, h /= 10.0) {
        *slot = orig + h;
        const double lp = probe(net, x, r, pat_plus);
        *slot = orig - h;
        const double lm = probe(net, x, r, pat_minus);
        *slot = orig;
        if (pat_plus == reference && pat_minus == reference) {
            out = (lp - lm) / (2.0 * h);
            return true;
        }
    }
    return false;
}

void record(GradCheckResult& result, GradCheckEntry entry) {
    if (result.worst.empty() || entry.max_rel_error > result.max_rel_error) {
        result.max_rel_error = entry.max_rel_error;
        result.worst = entry.target;
    }
    result.skipped += entry.skipped;
    result.passed = result.passed && entry.passed;
    result.entries.push_back(std::move(entry));
}

Tensor3 random_tensor(Shape s, Rng& rng) {
    Tensor3 t(s);
    std::normal_distribution<double> n(0.0, 1.0);
    for (double& v : t.data()) {
        v = n(rng);
    }
    return t;
}

/// Batchnorm gamma/beta start at 1/0; randomize them so the check does not
/// only probe the initial point.
void jitter_parameters(Layer& net, Rng& rng) {
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (Parameter* p : net.parameters()) {
        for (double& v : p->value) {
            v += u(rng);
        }
    }
}

}  // namespace

GradCheckResult check_gradients(Layer& net, const Tensor3& x, Rng& rng,
                                const GradCheckOptions& opt) {
    GradCheckResult result;
    result.name = net.name().empty() ? std::string(to_string(net.kind())) : net.name();

    const Shape ys = net.output_shape(x.shape());
    std::vector<double> r(ys.size());
    std::normal_distribution<double> n(0.0, 1.0);
    for (double& v : r) {
        v = n(rng);
    }

    net.zero_grad();
    std::vector<bool> reference;
    probe(net, x, r, reference);
    const Tensor3 dx = net.backward(Tensor3(ys, r));

    auto params = net.parameters();
    std::vector<std::vector<double>> analytic;
    for (Parameter* p : params) {
        analytic.push_back(p->grad);
        if (!opt.corrupt.empty() && p->owner.find(opt.corrupt) != std::string::npos) {
            for (double& g : analytic.back()) {
                g = g * 1.1 + 1e-2;
            }
        }
    }

    for (std::size_t i = 0; i < params.size(); ++i) {
        GradCheckEntry e;
        e.target = params[i]->qualified_name();
        for (std::size_t j = 0; j < params[i]->value.size(); ++j) {
            double num = 0.0;
            if (!numeric_derivative(net, x, &params[i]->value[j], r, reference, opt, num)) {
                ++e.skipped;
                continue;
            }
            ++e.checked;
            e.max_rel_error =
                std::max(e.max_rel_error, relative_error(analytic[i][j], num, opt.floor));
        }
        e.passed = e.max_rel_error <= opt.tolerance;
        record(result, std::move(e));
    }

    if (opt.check_input) {
        GradCheckEntry e;
        e.target = result.name + ".input";
        Tensor3 xp = x;
        for (std::size_t j = 0; j < xp.size(); ++j) {
            double num = 0.0;
            if (!numeric_derivative(net, xp, &xp.storage()[j], r, reference, opt, num)) {
                ++e.skipped;
                continue;
            }
            ++e.checked;
            e.max_rel_error = std::max(e.max_rel_error, relative_error(dx.data()[j], num, opt.floor));
        }
        e.passed = e.max_rel_error <= opt.tolerance;
        record(result, std::move(e));
    }
    return result;
}

std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed, const GradCheckOptions& opt) {
    Rng rng(seed);
    auto pick = [&rng](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    std::vector<GradCheckResult> out;
    auto run = [&](Layer& layer, const std::string& name, Shape in) {
        layer.set_name(name);
        layer.reset_parameters(rng);
        jitter_parameters(layer, rng);
        const Tensor3 x = random_tensor(in, rng);
        out.push_back(check_gradients(layer, x, rng, opt));
    };

    const std::size_t batch = pick(3, 5);
    const std::size_t channels = pick(2, 4);
    const std::size_t length = pick(5, 9);
    const Shape in{batch, channels, length};

    Conv1d conv(channels, pick(2, 4), 3, pick(1, 2), 1);
    run(conv, "conv1d", in);

    BatchNorm1d bn(channels);
    run(bn, "batchnorm1d", in);

    ReLU relu;
    run(relu, "relu", in);

    Linear linear(channels * length, pick(2, 5));
    run(linear, "linear", in);

    GlobalAvgPool pool;
    run(pool, "global_avg_pool", in);

    ResidualBlock identity_block(channels, channels, false);
    run(identity_block, "residual_block", in);

    ResidualBlock projection_block(channels, channels + 2, true);
    run(projection_block, "residual_block_projection", in);

    Sequential net;
    const std::size_t width = pick(3, 5);
    net.add<Conv1d>(channels, width, 3, 1, 1);
    net.add<BatchNorm1d>(width);
    net.add<ReLU>();
    net.add<ResidualBlock>(width, width);
    net.add<ResidualBlock>(width, width);
    net.add<Linear>(width * length, 3);
    run(net, "resnet2", in);

    return out;
}

}  // namespace fpd::nn
