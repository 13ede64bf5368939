#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "repalign/errors.hpp"
#include "repalign/matrix.hpp"
#include "repalign/rng.hpp"

namespace repalign {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Exact GELU, erf form.
inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

inline double gelu_prime(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
    return cdf + x * pdf;
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }
inline double relu_prime(double x) { return x > 0.0 ? 1.0 : 0.0; }

enum class AdapterKind { linear, linear_gelu, linear_relu, two_layer_linear };

inline std::string to_string(AdapterKind k) {
    switch (k) {
        case AdapterKind::linear: return "linear";
        case AdapterKind::linear_gelu: return "linear_gelu";
        case AdapterKind::linear_relu: return "linear_relu";
        case AdapterKind::two_layer_linear: return "two_layer_linear";
    }
    throw value_error("unknown adapter kind");
}

inline AdapterKind adapter_kind_from_string(const std::string& s) {
    if (s == "linear") return AdapterKind::linear;
    if (s == "linear_gelu") return AdapterKind::linear_gelu;
    if (s == "linear_relu") return AdapterKind::linear_relu;
    if (s == "two_layer_linear") return AdapterKind::two_layer_linear;
    throw value_error("unknown adapter kind: " + s);
}

// Per-subject map from subject input space to the common space. Single-layer
// kinds hold only (w1, b1); two_layer_linear composes two linear maps with
// no activation in between.
struct AdapterModel {
    AdapterKind kind;
    Matrix w1;               // out x in (hidden x in for two-layer)
    std::vector<double> b1;  // out (hidden for two-layer)
    std::optional<Matrix> w2;
    std::optional<std::vector<double>> b2;

    std::size_t in_dim() const { return w1.cols(); }
    std::size_t out_dim() const { return w2 ? w2->rows() : w1.rows(); }

    void validate() const {
        const bool two = kind == AdapterKind::two_layer_linear;
        if (two != (w2.has_value() && b2.has_value()))
            throw dim_error("AdapterModel: layer count inconsistent with kind " +
                            to_string(kind));
        if (b1.size() != w1.rows()) throw dim_error("AdapterModel: b1 size mismatch");
        if (two) {
            if (w2->cols() != w1.rows())
                throw dim_error("AdapterModel: w2 cols != w1 rows");
            if (b2->size() != w2->rows()) throw dim_error("AdapterModel: b2 size mismatch");
        }
    }
};

// Shared map from common space to target latents: one GELU hidden layer plus
// an optional residual skip, legal only when common dim == target dim.
struct MapperModel {
    Matrix w_h;  // hidden x common
    std::vector<double> b_h;
    Matrix w_o;  // target x hidden
    std::vector<double> b_o;
    bool residual;

    std::size_t in_dim() const { return w_h.cols(); }
    std::size_t hidden_dim() const { return w_h.rows(); }
    std::size_t out_dim() const { return w_o.rows(); }

    void validate() const {
        if (b_h.size() != w_h.rows() || b_o.size() != w_o.rows())
            throw dim_error("MapperModel: bias size mismatch");
        if (w_o.cols() != w_h.rows()) throw dim_error("MapperModel: shape chain broken");
        if (residual && in_dim() != out_dim())
            throw dim_error("MapperModel: residual requires common dim == target dim, got " +
                            std::to_string(in_dim()) + " vs " + std::to_string(out_dim()));
    }
};

namespace detail {

inline Matrix init_weight(std::size_t out, std::size_t in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Matrix w(out, in);
    for (std::size_t i = 0; i < out; ++i)
        for (std::size_t j = 0; j < in; ++j) w(i, j) = rng.uniform(-bound, bound);
    return w;
}

inline Matrix linear_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
    Matrix out = matmul_a_bt(x, w);
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += b[j];
    return out;
}

}  // namespace detail

// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero. Draw
// order (w1 row-major, then w2) is part of the determinism contract.
inline AdapterModel make_adapter(AdapterKind kind, std::size_t in, std::size_t out,
                                 std::size_t hidden, Rng& rng) {
    if (kind == AdapterKind::two_layer_linear) {
        if (hidden == 0) throw dim_error("make_adapter: two-layer kind needs hidden > 0");
        AdapterModel a{kind, detail::init_weight(hidden, in, rng),
                       std::vector<double>(hidden, 0.0), detail::init_weight(out, hidden, rng),
                       std::vector<double>(out, 0.0)};
        a.validate();
        return a;
    }
    AdapterModel a{kind, detail::init_weight(out, in, rng), std::vector<double>(out, 0.0),
                   std::nullopt, std::nullopt};
    a.validate();
    return a;
}

inline MapperModel make_mapper(std::size_t common, std::size_t hidden, std::size_t target,
                               bool residual, Rng& rng) {
    MapperModel m{detail::init_weight(hidden, common, rng), std::vector<double>(hidden, 0.0),
                  detail::init_weight(target, hidden, rng), std::vector<double>(target, 0.0),
                  residual};
    m.validate();
    return m;
}

inline Matrix adapter_forward(const AdapterModel& a, const Matrix& x) {
    a.validate();
    if (x.cols() != a.in_dim())
        throw dim_error("adapter_forward: input cols " + std::to_string(x.cols()) +
                        " != adapter in dim " + std::to_string(a.in_dim()));
    Matrix z = detail::linear_forward(x, a.w1, a.b1);
    switch (a.kind) {
        case AdapterKind::linear:
            return z;
        case AdapterKind::linear_gelu:
            for (double& v : z.data()) v = gelu(v);
            return z;
        case AdapterKind::linear_relu:
            for (double& v : z.data()) v = relu(v);
            return z;
        case AdapterKind::two_layer_linear:
            return detail::linear_forward(z, *a.w2, *a.b2);
    }
    throw value_error("adapter_forward: unknown kind");
}

inline Matrix mapper_forward(const MapperModel& m, const Matrix& z) {
    m.validate();
    if (z.cols() != m.in_dim())
        throw dim_error("mapper_forward: input cols " + std::to_string(z.cols()) +
                        " != mapper common dim " + std::to_string(m.in_dim()));
    Matrix h = detail::linear_forward(z, m.w_h, m.b_h);
    for (double& v : h.data()) v = gelu(v);
    Matrix out = detail::linear_forward(h, m.w_o, m.b_o);
    if (m.residual)
        for (std::size_t i = 0; i < out.rows(); ++i)
            for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += z(i, j);
    return out;
}

inline double mse_loss(const Matrix& p, const Matrix& t) {
    if (p.rows() != t.rows() || p.cols() != t.cols())
        throw dim_error("mse_loss: shape mismatch " + p.shape_str() + " vs " + t.shape_str());
    double acc = 0.0;
    for (std::size_t i = 0; i < p.data().size(); ++i) {
        const double d = p.data()[i] - t.data()[i];
        acc += d * d;
    }
    return acc / static_cast<double>(p.data().size());
}

}  // namespace repalign
