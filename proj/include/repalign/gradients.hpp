#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "repalign/errors.hpp"
#include "repalign/matrix.hpp"
#include "repalign/models.hpp"

namespace repalign {

struct AdapterGrads {
    Matrix w1;
    std::vector<double> b1;
    std::optional<Matrix> w2;
    std::optional<std::vector<double>> b2;
};

struct MapperGrads {
    Matrix w_h;
    std::vector<double> b_h;
    Matrix w_o;
    std::vector<double> b_o;
};

struct GradientSet {
    AdapterGrads adapter;
    std::optional<MapperGrads> mapper;
    double total_loss;
    double output_mse;   // MSE of the final output (mapper out, or adapter out if no mapper)
    double adapter_mse;  // MSE of adapter outputs on common rows vs targets (0 if unused)
};

namespace detail {

inline std::vector<double> column_sums(const Matrix& m) {
    std::vector<double> s(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* p = m.row_ptr(i);
        for (std::size_t j = 0; j < m.cols(); ++j) s[j] += p[j];
    }
    return s;
}

struct LossSpec {
    const Matrix& x;
    const Matrix& t_out;
    // Rows of x that are common items, matched 1:1 with rows of *t_adapter.
    const std::vector<std::size_t>* common_rows;
    const Matrix* t_adapter;
    double lambda3;
};

inline void check_loss_spec(const AdapterModel& a, const MapperModel* m, const LossSpec& spec) {
    a.validate();
    if (spec.x.cols() != a.in_dim()) throw dim_error("gradients: input dim mismatch");
    const std::size_t out_dim = m ? m->out_dim() : a.out_dim();
    if (m) {
        m->validate();
        if (m->in_dim() != a.out_dim())
            throw dim_error("gradients: adapter out dim != mapper common dim");
    }
    if (spec.t_out.rows() != spec.x.rows() || spec.t_out.cols() != out_dim)
        throw dim_error("gradients: output target shape mismatch");
    if (spec.t_adapter) {
        if (!spec.common_rows || spec.common_rows->size() != spec.t_adapter->rows())
            throw dim_error("gradients: common rows do not match adapter targets");
        if (spec.t_adapter->cols() != a.out_dim())
            throw dim_error("gradients: adapter target dim mismatch");
        for (std::size_t r : *spec.common_rows)
            if (r >= spec.x.rows()) throw value_error("gradients: common row out of range");
    }
}

}  // namespace detail

// L = MSE(final(x), t_out) + lambda3 * MSE(adapter(x)[common], t_adapter)
// where final = mapper o adapter when a mapper is given, else the adapter
// output itself. The second term is present only when t_adapter is given.
inline double evaluate_loss(const AdapterModel& a, const MapperModel* m, const Matrix& x,
                            const Matrix& t_out,
                            const std::vector<std::size_t>* common_rows,
                            const Matrix* t_adapter, double lambda3) {
    detail::check_loss_spec(a, m, {x, t_out, common_rows, t_adapter, lambda3});
    const Matrix z = adapter_forward(a, x);
    double loss = m ? mse_loss(mapper_forward(*m, z), t_out) : mse_loss(z, t_out);
    if (t_adapter) loss += lambda3 * mse_loss(take_rows(z, *common_rows), *t_adapter);
    return loss;
}

// Exact analytic gradients of the loss above for every parameter of the
// adapter and (when given) the mapper.
inline GradientSet compute_gradients(const AdapterModel& a, const MapperModel* m,
                                     const Matrix& x, const Matrix& t_out,
                                     const std::vector<std::size_t>* common_rows,
                                     const Matrix* t_adapter, double lambda3) {
    detail::check_loss_spec(a, m, {x, t_out, common_rows, t_adapter, lambda3});
    const std::size_t n = x.rows();

    // Forward, keeping intermediates.
    const Matrix pre1 = detail::linear_forward(x, a.w1, a.b1);
    Matrix z = pre1;
    switch (a.kind) {
        case AdapterKind::linear: break;
        case AdapterKind::linear_gelu:
            for (double& v : z.data()) v = gelu(v);
            break;
        case AdapterKind::linear_relu:
            for (double& v : z.data()) v = relu(v);
            break;
        case AdapterKind::two_layer_linear:
            z = detail::linear_forward(pre1, *a.w2, *a.b2);
            break;
    }

    Matrix d_z(z.rows(), z.cols());
    double output_mse = 0.0;
    std::optional<MapperGrads> mapper_grads;

    if (m) {
        const Matrix h_pre = detail::linear_forward(z, m->w_h, m->b_h);
        Matrix h = h_pre;
        for (double& v : h.data()) v = gelu(v);
        Matrix out = detail::linear_forward(h, m->w_o, m->b_o);
        if (m->residual)
            for (std::size_t i = 0; i < out.rows(); ++i)
                for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += z(i, j);
        output_mse = mse_loss(out, t_out);

        Matrix d_out(out.rows(), out.cols());
        const double scale = 2.0 / static_cast<double>(out.data().size());
        for (std::size_t i = 0; i < out.data().size(); ++i)
            d_out.data()[i] = scale * (out.data()[i] - t_out.data()[i]);

        MapperGrads mg{Matrix(m->w_h.rows(), m->w_h.cols()), {}, matmul_at_b(d_out, h), {}};
        mg.b_o = detail::column_sums(d_out);
        Matrix d_h = matmul(d_out, m->w_o);
        for (std::size_t i = 0; i < d_h.data().size(); ++i)
            d_h.data()[i] *= gelu_prime(h_pre.data()[i]);
        mg.w_h = matmul_at_b(d_h, z);
        mg.b_h = detail::column_sums(d_h);
        d_z = matmul(d_h, m->w_h);
        if (m->residual)
            for (std::size_t i = 0; i < d_z.data().size(); ++i)
                d_z.data()[i] += d_out.data()[i];
        mapper_grads = std::move(mg);
    } else {
        output_mse = mse_loss(z, t_out);
        const double scale = 2.0 / static_cast<double>(z.data().size());
        for (std::size_t i = 0; i < z.data().size(); ++i)
            d_z.data()[i] = scale * (z.data()[i] - t_out.data()[i]);
    }

    double adapter_mse = 0.0;
    if (t_adapter) {
        const std::size_t k = t_adapter->rows();
        const double scale = 2.0 * lambda3 / static_cast<double>(t_adapter->data().size());
        for (std::size_t r = 0; r < k; ++r) {
            const std::size_t row = (*common_rows)[r];
            for (std::size_t j = 0; j < z.cols(); ++j) {
                const double diff = z(row, j) - (*t_adapter)(r, j);
                adapter_mse += diff * diff;
                d_z(row, j) += scale * diff;
            }
        }
        adapter_mse /= static_cast<double>(t_adapter->data().size());
    }

    AdapterGrads ag{Matrix(a.w1.rows(), a.w1.cols()), {}, std::nullopt, std::nullopt};
    switch (a.kind) {
        case AdapterKind::linear: {
            ag.w1 = matmul_at_b(d_z, x);
            ag.b1 = detail::column_sums(d_z);
            break;
        }
        case AdapterKind::linear_gelu:
        case AdapterKind::linear_relu: {
            Matrix d_pre = d_z;
            for (std::size_t i = 0; i < d_pre.data().size(); ++i)
                d_pre.data()[i] *= a.kind == AdapterKind::linear_gelu
                                       ? gelu_prime(pre1.data()[i])
                                       : relu_prime(pre1.data()[i]);
            ag.w1 = matmul_at_b(d_pre, x);
            ag.b1 = detail::column_sums(d_pre);
            break;
        }
        case AdapterKind::two_layer_linear: {
            ag.w2 = matmul_at_b(d_z, pre1);
            ag.b2 = detail::column_sums(d_z);
            Matrix d_pre1 = matmul(d_z, *a.w2);
            ag.w1 = matmul_at_b(d_pre1, x);
            ag.b1 = detail::column_sums(d_pre1);
            break;
        }
    }
    (void)n;
    return GradientSet{std::move(ag), std::move(mapper_grads),
                       output_mse + lambda3 * adapter_mse, output_mse, adapter_mse};
}

}  // namespace repalign
