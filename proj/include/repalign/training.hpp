#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "repalign/dataset.hpp"
#include "repalign/errors.hpp"
#include "repalign/gradients.hpp"
#include "repalign/matrix.hpp"
#include "repalign/models.hpp"
#include "repalign/rng.hpp"

namespace repalign {

enum class TrainMode { baseline, aamax, step1_only, frozen_mapper };

inline std::string to_string(TrainMode m) {
    switch (m) {
        case TrainMode::baseline: return "baseline";
        case TrainMode::aamax: return "aamax";
        case TrainMode::step1_only: return "step1_only";
        case TrainMode::frozen_mapper: return "frozen_mapper";
    }
    throw value_error("unknown train mode");
}

inline TrainMode train_mode_from_string(const std::string& s) {
    if (s == "baseline") return TrainMode::baseline;
    if (s == "aamax") return TrainMode::aamax;
    if (s == "step1_only" || s == "step1") return TrainMode::step1_only;
    if (s == "frozen_mapper" || s == "frozen-mapper") return TrainMode::frozen_mapper;
    throw value_error("unknown train mode: " + s);
}

struct TrainConfig {
    std::size_t epochs = 500;
    double learning_rate = 0.01;
    double lambda3 = 1.0;
    std::size_t stage1_epochs = 2000;
    double stage1_tolerance = 1e-6;
    std::uint64_t seed = 1;
    TrainMode mode = TrainMode::aamax;

    void validate() const {
        if (learning_rate <= 0.0) throw value_error("TrainConfig: learning_rate must be > 0");
        if (lambda3 < 0.0) throw value_error("TrainConfig: lambda3 must be >= 0");
        if (!(stage1_tolerance >= 0.0))
            throw value_error("TrainConfig: stage1_tolerance must be >= 0");
    }
};

// One record per completed epoch. Losses are measured on the batch at the
// start of the epoch (the values the epoch's gradients came from).
struct TraceRow {
    std::size_t epoch;
    double total_loss;
    double output_mse;
    double adapter_mse;
    double wall_seconds;
};

struct TrainTrace {
    std::vector<TraceRow> rows;
};

// Architecture knobs that live outside TrainConfig: the shape of the adapter
// and mapper being trained.
struct ModelSpec {
    AdapterKind kind = AdapterKind::linear_gelu;
    std::size_t common_dim = 32;
    std::size_t adapter_hidden = 32;  // used by two_layer_linear only
    std::size_t mapper_hidden = 64;
    // -1: residual iff common_dim == target dim; 0/1 force off/on.
    int residual = -1;

    bool residual_for(std::size_t target_dim) const {
        if (residual >= 0) return residual != 0;
        return common_dim == target_dim;
    }
};

namespace detail {

// Plain Adam (bias-corrected), full batch. One instance per optimization
// phase so each stage starts with fresh moments.
class AdamOptimizer {
public:
    explicit AdamOptimizer(double lr) : lr_(lr) {}

    using ParamGrad = std::pair<std::vector<double>*, const std::vector<double>*>;

    void step(const std::vector<ParamGrad>& tensors) {
        if (m_.empty()) {
            for (const auto& [p, g] : tensors) {
                (void)g;
                m_.emplace_back(p->size(), 0.0);
                v_.emplace_back(p->size(), 0.0);
            }
        }
        ++t_;
        const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            auto& p = *tensors[i].first;
            const auto& g = *tensors[i].second;
            for (std::size_t k = 0; k < p.size(); ++k) {
                m_[i][k] = kBeta1 * m_[i][k] + (1.0 - kBeta1) * g[k];
                v_[i][k] = kBeta2 * v_[i][k] + (1.0 - kBeta2) * g[k] * g[k];
                p[k] -= lr_ * (m_[i][k] / c1) / (std::sqrt(v_[i][k] / c2) + kEps);
            }
        }
    }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;
    double lr_;
    std::size_t t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

struct Clock {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

// Core loop shared by every training entry point. Mutates the given models.
// `stop_tolerance` is checked against the epoch's loss before the update is
// applied, so a tolerance of +inf performs zero updates.
inline void run_training(AdapterModel& adapter, MapperModel* mapper, bool update_mapper,
                         const Matrix& x, const Matrix& t_out,
                         const std::vector<std::size_t>* common_rows, const Matrix* t_adapter,
                         double lambda3, std::size_t epochs, double lr,
                         std::optional<double> stop_tolerance, std::size_t epoch_offset,
                         TrainTrace& trace) {
    AdamOptimizer opt(lr);
    Clock clock;
    for (std::size_t ep = 0; ep < epochs; ++ep) {
        GradientSet g =
            compute_gradients(adapter, mapper, x, t_out, common_rows, t_adapter, lambda3);
        if (!std::isfinite(g.total_loss))
            throw convergence_error("training diverged (non-finite loss) at epoch " +
                                    std::to_string(epoch_offset + ep));
        if (stop_tolerance && g.total_loss <= *stop_tolerance) break;

        std::vector<AdamOptimizer::ParamGrad> tensors;
        tensors.emplace_back(&adapter.w1.data(), &g.adapter.w1.data());
        tensors.emplace_back(&adapter.b1, &g.adapter.b1);
        if (adapter.w2) {
            tensors.emplace_back(&adapter.w2->data(), &g.adapter.w2->data());
            tensors.emplace_back(&*adapter.b2, &*g.adapter.b2);
        }
        if (mapper && update_mapper) {
            tensors.emplace_back(&mapper->w_h.data(), &g.mapper->w_h.data());
            tensors.emplace_back(&mapper->b_h, &g.mapper->b_h);
            tensors.emplace_back(&mapper->w_o.data(), &g.mapper->w_o.data());
            tensors.emplace_back(&mapper->b_o, &g.mapper->b_o);
        }
        opt.step(tensors);
        trace.rows.push_back(
            {epoch_offset + ep, g.total_loss, g.output_mse, g.adapter_mse, clock.elapsed()});
    }
}

}  // namespace detail

struct ReferenceResult {
    AdapterModel adapter;
    MapperModel mapper;
    TrainTrace trace;
};

// End-to-end pre-training of the reference subject: output MSE to the target
// latents on the subject's non-test rows.
inline ReferenceResult train_reference(const SubjectDataset& subject, const Matrix& targets,
                                       const ModelSpec& spec, const TrainConfig& cfg) {
    cfg.validate();
    subject.validate();
    if (targets.rows() != subject.embeddings.rows())
        throw dim_error("train_reference: targets not row-matched to subject items");
    const auto rows = subject.train_rows();
    if (rows.empty()) throw value_error("train_reference: subject has no training rows");
    const Matrix x = take_rows(subject.embeddings, rows);
    const Matrix t = take_rows(targets, rows);

    Rng rng(cfg.seed);
    AdapterModel adapter = make_adapter(spec.kind, x.cols(), spec.common_dim,
                                        spec.adapter_hidden, rng);
    MapperModel mapper = make_mapper(spec.common_dim, spec.mapper_hidden, t.cols(),
                                     spec.residual_for(t.cols()), rng);
    TrainTrace trace;
    detail::run_training(adapter, &mapper, true, x, t, nullptr, nullptr, 0.0, cfg.epochs,
                         cfg.learning_rate, std::nullopt, 0, trace);
    return {std::move(adapter), std::move(mapper), std::move(trace)};
}

struct Stage1Result {
    AdapterModel adapter;
    TrainTrace trace;
};

// Stage 1 of AAMax: the new subject's adapter alone is fit to the reference
// adapter's common-space outputs on the shared items, running until
// stage1_epochs or until the loss drops to stage1_tolerance.
inline Stage1Result align_adapter_stage1(const Matrix& x_common,
                                         const Matrix& ref_common_outputs, AdapterKind kind,
                                         std::size_t adapter_hidden, const TrainConfig& cfg) {
    cfg.validate();
    if (x_common.rows() != ref_common_outputs.rows())
        throw dim_error("align_adapter_stage1: common rows not matched 1:1 with reference "
                        "outputs");
    Rng rng(cfg.seed);
    AdapterModel adapter =
        make_adapter(kind, x_common.cols(), ref_common_outputs.cols(), adapter_hidden, rng);
    TrainTrace trace;
    detail::run_training(adapter, nullptr, false, x_common, ref_common_outputs, nullptr,
                         nullptr, 0.0, cfg.stage1_epochs, cfg.learning_rate,
                         cfg.stage1_tolerance, 0, trace);
    return {std::move(adapter), std::move(trace)};
}

struct FinetuneResult {
    AdapterModel adapter;
    MapperModel mapper;
    TrainTrace trace;
};

// Fine-tunes a new subject against a trained reference.
//   baseline:      seeded random adapter, mapper starts from ref_mapper,
//                  output MSE only.
//   aamax:         stage 1 first, then end-to-end with the combined loss
//                  (adapter MSE on common items, weight lambda3).
//   step1_only:    stage 1, mapper returned bit-identical to ref_mapper.
//   frozen_mapper: combined loss end-to-end, mapper never updated.
// `targets` is row-matched to the subject's items. `common_subset` selects
// positions within the subject's common block (default: all commons);
// `include_unique` adds the subject's unique rows to the end-to-end batch
// with output loss only.
inline FinetuneResult finetune(const SubjectDataset& subject, const Matrix& targets,
                               const Matrix& ref_common_outputs, const MapperModel& ref_mapper,
                               const ModelSpec& spec, const TrainConfig& cfg,
                               const std::optional<std::vector<std::size_t>>& common_subset =
                                   std::nullopt,
                               bool include_unique = false) {
    cfg.validate();
    subject.validate();
    ref_mapper.validate();
    if (targets.rows() != subject.embeddings.rows())
        throw dim_error("finetune: targets not row-matched to subject items");
    if (spec.common_dim != ref_mapper.in_dim())
        throw dim_error("finetune: adapter common dim != reference mapper input dim");

    const auto common_block = subject.rows_with(Split::common);
    if (common_block.size() != ref_common_outputs.rows())
        throw dim_error("finetune: reference common outputs not matched to subject commons");

    std::vector<std::size_t> chosen_commons;
    if (common_subset) {
        for (std::size_t pos : *common_subset) {
            if (pos >= common_block.size())
                throw value_error("finetune: common subset index " + std::to_string(pos) +
                                  " out of range");
            chosen_commons.push_back(pos);
        }
    } else {
        chosen_commons.resize(common_block.size());
        std::iota(chosen_commons.begin(), chosen_commons.end(), std::size_t{0});
    }
    if (chosen_commons.empty()) throw value_error("finetune: empty common set");

    std::vector<std::size_t> batch_rows;
    for (std::size_t pos : chosen_commons) batch_rows.push_back(common_block[pos]);
    const std::size_t n_common = batch_rows.size();
    if (include_unique)
        for (std::size_t r : subject.rows_with(Split::unique)) batch_rows.push_back(r);

    const Matrix x = take_rows(subject.embeddings, batch_rows);
    const Matrix t_out = take_rows(targets, batch_rows);
    const Matrix t_adapter = take_rows(ref_common_outputs, chosen_commons);
    std::vector<std::size_t> common_rows(n_common);
    std::iota(common_rows.begin(), common_rows.end(), std::size_t{0});
    const Matrix x_common = take_rows(x, common_rows);

    TrainTrace trace;
    AdapterModel adapter{AdapterKind::linear, Matrix(1, 1), {0.0}, std::nullopt, std::nullopt};
    if (cfg.mode == TrainMode::aamax || cfg.mode == TrainMode::step1_only) {
        Stage1Result s1 =
            align_adapter_stage1(x_common, t_adapter, spec.kind, spec.adapter_hidden, cfg);
        adapter = std::move(s1.adapter);
        trace = std::move(s1.trace);
    } else {
        Rng rng(cfg.seed);
        adapter = make_adapter(spec.kind, x.cols(), spec.common_dim, spec.adapter_hidden, rng);
    }

    MapperModel mapper = ref_mapper;
    switch (cfg.mode) {
        case TrainMode::step1_only:
            break;
        case TrainMode::baseline:
            // lambda3 = 0 keeps the adapter term out of the loss; the trace
            // still reports adapter MSE as a diagnostic.
            detail::run_training(adapter, &mapper, true, x, t_out, &common_rows, &t_adapter,
                                 0.0, cfg.epochs, cfg.learning_rate, std::nullopt, 0, trace);
            break;
        case TrainMode::aamax:
            detail::run_training(adapter, &mapper, true, x, t_out, &common_rows, &t_adapter,
                                 cfg.lambda3, cfg.epochs, cfg.learning_rate, std::nullopt,
                                 trace.rows.size(), trace);
            break;
        case TrainMode::frozen_mapper:
            detail::run_training(adapter, &mapper, false, x, t_out, &common_rows, &t_adapter,
                                 cfg.lambda3, cfg.epochs, cfg.learning_rate, std::nullopt, 0,
                                 trace);
            break;
    }
    return {std::move(adapter), std::move(mapper), std::move(trace)};
}

}  // namespace repalign
