#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "repalign/dataset.hpp"
#include "repalign/errors.hpp"
#include "repalign/matrix.hpp"
#include "repalign/rng.hpp"
#include "repalign/svd.hpp"

namespace repalign {

enum class Transform { orthogonal, invertible_linear, tall_linear };

inline std::string to_string(Transform t) {
    switch (t) {
        case Transform::orthogonal: return "orthogonal";
        case Transform::invertible_linear: return "invertible_linear";
        case Transform::tall_linear: return "tall_linear";
    }
    throw value_error("unknown transform");
}

inline Transform transform_from_string(const std::string& s) {
    if (s == "orthogonal") return Transform::orthogonal;
    if (s == "invertible_linear") return Transform::invertible_linear;
    if (s == "tall_linear") return Transform::tall_linear;
    throw value_error("unknown transform: " + s);
}

struct SynthConfig {
    std::size_t n_subjects = 4;
    std::size_t n_common = 1000;
    std::size_t n_unique = 200;
    std::size_t n_test = 100;
    std::size_t latent_dim = 16;
    std::size_t subject_dim = 64;
    Transform transform = Transform::tall_linear;
    double noise_sigma = 0.02;
    std::size_t n_categories = 8;
    std::uint64_t seed = 20240101;

    void validate() const {
        if (n_subjects == 0 || n_common == 0 || latent_dim == 0 || n_categories == 0)
            throw value_error("SynthConfig: subjects, commons, latent_dim and categories "
                              "must be >= 1");
        if (noise_sigma < 0.0) throw value_error("SynthConfig: noise_sigma must be >= 0");
        if (transform == Transform::tall_linear) {
            if (subject_dim < latent_dim)
                throw dim_error("SynthConfig: tall_linear needs subject_dim >= latent_dim");
        } else if (subject_dim != latent_dim) {
            throw dim_error("SynthConfig: " + to_string(transform) +
                            " needs subject_dim == latent_dim");
        }
    }
};

struct Benchmark {
    SynthConfig config;
    Matrix latents;  // all global items x latent_dim
    Matrix targets;  // all global items x latent_dim
    std::vector<int> categories;
    std::vector<SubjectDataset> subjects;

    std::size_t total_items() const { return latents.rows(); }
};

namespace detail {

inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

// Orthonormal columns by modified Gram-Schmidt of a square Gaussian draw.
inline Matrix random_orthogonal(std::size_t d, Rng& rng) {
    Matrix g = gaussian_matrix(d, d, rng);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t prev = 0; prev < j; ++prev) {
            double dot = 0.0;
            for (std::size_t i = 0; i < d; ++i) dot += g(i, j) * g(i, prev);
            for (std::size_t i = 0; i < d; ++i) g(i, j) -= dot * g(i, prev);
        }
        double norm = 0.0;
        for (std::size_t i = 0; i < d; ++i) norm += g(i, j) * g(i, j);
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < d; ++i) g(i, j) /= norm;
    }
    return g;
}

inline Matrix random_invertible(std::size_t d, Rng& rng) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        Matrix g = gaussian_matrix(d, d, rng);
        const SvdResult dec = svd(g);
        if (dec.s.back() > 0.0 && dec.s.front() / dec.s.back() <= 100.0) return g;
    }
    throw convergence_error("random_invertible: no well-conditioned draw in 64 attempts");
}

inline Matrix subject_transform(const SynthConfig& cfg, Rng& rng) {
    switch (cfg.transform) {
        case Transform::orthogonal:
            return random_orthogonal(cfg.latent_dim, rng);
        case Transform::invertible_linear:
            return random_invertible(cfg.latent_dim, rng);
        case Transform::tall_linear: {
            // Scaled so subject row norms stay comparable to latent norms.
            Matrix a = gaussian_matrix(cfg.subject_dim, cfg.latent_dim, rng);
            const double s = 1.0 / std::sqrt(static_cast<double>(cfg.latent_dim));
            for (double& v : a.data()) v *= s;
            return a;
        }
    }
    throw value_error("unknown transform");
}

}  // namespace detail

// Synthetic multi-subject benchmark: a ground-truth latent space observed
// through per-subject transforms plus Gaussian noise. Latents are
// category-centered Gaussians; targets come from a fixed random linear map
// of the latents. Global item ids: commons first, then each subject's
// unique and test blocks. Draw order is fixed and part of the determinism
// contract: category means, per-item categories, per-item latent noise,
// target map, then per subject (transform, noise).
inline Benchmark generate_benchmark(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);

    const std::size_t per_subject_extra = cfg.n_unique + cfg.n_test;
    const std::size_t total = cfg.n_common + cfg.n_subjects * per_subject_extra;

    Matrix means = detail::gaussian_matrix(cfg.n_categories, cfg.latent_dim, rng);
    std::vector<int> categories(total);
    for (std::size_t i = 0; i < total; ++i)
        categories[i] = static_cast<int>(rng.uniform_index(cfg.n_categories));
    Matrix latents(total, cfg.latent_dim);
    for (std::size_t i = 0; i < total; ++i)
        for (std::size_t j = 0; j < cfg.latent_dim; ++j)
            latents(i, j) = means(static_cast<std::size_t>(categories[i]), j) +
                            0.5 * rng.normal();

    const Matrix target_map = detail::gaussian_matrix(cfg.latent_dim, cfg.latent_dim, rng);
    const Matrix targets = matmul_a_bt(latents, target_map);

    Benchmark bench{cfg, std::move(latents), targets, std::move(categories), {}};

    for (std::size_t s = 0; s < cfg.n_subjects; ++s) {
        const Matrix a = detail::subject_transform(cfg, rng);
        std::vector<std::uint64_t> ids;
        std::vector<Split> split;
        ids.reserve(cfg.n_common + per_subject_extra);
        for (std::size_t i = 0; i < cfg.n_common; ++i) {
            ids.push_back(i);
            split.push_back(Split::common);
        }
        const std::size_t base = cfg.n_common + s * per_subject_extra;
        for (std::size_t i = 0; i < cfg.n_unique; ++i) {
            ids.push_back(base + i);
            split.push_back(Split::unique);
        }
        for (std::size_t i = 0; i < cfg.n_test; ++i) {
            ids.push_back(base + cfg.n_unique + i);
            split.push_back(Split::test);
        }
        Matrix emb(ids.size(), cfg.subject_dim);
        for (std::size_t r = 0; r < ids.size(); ++r) {
            const std::size_t item = ids[r];
            for (std::size_t j = 0; j < cfg.subject_dim; ++j) {
                double v = 0.0;
                for (std::size_t k = 0; k < cfg.latent_dim; ++k)
                    v += bench.latents(item, k) * a(j, k);
                emb(r, j) = v;
            }
        }
        if (cfg.noise_sigma > 0.0)
            for (double& v : emb.data()) v += cfg.noise_sigma * rng.normal();
        SubjectDataset subj{std::to_string(s + 1), std::move(emb), std::move(ids),
                            std::move(split)};
        subj.validate();
        bench.subjects.push_back(std::move(subj));
    }
    return bench;
}

inline SynthConfig standard_config() { return SynthConfig{}; }

// The fixed acceptance-suite benchmark: 4 subjects, 1000/200/100 splits,
// 16-dim latents observed through 64-dim tall transforms, sigma 0.02,
// 8 categories, seed 20240101.
inline Benchmark standard_benchmark() { return generate_benchmark(standard_config()); }

}  // namespace repalign
