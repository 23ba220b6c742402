#pragma once

// Finite-difference gradient oracle shared by the unit tests and the
// acceptance suite. Independent of the backward pass: it only evaluates
// the forward loss.

#include <cmath>
#include <string>
#include <vector>

#include "m2d/model.hpp"
#include "m2d/rng.hpp"

namespace gradcheck {

struct LayerRange {
    std::string name;
    std::size_t begin;
    std::size_t end;
};

inline std::vector<LayerRange> layer_ranges(const m2d::ModelSpec& spec) {
    using namespace m2d::detail;
    if (spec.arch == m2d::Architecture::CompactConv) {
        const ConvLayout l = conv_layout(spec);
        return {{"temporal_w", l.wt, l.bt}, {"temporal_b", l.bt, l.ws},
                {"spatial_w", l.ws, l.bs},  {"spatial_b", l.bs, l.wd},
                {"dense_w", l.wd, l.bd},    {"dense_b", l.bd, l.total}};
    }
    const GruLayout l = gru_layout(spec);
    return {{"input_w", l.wz, l.uz},     {"recurrent_w", l.uz, l.bz},
            {"gate_b", l.bz, l.wd},      {"dense_w", l.wd, l.bd},
            {"dense_b", l.bd, l.total}};
}

inline double batch_loss(const m2d::Network<double>& net, const m2d::Batch<double>& batch,
                         const std::vector<double>& weights) {
    std::vector<double> logits(batch.n * static_cast<std::size_t>(net.spec().classes));
    net.logits(batch, logits.data(), m2d::Parallelism::Serial);
    return m2d::weighted_cross_entropy(logits.data(), batch.labels, net.spec().classes,
                                       weights);
}

inline m2d::Batch<double> random_batch(const m2d::ModelSpec& spec, std::size_t n,
                                       std::uint64_t seed) {
    m2d::Rng rng(seed);
    m2d::Batch<double> batch;
    batch.n = n;
    batch.x.resize(n * static_cast<std::size_t>(spec.channels) * spec.window);
    batch.labels.resize(n);
    for (double& v : batch.x) v = rng.normal();
    for (auto& l : batch.labels) l = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.classes)));
    return batch;
}

struct Result {
    double max_rel_err = 0.0;
    std::size_t checked = 0;
    std::string worst_layer;
};

// Central differences, h = 1e-5, on up to samples_per_layer parameters per
// layer. rel_err = |g_a - g_fd| / max(1, |g_fd|).
inline Result run(const m2d::ModelSpec& spec, std::size_t samples_per_layer,
                  std::uint64_t seed) {
    m2d::Network<double> net(spec);
    net.init_params(seed);
    const m2d::Batch<double> batch = random_batch(spec, 4, seed + 1);
    const std::vector<double> weights = {1.0, 1.3, 0.8};

    std::vector<double> analytic(net.param_count());
    net.loss_and_grad(batch, weights, analytic.data(), m2d::Parallelism::Serial);

    const double h = 1e-5;
    m2d::Rng pick(seed + 2);
    Result res;
    for (const auto& layer : layer_ranges(spec)) {
        const std::size_t size = layer.end - layer.begin;
        const std::size_t n = std::min(samples_per_layer, size);
        for (std::size_t s = 0; s < n; ++s) {
            const std::size_t idx =
                size <= samples_per_layer ? layer.begin + s : layer.begin + pick.below(size);
            const double saved = net.params()[idx];
            net.params()[idx] = saved + h;
            const double up = batch_loss(net, batch, weights);
            net.params()[idx] = saved - h;
            const double down = batch_loss(net, batch, weights);
            net.params()[idx] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double rel = std::abs(analytic[idx] - fd) / std::max(1.0, std::abs(fd));
            ++res.checked;
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst_layer = layer.name;
            }
        }
    }
    return res;
}

}  // namespace gradcheck
