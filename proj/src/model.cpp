#include "m2d/model.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>

#include "m2d/metrics.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace m2d {

const char* architecture_name(Architecture a) {
    return a == Architecture::CompactConv ? "compact_conv" : "recurrent";
}

void ModelSpec::validate() const {
    if (channels <= 0 || window <= 0) raise(ErrorKind::Config, "model: bad input shape");
    if (classes <= 0 || classes > 16) raise(ErrorKind::Config, "model: bad class count");
    if (arch == Architecture::CompactConv) {
        if (temporal_kernels <= 0 || spatial_kernels <= 0 || temporal_length <= 0 ||
            pool_length <= 0 || pool_stride <= 0)
            raise(ErrorKind::Config, "model: bad CompactConv hyperparameters");
        if (conv_time() < pool_length)
            raise(ErrorKind::Config,
                  "model: window too short for temporal kernel plus pooling (need >= " +
                      std::to_string(temporal_length + pool_length - 1) + " samples)");
    } else {
        if (hidden <= 0) raise(ErrorKind::Config, "model: hidden size must be positive");
    }
}

void TrainConfig::validate() const {
    if (!(lr > 0.0)) raise(ErrorKind::Config, "train.lr must be > 0");
    if (batch_size < 1) raise(ErrorKind::Config, "train.batch_size must be >= 1");
    if (max_epochs < 1) raise(ErrorKind::Config, "train.max_epochs must be >= 1");
    if (patience < 0) raise(ErrorKind::Config, "train.patience must be >= 0");
}

std::vector<float> class_weights(const std::vector<Example>& train_set,
                                 ClassWeighting weighting, int classes) {
    std::vector<float> w(static_cast<std::size_t>(classes), 1.0f);
    if (weighting == ClassWeighting::Uniform) return w;
    std::vector<std::size_t> counts(static_cast<std::size_t>(classes), 0);
    for (const auto& e : train_set) {
        const auto cls = class_index(e.label);
        if (!cls) raise(ErrorKind::InvalidInput, "class_weights: label outside the action set");
        ++counts[static_cast<std::size_t>(*cls)];
    }
    const double total = static_cast<double>(train_set.size());
    for (int k = 0; k < classes; ++k) {
        const auto n_k = counts[static_cast<std::size_t>(k)];
        w[static_cast<std::size_t>(k)] =
            n_k > 0 ? static_cast<float>(total / (static_cast<double>(classes) *
                                                  static_cast<double>(n_k)))
                    : 0.0f;
    }
    return w;
}

Batch<float> make_batch(const std::vector<Example>& examples,
                        const std::vector<std::size_t>& indices, const ModelSpec& spec) {
    const std::size_t stride = static_cast<std::size_t>(spec.channels) * spec.window;
    Batch<float> b;
    b.n = indices.size();
    b.x.resize(b.n * stride);
    b.labels.resize(b.n);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const Example& e = examples[indices[i]];
        if (e.window.size() != stride)
            raise(ErrorKind::Shape, "example window size " + std::to_string(e.window.size()) +
                                        " does not match model input " + std::to_string(stride));
        std::copy(e.window.begin(), e.window.end(), b.x.begin() + static_cast<std::ptrdiff_t>(i * stride));
        const auto cls = class_index(e.label);
        if (!cls) raise(ErrorKind::InvalidInput, "example label outside the action set");
        b.labels[i] = *cls;
    }
    return b;
}

namespace {

std::vector<int> argmax_rows(const std::vector<float>& logits, std::size_t n, int k) {
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const float* row = logits.data() + i * static_cast<std::size_t>(k);
        int best = 0;
        for (int j = 1; j < k; ++j)
            if (row[j] > row[best]) best = j;  // ties keep the lowest index
        out[i] = best;
    }
    return out;
}

std::vector<int> true_classes(const std::vector<Example>& examples) {
    std::vector<int> out;
    out.reserve(examples.size());
    for (const auto& e : examples) {
        const auto cls = class_index(e.label);
        if (!cls) raise(ErrorKind::InvalidInput, "example label outside the action set");
        out.push_back(*cls);
    }
    return out;
}

}  // namespace

std::vector<int> predict(const Network<float>& net, const std::vector<Example>& examples,
                         Parallelism par) {
    if (examples.empty()) return {};
    std::vector<std::size_t> idx(examples.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const Batch<float> batch = make_batch(examples, idx, net.spec());
    std::vector<float> logits(batch.n * static_cast<std::size_t>(net.spec().classes));
    net.logits(batch, logits.data(), par);
    return argmax_rows(logits, batch.n, net.spec().classes);
}

std::vector<int> predict(const Checkpoint& ckpt, const std::vector<Example>& examples,
                         Parallelism par) {
    Network<float> net(ckpt.spec);
    net.params() = ckpt.params;
    return predict(net, examples, par);
}

TrainResult train(const ModelSpec& spec, const TrainConfig& cfg,
                  const std::vector<Example>& train_set, const std::vector<Example>& val_set,
                  Parallelism par) {
    spec.validate();
    cfg.validate();
    if (train_set.empty()) raise(ErrorKind::EmptyResult, "train: empty training set");
    if (val_set.empty()) raise(ErrorKind::EmptyResult, "train: empty validation set");

    Network<float> net(spec);
    net.init_params(cfg.seed);
    const auto weights = class_weights(train_set, cfg.weighting, spec.classes);

    AdamState<float> adam;
    std::vector<float> grad(net.param_count());
    const Rng rng = Rng(cfg.seed);
    const auto val_truth = true_classes(val_set);

    TrainResult result;
    result.best.spec = spec;
    double best_f1 = -1.0;
    int epochs_since_best = 0;

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        Rng shuffle_rng = rng.fork("shuffle", static_cast<std::uint64_t>(epoch));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        double loss_sum = 0.0;
        const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
        for (std::size_t start = 0; start < order.size(); start += bs) {
            const std::size_t end = std::min(order.size(), start + bs);
            const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                               order.begin() + static_cast<std::ptrdiff_t>(end));
            const Batch<float> batch = make_batch(train_set, idx, spec);
            const float loss = net.loss_and_grad(batch, weights, grad.data(), par);
            if (!std::isfinite(loss))
                raise(ErrorKind::Training,
                      "training diverged (non-finite loss) at epoch " + std::to_string(epoch));
            loss_sum += static_cast<double>(loss) * static_cast<double>(batch.n);
            adam_step(net.params(), grad.data(), adam, cfg);
        }

        const auto val_pred = predict(net, val_set, par);
        const MetricsReport val_report = evaluate(val_truth, val_pred, spec.classes);

        EpochLog log;
        log.epoch = epoch;
        log.train_loss = loss_sum / static_cast<double>(train_set.size());
        log.val_macro_f1 = val_report.macro_f1;
        log.val_balanced_accuracy = val_report.balanced_accuracy;
        result.log.push_back(log);

        if (val_report.macro_f1 > best_f1) {
            best_f1 = val_report.macro_f1;
            result.best.params = net.params();
            result.best.epoch = epoch;
            result.best.val_macro_f1 = val_report.macro_f1;
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
            if (cfg.patience > 0 && epochs_since_best >= cfg.patience) break;
        }
    }
    return result;
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) raise(ErrorKind::Data, "cannot open for writing: " + path);
    auto put = [&](const void* data, std::size_t size) {
        if (std::fwrite(data, 1, size, f) != size) {
            std::fclose(f);
            raise(ErrorKind::Data, "write failed: " + path);
        }
    };
    put("M2DC", 4);
    const std::uint8_t arch = ckpt.spec.arch == Architecture::CompactConv ? 0 : 1;
    put(&arch, 1);
    const std::int32_t shape[10] = {
        ckpt.spec.channels,        ckpt.spec.window,        ckpt.spec.classes,
        ckpt.spec.temporal_kernels, ckpt.spec.temporal_length, ckpt.spec.spatial_kernels,
        ckpt.spec.pool_length,     ckpt.spec.pool_stride,   ckpt.spec.hidden,
        ckpt.epoch};
    put(shape, sizeof(shape));
    put(&ckpt.val_macro_f1, 8);
    const std::uint32_t count = static_cast<std::uint32_t>(ckpt.params.size());
    put(&count, 4);
    put(ckpt.params.data(), ckpt.params.size() * sizeof(float));
    if (std::fclose(f) != 0) raise(ErrorKind::Data, "write failed: " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (f == nullptr) raise(ErrorKind::Data, "cannot open: " + path);
    auto get = [&](void* data, std::size_t size) {
        if (std::fread(data, 1, size, f) != size) {
            std::fclose(f);
            raise(ErrorKind::Data, "truncated checkpoint: " + path);
        }
    };
    char magic[4];
    get(magic, 4);
    if (std::memcmp(magic, "M2DC", 4) != 0) {
        std::fclose(f);
        raise(ErrorKind::Data, path + ": not a checkpoint (bad magic)");
    }
    Checkpoint ckpt;
    std::uint8_t arch = 0;
    get(&arch, 1);
    ckpt.spec.arch = arch == 0 ? Architecture::CompactConv : Architecture::RecurrentNet;
    std::int32_t shape[10];
    get(shape, sizeof(shape));
    ckpt.spec.channels = shape[0];
    ckpt.spec.window = shape[1];
    ckpt.spec.classes = shape[2];
    ckpt.spec.temporal_kernels = shape[3];
    ckpt.spec.temporal_length = shape[4];
    ckpt.spec.spatial_kernels = shape[5];
    ckpt.spec.pool_length = shape[6];
    ckpt.spec.pool_stride = shape[7];
    ckpt.spec.hidden = shape[8];
    ckpt.epoch = shape[9];
    get(&ckpt.val_macro_f1, 8);
    std::uint32_t count = 0;
    get(&count, 4);
    ckpt.params.resize(count);
    get(ckpt.params.data(), count * sizeof(float));
    std::fclose(f);
    ckpt.spec.validate();
    Network<float> probe(ckpt.spec);
    if (probe.param_count() != ckpt.params.size())
        raise(ErrorKind::Data, path + ": parameter count does not match the architecture");
    return ckpt;
}

}  // namespace m2d
