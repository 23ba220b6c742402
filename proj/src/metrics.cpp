#include "m2d/metrics.hpp"

#include <json.hpp>

#include "m2d/errors.hpp"

namespace m2d {

std::vector<std::vector<std::int64_t>> confusion_matrix(const std::vector<int>& truths,
                                                        const std::vector<int>& preds, int k) {
    if (truths.size() != preds.size())
        raise(ErrorKind::InvalidInput, "confusion_matrix: length mismatch");
    if (k <= 0) raise(ErrorKind::InvalidInput, "confusion_matrix: k must be positive");
    std::vector<std::vector<std::int64_t>> m(static_cast<std::size_t>(k),
                                             std::vector<std::int64_t>(static_cast<std::size_t>(k), 0));
    for (std::size_t i = 0; i < truths.size(); ++i) {
        if (truths[i] < 0 || truths[i] >= k || preds[i] < 0 || preds[i] >= k)
            raise(ErrorKind::InvalidInput, "confusion_matrix: label outside [0, K)");
        ++m[static_cast<std::size_t>(truths[i])][static_cast<std::size_t>(preds[i])];
    }
    return m;
}

MetricsReport report(const std::vector<std::vector<std::int64_t>>& confusion) {
    const std::size_t k = confusion.size();
    if (k == 0) raise(ErrorKind::InvalidInput, "report: empty confusion matrix");
    for (const auto& row : confusion)
        if (row.size() != k) raise(ErrorKind::InvalidInput, "report: confusion must be square");

    MetricsReport r;
    r.confusion = confusion;
    r.per_class.resize(k);

    std::int64_t total = 0;
    std::int64_t diag = 0;
    double f1_sum = 0.0;
    double recall_sum = 0.0;
    std::size_t supported = 0;

    for (std::size_t i = 0; i < k; ++i) {
        std::int64_t row_sum = 0;
        std::int64_t col_sum = 0;
        for (std::size_t j = 0; j < k; ++j) {
            if (confusion[i][j] < 0) raise(ErrorKind::InvalidInput, "report: negative count");
            row_sum += confusion[i][j];
            col_sum += confusion[j][i];
            total += confusion[i][j];
        }
        const std::int64_t tp = confusion[i][i];
        diag += tp;
        auto& cm = r.per_class[i];
        cm.support = static_cast<std::size_t>(row_sum);
        cm.precision = col_sum > 0 ? static_cast<double>(tp) / static_cast<double>(col_sum) : 0.0;
        cm.recall = row_sum > 0 ? static_cast<double>(tp) / static_cast<double>(row_sum) : 0.0;
        cm.f1 = (cm.precision + cm.recall) > 0.0
                    ? 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall)
                    : 0.0;
        f1_sum += cm.f1;
        if (row_sum > 0) {
            recall_sum += cm.recall;
            ++supported;
        }
    }
    r.total = static_cast<std::size_t>(total);
    r.macro_f1 = f1_sum / static_cast<double>(k);
    r.balanced_accuracy = supported > 0 ? recall_sum / static_cast<double>(supported) : 0.0;
    r.accuracy = total > 0 ? static_cast<double>(diag) / static_cast<double>(total) : 0.0;
    return r;
}

MetricsReport evaluate(const std::vector<int>& truths, const std::vector<int>& preds, int k) {
    return report(confusion_matrix(truths, preds, k));
}

std::string report_to_json(const MetricsReport& r) {
    nlohmann::ordered_json j;
    j["macro_f1"] = r.macro_f1;
    j["balanced_accuracy"] = r.balanced_accuracy;
    j["accuracy"] = r.accuracy;
    j["total"] = r.total;
    j["confusion"] = r.confusion;
    nlohmann::ordered_json per;
    for (std::size_t i = 0; i < r.per_class.size(); ++i) {
        nlohmann::ordered_json c;
        c["precision"] = r.per_class[i].precision;
        c["recall"] = r.per_class[i].recall;
        c["f1"] = r.per_class[i].f1;
        c["support"] = r.per_class[i].support;
        per.push_back(c);
    }
    j["per_class"] = per;
    return j.dump(2) + "\n";
}

}  // namespace m2d
