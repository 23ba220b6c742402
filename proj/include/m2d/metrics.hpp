#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace m2d {

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct MetricsReport {
    std::vector<std::vector<std::int64_t>> confusion;  // rows truth, cols prediction
    std::vector<ClassMetrics> per_class;
    double macro_f1 = 0.0;
    double balanced_accuracy = 0.0;  // mean recall over classes with support
    double accuracy = 0.0;           // plain accuracy, reported separately
    std::size_t total = 0;
};

// confusion[i][j] = #{t : truth == i and pred == j}.
std::vector<std::vector<std::int64_t>> confusion_matrix(const std::vector<int>& truths,
                                                        const std::vector<int>& preds, int k);

// Zero-division rules: precision/recall/F1 are 0 where undefined.
// Zero-support classes contribute F1 = 0 to macro-F1 but are excluded
// from balanced accuracy.
MetricsReport report(const std::vector<std::vector<std::int64_t>>& confusion);

MetricsReport evaluate(const std::vector<int>& truths, const std::vector<int>& preds, int k);

// Key-value JSON document with the fields above.
std::string report_to_json(const MetricsReport& r);

}  // namespace m2d
