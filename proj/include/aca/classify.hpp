#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace aca {

struct DataPoint {
    std::vector<double> features;
    std::string label;
    std::string source;
};

struct LabeledDataset {
    std::vector<std::string> feature_names;
    std::vector<DataPoint> points;

    std::size_t dim() const { return feature_names.size(); }
    std::vector<std::string> labels() const; // distinct, lexicographic
    void validate() const;
};

/// CSV interchange with header "source,label,f1,...,fn".
LabeledDataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const std::string& path, const LabeledDataset& data);

/// Per-dimension z-score parameters; dimensions with zero training spread
/// keep std 1 so they cancel out of distances.
struct Normalizer {
    std::vector<double> mean;
    std::vector<double> std_dev;

    static Normalizer fit(const LabeledDataset& data);
    std::vector<double> apply(const std::vector<double>& vector) const;
};

struct ThresholdModel {
    std::size_t feature_index = 0;
    double threshold = 0.0;
    std::string label_above;
    std::string label_below;
    double training_accuracy = 0.0;

    const std::string& predict(const std::vector<double>& vector) const;
};

/// Exhaustive scan over split points of one feature dimension, maximizing
/// training accuracy. Requires exactly two classes. Ties prefer the smaller
/// threshold; both orientations are tried.
ThresholdModel fit_threshold(const LabeledDataset& data, std::size_t feature_index);

struct KnnModel {
    std::size_t k = 1;
    Normalizer normalizer;
    std::vector<std::vector<double>> points; // normalized
    std::vector<std::string> labels;
};

/// Stores the z-scored training set. k must be odd and <= |data|.
KnnModel fit_knn(const LabeledDataset& data, std::size_t k);

struct KnnPrediction {
    std::string label;
    std::map<std::string, std::size_t> votes; // among the k nearest
};

/// Majority vote among the k nearest (Euclidean, normalized space).
/// Distance ties break by earlier training index; vote ties by summed
/// inverse distance, then lexicographic label.
KnnPrediction predict_knn(const KnnModel& model, const std::vector<double>& vector);

struct EvaluationReport {
    double accuracy = 0.0;
    std::vector<std::string> label_order; // lexicographic
    std::vector<std::vector<std::size_t>> confusion; // rows true, cols predicted
    std::map<std::string, double> precision;
    std::map<std::string, double> recall;
};

/// Confusion-matrix evaluation of any label-valued predictor.
template <typename Predictor>
EvaluationReport evaluate(Predictor&& predict, const LabeledDataset& test);

EvaluationReport evaluate(const KnnModel& model, const LabeledDataset& test);
EvaluationReport evaluate(const ThresholdModel& model, const LabeledDataset& test);

namespace detail {
EvaluationReport evaluate_impl(const std::vector<std::string>& truth,
                               const std::vector<std::string>& predicted);
}

template <typename Predictor>
EvaluationReport evaluate(Predictor&& predict, const LabeledDataset& test) {
    std::vector<std::string> truth;
    std::vector<std::string> predicted;
    for (const DataPoint& p : test.points) {
        truth.push_back(p.label);
        predicted.push_back(predict(p.features));
    }
    return detail::evaluate_impl(truth, predicted);
}

} // namespace aca
