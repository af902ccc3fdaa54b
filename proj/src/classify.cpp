#include "aca/classify.hpp"

#include "aca/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace aca {

std::vector<std::string> LabeledDataset::labels() const {
    std::set<std::string> distinct;
    for (const DataPoint& p : points)
        distinct.insert(p.label);
    return {distinct.begin(), distinct.end()};
}

void LabeledDataset::validate() const {
    if (points.empty())
        throw Error(ErrorCode::EmptyInput, "dataset has no points");
    for (const DataPoint& p : points)
        if (p.features.size() != dim())
            throw Error(ErrorCode::DimensionMismatch,
                        "point '" + p.source + "' has " + std::to_string(p.features.size()) +
                            " features, expected " + std::to_string(dim()));
}

LabeledDataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::MissingFile, "cannot open dataset: " + path);

    LabeledDataset data;
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorCode::BadFormat, "empty dataset file: " + path);

    std::stringstream header(line);
    std::string cell;
    std::vector<std::string> columns;
    while (std::getline(header, cell, ','))
        columns.push_back(cell);
    if (columns.size() < 3 || columns[0] != "source" || columns[1] != "label")
        throw Error(ErrorCode::BadFormat, "dataset header must be source,label,f1,...: " + path);
    data.feature_names.assign(columns.begin() + 2, columns.end());

    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::stringstream row(line);
        DataPoint p;
        if (!std::getline(row, p.source, ',') || !std::getline(row, p.label, ','))
            throw Error(ErrorCode::BadFormat, "malformed dataset row: " + line);
        while (std::getline(row, cell, ',')) {
            try {
                p.features.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw Error(ErrorCode::BadFormat, "non-numeric feature value: " + cell);
            }
        }
        if (p.features.size() != data.dim())
            throw Error(ErrorCode::BadFormat, "wrong column count in row: " + line);
        data.points.push_back(std::move(p));
    }
    data.validate();
    return data;
}

void write_dataset_csv(const std::string& path, const LabeledDataset& data) {
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::IoFailure, "cannot open for writing: " + path);
    out << "source,label";
    for (const std::string& name : data.feature_names)
        out << ',' << name;
    out << '\n';
    char buf[64];
    for (const DataPoint& p : data.points) {
        out << p.source << ',' << p.label;
        for (double f : p.features) {
            std::snprintf(buf, sizeof buf, "%.17g", f);
            out << ',' << buf;
        }
        out << '\n';
    }
}

Normalizer Normalizer::fit(const LabeledDataset& data) {
    data.validate();
    const std::size_t dim = data.dim();
    Normalizer norm;
    norm.mean.assign(dim, 0.0);
    norm.std_dev.assign(dim, 0.0);
    for (const DataPoint& p : data.points)
        for (std::size_t d = 0; d < dim; ++d)
            norm.mean[d] += p.features[d];
    for (std::size_t d = 0; d < dim; ++d)
        norm.mean[d] /= static_cast<double>(data.points.size());
    for (const DataPoint& p : data.points)
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = p.features[d] - norm.mean[d];
            norm.std_dev[d] += diff * diff;
        }
    for (std::size_t d = 0; d < dim; ++d) {
        norm.std_dev[d] = std::sqrt(norm.std_dev[d] / static_cast<double>(data.points.size()));
        if (norm.std_dev[d] == 0.0)
            norm.std_dev[d] = 1.0; // constant dimension carries no information
    }
    return norm;
}

std::vector<double> Normalizer::apply(const std::vector<double>& vector) const {
    if (vector.size() != mean.size())
        throw Error(ErrorCode::DimensionMismatch, "vector length does not match normalizer");
    std::vector<double> out(vector.size());
    for (std::size_t d = 0; d < vector.size(); ++d)
        out[d] = (vector[d] - mean[d]) / std_dev[d];
    return out;
}

const std::string& ThresholdModel::predict(const std::vector<double>& vector) const {
    if (feature_index >= vector.size())
        throw Error(ErrorCode::DimensionMismatch, "feature index out of range");
    return vector[feature_index] > threshold ? label_above : label_below;
}

ThresholdModel fit_threshold(const LabeledDataset& data, std::size_t feature_index) {
    data.validate();
    const std::vector<std::string> classes = data.labels();
    if (classes.size() != 2)
        throw Error(ErrorCode::InvalidArgument,
                    "threshold classifier needs exactly 2 classes, got " +
                        std::to_string(classes.size()));
    if (feature_index >= data.dim())
        throw Error(ErrorCode::InvalidArgument, "feature index out of range");

    std::vector<double> values;
    values.reserve(data.points.size());
    for (const DataPoint& p : data.points)
        values.push_back(p.features[feature_index]);
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());

    // midpoints of adjacent distinct values, plus sentinels outside the data
    // range so constant (majority) predictions are reachable
    std::vector<double> candidates;
    candidates.push_back(sorted.front() - 1.0);
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i] != sorted[i - 1])
            candidates.push_back(0.5 * (sorted[i - 1] + sorted[i]));
    candidates.push_back(sorted.back() + 1.0);

    ThresholdModel best;
    best.feature_index = feature_index;
    double best_accuracy = -1.0;
    for (const double eps : candidates) {
        for (int orientation = 0; orientation < 2; ++orientation) {
            const std::string& above = classes[orientation];
            const std::string& below = classes[1 - orientation];
            std::size_t correct = 0;
            for (std::size_t i = 0; i < values.size(); ++i) {
                const std::string& predicted = values[i] > eps ? above : below;
                if (predicted == data.points[i].label)
                    ++correct;
            }
            const double accuracy =
                static_cast<double>(correct) / static_cast<double>(values.size());
            if (accuracy > best_accuracy) { // ties keep the earlier (smaller) threshold
                best_accuracy = accuracy;
                best.threshold = eps;
                best.label_above = above;
                best.label_below = below;
            }
        }
    }
    best.training_accuracy = best_accuracy;
    return best;
}

KnnModel fit_knn(const LabeledDataset& data, std::size_t k) {
    data.validate();
    if (k < 1 || k > data.points.size())
        throw Error(ErrorCode::InvalidArgument, "k must be in [1, |data|]");
    if (k % 2 == 0)
        throw Error(ErrorCode::InvalidArgument, "k must be odd");

    KnnModel model;
    model.k = k;
    model.normalizer = Normalizer::fit(data);
    for (const DataPoint& p : data.points) {
        model.points.push_back(model.normalizer.apply(p.features));
        model.labels.push_back(p.label);
    }
    return model;
}

KnnPrediction predict_knn(const KnnModel& model, const std::vector<double>& vector) {
    const std::vector<double> q = model.normalizer.apply(vector);

    struct Neighbor {
        double distance;
        std::size_t index;
    };
    std::vector<Neighbor> neighbors;
    neighbors.reserve(model.points.size());
    for (std::size_t i = 0; i < model.points.size(); ++i) {
        double acc = 0.0;
        for (std::size_t d = 0; d < q.size(); ++d) {
            const double diff = model.points[i][d] - q[d];
            acc += diff * diff;
        }
        neighbors.push_back({std::sqrt(acc), i});
    }
    std::sort(neighbors.begin(), neighbors.end(), [](const Neighbor& a, const Neighbor& b) {
        if (a.distance != b.distance)
            return a.distance < b.distance;
        return a.index < b.index; // distance ties: earlier training point
    });
    neighbors.resize(model.k);

    KnnPrediction pred;
    std::map<std::string, double> inverse_distance;
    for (const Neighbor& n : neighbors) {
        ++pred.votes[model.labels[n.index]];
        inverse_distance[model.labels[n.index]] +=
            1.0 / std::max(n.distance, std::numeric_limits<double>::min());
    }

    std::size_t best_votes = 0;
    for (const auto& [label, votes] : pred.votes)
        best_votes = std::max(best_votes, votes);

    // vote ties: summed inverse distance, then lexicographic label (the map
    // iterates labels in lexicographic order already)
    double best_weight = -1.0;
    for (const auto& [label, votes] : pred.votes) {
        if (votes != best_votes)
            continue;
        if (inverse_distance[label] > best_weight) {
            best_weight = inverse_distance[label];
            pred.label = label;
        }
    }
    return pred;
}

namespace detail {

EvaluationReport evaluate_impl(const std::vector<std::string>& truth,
                               const std::vector<std::string>& predicted) {
    if (truth.empty())
        throw Error(ErrorCode::EmptyInput, "empty test set");

    std::set<std::string> label_set(truth.begin(), truth.end());
    label_set.insert(predicted.begin(), predicted.end());

    EvaluationReport report;
    report.label_order.assign(label_set.begin(), label_set.end());
    const auto index_of = [&](const std::string& label) {
        return static_cast<std::size_t>(
            std::lower_bound(report.label_order.begin(), report.label_order.end(), label) -
            report.label_order.begin());
    };

    const std::size_t n = report.label_order.size();
    report.confusion.assign(n, std::vector<std::size_t>(n, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        report.confusion[index_of(truth[i])][index_of(predicted[i])]++;
        if (truth[i] == predicted[i])
            ++correct;
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());

    for (std::size_t c = 0; c < n; ++c) {
        std::size_t col_sum = 0, row_sum = 0;
        for (std::size_t r = 0; r < n; ++r) {
            col_sum += report.confusion[r][c];
            row_sum += report.confusion[c][r];
        }
        const std::size_t tp = report.confusion[c][c];
        report.precision[report.label_order[c]] =
            col_sum > 0 ? static_cast<double>(tp) / static_cast<double>(col_sum) : 0.0;
        report.recall[report.label_order[c]] =
            row_sum > 0 ? static_cast<double>(tp) / static_cast<double>(row_sum) : 0.0;
    }
    return report;
}

} // namespace detail

EvaluationReport evaluate(const KnnModel& model, const LabeledDataset& test) {
    return evaluate(
        [&model](const std::vector<double>& v) { return predict_knn(model, v).label; }, test);
}

EvaluationReport evaluate(const ThresholdModel& model, const LabeledDataset& test) {
    return evaluate([&model](const std::vector<double>& v) { return model.predict(v); }, test);
}

} // namespace aca
