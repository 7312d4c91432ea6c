#include "sca/template_attack.hpp"

#include "sca/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>

namespace sca {

namespace {

Eigen::MatrixXd cholesky_or_throw(const Eigen::MatrixXd &cov, int cls) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw ConditioningError("covariance for class " + std::to_string(cls) +
                                " is not positive definite after regularization");
    return llt.matrixL();
}

double log_det_from_factor(const Eigen::MatrixXd &L) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < L.rows(); ++i)
        acc += std::log(L(i, i));
    return 2.0 * acc;
}

void regularize(Eigen::MatrixXd &cov, double epsilon) {
    if (epsilon <= 0.0)
        return;
    const double mean_diag = cov.diagonal().mean();
    cov.diagonal().array() += epsilon * mean_diag;
}

void write_f64_blob(std::ofstream &os, const Eigen::MatrixXd &m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double v = m(r, c);
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof bits);
            unsigned char buf[8];
            for (int i = 0; i < 8; ++i)
                buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffu);
            os.write(reinterpret_cast<const char *>(buf), 8);
        }
}

Eigen::MatrixXd read_f64_blob(std::ifstream &is, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            unsigned char buf[8];
            is.read(reinterpret_cast<char *>(buf), 8);
            std::uint64_t bits = 0;
            for (int i = 0; i < 8; ++i)
                bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
            double v;
            std::memcpy(&v, &bits, sizeof v);
            m(r, c) = v;
        }
    return m;
}

} // namespace

ClassStats compute_class_stats(const TraceSet &profiling, const std::vector<std::uint8_t> &labels,
                               const PoiCandidate &poi, int n_classes) {
    if (labels.size() != profiling.n_traces())
        throw ArgumentError("label array length does not match trace count");
    if (poi.size() != profiling.n_samples())
        throw ArgumentError("POI mask length does not match n_samples");
    const auto poi_idx = poi.indices();
    if (poi_idx.empty())
        throw ArgumentError("POI selection is empty");
    const auto d = static_cast<Eigen::Index>(poi_idx.size());

    std::vector<std::vector<std::size_t>> rows_per_class(n_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= n_classes)
            throw ArgumentError("label " + std::to_string(int(labels[i])) +
                                " out of range for this leakage model");
        rows_per_class[labels[i]].push_back(i);
    }
    for (int c = 0; c < n_classes; ++c)
        if (rows_per_class[c].size() < 2)
            throw InsufficientDataError(
                "class " + std::to_string(c) + " has " +
                    std::to_string(rows_per_class[c].size()) +
                    " profiling traces (need at least 2)",
                c);

    ClassStats stats;
    stats.means = Eigen::MatrixXd::Zero(n_classes, d);
    stats.pooled_covariance = Eigen::MatrixXd::Zero(d, d);
    stats.class_covariances.resize(n_classes);
    stats.counts.resize(n_classes);

    Eigen::VectorXd row(d);
    for (int c = 0; c < n_classes; ++c) {
        const auto &rows = rows_per_class[c];
        stats.counts[c] = rows.size();
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
        for (std::size_t r : rows) {
            for (Eigen::Index j = 0; j < d; ++j)
                mean(j) += profiling.sample(r, poi_idx[j]);
        }
        mean /= static_cast<double>(rows.size());
        stats.means.row(c) = mean.transpose();

        Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
        for (std::size_t r : rows) {
            for (Eigen::Index j = 0; j < d; ++j)
                row(j) = profiling.sample(r, poi_idx[j]) - mean(j);
            scatter.selfadjointView<Eigen::Lower>().rankUpdate(row);
        }
        scatter.triangularView<Eigen::StrictlyUpper>() =
            scatter.transpose().triangularView<Eigen::StrictlyUpper>();
        stats.pooled_covariance += scatter;
        stats.class_covariances[c] = scatter / static_cast<double>(rows.size() - 1);
    }
    stats.pooled_covariance /=
        static_cast<double>(profiling.n_traces()) - static_cast<double>(n_classes);
    return stats;
}

TemplateModel::TemplateModel(Eigen::MatrixXd class_means, std::vector<Eigen::MatrixXd> covariances,
                             bool pooled, PoiCandidate poi, LeakageModel leakage_model,
                             double epsilon, bool low_data_warning)
    : class_means_(std::move(class_means)), covariances_(std::move(covariances)), pooled_(pooled),
      poi_(std::move(poi)), leakage_model_(leakage_model), epsilon_(epsilon),
      low_data_warning_(low_data_warning) {
    const auto expected = pooled_ ? 1u : static_cast<std::size_t>(class_means_.rows());
    if (covariances_.size() != expected)
        throw ArgumentError("covariance list size does not match pooled flag");
    for (std::size_t i = 0; i < covariances_.size(); ++i) {
        const auto &cov = covariances_[i];
        if (cov.rows() != class_means_.cols() || cov.cols() != class_means_.cols())
            throw ArgumentError("covariance dimensions do not match class means");
        chol_factors_.push_back(cholesky_or_throw(cov, static_cast<int>(i)));
        log_dets_.push_back(log_det_from_factor(chol_factors_.back()));
    }
}

double TemplateModel::discriminant_score(const Eigen::VectorXd &trace_poi_values, int cls) const {
    if (trace_poi_values.size() != class_means_.cols())
        throw ArgumentError("POI vector length does not match template dimension");
    if (cls < 0 || cls >= n_classes())
        throw ArgumentError("class label out of range");
    const Eigen::VectorXd centered = trace_poi_values - class_means_.row(cls).transpose();
    const Eigen::VectorXd y =
        factor(cls).triangularView<Eigen::Lower>().solve(centered);
    const double d = static_cast<double>(class_means_.cols());
    return -0.5 * y.squaredNorm() - 0.5 * log_det(cls) -
           0.5 * d * std::log(2.0 * std::numbers::pi);
}

Eigen::VectorXd TemplateModel::extract_poi(const TraceSet &ts, std::size_t row) const {
    const auto idx = poi_.indices();
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j)
        out(static_cast<Eigen::Index>(j)) = ts.sample(row, idx[j]);
    return out;
}

TemplateModel build_templates(const TraceSet &profiling, const std::vector<std::uint8_t> &labels,
                              const PoiCandidate &poi, LeakageModel model, bool pooled,
                              double epsilon) {
    const int classes = class_count(model);
    ClassStats stats = compute_class_stats(profiling, labels, poi, classes);

    const bool low_data =
        profiling.n_traces() < poi.selected_count() + static_cast<std::size_t>(classes);

    std::vector<Eigen::MatrixXd> covs;
    if (pooled) {
        Eigen::MatrixXd cov = stats.pooled_covariance;
        regularize(cov, epsilon);
        covs.push_back(std::move(cov));
    } else {
        for (auto &cov : stats.class_covariances) {
            regularize(cov, epsilon);
            covs.push_back(std::move(cov));
        }
    }
    return TemplateModel(std::move(stats.means), std::move(covs), pooled, poi, model, epsilon,
                         low_data);
}

KeyGuessingVector make_key_guessing_vector(const std::array<double, 256> &scores) {
    KeyGuessingVector kgv;
    kgv.scores = scores;
    std::array<std::uint8_t, 256> keys;
    std::iota(keys.begin(), keys.end(), 0);
    std::stable_sort(keys.begin(), keys.end(),
                     [&](std::uint8_t a, std::uint8_t b) { return scores[a] > scores[b]; });
    kgv.ranking = keys;
    return kgv;
}

Eigen::MatrixXd per_trace_class_scores(const TemplateModel &model, const TraceSet &attack_traces,
                                       const std::vector<std::size_t> &rows) {
    if (model.poi().size() != attack_traces.n_samples())
        throw ArgumentError("model was built for a different n_samples");
    Eigen::MatrixXd scores(static_cast<Eigen::Index>(rows.size()), model.n_classes());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Eigen::VectorXd values = model.extract_poi(attack_traces, rows[r]);
        for (int c = 0; c < model.n_classes(); ++c)
            scores(static_cast<Eigen::Index>(r), c) = model.discriminant_score(values, c);
    }
    return scores;
}

KeyGuessingVector attack(const TemplateModel &model, const TraceSet &attack_traces,
                         const std::vector<std::size_t> &rows) {
    if (rows.empty())
        throw ArgumentError("attack needs at least one trace");
    const Eigen::MatrixXd class_scores = per_trace_class_scores(model, attack_traces, rows);

    std::array<double, 256> scores{};
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::uint8_t p = attack_traces.plaintexts()[rows[r]];
        for (int k = 0; k < 256; ++k) {
            const std::uint8_t label = leakage_label(
                model.leakage_model(), compute_intermediate(p, static_cast<std::uint8_t>(k)));
            scores[static_cast<std::size_t>(k)] +=
                class_scores(static_cast<Eigen::Index>(r), label);
        }
    }
    return make_key_guessing_vector(scores);
}

KeyGuessingVector attack(const TemplateModel &model, const TraceSet &attack_traces) {
    std::vector<std::size_t> rows(attack_traces.n_traces());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return attack(model, attack_traces, rows);
}

int rank_of_key(const KeyGuessingVector &kgv, std::uint8_t true_key) {
    const double s = kgv.scores[true_key];
    int rank = 0;
    for (int k = 0; k < 256; ++k) {
        if (kgv.scores[static_cast<std::size_t>(k)] > s)
            ++rank;
        else if (kgv.scores[static_cast<std::size_t>(k)] == s && k < int(true_key))
            ++rank;
    }
    return rank;
}

void save_template_model(const TemplateModel &model, const std::string &path) {
    nlohmann::json j;
    j["kind"] = "sca-template-model";
    j["leakage_model"] = leakage_model_name(model.leakage_model());
    j["pooled"] = model.pooled();
    j["epsilon"] = model.epsilon();
    j["low_data_warning"] = model.low_data_warning();
    j["n_classes"] = model.n_classes();
    j["n_poi"] = model.n_poi();
    j["n_samples"] = model.poi().size();
    j["poi_indices"] = model.poi().indices();
    j["blob"] = path.substr(path.find_last_of('/') + 1) + ".bin";

    std::ofstream os(path, std::ios::trunc);
    if (!os)
        throw Error("cannot open '" + path + "' for writing");
    os << j.dump(2) << '\n';

    std::ofstream blob(path + ".bin", std::ios::binary | std::ios::trunc);
    if (!blob)
        throw Error("cannot open '" + path + ".bin' for writing");
    write_f64_blob(blob, model.class_means());
    if (model.pooled()) {
        write_f64_blob(blob, model.covariance());
    } else {
        for (int c = 0; c < model.n_classes(); ++c)
            write_f64_blob(blob, model.covariance(c));
    }
    if (!blob)
        throw Error("write to '" + path + ".bin' failed");
}

TemplateModel load_template_model(const std::string &path) {
    std::ifstream is(path);
    if (!is)
        throw Error("cannot open '" + path + "' for reading");
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::parse_error &e) {
        throw FormatError(std::string("model descriptor is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("kind").get<std::string>() != "sca-template-model")
            throw FormatError("not a template model descriptor");
        const auto model = leakage_model_from_name(j.at("leakage_model").get<std::string>());
        const bool pooled = j.at("pooled").get<bool>();
        const double epsilon = j.at("epsilon").get<double>();
        const bool warn = j.at("low_data_warning").get<bool>();
        const int n_classes = j.at("n_classes").get<int>();
        const auto n_poi = j.at("n_poi").get<Eigen::Index>();
        const auto n_samples = j.at("n_samples").get<std::size_t>();
        const auto poi_indices = j.at("poi_indices").get<std::vector<std::size_t>>();

        std::ifstream blob(path + ".bin", std::ios::binary);
        if (!blob)
            throw Error("cannot open '" + path + ".bin' for reading");
        Eigen::MatrixXd means = read_f64_blob(blob, n_classes, n_poi);
        std::vector<Eigen::MatrixXd> covs;
        const int n_covs = pooled ? 1 : n_classes;
        for (int c = 0; c < n_covs; ++c)
            covs.push_back(read_f64_blob(blob, n_poi, n_poi));
        if (!blob)
            throw IntegrityError("model blob shorter than declared dimensions");

        return TemplateModel(std::move(means), std::move(covs), pooled,
                             PoiCandidate::from_indices(n_samples, poi_indices), model, epsilon,
                             warn);
    } catch (const nlohmann::json::exception &e) {
        throw FormatError(std::string("malformed model descriptor: ") + e.what());
    }
}

} // namespace sca
