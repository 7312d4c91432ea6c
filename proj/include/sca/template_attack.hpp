#ifndef SCA_TEMPLATE_ATTACK_HPP
#define SCA_TEMPLATE_ATTACK_HPP

#include "sca/poi.hpp"
#include "sca/trace_set.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace sca {

// Per-class sample statistics over the selected POI columns. Covariances are
// raw (no regularization): pooled uses the (n - n_classes) divisor, per-class
// ones use (n_c - 1).
struct ClassStats {
    Eigen::MatrixXd means; // n_classes x d
    Eigen::MatrixXd pooled_covariance;
    std::vector<Eigen::MatrixXd> class_covariances;
    std::vector<std::size_t> counts;
};

ClassStats compute_class_stats(const TraceSet &profiling, const std::vector<std::uint8_t> &labels,
                               const PoiCandidate &poi, int n_classes);

// Gaussian templates over a POI selection: one mean per class plus a pooled
// or per-class covariance, kept with its Cholesky factor for scoring.
class TemplateModel {
  public:
    // Covariances are used as given; factorization failure raises
    // ConditioningError. `covariances` holds one matrix when pooled.
    TemplateModel(Eigen::MatrixXd class_means, std::vector<Eigen::MatrixXd> covariances,
                  bool pooled, PoiCandidate poi, LeakageModel leakage_model, double epsilon,
                  bool low_data_warning = false);

    int n_classes() const { return static_cast<int>(class_means_.rows()); }
    std::size_t n_poi() const { return static_cast<std::size_t>(class_means_.cols()); }
    // One trainable parameter per selected time sample.
    std::size_t trainable_parameters() const { return n_poi(); }

    bool pooled() const { return pooled_; }
    double epsilon() const { return epsilon_; }
    bool low_data_warning() const { return low_data_warning_; }
    LeakageModel leakage_model() const { return leakage_model_; }
    const PoiCandidate &poi() const { return poi_; }
    const Eigen::MatrixXd &class_means() const { return class_means_; }
    const Eigen::MatrixXd &covariance(int cls = 0) const {
        return covariances_[pooled_ ? 0 : static_cast<std::size_t>(cls)];
    }

    // Multivariate Gaussian log-density of a POI vector under one class.
    double discriminant_score(const Eigen::VectorXd &trace_poi_values, int cls) const;

    // POI column extraction for one trace row.
    Eigen::VectorXd extract_poi(const TraceSet &ts, std::size_t row) const;

  private:
    Eigen::MatrixXd class_means_;
    std::vector<Eigen::MatrixXd> covariances_;
    std::vector<Eigen::MatrixXd> chol_factors_; // lower triangular L, C = L L^T
    std::vector<double> log_dets_;
    bool pooled_;
    PoiCandidate poi_;
    LeakageModel leakage_model_;
    double epsilon_;
    bool low_data_warning_;

    const Eigen::MatrixXd &factor(int cls) const {
        return chol_factors_[pooled_ ? 0 : static_cast<std::size_t>(cls)];
    }
    double log_det(int cls) const {
        return log_dets_[pooled_ ? 0 : static_cast<std::size_t>(cls)];
    }
};

// Builds templates from a profiling set. Every class of the leakage model
// must occur with at least 2 traces. epsilon scales the mean covariance
// diagonal and is added to the diagonal before factorization.
TemplateModel build_templates(const TraceSet &profiling, const std::vector<std::uint8_t> &labels,
                              const PoiCandidate &poi, LeakageModel model, bool pooled = true,
                              double epsilon = 1e-6);

// 256 accumulated log-scores plus the descending ranking (ties broken by
// ascending key byte).
struct KeyGuessingVector {
    std::array<double, 256> scores;
    std::array<std::uint8_t, 256> ranking;
};

KeyGuessingVector make_key_guessing_vector(const std::array<double, 256> &scores);

// Log-density of every attack row under every class template
// (rows.size() x n_classes). The shared kernel of attack() and the
// guessing-entropy harness.
Eigen::MatrixXd per_trace_class_scores(const TemplateModel &model, const TraceSet &attack_traces,
                                       const std::vector<std::size_t> &rows);

KeyGuessingVector attack(const TemplateModel &model, const TraceSet &attack_traces);
KeyGuessingVector attack(const TemplateModel &model, const TraceSet &attack_traces,
                         const std::vector<std::size_t> &rows);

// 0-indexed rank: keys scoring strictly higher, plus equal-scored keys with
// a smaller byte value.
int rank_of_key(const KeyGuessingVector &kgv, std::uint8_t true_key);

// JSON descriptor at `path`, f64 LE means/covariance blobs at `path`.bin.
void save_template_model(const TemplateModel &model, const std::string &path);
TemplateModel load_template_model(const std::string &path);

} // namespace sca

#endif
