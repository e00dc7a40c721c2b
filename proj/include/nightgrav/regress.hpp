#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nightgrav {

/// Regression dataset: n rows of dim features plus targets and cluster ids.
struct Dataset {
    std::size_t n = 0;
    std::size_t dim = 0;
    std::vector<double> x;  ///< row-major n x dim
    std::vector<double> y;
    std::vector<std::uint32_t> ids;

    std::span<const double> row(std::size_t i) const { return {x.data() + i * dim, dim}; }
    void validate() const;
    /// Rows selected by index, in order.
    Dataset subset(std::span<const std::size_t> indices) const;
};

/// Coefficient of determination 1 - SS_res / SS_tot. Throws when y is
/// constant (undefined denominator).
double r_squared(std::span<const double> y, std::span<const double> y_hat);

/// Order-statistic median (mean of the middle two for even counts).
double median(std::vector<double> values);

class Model {
public:
    virtual ~Model() = default;
    virtual void fit(const Dataset& train) = 0;
    virtual double predict(std::span<const double> features) const = 0;

    std::vector<double> predict_all(const Dataset& data) const;
};

/// Ordinary least squares with intercept via a rank-revealing orthogonal
/// decomposition; rank-deficient designs get the minimum-norm solution and
/// are flagged.
class LinearModel final : public Model {
public:
    void fit(const Dataset& train) override;
    double predict(std::span<const double> features) const override;

    bool rank_deficient() const { return rank_deficient_; }
    double intercept() const { return coef_[0]; }
    std::span<const double> coefficients() const { return {coef_.data() + 1, coef_.size() - 1}; }

private:
    std::vector<double> coef_;  // [intercept, w_1..w_dim]
    bool rank_deficient_ = false;
};

/// Bayesian linear regression with evidence-maximized precisions: the weight
/// prior precision alpha and noise precision beta are re-estimated in
/// alternation until both change by less than tol relatively.
class BayesianRidgeModel final : public Model {
public:
    struct Options {
        std::uint32_t max_iter = 300;
        double tol = 1e-4;
        /// When set, alpha is held fixed instead of re-estimated.
        std::optional<double> fixed_alpha;
    };

    BayesianRidgeModel() = default;
    explicit BayesianRidgeModel(Options options) : options_(options) {}

    void fit(const Dataset& train) override;
    double predict(std::span<const double> features) const override;

    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    std::uint32_t iterations() const { return iterations_; }
    bool converged() const { return converged_; }

private:
    Options options_;
    std::vector<double> weights_;   // on centered features
    std::vector<double> x_mean_;
    double y_mean_ = 0.0;
    double alpha_ = 1.0;
    double beta_ = 1.0;
    std::uint32_t iterations_ = 0;
    bool converged_ = false;
};

/// k-nearest-neighbor regression, exhaustive Euclidean scan, distance ties
/// broken by lower training-row index.
class KnnModel final : public Model {
public:
    explicit KnnModel(std::uint32_t k) : k_(k) {}

    void fit(const Dataset& train) override;
    double predict(std::span<const double> features) const override;

private:
    std::uint32_t k_;
    Dataset train_;
};

struct ForestOptions {
    std::uint32_t n_trees = 100;
    std::uint32_t max_depth = 12;
    std::uint32_t min_leaf = 3;
    std::uint32_t m_try = 0;  ///< 0 means ceil(dim / 3)
    std::uint64_t seed = 0;
};

/// Variance-reduction regression forest on bootstrap resamples. Tree t's
/// random stream derives from (seed, t), so the forest is reproducible and
/// two forests concatenate into the forest of the combined tree list.
class RandomForestModel final : public Model {
public:
    struct TreeNode {
        std::int32_t feature = -1;  ///< -1 for leaves
        double threshold = 0.0;
        std::uint32_t left = 0;
        std::uint32_t right = 0;
        double value = 0.0;  ///< leaf prediction

        bool operator==(const TreeNode&) const = default;
    };
    using Tree = std::vector<TreeNode>;

    explicit RandomForestModel(ForestOptions options) : options_(options) {}

    void fit(const Dataset& train) override;
    double predict(std::span<const double> features) const override;

    const std::vector<Tree>& trees() const { return trees_; }
    /// Forest whose tree list is a's trees followed by b's.
    static RandomForestModel merge(const RandomForestModel& a, const RandomForestModel& b);

private:
    ForestOptions options_;
    std::vector<Tree> trees_;
};

/// Baseline that always predicts the training-target mean.
class MeanModel final : public Model {
public:
    void fit(const Dataset& train) override;
    double predict(std::span<const double>) const override { return mean_; }

private:
    double mean_ = 0.0;
};

enum class ModelKind { kLinear, kBayesianRidge, kKnn, kRandomForest, kMean };

/// Everything needed to instantiate a model for one harness run.
struct ModelSpec {
    ModelKind kind = ModelKind::kLinear;
    std::uint32_t knn_k = 5;
    BayesianRidgeModel::Options brr;
    ForestOptions forest;
    /// Standardize features per split using training statistics.
    bool standardize = false;
};

std::string model_name(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);
std::unique_ptr<Model> make_model(const ModelSpec& spec, std::uint64_t seed);

struct SplitScore {
    double train_r2 = 0.0;
    double test_r2 = 0.0;
};

struct FitReport {
    std::string model;
    std::vector<SplitScore> splits;
    double median_train_r2 = 0.0;
    double median_test_r2 = 0.0;
    std::uint64_t seed = 0;
};

/// Repeated-split evaluation: split s permutes rows with a stream derived
/// from (seed, s), takes the first floor(n * train_frac) as training rows,
/// fits the model, and scores both halves.
FitReport split_harness(const Dataset& data, const ModelSpec& spec, std::uint32_t n_splits = 100,
                        double train_frac = 0.5, std::uint64_t seed = 0);

/// Report CSV `split,train_r2,test_r2` rows plus a trailing median line.
void write_fit_report(const std::filesystem::path& path, const FitReport& report);

/// Prediction export `cluster_id,node_id,actual,predicted` for a model
/// trained on the full dataset.
void write_predictions(const std::filesystem::path& path, const Dataset& data,
                       std::span<const std::uint32_t> node_ids, const Model& model);

}  // namespace nightgrav
