#include "nightgrav/regress.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nightgrav/common.hpp"
#include "nightgrav/rng.hpp"
#include "nightgrav/textio.hpp"

namespace nightgrav {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajorMatrix> as_matrix(const Dataset& d) {
    return {d.x.data(), static_cast<Eigen::Index>(d.n), static_cast<Eigen::Index>(d.dim)};
}

constexpr std::uint64_t kSplitStream = 0x53504c49u;  // harness split permutations
constexpr std::uint64_t kTreeStream = 0x54524545u;   // forest trees
constexpr std::uint64_t kModelStream = 0x4d4f444cu;  // per-split model seeds

}  // namespace

void Dataset::validate() const {
    if (n < 2) throw ValidationError("dataset needs at least 2 rows");
    if (dim < 1) throw ValidationError("dataset needs at least 1 feature");
    if (x.size() != n * dim || y.size() != n || ids.size() != n) {
        throw ValidationError("dataset buffer sizes are inconsistent");
    }
    for (double v : x) {
        if (!std::isfinite(v)) throw ValidationError("dataset feature is not finite");
    }
    for (double v : y) {
        if (!std::isfinite(v)) throw ValidationError("dataset target is not finite");
    }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.n = indices.size();
    out.dim = dim;
    out.x.reserve(out.n * dim);
    out.y.reserve(out.n);
    out.ids.reserve(out.n);
    for (std::size_t i : indices) {
        const auto r = row(i);
        out.x.insert(out.x.end(), r.begin(), r.end());
        out.y.push_back(y[i]);
        out.ids.push_back(ids[i]);
    }
    return out;
}

double r_squared(std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size() || y.size() < 2) {
        throw ValidationError("r_squared: need two equal-length vectors of size >= 2");
    }
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_res += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    if (ss_tot == 0.0) throw ValidationError("r_squared: constant targets");
    return 1.0 - ss_res / ss_tot;
}

double median(std::vector<double> values) {
    if (values.empty()) throw ValidationError("median of empty list");
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return 0.5 * (values[mid - 1] + values[mid]);
}

std::vector<double> Model::predict_all(const Dataset& data) const {
    std::vector<double> out(data.n);
    for (std::size_t i = 0; i < data.n; ++i) out[i] = predict(data.row(i));
    return out;
}

// ---------------------------------------------------------------------------
// Linear regression

void LinearModel::fit(const Dataset& train) {
    train.validate();
    const auto n = static_cast<Eigen::Index>(train.n);
    const auto dim = static_cast<Eigen::Index>(train.dim);
    Eigen::MatrixXd design(n, dim + 1);
    design.col(0).setOnes();
    design.rightCols(dim) = as_matrix(train);
    Eigen::Map<const Eigen::VectorXd> targets(train.y.data(), n);

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
    rank_deficient_ = cod.rank() < dim + 1;
    const Eigen::VectorXd solution = cod.solve(targets);
    coef_.assign(solution.data(), solution.data() + solution.size());
}

double LinearModel::predict(std::span<const double> features) const {
    if (features.size() + 1 != coef_.size()) {
        throw ValidationError("linear predict: feature length mismatch");
    }
    double out = coef_[0];
    for (std::size_t i = 0; i < features.size(); ++i) out += coef_[i + 1] * features[i];
    return out;
}

// ---------------------------------------------------------------------------
// Bayesian ridge (evidence maximization)

void BayesianRidgeModel::fit(const Dataset& train) {
    train.validate();
    const auto n = static_cast<Eigen::Index>(train.n);
    const auto dim = static_cast<Eigen::Index>(train.dim);

    Eigen::MatrixXd centered = as_matrix(train);
    Eigen::VectorXd xm = centered.colwise().mean();
    centered.rowwise() -= xm.transpose();
    Eigen::Map<const Eigen::VectorXd> raw_y(train.y.data(), n);
    y_mean_ = raw_y.mean();
    Eigen::VectorXd yc = raw_y.array() - y_mean_;

    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const Eigen::VectorXd uty = svd.matrixU().transpose() * yc;

    const double y_var = yc.squaredNorm() / static_cast<double>(n);
    constexpr double kPrecisionFloor = 1e-12;
    constexpr double kPrecisionCeil = 1e16;
    const auto clamp = [](double v) { return std::clamp(v, kPrecisionFloor, kPrecisionCeil); };

    beta_ = y_var > 0.0 ? 1.0 / y_var : 1.0;
    alpha_ = options_.fixed_alpha.value_or(1.0);

    Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
    converged_ = false;
    iterations_ = 0;
    for (std::uint32_t it = 0; it < options_.max_iter; ++it) {
        iterations_ = it + 1;
        // posterior mean for current (alpha, beta)
        Eigen::VectorXd scale(s.size());
        double gamma = 0.0;
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            const double s2 = s[i] * s[i];
            const double denom = beta_ * s2 + alpha_;
            scale[i] = denom > 0.0 ? beta_ * s[i] / denom : 0.0;
            gamma += beta_ * s2 / (beta_ * s2 + alpha_);
        }
        w = svd.matrixV() * scale.asDiagonal() * uty;

        const double rss = (yc - centered * w).squaredNorm();
        const double wtw = w.squaredNorm();
        const double new_alpha = options_.fixed_alpha
                                     ? alpha_
                                     : clamp(wtw > 0.0 ? gamma / wtw : kPrecisionCeil);
        const double denom_beta = static_cast<double>(n) - gamma;
        const double new_beta =
            clamp(rss > 0.0 && denom_beta > 0.0 ? denom_beta / rss : kPrecisionCeil);

        const double da = std::abs(new_alpha - alpha_) / std::max(alpha_, kPrecisionFloor);
        const double db = std::abs(new_beta - beta_) / std::max(beta_, kPrecisionFloor);
        alpha_ = new_alpha;
        beta_ = new_beta;
        if (da < options_.tol && db < options_.tol) {
            converged_ = true;
            break;
        }
    }
    // final posterior mean at the converged precisions
    Eigen::VectorXd scale(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        const double denom = beta_ * s[i] * s[i] + alpha_;
        scale[i] = denom > 0.0 ? beta_ * s[i] / denom : 0.0;
    }
    w = svd.matrixV() * scale.asDiagonal() * uty;

    weights_.assign(w.data(), w.data() + w.size());
    x_mean_.assign(xm.data(), xm.data() + xm.size());
}

double BayesianRidgeModel::predict(std::span<const double> features) const {
    if (features.size() != weights_.size()) {
        throw ValidationError("bayesian ridge predict: feature length mismatch");
    }
    double out = y_mean_;
    for (std::size_t i = 0; i < features.size(); ++i) {
        out += weights_[i] * (features[i] - x_mean_[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// k-nearest neighbors

void KnnModel::fit(const Dataset& train) {
    train.validate();
    if (k_ < 1) throw ValidationError("knn: k must be >= 1");
    if (k_ > train.n) throw ValidationError("knn: k exceeds training size");
    train_ = train;
}

double KnnModel::predict(std::span<const double> features) const {
    if (features.size() != train_.dim) throw ValidationError("knn predict: feature length mismatch");
    std::vector<std::pair<double, std::size_t>> dist(train_.n);
    for (std::size_t i = 0; i < train_.n; ++i) {
        const auto r = train_.row(i);
        double d2 = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) {
            const double diff = features[j] - r[j];
            d2 += diff * diff;
        }
        dist[i] = {d2, i};
    }
    std::nth_element(dist.begin(), dist.begin() + (k_ - 1), dist.end());
    std::sort(dist.begin(), dist.begin() + k_);
    double sum = 0.0;
    for (std::uint32_t i = 0; i < k_; ++i) sum += train_.y[dist[i].second];
    return sum / static_cast<double>(k_);
}

// ---------------------------------------------------------------------------
// Random forest

namespace {

struct TreeBuilder {
    const Dataset& data;
    const ForestOptions& options;
    std::uint32_t m_try;
    Rng& rng;
    RandomForestModel::Tree nodes;

    // Sorted row indices per candidate feature, reused across nodes.
    std::vector<std::size_t> work;

    std::uint32_t build(std::vector<std::size_t>& rows, std::uint32_t depth) {
        const auto node_index = static_cast<std::uint32_t>(nodes.size());
        nodes.emplace_back();

        double sum = 0.0;
        double min_y = data.y[rows.front()];
        double max_y = min_y;
        for (std::size_t i : rows) {
            sum += data.y[i];
            min_y = std::min(min_y, data.y[i]);
            max_y = std::max(max_y, data.y[i]);
        }
        const double mean = sum / static_cast<double>(rows.size());

        const bool can_split = depth < options.max_depth &&
                               rows.size() >= 2 * static_cast<std::size_t>(options.min_leaf) &&
                               max_y > min_y;
        if (!can_split) {
            nodes[node_index].value = max_y == min_y ? min_y : mean;
            return node_index;
        }

        // Sample m_try distinct candidate features from the tree stream.
        std::vector<std::uint32_t> candidates(data.dim);
        std::iota(candidates.begin(), candidates.end(), 0u);
        for (std::uint32_t i = 0; i < m_try; ++i) {
            const auto j = i + static_cast<std::uint32_t>(rng.uniform_index(candidates.size() - i));
            std::swap(candidates[i], candidates[j]);
        }
        candidates.resize(m_try);

        double best_sse = std::numeric_limits<double>::infinity();
        std::int32_t best_feature = -1;
        double best_threshold = 0.0;
        for (const std::uint32_t f : candidates) {
            work = rows;
            std::sort(work.begin(), work.end(), [&](std::size_t a, std::size_t b) {
                const double xa = data.x[a * data.dim + f];
                const double xb = data.x[b * data.dim + f];
                return xa != xb ? xa < xb : a < b;
            });
            // prefix scan: minimize SSE_left + SSE_right
            double left_sum = 0.0;
            double left_sq = 0.0;
            double total_sq = 0.0;
            for (std::size_t i : work) total_sq += data.y[i] * data.y[i];
            const double total_sum = sum;
            const std::size_t count = work.size();
            for (std::size_t i = 0; i + 1 < count; ++i) {
                const double yi = data.y[work[i]];
                left_sum += yi;
                left_sq += yi * yi;
                const std::size_t left_n = i + 1;
                const std::size_t right_n = count - left_n;
                if (left_n < options.min_leaf || right_n < options.min_leaf) continue;
                const double xl = data.x[work[i] * data.dim + f];
                const double xr = data.x[work[i + 1] * data.dim + f];
                if (xl == xr) continue;  // no threshold separates equal values
                const double right_sum = total_sum - left_sum;
                const double right_sq = total_sq - left_sq;
                const double sse = (left_sq - left_sum * left_sum / static_cast<double>(left_n)) +
                                   (right_sq - right_sum * right_sum / static_cast<double>(right_n));
                if (sse < best_sse) {
                    best_sse = sse;
                    best_feature = static_cast<std::int32_t>(f);
                    best_threshold = xl + 0.5 * (xr - xl);
                    if (best_threshold <= xl) best_threshold = xr;  // midpoint underflow guard
                }
            }
        }

        if (best_feature < 0) {
            nodes[node_index].value = mean;
            return node_index;
        }

        std::vector<std::size_t> left_rows;
        std::vector<std::size_t> right_rows;
        for (std::size_t i : rows) {
            const double v = data.x[i * data.dim + static_cast<std::size_t>(best_feature)];
            (v < best_threshold ? left_rows : right_rows).push_back(i);
        }
        nodes[node_index].feature = best_feature;
        nodes[node_index].threshold = best_threshold;
        const std::uint32_t left = build(left_rows, depth + 1);
        const std::uint32_t right = build(right_rows, depth + 1);
        nodes[node_index].left = left;
        nodes[node_index].right = right;
        return node_index;
    }
};

double predict_tree(const RandomForestModel::Tree& tree, std::span<const double> features) {
    std::uint32_t at = 0;
    while (tree[at].feature >= 0) {
        const auto f = static_cast<std::size_t>(tree[at].feature);
        at = features[f] < tree[at].threshold ? tree[at].left : tree[at].right;
    }
    return tree[at].value;
}

}  // namespace

void RandomForestModel::fit(const Dataset& train) {
    train.validate();
    if (train.n < 2 * static_cast<std::size_t>(options_.min_leaf)) {
        throw ValidationError("random forest: need at least 2*min_leaf training rows");
    }
    const std::uint32_t m_try =
        options_.m_try > 0
            ? std::min<std::uint32_t>(options_.m_try, static_cast<std::uint32_t>(train.dim))
            : static_cast<std::uint32_t>(
                  (train.dim + 2) / 3);  // ceil(dim / 3)
    trees_.clear();
    trees_.reserve(options_.n_trees);
    for (std::uint32_t t = 0; t < options_.n_trees; ++t) {
        Rng rng(mix_seed(options_.seed, t, kTreeStream));
        std::vector<std::size_t> rows(train.n);
        for (auto& r : rows) r = static_cast<std::size_t>(rng.uniform_index(train.n));
        TreeBuilder builder{train, options_, m_try, rng, {}, {}};
        builder.build(rows, 0);
        trees_.push_back(std::move(builder.nodes));
    }
}

double RandomForestModel::predict(std::span<const double> features) const {
    if (trees_.empty()) throw ValidationError("random forest: predict before fit");
    double sum = 0.0;
    for (const Tree& t : trees_) sum += predict_tree(t, features);
    return sum / static_cast<double>(trees_.size());
}

RandomForestModel RandomForestModel::merge(const RandomForestModel& a, const RandomForestModel& b) {
    ForestOptions options = a.options_;
    options.n_trees = a.options_.n_trees + b.options_.n_trees;
    RandomForestModel out(options);
    out.trees_ = a.trees_;
    out.trees_.insert(out.trees_.end(), b.trees_.begin(), b.trees_.end());
    return out;
}

// ---------------------------------------------------------------------------

void MeanModel::fit(const Dataset& train) {
    train.validate();
    double sum = 0.0;
    for (double v : train.y) sum += v;
    mean_ = sum / static_cast<double>(train.n);
}

std::string model_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::kLinear: return "lr";
        case ModelKind::kBayesianRidge: return "brr";
        case ModelKind::kKnn: return "knn";
        case ModelKind::kRandomForest: return "rf";
        case ModelKind::kMean: return "mean";
    }
    return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
    if (name == "lr") return ModelKind::kLinear;
    if (name == "brr") return ModelKind::kBayesianRidge;
    if (name == "knn") return ModelKind::kKnn;
    if (name == "rf") return ModelKind::kRandomForest;
    if (name == "mean") return ModelKind::kMean;
    throw ValidationError("unknown model '" + name + "' (expected lr, brr, knn, rf or mean)");
}

std::unique_ptr<Model> make_model(const ModelSpec& spec, std::uint64_t seed) {
    switch (spec.kind) {
        case ModelKind::kLinear: return std::make_unique<LinearModel>();
        case ModelKind::kBayesianRidge: return std::make_unique<BayesianRidgeModel>(spec.brr);
        case ModelKind::kKnn: return std::make_unique<KnnModel>(spec.knn_k);
        case ModelKind::kRandomForest: {
            ForestOptions options = spec.forest;
            options.seed = seed;
            return std::make_unique<RandomForestModel>(options);
        }
        case ModelKind::kMean: return std::make_unique<MeanModel>();
    }
    throw ValidationError("unknown model kind");
}

namespace {

struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    void fit(const Dataset& d) {
        mean.assign(d.dim, 0.0);
        scale.assign(d.dim, 1.0);
        for (std::size_t i = 0; i < d.n; ++i) {
            const auto r = d.row(i);
            for (std::size_t j = 0; j < d.dim; ++j) mean[j] += r[j];
        }
        for (double& m : mean) m /= static_cast<double>(d.n);
        std::vector<double> var(d.dim, 0.0);
        for (std::size_t i = 0; i < d.n; ++i) {
            const auto r = d.row(i);
            for (std::size_t j = 0; j < d.dim; ++j) {
                var[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
            }
        }
        for (std::size_t j = 0; j < d.dim; ++j) {
            const double sd = std::sqrt(var[j] / static_cast<double>(d.n));
            scale[j] = sd > 0.0 ? sd : 1.0;
        }
    }

    Dataset apply(const Dataset& d) const {
        Dataset out = d;
        for (std::size_t i = 0; i < d.n; ++i) {
            for (std::size_t j = 0; j < d.dim; ++j) {
                out.x[i * d.dim + j] = (d.x[i * d.dim + j] - mean[j]) / scale[j];
            }
        }
        return out;
    }
};

}  // namespace

FitReport split_harness(const Dataset& data, const ModelSpec& spec, std::uint32_t n_splits,
                        double train_frac, std::uint64_t seed) {
    data.validate();
    if (data.n < 4) throw ValidationError("split_harness: need at least 4 rows");
    if (n_splits < 1) throw ValidationError("split_harness: n_splits must be >= 1");
    if (!(train_frac > 0.0 && train_frac < 1.0)) {
        throw ValidationError("split_harness: train_frac must be in (0, 1)");
    }

    FitReport report;
    report.model = model_name(spec.kind);
    report.seed = seed;
    report.splits.reserve(n_splits);

    auto train_size =
        static_cast<std::size_t>(std::floor(static_cast<double>(data.n) * train_frac));
    train_size = std::clamp<std::size_t>(train_size, 2, data.n - 2);

    std::vector<std::size_t> order(data.n);
    for (std::uint32_t s = 0; s < n_splits; ++s) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(mix_seed(seed, s, kSplitStream));
        rng.shuffle(order);
        const std::span<const std::size_t> train_idx(order.data(), train_size);
        const std::span<const std::size_t> test_idx(order.data() + train_size,
                                                    data.n - train_size);
        Dataset train = data.subset(train_idx);
        Dataset test = data.subset(test_idx);
        if (spec.standardize) {
            Standardizer sc;
            sc.fit(train);
            train = sc.apply(train);
            test = sc.apply(test);
        }
        auto model = make_model(spec, mix_seed(seed, s, kModelStream));
        model->fit(train);
        const auto train_pred = model->predict_all(train);
        const auto test_pred = model->predict_all(test);
        report.splits.push_back(
            {r_squared(train.y, train_pred), r_squared(test.y, test_pred)});
    }

    std::vector<double> train_scores;
    std::vector<double> test_scores;
    train_scores.reserve(n_splits);
    test_scores.reserve(n_splits);
    for (const auto& s : report.splits) {
        train_scores.push_back(s.train_r2);
        test_scores.push_back(s.test_r2);
    }
    report.median_train_r2 = median(std::move(train_scores));
    report.median_test_r2 = median(std::move(test_scores));
    return report;
}

void write_fit_report(const std::filesystem::path& path, const FitReport& report) {
    std::ofstream out = open_output(path);
    out << "split,train_r2,test_r2\n";
    for (std::size_t s = 0; s < report.splits.size(); ++s) {
        out << s << ',' << format_double(report.splits[s].train_r2) << ','
            << format_double(report.splits[s].test_r2) << "\n";
    }
    out << "median," << format_double(report.median_train_r2) << ','
        << format_double(report.median_test_r2) << "\n";
}

void write_predictions(const std::filesystem::path& path, const Dataset& data,
                       std::span<const std::uint32_t> node_ids, const Model& model) {
    if (node_ids.size() != data.n) {
        throw ValidationError("write_predictions: node id count mismatch");
    }
    std::ofstream out = open_output(path);
    out << "cluster_id,node_id,actual,predicted\n";
    for (std::size_t i = 0; i < data.n; ++i) {
        out << data.ids[i] << ',' << node_ids[i] << ',' << format_double(data.y[i]) << ','
            << format_double(model.predict(data.row(i))) << "\n";
    }
}

}  // namespace nightgrav
