#pragma once

#include "leafmatch/assignment.hpp"
#include "leafmatch/shape_space.hpp"

#include <optional>
#include <string>
#include <vector>

namespace leafmatch {

/// Which descriptors enter the feature vector.  Order is fixed:
/// [shape (d) | location (3) | rotation x',y',z' (9) | scale (1)].
struct FeatureConfig {
    bool shape = true;
    bool location = false;
    bool rotation = false;
    bool scale = false;

    bool any() const { return shape || location || rotation || scale; }
    int length(int d) const { return (shape ? d : 0) + (location ? 3 : 0) + (rotation ? 9 : 0) + (scale ? 1 : 0); }
    /// "shape+location+rotation" style label.
    std::string name() const;
    /// Parses a '+' or ',' separated list of shape/location/rotation/scale.
    static FeatureConfig parse(const std::string& spec);

    bool operator==(const FeatureConfig&) const = default;
};

/// Leaves observed in one scan: outlines plus the emergence point they are relative to.
struct OutlineSet {
    std::string plant_id;
    int time_index = 0;
    Vec3 emergence = Vec3::Zero();
    bool emergence_fallback = false;
    std::vector<LeafOutline> outlines;

    std::vector<int> leaf_ids() const;
};

struct AssembledFeature {
    Eigen::VectorXd values;
    int leaf_id = 0;
};

/// Covariance of training features with its (possibly ridge-regularised) inverse.
struct FeatureMetric {
    Eigen::MatrixXd covariance;
    Eigen::MatrixXd inverse;
    bool regularized = false;
    double ridge = 0.0;
};

struct CostMatrix {
    Eigen::MatrixXd values;  ///< rows: before, columns: after
    std::vector<int> row_ids;
    std::vector<int> col_ids;
};

struct MatchedPair {
    int row = 0;
    int col = 0;
    int before_leaf = 0;
    int after_leaf = 0;
    double cost = 0.0;
};

struct MatchResult {
    std::string plant_id;
    int before_time = 0;
    int after_time = 0;
    FeatureConfig config;
    int shape_dims = 0;
    CostMatrix costs;
    std::vector<MatchedPair> pairs;
    double total_cost = 0.0;
};

Eigen::VectorXd assemble_feature(const ShapeVector* shape, const TransformFeatures& transform,
                                 const FeatureConfig& config);

/// Throws DataError when the shape model is missing for a shape config, or the
/// config selects nothing.
std::vector<AssembledFeature> assemble_features(const OutlineSet& leaves, const ShapeModel* model,
                                                const FeatureConfig& config);

/// Sample covariance of the rows; ridge lambda = 1e-8 * trace / dim is added to the
/// diagonal when the condition number exceeds 1e12.
FeatureMetric fit_feature_covariance(const std::vector<Eigen::VectorXd>& features);

/// Training features of a config, rebuilt from the encodings and transforms stored
/// in the model.
std::vector<Eigen::VectorXd> training_features(const ShapeModel& model, const FeatureConfig& config);

double mahalanobis_cost(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::MatrixXd& inverse);

CostMatrix build_cost_matrix(const std::vector<AssembledFeature>& before, const std::vector<AssembledFeature>& after,
                             const Eigen::MatrixXd& inverse);

MatchResult match_scans(const OutlineSet& before, const OutlineSet& after, const ShapeModel& model,
                        const FeatureConfig& config);
MatchResult match_scans(const OutlineSet& before, const OutlineSet& after, const ShapeModel& model,
                        const FeatureConfig& config, const FeatureMetric& metric);

}  // namespace leafmatch
