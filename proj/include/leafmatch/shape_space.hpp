#pragma once

#include "leafmatch/outline_extract.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace leafmatch {

/// Per-leaf global transform descriptors of a training outline, kept so that any
/// feature combination can be whitened with the training covariance.
struct TransformFeatures {
    Vec3 location = Vec3::Zero();  ///< centroid relative to the plant emergence point
    Vec3 x_axis = Vec3::UnitX();
    Vec3 y_axis = Vec3::UnitY();
    Vec3 z_axis = Vec3::UnitZ();
    double scale = 0.0;
};

/// Z-score scaler + PCA basis learned from flattened outlines.
///
/// Outlines are flattened as [x0 y0 z0 x1 y1 z1 ...].  Each coordinate is
/// standardised with the training mean and population standard deviation; the
/// principal directions are the rows of `basis`, sorted by decreasing variance,
/// each signed so that its largest-magnitude entry is positive.
struct ShapeModel {
    int n_points = 0;
    Eigen::VectorXd scaler_mean;   ///< 3n
    Eigen::VectorXd scaler_std;    ///< 3n, zero-variance coordinates use 1
    Eigen::VectorXd pca_mean;      ///< 3n, mean of the standardised training vectors
    Eigen::MatrixXd basis;         ///< d x 3n, orthonormal rows
    Eigen::VectorXd explained_variances;  ///< d, sample variance (N-1) per component
    Eigen::MatrixXd feature_covariance;   ///< d x d covariance of training encodings

    /// Training manifest.
    std::vector<std::string> plant_ids;
    std::size_t outline_count = 0;

    /// Training encodings (N x d) and transforms, row-aligned; used to fit the
    /// Mahalanobis metric of any feature combination.
    Eigen::MatrixXd training_encodings;
    std::vector<TransformFeatures> training_transforms;

    int dims() const { return static_cast<int>(basis.rows()); }
    int input_dims() const { return 3 * n_points; }
};

struct ShapeVector {
    Eigen::VectorXd values;
};

/// A training outline together with the emergence point of its scan.
struct TrainingOutline {
    LeafOutline outline;
    Vec3 emergence = Vec3::Zero();
};

Eigen::VectorXd flatten(const PointList& points);
PointList unflatten(const Eigen::VectorXd& values);

TransformFeatures transform_features(const LeafOutline& outline, const Vec3& emergence);

/// Fits the scaler and PCA basis.  Uses the Gram (dual) eigenproblem when there are
/// fewer samples than input dimensions.  Throws DataError for fewer than d+1 outlines
/// or mismatched point counts.
ShapeModel fit_shape_model(const std::vector<TrainingOutline>& training, int d = 23);
ShapeModel fit_shape_model(const std::vector<LeafOutline>& outlines, int d = 23);

ShapeVector encode(const LeafOutline& outline, const ShapeModel& model);
ShapeVector encode_flat(const Eigen::VectorXd& flat, const ShapeModel& model);

/// Local-frame outline (apex at origin, unit perimeter for training-like inputs).
PointList decode(const ShapeVector& v, const ShapeModel& model);

/// Standardised-space image of a raw flattened outline.
Eigen::VectorXd scale_features(const Eigen::VectorXd& flat, const ShapeModel& model);

/// Maximum violation of the ShapeModel invariants (orthonormality, ordering,
/// symmetry, PSD); returns a message for the first failure.
std::optional<std::string> check_model_invariants(const ShapeModel& model);

}  // namespace leafmatch
