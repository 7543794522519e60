#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "latalign/io/trial_archive.hpp"
#include "latalign/model/model.hpp"
#include "latalign/train/trainer.hpp"

namespace latalign {

/// 95% quantile of the chi-square distribution with two degrees of freedom.
inline constexpr double kChi2Quantile95Df2 = 5.991464547107979;

struct MdsResult {
  Eigen::MatrixXd points;       // [n x dims]
  Eigen::VectorXd eigenvalues;  // all eigenvalues of the centered Gram matrix, descending
};

/// Classical MDS: double-centered Gram matrix of the Euclidean distances,
/// top eigenvectors scaled by sqrt(eigenvalue).
MdsResult classical_mds(const Eigen::MatrixXd& features, std::size_t dims = 2);

struct Ellipse {
  Eigen::Vector2d center;
  Eigen::Matrix2d covariance;
  double major_radius = 0.0;
  double minor_radius = 0.0;
  double angle_rad = 0.0;  // of the major axis
};

/// Gaussian confidence ellipse: radii sqrt(lambda * quantile) of the sample covariance.
Ellipse confidence_ellipse(const Eigen::MatrixXd& points, double quantile = kChi2Quantile95Df2);

/// [n x features] by averaging every axis after the feature axis.
Eigen::MatrixXd time_averaged(const Tensor& capture);

struct SubjectCloud {
  std::string subject;
  Eigen::MatrixXd points;
  Ellipse ellipse;
};

/// Latent features at `hook` for every trial of the given sessions (one
/// alignment context per session), pooled into one MDS fit.
std::vector<SubjectCloud> latent_projection(Model& model, const TrialArchive& archive,
                                            std::span<const std::size_t> sessions, std::size_t hook,
                                            Method method);

nlohmann::json to_json(const std::vector<SubjectCloud>& clouds);

}  // namespace latalign
