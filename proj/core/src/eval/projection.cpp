#include "latalign/eval/projection.hpp"

#include <cmath>

#include "latalign/align/whitening.hpp"
#include "latalign/error.hpp"

namespace latalign {

MdsResult classical_mds(const Eigen::MatrixXd& x, std::size_t dims) {
  const Eigen::Index n = x.rows();
  require(n >= 2, ErrorCode::InvalidArgument, "MDS needs at least two points");
  const Eigen::VectorXd sq = x.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = (-2.0 * x * x.transpose()).colwise() + sq;
  d2.rowwise() += sq.transpose();
  d2 = d2.cwiseMax(0.0);
  const Eigen::MatrixXd j = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  const Eigen::MatrixXd b = -0.5 * j * d2 * j;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
  require(eig.info() == Eigen::Success, ErrorCode::DegenerateSpectrum, "eigendecomposition failed");

  MdsResult r;
  r.eigenvalues = eig.eigenvalues().reverse();
  const double tol = 1e-10 * std::max(1.0, std::abs(r.eigenvalues(0)));
  Eigen::Index positive = 0;
  for (Eigen::Index i = 0; i < n; ++i) positive += r.eigenvalues(i) > tol ? 1 : 0;
  require(positive >= static_cast<Eigen::Index>(dims), ErrorCode::DegenerateSpectrum,
          "Gram matrix has " + std::to_string(positive) + " positive eigenvalue(s), need " + std::to_string(dims));
  r.points.resize(n, static_cast<Eigen::Index>(dims));
  for (std::size_t k = 0; k < dims; ++k) {
    const Eigen::Index col = n - 1 - static_cast<Eigen::Index>(k);
    Eigen::VectorXd v = eig.eigenvectors().col(col);
    // Fix the sign so the largest-magnitude coordinate is positive.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    r.points.col(static_cast<Eigen::Index>(k)) = v * std::sqrt(r.eigenvalues(static_cast<Eigen::Index>(k)));
  }
  return r;
}

Ellipse confidence_ellipse(const Eigen::MatrixXd& p, double quantile) {
  require(p.cols() == 2 && p.rows() >= 3, ErrorCode::InsufficientTrials, "an ellipse needs at least three 2-D points");
  Ellipse e;
  e.center = p.colwise().mean().transpose();
  const Eigen::MatrixXd c = p.rowwise() - e.center.transpose();
  e.covariance = c.transpose() * c / static_cast<double>(p.rows() - 1);
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(e.covariance);
  const Eigen::Vector2d lam = eig.eigenvalues().cwiseMax(0.0);
  e.major_radius = std::sqrt(lam(1) * quantile);
  e.minor_radius = std::sqrt(lam(0) * quantile);
  const Eigen::Vector2d axis = eig.eigenvectors().col(1);
  e.angle_rad = std::atan2(axis(1), axis(0));
  return e;
}

Eigen::MatrixXd time_averaged(const Tensor& t) {
  require(t.rank() >= 2, ErrorCode::ShapeMismatch, "capture needs a feature axis");
  const std::size_t n = t.dim(0), d = t.dim(1), inner = t.inner_size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      const double* p = t.data() + (i * d + j) * inner;
      for (std::size_t k = 0; k < inner; ++k) s += p[k];
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s / static_cast<double>(inner);
    }
  return out;
}

std::vector<SubjectCloud> latent_projection(Model& model, const TrialArchive& archive,
                                            std::span<const std::size_t> sessions, std::size_t hook,
                                            Method method) {
  require(hook < model.hook_count(), ErrorCode::InvalidArgument,
          "hook " + std::to_string(hook) + " out of range (model has " + std::to_string(model.hook_count()) + ")");
  std::vector<Eigen::MatrixXd> parts;
  std::vector<std::string> names;
  Eigen::Index total = 0;
  for (std::size_t s : sessions) {
    const TrialBatch batch = session_batch(archive, s);
    require(batch.size() >= 3, ErrorCode::InsufficientTrials,
            "session " + archive.sessions[s].subject + " has fewer than three trials");
    ForwardOptions options;
    options.capture = true;
    Tensor x = batch.signals;
    if (method == Method::Euclidean) x = euclidean_align(x, fit_whitener(x));
    if (method == Method::Latent || method == Method::Adaptive) options.collect_context = true;
    const ForwardResult r = model.forward(x, options);
    restore_batchnorm(model);
    parts.push_back(time_averaged(r.captures.at(hook)));
    names.push_back(archive.sessions[s].subject);
    total += parts.back().rows();
  }
  Eigen::MatrixXd all(total, parts.front().cols());
  Eigen::Index row = 0;
  for (const auto& p : parts) {
    all.middleRows(row, p.rows()) = p;
    row += p.rows();
  }
  const MdsResult mds = classical_mds(all, 2);
  std::vector<SubjectCloud> clouds;
  row = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    SubjectCloud c;
    c.subject = names[i];
    c.points = mds.points.middleRows(row, parts[i].rows());
    c.ellipse = confidence_ellipse(c.points);
    row += parts[i].rows();
    clouds.push_back(std::move(c));
  }
  return clouds;
}

nlohmann::json to_json(const std::vector<SubjectCloud>& clouds) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : clouds) {
    nlohmann::json pts = nlohmann::json::array();
    for (Eigen::Index i = 0; i < c.points.rows(); ++i) pts.push_back({c.points(i, 0), c.points(i, 1)});
    out.push_back({{"subject", c.subject},
                   {"points", pts},
                   {"ellipse",
                    {{"center", {c.ellipse.center(0), c.ellipse.center(1)}},
                     {"major_radius", c.ellipse.major_radius},
                     {"minor_radius", c.ellipse.minor_radius},
                     {"angle_rad", c.ellipse.angle_rad}}}});
  }
  return out;
}

}  // namespace latalign
