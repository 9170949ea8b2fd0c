#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bathy/pairing.hpp"
#include "bathy/pointcloud.hpp"

namespace bathy {

struct SvrHyperparams {
  double c = 1.0;          // weight on total slack
  double epsilon = 0.0;    // half-width of the insensitive tube, meters
  double tol = 1e-9;       // relative bracket width on the slope at convergence
  long max_iter = 100000;  // golden-section iterations
  bool standardize = false;

  /// Throws ConfigError when any field is out of range.
  void validate() const;
};

enum class ModelKind { kSvr, kLeastSquares };

struct TrainingSummary {
  std::size_t n_samples = 0;
  double objective = 0.0;
  long iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

/// Affine depth map z = w * z0 + b. When trained with standardization the
/// scaler is recorded; w and b are always expressed on raw apparent depth.
struct SvrModel {
  ModelKind kind = ModelKind::kSvr;
  double w = 1.0;
  double b = 0.0;
  double x_mean = 0.0;
  double x_scale = 1.0;
  SvrHyperparams hyperparams;
  TrainingSummary summary;
};

/// Primal objective 0.5*w^2 + c * sum(max(0, |z - (w*z0 + b)| - epsilon)).
double svr_objective(std::span<const DepthSample> samples, double w, double b, double c,
                     double epsilon);

/// Linear epsilon-insensitive regression of z on z0.
///
/// For fixed slope the optimal bias is a median of the 2n tube edges
/// {r_i - eps, r_i + eps} with r_i = z_i - w*z0_i, so the problem reduces to
/// a convex function of w alone, minimised by golden-section search inside a
/// bracket bounded through 0.5*w^2 <= objective(0, b*(0)). Deterministic.
///
/// Throws DegenerateDesign with fewer than two distinct z0 values. Running
/// out of iterations returns a model with summary.converged == false.
SvrModel fit_svr(const SampleSet& samples, const SvrHyperparams& hp = {});

/// Ordinary least squares on centred sums.
SvrModel fit_least_squares(const SampleSet& samples);

/// w * z0 + b; throws InputError on non-finite input.
double predict(const SvrModel& model, double z0);

/// Applies the model to every point below the surface (z < 0); points at or
/// above z = 0 pass through untouched.
PointCloud correct_cloud(const SvrModel& model, const PointCloud& cloud);

inline constexpr int kModelFileVersion = 1;

void save_model(const SvrModel& model, const std::filesystem::path& path);
SvrModel load_model(const std::filesystem::path& path);

}  // namespace bathy
