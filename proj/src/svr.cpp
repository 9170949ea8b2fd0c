#include "bathy/svr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "bathy/error.hpp"
#include "bathy/text_format.hpp"

namespace bathy {

void SvrHyperparams::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("svr c must be positive");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("svr epsilon must be non-negative");
  }
  if (!(tol > 0.0)) throw ConfigError("svr tol must be positive");
  if (max_iter < 1) throw ConfigError("svr max_iter must be at least 1");
}

double svr_objective(std::span<const DepthSample> samples, double w, double b, double c,
                     double epsilon) {
  double slack = 0.0;
  for (const auto& s : samples) {
    slack += std::max(0.0, std::abs(s.z - (w * s.z0 + b)) - epsilon);
  }
  return 0.5 * w * w + c * slack;
}

namespace {

void require_design(const SampleSet& samples) {
  if (samples.size() < 2) throw DegenerateDesign("need at least 2 samples to fit");
  const double first = samples.samples.front().z0;
  const bool varied = std::any_of(samples.samples.begin(), samples.samples.end(),
                                  [&](const DepthSample& s) { return s.z0 != first; });
  if (!varied) throw DegenerateDesign("need at least 2 distinct apparent depths to fit");
}

// Exact minimiser over the bias for a fixed slope. The slack term equals
// 0.5*sum(|b - (r-eps)| + |b - (r+eps)|) - n*eps, whose minimisers are the
// medians of the 2n tube edges; the midpoint of the two central edges is used.
class BiasSolver {
 public:
  BiasSolver(std::span<const DepthSample> samples, double c, double epsilon)
      : samples_(samples), c_(c), eps_(epsilon), edges_(2 * samples.size()) {}

  double best_bias(double w) {
    std::size_t k = 0;
    for (const auto& s : samples_) {
      const double r = s.z - w * s.z0;
      edges_[k++] = r - eps_;
      edges_[k++] = r + eps_;
    }
    const std::size_t n = samples_.size();
    auto upper = edges_.begin() + static_cast<std::ptrdiff_t>(n);
    std::nth_element(edges_.begin(), upper, edges_.end());
    const double hi = *upper;
    const double lo = *std::max_element(edges_.begin(), upper);
    return 0.5 * (lo + hi);
  }

  // Objective profile over the slope.
  double profile(double w, double* bias_out = nullptr) {
    const double b = best_bias(w);
    if (bias_out) *bias_out = b;
    return svr_objective(samples_, w, b, c_, eps_);
  }

 private:
  std::span<const DepthSample> samples_;
  double c_;
  double eps_;
  std::vector<double> edges_;
};

struct Scaler {
  double mean = 0.0;
  double scale = 1.0;
};

Scaler fit_scaler(const std::vector<DepthSample>& s) {
  double mean = 0.0;
  for (const auto& d : s) mean += d.z0;
  mean /= static_cast<double>(s.size());
  double var = 0.0;
  for (const auto& d : s) var += (d.z0 - mean) * (d.z0 - mean);
  var /= static_cast<double>(s.size());
  return {mean, std::sqrt(var)};
}

}  // namespace

SvrModel fit_svr(const SampleSet& samples, const SvrHyperparams& hp) {
  hp.validate();
  require_design(samples);

  SvrModel model;
  model.kind = ModelKind::kSvr;
  model.hyperparams = hp;

  std::vector<DepthSample> work = samples.samples;
  if (hp.standardize) {
    const auto sc = fit_scaler(work);
    model.x_mean = sc.mean;
    model.x_scale = sc.scale;
    for (auto& d : work) d.z0 = (d.z0 - sc.mean) / sc.scale;
  }

  BiasSolver solver(work, hp.c, hp.epsilon);
  const double g0 = solver.profile(0.0);
  const double bound = std::sqrt(2.0 * g0);

  double w_best = 0.0;
  double g_best = g0;
  long iterations = 0;
  bool converged = bound == 0.0;

  if (!converged) {
    constexpr double kInvPhi = 0.6180339887498948482;
    double lo = -bound;
    double hi = bound;
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    double g1 = solver.profile(x1);
    double g2 = solver.profile(x2);
    while (iterations < hp.max_iter) {
      const double mid = 0.5 * (lo + hi);
      if (hi - lo <= hp.tol * std::max(1.0, std::abs(mid))) {
        converged = true;
        break;
      }
      ++iterations;
      if (g1 <= g2) {
        hi = x2;
        x2 = x1;
        g2 = g1;
        x1 = hi - kInvPhi * (hi - lo);
        g1 = solver.profile(x1);
      } else {
        lo = x1;
        x1 = x2;
        g1 = g2;
        x2 = lo + kInvPhi * (hi - lo);
        g2 = solver.profile(x2);
      }
    }
    const double mid = 0.5 * (lo + hi);
    const double gm = solver.profile(mid);
    // Keep the best evaluated candidate; ties resolve toward the earlier entry.
    const std::pair<double, double> candidates[] = {{mid, gm}, {x1, g1}, {x2, g2}, {0.0, g0}};
    w_best = candidates[0].first;
    g_best = candidates[0].second;
    for (const auto& [w, g] : candidates) {
      if (g < g_best) {
        g_best = g;
        w_best = w;
      }
    }
  }

  double b_best = 0.0;
  g_best = solver.profile(w_best, &b_best);

  if (hp.standardize) {
    model.w = w_best / model.x_scale;
    model.b = b_best - w_best * model.x_mean / model.x_scale;
  } else {
    model.w = w_best;
    model.b = b_best;
  }

  auto& sum = model.summary;
  sum.n_samples = samples.size();
  sum.objective = g_best;
  sum.iterations = iterations;
  sum.converged = converged;
  if (!converged) sum.warnings.push_back("golden-section search hit max_iter before tol");
  if (model.w < 1.0) {
    sum.warnings.push_back("slope w=" + format_double(model.w) +
                           " < 1: model makes depths shallower, unexpected for refraction");
  }
  if (!std::isfinite(model.w) || !std::isfinite(model.b)) {
    throw NumericalError("svr fit produced non-finite coefficients");
  }
  return model;
}

SvrModel fit_least_squares(const SampleSet& samples) {
  require_design(samples);
  const auto& s = samples.samples;
  const double n = static_cast<double>(s.size());
  double mx = 0.0;
  double my = 0.0;
  for (const auto& d : s) {
    mx += d.z0;
    my += d.z;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& d : s) {
    sxx += (d.z0 - mx) * (d.z0 - mx);
    sxy += (d.z0 - mx) * (d.z - my);
  }
  SvrModel model;
  model.kind = ModelKind::kLeastSquares;
  model.w = sxy / sxx;
  model.b = my - model.w * mx;
  double sse = 0.0;
  for (const auto& d : s) {
    const double r = d.z - (model.w * d.z0 + model.b);
    sse += r * r;
  }
  model.summary.n_samples = s.size();
  model.summary.objective = sse;
  model.summary.converged = true;
  if (model.w < 1.0) {
    model.summary.warnings.push_back("slope w=" + format_double(model.w) + " < 1");
  }
  return model;
}

double predict(const SvrModel& model, double z0) {
  if (!std::isfinite(z0)) throw InputError("cannot predict from a non-finite depth");
  return model.w * z0 + model.b;
}

PointCloud correct_cloud(const SvrModel& model, const PointCloud& cloud) {
  PointCloud out;
  out.label = cloud.label.empty() ? "corrected" : cloud.label + "_corrected";
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) {
    out.points.push_back(p.z < 0.0 ? Point3{p.x, p.y, model.w * p.z + model.b} : p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model file: key=value lines.

void save_model(const SvrModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write model '" + path.string() + "'");
  const auto& hp = model.hyperparams;
  const auto& s = model.summary;
  out << "version=" << kModelFileVersion << '\n'
      << "kind=" << (model.kind == ModelKind::kSvr ? "svr" : "least_squares") << '\n'
      << "w=" << format_double(model.w) << '\n'
      << "b=" << format_double(model.b) << '\n'
      << "c=" << format_double(hp.c) << '\n'
      << "epsilon=" << format_double(hp.epsilon) << '\n'
      << "tol=" << format_double(hp.tol) << '\n'
      << "max_iter=" << hp.max_iter << '\n'
      << "standardize=" << (hp.standardize ? 1 : 0) << '\n'
      << "x_mean=" << format_double(model.x_mean) << '\n'
      << "x_scale=" << format_double(model.x_scale) << '\n'
      << "n_samples=" << s.n_samples << '\n'
      << "objective=" << format_double(s.objective) << '\n'
      << "iterations=" << s.iterations << '\n'
      << "converged=" << (s.converged ? 1 : 0) << '\n';
  if (!out) throw InputError("write failure on '" + path.string() + "'");
}

SvrModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model '" + path.string() + "'");
  static const std::set<std::string> kKeys = {
      "version", "kind",   "w",         "b",         "c",          "epsilon",  "tol",
      "max_iter", "standardize", "x_mean", "x_scale", "n_samples", "objective", "iterations",
      "converged"};
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (eq == std::string_view::npos) throw InputError(where + ": expected key=value");
    std::string key(trim(body.substr(0, eq)));
    if (!kKeys.count(key)) throw InputError(where + ": unknown key '" + key + "'");
    kv[key] = std::string(trim(body.substr(eq + 1)));
  }
  if (!kv.count("version")) throw InputError("model file '" + path.string() + "' has no version");
  if (kv["version"] != std::to_string(kModelFileVersion)) {
    throw VersionError("model file version '" + kv["version"] + "' is not supported (expected " +
                       std::to_string(kModelFileVersion) + ")");
  }
  for (const auto& k : kKeys) {
    if (!kv.count(k)) throw InputError("model file '" + path.string() + "' is missing '" + k + "'");
  }
  auto num = [&](const std::string& key) {
    const auto v = parse_double(kv[key]);
    if (!v || !std::isfinite(*v)) throw InputError("model field '" + key + "' is not a number");
    return *v;
  };
  auto integer = [&](const std::string& key) {
    const double v = num(key);
    if (v != std::floor(v)) throw InputError("model field '" + key + "' is not an integer");
    return static_cast<long>(v);
  };
  auto flag = [&](const std::string& key) {
    const long v = integer(key);
    if (v != 0 && v != 1) throw InputError("model field '" + key + "' must be 0 or 1");
    return v == 1;
  };

  SvrModel m;
  const auto& kind = kv["kind"];
  if (kind == "svr") {
    m.kind = ModelKind::kSvr;
  } else if (kind == "least_squares") {
    m.kind = ModelKind::kLeastSquares;
  } else {
    throw InputError("unknown model kind '" + kind + "'");
  }
  m.w = num("w");
  m.b = num("b");
  m.hyperparams.c = num("c");
  m.hyperparams.epsilon = num("epsilon");
  m.hyperparams.tol = num("tol");
  m.hyperparams.max_iter = integer("max_iter");
  m.hyperparams.standardize = flag("standardize");
  m.x_mean = num("x_mean");
  m.x_scale = num("x_scale");
  m.summary.n_samples = static_cast<std::size_t>(integer("n_samples"));
  m.summary.objective = num("objective");
  m.summary.iterations = integer("iterations");
  m.summary.converged = flag("converged");
  return m;
}

}  // namespace bathy
