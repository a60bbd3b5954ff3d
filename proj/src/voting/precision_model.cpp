#include "lpr/voting/precision_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>

#include "lpr/core/error.hpp"
#include "lpr/core/scan_io.hpp"
#include "lpr/mapdb/place_db.hpp"

namespace lpr {
namespace {

constexpr double kLogFloor = 1e-300;
constexpr std::size_t kMaxSamplePoints = 2000;
constexpr std::size_t kUniformPoints = 256;
constexpr int kGoldenSteps = 60;

void check_params(double sigma, double lambda, double d_max) {
  if (!(sigma > 0.0) || !(lambda >= 0.0 && lambda <= 1.0) || !(d_max > 0.0))
    throw Error(Errc::InvalidParameter, "need sigma > 0, 0 <= lambda <= 1, d_max > 0");
}

struct EcdfPoints {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> uniform;  // x / d_max, clamped
};

EcdfPoints ecdf_points(std::vector<double> d, double d_max) {
  std::sort(d.begin(), d.end());
  const double n = static_cast<double>(d.size());
  EcdfPoints e;
  const auto add = [&](double x) {
    const auto upto = std::upper_bound(d.begin(), d.end(), x) - d.begin();
    e.x.push_back(x);
    e.y.push_back(static_cast<double>(upto) / n);
    e.uniform.push_back(std::min(x / d_max, 1.0));
  };
  const std::size_t step = std::max<std::size_t>(1, d.size() / kMaxSamplePoints);
  for (std::size_t i = 0; i < d.size(); i += step) add(d[i]);
  for (std::size_t i = 0; i <= kUniformPoints; ++i) add(d_max * static_cast<double>(i) / kUniformPoints);
  return e;
}

// Best lambda for a fixed sigma is linear least squares, clamped to [0,1].
std::pair<double, double> solve_lambda(const EcdfPoints& e, double sigma) {
  const double scale = 1.0 / (sigma * std::numbers::sqrt2);
  std::vector<double> a(e.x.size());
  double aa = 0.0, ar = 0.0;
  for (std::size_t j = 0; j < e.x.size(); ++j) {
    a[j] = std::erf(e.x[j] * scale) - e.uniform[j];
    aa += a[j] * a[j];
    ar += a[j] * (e.y[j] - e.uniform[j]);
  }
  const double lambda = aa > 0.0 ? std::clamp(ar / aa, 0.0, 1.0) : 0.0;
  double sse = 0.0;
  for (std::size_t j = 0; j < e.x.size(); ++j) {
    const double r = e.uniform[j] + lambda * a[j] - e.y[j];
    sse += r * r;
  }
  return {lambda, sse};
}

}  // namespace

double mixture_pdf(double d, double sigma, double lambda, double d_max) {
  check_params(sigma, lambda, d_max);
  if (!(d >= 0.0)) throw Error(Errc::InvalidParameter, "distance must be >= 0");
  const double half_normal = std::numbers::sqrt2 / (sigma * std::sqrt(std::numbers::pi)) * std::exp(-d * d / (2.0 * sigma * sigma));
  return lambda * half_normal + (1.0 - lambda) / d_max;
}

double mixture_cdf(double d, double sigma, double lambda, double d_max) {
  check_params(sigma, lambda, d_max);
  if (!(d >= 0.0)) throw Error(Errc::InvalidParameter, "distance must be >= 0");
  return lambda * std::erf(d / (sigma * std::numbers::sqrt2)) + (1.0 - lambda) * std::min(d / d_max, 1.0);
}

std::vector<double> default_tau_edges() { return {0.0, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}; }

std::size_t PrecisionModel::bin_of(double tau) const {
  for (std::size_t b = 0; b + 1 < edges.size(); ++b)
    if (tau <= edges[b + 1]) return b;
  return bins.size() - 1;
}

BinFit fit_mixture(std::span<const double> distances, double d_max, const FitOptions& options) {
  if (!(d_max > options.sigma_min)) throw Error(Errc::InvalidParameter, "d_max must exceed the sigma lower bound");
  if (distances.size() < std::max<std::size_t>(options.min_samples, 1))
    throw Error(Errc::InsufficientSamples, std::to_string(distances.size()) + " samples");
  std::vector<double> d(distances.begin(), distances.end());
  for (double& v : d) v = std::clamp(v, 0.0, d_max);
  const EcdfPoints e = ecdf_points(std::move(d), d_max);

  const double lo = std::log(options.sigma_min), hi = std::log(d_max);
  const std::size_t g = std::max<std::size_t>(options.grid_points, 3);
  std::vector<double> grid(g);
  for (std::size_t i = 0; i < g; ++i) grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(g - 1);

  std::size_t best = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g; ++i) {
    const double sse = solve_lambda(e, std::exp(grid[i])).second;
    if (sse < best_sse) {
      best_sse = sse;
      best = i;
    }
  }
  double a = grid[best == 0 ? 0 : best - 1];
  double b = grid[best + 1 == g ? g - 1 : best + 1];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a), dd = a + inv_phi * (b - a);
  double fc = solve_lambda(e, std::exp(c)).second, fd = solve_lambda(e, std::exp(dd)).second;
  for (int it = 0; it < kGoldenSteps; ++it) {
    if (fc <= fd) {
      b = dd;
      dd = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = solve_lambda(e, std::exp(c)).second;
    } else {
      a = c;
      c = dd;
      fc = fd;
      dd = a + inv_phi * (b - a);
      fd = solve_lambda(e, std::exp(dd)).second;
    }
  }
  double log_sigma = fc <= fd ? c : dd;
  if (std::min(fc, fd) > best_sse) log_sigma = grid[best];

  BinFit fit;
  fit.sigma = std::clamp(std::exp(log_sigma), options.sigma_min, d_max);
  const auto [lambda, sse] = solve_lambda(e, fit.sigma);
  fit.lambda = lambda;
  fit.residual = sse;
  fit.samples = distances.size();
  fit.fitted = true;
  return fit;
}

PrecisionModel fit_precision_model(std::span<const TrainingVote> votes, std::span<const double> tau_edges,
                                   double d_max, const FitOptions& options) {
  if (tau_edges.size() < 2) throw Error(Errc::InvalidParameter, "need at least one tau bin");
  for (std::size_t i = 1; i < tau_edges.size(); ++i)
    if (!(tau_edges[i] > tau_edges[i - 1])) throw Error(Errc::InvalidParameter, "tau edges must increase");
  PrecisionModel model;
  model.edges.assign(tau_edges.begin(), tau_edges.end());
  model.d_max = d_max;
  model.bins.resize(tau_edges.size() - 1);

  std::vector<std::vector<double>> per_bin(model.bins.size());
  for (const auto& v : votes) per_bin[model.bin_of(v.tau)].push_back(v.distance);
  for (std::size_t b = 0; b < per_bin.size(); ++b) {
    model.bins[b].samples = per_bin[b].size();
    if (per_bin[b].size() >= options.min_samples && !per_bin[b].empty()) model.bins[b] = fit_mixture(per_bin[b], d_max, options);
  }
  // Unfitted bins borrow from the nearest fitted bin, lower index on ties.
  std::vector<BinFit> fitted = model.bins;
  for (std::size_t b = 0; b < model.bins.size(); ++b) {
    if (fitted[b].fitted) continue;
    std::optional<std::size_t> donor;
    for (std::size_t off = 1; off < model.bins.size() && !donor; ++off) {
      if (b >= off && fitted[b - off].fitted) donor = b - off;
      else if (b + off < model.bins.size() && fitted[b + off].fitted) donor = b + off;
    }
    if (!donor) throw Error(Errc::InsufficientSamples, "no tau bin has enough training votes");
    model.bins[b].sigma = fitted[*donor].sigma;
    model.bins[b].lambda = fitted[*donor].lambda;
  }
  return model;
}

void save_precision_model(const PrecisionModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << "# tau_bins " << model.bins.size() << ' ' << format_double(model.d_max) << '\n';
  for (std::size_t b = 0; b < model.bins.size(); ++b) {
    const auto& bin = model.bins[b];
    out << format_double(model.edges[b]) << ' ' << format_double(model.edges[b + 1]) << ' '
        << format_double(bin.sigma) << ' ' << format_double(bin.lambda) << ' ' << bin.samples << '\n';
  }
  if (!out) throw Error(Errc::IoError, "write failed: " + path.string());
}

PrecisionModel load_precision_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::FileNotFound, path.string());
  std::string line;
  const auto bad = [&](int n) { return Error(Errc::ParseError, path.string() + ":" + std::to_string(n)); };
  if (!std::getline(in, line)) throw bad(1);
  std::istringstream head(line);
  std::string hash, tag;
  std::size_t count = 0;
  PrecisionModel model;
  if (!(head >> hash >> tag >> count >> model.d_max) || hash != "#" || tag != "tau_bins" || count == 0) throw bad(1);
  int line_no = 1;
  while (model.bins.size() < count && std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    double lo = 0, hi = 0;
    BinFit bin;
    if (!(row >> lo >> hi >> bin.sigma >> bin.lambda >> bin.samples)) throw bad(line_no);
    if (model.edges.empty()) model.edges.push_back(lo);
    else if (lo != model.edges.back()) throw bad(line_no);
    model.edges.push_back(hi);
    bin.fitted = bin.sigma > 0.0;
    model.bins.push_back(bin);
  }
  if (model.bins.size() != count) throw bad(line_no);
  return model;
}

ProbabilityTable build_probability_table(const PrecisionModel& model, const Eigen::MatrixXd& center_distances,
                                         std::span<const double> keypoint_counts) {
  const auto n = center_distances.rows();
  if (center_distances.cols() != n || keypoint_counts.size() != static_cast<std::size_t>(n))
    throw Error(Errc::DimensionMismatch, "distance matrix and keypoint counts disagree");
  double total = 0.0;
  for (double c : keypoint_counts) total += c;
  const double mean = n > 0 ? total / static_cast<double>(n) : 0.0;

  ProbabilityTable table;
  for (std::size_t b = 0; b < model.bins.size(); ++b) {
    const auto& bin = model.bins[b];
    if (!(bin.sigma > 0.0)) throw Error(Errc::UnfittedBin, "tau bin " + std::to_string(b) + " has no parameters");
    Eigen::MatrixXd t(n, n);
    for (Eigen::Index v = 0; v < n; ++v)
      for (Eigen::Index i = 0; i < n; ++i) t(v, i) = mixture_pdf(center_distances(v, i), bin.sigma, bin.lambda, model.d_max);
    // Column i is scaled by mean / (keypoint count around i, smoothed by this
    // bin's kernel): a place in a keypoint-rich stretch collects more chance
    // votes near it.
    if (mean > 0.0) {
      Eigen::VectorXd weight(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        double mass = 0.0, counted = 0.0;
        for (Eigen::Index v = 0; v < n; ++v) {
          mass += t(v, i);
          counted += t(v, i) * keypoint_counts[static_cast<std::size_t>(v)];
        }
        weight(i) = counted > 0.0 ? mean * mass / counted : 1.0;
      }
      for (Eigen::Index v = 0; v < n; ++v) t.row(v) = t.row(v).cwiseProduct(weight.transpose());
    }
    for (Eigen::Index v = 0; v < n; ++v) t.row(v) /= t.row(v).sum();
    table.bins.push_back(std::move(t));
  }
  return table;
}

ProbabilityTable build_probability_table(const PrecisionModel& model, const PlaceDatabase& db) {
  std::vector<double> counts;
  for (const auto& p : db.places) counts.push_back(static_cast<double>(p.keypoint_count()));
  return build_probability_table(model, db.center_distances, counts);
}

std::vector<double> PlacePosterior::probabilities() const {
  std::vector<double> p(log_weights.size());
  if (p.empty()) return p;
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += p[i] = std::exp(log_weights[i] - top);
  for (double& v : p) v /= sum;
  return p;
}

std::vector<std::size_t> PlacePosterior::ranking() const {
  std::vector<std::size_t> order(log_weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return log_weights[a] > log_weights[b]; });
  return order;
}

void update_posterior(PlacePosterior& posterior, std::span<const VoteMatch> votes, const PrecisionModel& model,
                      const ProbabilityTable& table) {
  const std::size_t n = posterior.log_weights.size();
  if (table.places() != n || table.bins.size() != model.bins.size())
    throw Error(Errc::DimensionMismatch, "table does not match the posterior");
  for (const auto& v : votes) {
    if (v.place >= n) throw Error(Errc::DimensionMismatch, "vote for an unknown place");
    const auto& row = table.bins[model.bin_of(v.tau)];
    for (std::size_t i = 0; i < n; ++i)
      posterior.log_weights[i] +=
          std::log(std::max(row(static_cast<Eigen::Index>(v.place), static_cast<Eigen::Index>(i)), kLogFloor));
  }
  posterior.votes_consumed += votes.size();
}

}  // namespace lpr
