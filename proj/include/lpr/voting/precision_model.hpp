#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "lpr/descriptors/matching.hpp"

namespace lpr {

struct PlaceDatabase;

/// Half-normal plus uniform density of the vote distance to the true place.
double mixture_pdf(double d, double sigma, double lambda, double d_max);
double mixture_cdf(double d, double sigma, double lambda, double d_max);

/// Default bins: one for tau <= 0.5, then five of width 0.1 up to 1.
std::vector<double> default_tau_edges();

struct BinFit {
  double sigma = 0.0;
  double lambda = 0.0;
  std::size_t samples = 0;
  double residual = 0.0;  // sum of squared cdf errors at the fit
  bool fitted = false;    // false: parameters borrowed from a neighbor bin
};

struct PrecisionModel {
  std::vector<double> edges;  // bin b covers (edges[b], edges[b+1]], bin 0 also takes tau <= edges[0]
  std::vector<BinFit> bins;
  double d_max = 0.0;

  std::size_t bin_of(double tau) const;
};

struct TrainingVote {
  double tau = 1.0;
  double distance = 0.0;  // meters from the voted place to ground truth
};

struct FitOptions {
  std::size_t min_samples = 30;
  double sigma_min = 0.1;
  std::size_t grid_points = 48;
};

/// Least-squares fit of one bin's cdf to the empirical distribution.
BinFit fit_mixture(std::span<const double> distances, double d_max, const FitOptions& options = {});

PrecisionModel fit_precision_model(std::span<const TrainingVote> votes, std::span<const double> tau_edges,
                                   double d_max, const FitOptions& options = {});

void save_precision_model(const PrecisionModel& model, const std::filesystem::path& path);
PrecisionModel load_precision_model(const std::filesystem::path& path);

/// Row-stochastic per-bin matrices T_b[v][i].
struct ProbabilityTable {
  std::vector<Eigen::MatrixXd> bins;

  std::size_t places() const { return bins.empty() ? 0 : static_cast<std::size_t>(bins.front().rows()); }
};

/// Mixture densities of center distances, each column i weighted by
/// mean_count / (kernel-weighted mean count around place i), then rows
/// normalized. With equal counts the weights are all 1.
ProbabilityTable build_probability_table(const PrecisionModel& model, const Eigen::MatrixXd& center_distances,
                                         std::span<const double> keypoint_counts);
ProbabilityTable build_probability_table(const PrecisionModel& model, const PlaceDatabase& db);

struct PlacePosterior {
  std::vector<double> log_weights;
  std::size_t votes_consumed = 0;

  PlacePosterior() = default;
  explicit PlacePosterior(std::size_t places) : log_weights(places, 0.0) {}

  std::vector<double> probabilities() const;
  /// Places by descending probability, ties to the lower id.
  std::vector<std::size_t> ranking() const;
};

void update_posterior(PlacePosterior& posterior, std::span<const VoteMatch> votes, const PrecisionModel& model,
                      const ProbabilityTable& table);

}  // namespace lpr
