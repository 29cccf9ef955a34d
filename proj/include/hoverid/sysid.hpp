#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "hoverid/correlation.hpp"
#include "hoverid/excitation.hpp"
#include "hoverid/lm.hpp"
#include "hoverid/narx.hpp"

namespace hoverid {

struct ModeSplit {
  std::string name;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  static ModeSplit longitudinal();  // (dlong, dcoll) -> (theta, u, w, q)
  static ModeSplit lateral();       // (dlat, dped) -> (phi, v, p, r)
  static ModeSplit by_name(const std::string& name);

  friend bool operator==(const ModeSplit&, const ModeSplit&) = default;
};

// Channel-filtered, time-aligned copy of a dataset.
struct DatasetView {
  ModeSplit mode;
  std::vector<Vector> inputs;
  std::vector<Vector> outputs;
  std::size_t split_index = 0;
  double step = 0.0;

  std::size_t size() const { return outputs.size(); }
};

// Throws MissingChannel when the dataset lacks one of the mode's channels.
DatasetView make_view(const Dataset& ds, const ModeSplit& mode);
std::pair<DatasetView, DatasetView> split_modes(const Dataset& ds);

struct IdentifyOptions {
  std::size_t na = 2;
  std::size_t nb = 2;
  std::size_t nk = 1;
  std::vector<std::size_t> hidden = {10};
  LmOptions lm;
  std::size_t restarts = 10;
  std::uint64_t seed = 1;
};

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive

  bool overlaps(const IndexRange& o) const { return begin < o.end && o.begin < end; }
};

struct TrainingRecord {
  std::vector<std::uint64_t> seeds;
  std::vector<double> heldout_mse;  // normalized units, one per restart
  std::uint64_t chosen_seed = 0;
  FitResult fit;                    // of the chosen restart, normalized units
  IndexRange train;                 // target indices used for fitting
  IndexRange test;
};

struct PlantModel {
  ModeSplit mode;
  NarxModel narx;
  TrainingRecord training;

  void validate() const;
};

// Fits a one-step NARX predictor on the training split with one LM run per
// restart seed (seed, seed + 1, ...) and keeps the restart with the lowest
// held-out one-step mse, ties broken by seed. Residuals and the cost are in
// normalized output units.
PlantModel identify(const DatasetView& view, const IdentifyOptions& opts);

// Normalized held-out one-step mse of a network on a prepared problem; used
// for restart selection and exposed for tests.
double heldout_one_step_mse(const PlantModel& model, const DatasetView& view);

struct CrossCorrelationSeries {
  std::string output;
  std::string input;
  Vector values;  // lags -max_lag..max_lag
  bool degenerate = false;
};

struct ChannelResidual {
  std::string name;
  double nrmse = 0.0;
  double fit_percent = 0.0;
  Vector autocorrelation;  // lags 0..max_lag
  bool degenerate = false;
  Histogram histogram;
};

struct ResidualVariant {
  std::vector<Vector> predictions;  // one per evaluated sample
  std::vector<Vector> errors;       // e1 = y - y_hat
  std::vector<ChannelResidual> channels;
  std::vector<CrossCorrelationSeries> cross;
};

struct ResidualReport {
  std::string mode;
  std::size_t max_lag = 25;
  double band = 0.0;
  IndexRange evaluated;
  IndexRange train;
  bool disjoint_from_training = true;
  ResidualVariant one_step;
  ResidualVariant free_run;
};

inline constexpr std::size_t kDefaultMaxLag = 25;

// Evaluates the model on the held-out part of the view (indices from
// split_index on). Throws TooShort when max_lag >= N / 4.
ResidualReport validate(const PlantModel& model, const DatasetView& view, std::size_t max_lag = kDefaultMaxLag);

void write_report_json(const ResidualReport& report, const std::filesystem::path& path);
// <dir>/<mode>_{response,autocorr,crosscorr,histogram}_{one_step,free_run}.csv
std::vector<std::filesystem::path> write_report_csvs(const ResidualReport& report, const DatasetView& view,
                                                     const std::filesystem::path& dir);

}  // namespace hoverid
