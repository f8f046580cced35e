#pragma once

#include <string>
#include <vector>

#include "qcast/container.hpp"
#include "qcast/tensor.hpp"

namespace qcast {

// Ordered numeric series parsed from CSV. Missing entries are NaN.
struct RawSeries {
    std::vector<std::string> timestamps;       // empty strings if no time column
    std::vector<std::string> column_names;     // features first, then extra targets
    std::vector<std::vector<double>> columns;  // column-major, NaN = missing
    std::size_t rows() const { return columns.empty() ? 0 : columns[0].size(); }
};

struct DatasetSchema {
    std::string time_col;               // "" = use row order
    std::vector<std::string> features;  // CSV header names
    std::vector<std::string> targets;
    std::size_t window = 12;
    int max_ffill = 0;  // 0 disables gap filling

    enum class SplitKind { head, frac };
    SplitKind split_kind = SplitKind::frac;
    std::size_t train_count = 0, test_count = 0;  // head split
    double train_frac = 0.8;                      // frac split

    static DatasetSchema load(const std::string& path);
};

// Per-feature statistics computed on the training rows only.
struct ScalerStats {
    std::vector<double> mean, stdev;

    double transform(std::size_t i, double x) const {
        return (x - mean[i]) / stdev[i];
    }
    double inverse(std::size_t i, double z) const {
        return z * stdev[i] + mean[i];
    }
};

struct WindowedDataset {
    Tensor X;           // [n x T x F] standardized inputs
    Tensor y;           // [n x N] standardized targets
    std::size_t split;  // first test window index (= train window count)
    ScalerStats input_scaler, target_scaler;
    std::vector<std::string> feature_names, target_names;

    std::size_t n_windows() const { return X.dim(0); }
    std::size_t n_train() const { return split; }
    std::size_t n_test() const { return n_windows() - split; }
};

struct PreprocessSummary {
    std::size_t raw_rows = 0;
    std::size_t dropped_rows = 0;
    std::size_t duplicate_rows = 0;
    std::size_t filled_ffill = 0;
    std::size_t filled_interp = 0;
    std::size_t train_windows = 0, test_windows = 0;
};

// Parses the mapped columns, preserving row order; unparseable cells
// become missing. Duplicate timestamps keep the first occurrence.
RawSeries ingest_csv(const std::string& path, const DatasetSchema& schema,
                     PreprocessSummary* summary = nullptr);

// Runs of <= max_ffill missing values carry the last known value forward;
// longer runs are linearly interpolated between bracketing known values.
// Rows still missing any mapped column afterwards are dropped.
RawSeries fill_gaps(const RawSeries& series, int max_ffill,
                    PreprocessSummary* summary = nullptr);

// Mean/std from rows strictly before `train_boundary`, applied everywhere.
// Rejects zero-variance columns.
ScalerStats standardize(RawSeries& series, std::size_t train_boundary);

WindowedDataset make_windows(const RawSeries& standardized,
                             const ScalerStats& scaler,
                             const DatasetSchema& schema);

// ingest -> fill_gaps -> standardize -> make_windows.
WindowedDataset preprocess(const std::string& csv_path,
                           const DatasetSchema& schema,
                           PreprocessSummary* summary = nullptr);

// First `n_train` training and `n_test` test windows, scalers unchanged.
WindowedDataset head_subset(const WindowedDataset& ds, std::size_t n_train,
                            std::size_t n_test);

Container dataset_to_container(const WindowedDataset& ds);
WindowedDataset dataset_from_container(const Container& c);

}  // namespace qcast
