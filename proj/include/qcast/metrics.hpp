#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qcast/data.hpp"
#include "qcast/tensor.hpp"

namespace qcast {

struct VariableMetrics {
    std::string name;
    double mse = 0.0, mae = 0.0, rmse = 0.0;
    std::optional<double> r2;  // missing when test variance is zero
};

struct MetricsReport {
    std::vector<VariableMetrics> per_variable;
    double mse = 0.0, mae = 0.0, rmse = 0.0;  // pooled across variables
    std::optional<double> r2_mean;            // unweighted mean of per-variable R^2
    std::optional<double> r2_pooled;          // pooled-variance alternative
    std::size_t n_samples = 0;

    std::string to_kv() const;   // key=value document
    std::string to_csv() const;  // per-variable rows
};

// Inverse-standardizes predictions and actuals, then computes per-variable
// MSE/MAE/RMSE and R^2 (SST about the test-set mean). Aggregate MSE/MAE
// pool all variable-sample errors uniformly.
MetricsReport evaluate(const Tensor& pred_std, const Tensor& actual_std,
                       const ScalerStats& scaler,
                       const std::vector<std::string>& names);

}  // namespace qcast
