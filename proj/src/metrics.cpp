#include "qcast/metrics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qcast {

MetricsReport evaluate(const Tensor& pred_std, const Tensor& actual_std,
                       const ScalerStats& scaler,
                       const std::vector<std::string>& names) {
    if (!pred_std.same_shape(actual_std) || pred_std.ndim() != 2)
        throw std::invalid_argument("evaluate: shape mismatch");
    const std::size_t n = pred_std.dim(0), N = pred_std.dim(1);
    if (scaler.mean.size() != N || names.size() != N)
        throw std::invalid_argument("evaluate: scaler/names arity");
    if (n == 0) throw std::invalid_argument("evaluate: empty test set");

    MetricsReport rep;
    rep.n_samples = n;

    double pooled_sse = 0.0, pooled_sae = 0.0, pooled_sst = 0.0;
    double r2_sum = 0.0;
    std::size_t r2_count = 0;

    for (std::size_t k = 0; k < N; ++k) {
        double sse = 0.0, sae = 0.0, mean_actual = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            mean_actual += scaler.inverse(k, actual_std.at2(i, k));
        mean_actual /= double(n);
        double sst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double a = scaler.inverse(k, actual_std.at2(i, k));
            const double p = scaler.inverse(k, pred_std.at2(i, k));
            const double e = p - a;
            sse += e * e;
            sae += std::abs(e);
            const double d = a - mean_actual;
            sst += d * d;
        }
        VariableMetrics vm;
        vm.name = names[k];
        vm.mse = sse / double(n);
        vm.mae = sae / double(n);
        vm.rmse = std::sqrt(vm.mse);
        if (sst > 0.0) {
            vm.r2 = 1.0 - sse / sst;
            r2_sum += *vm.r2;
            ++r2_count;
        }
        rep.per_variable.push_back(vm);
        pooled_sse += sse;
        pooled_sae += sae;
        pooled_sst += sst;
    }

    const double total = double(n * N);
    rep.mse = pooled_sse / total;
    rep.mae = pooled_sae / total;
    rep.rmse = std::sqrt(rep.mse);
    if (r2_count > 0) rep.r2_mean = r2_sum / double(r2_count);
    if (pooled_sst > 0.0) rep.r2_pooled = 1.0 - pooled_sse / pooled_sst;
    return rep;
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

}  // namespace

std::string MetricsReport::to_kv() const {
    std::ostringstream os;
    os << "n_samples=" << n_samples << "\n";
    os << "aggregate.mse=" << fmt(mse) << "\n";
    os << "aggregate.mae=" << fmt(mae) << "\n";
    os << "aggregate.rmse=" << fmt(rmse) << "\n";
    os << "aggregate.r2_mean=" << (r2_mean ? fmt(*r2_mean) : "missing") << "\n";
    os << "aggregate.r2_pooled=" << (r2_pooled ? fmt(*r2_pooled) : "missing")
       << "\n";
    for (const auto& vm : per_variable) {
        os << "variable." << vm.name << ".mse=" << fmt(vm.mse) << "\n";
        os << "variable." << vm.name << ".mae=" << fmt(vm.mae) << "\n";
        os << "variable." << vm.name << ".rmse=" << fmt(vm.rmse) << "\n";
        os << "variable." << vm.name
           << ".r2=" << (vm.r2 ? fmt(*vm.r2) : "missing") << "\n";
    }
    return os.str();
}

std::string MetricsReport::to_csv() const {
    std::ostringstream os;
    os << "variable,mse,mae,rmse,r2\n";
    for (const auto& vm : per_variable)
        os << vm.name << "," << fmt(vm.mse) << "," << fmt(vm.mae) << ","
           << fmt(vm.rmse) << "," << (vm.r2 ? fmt(*vm.r2) : "") << "\n";
    return os.str();
}

}  // namespace qcast
