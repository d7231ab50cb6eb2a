#pragma once

#include <cmath>
#include <string>

#include "agrlab/errors.hpp"
#include "agrlab/model.hpp"

namespace agrlab {

struct GradCheckReport {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::string worst_tensor;
    Eigen::Index worst_index = -1;
    long n_params = 0;
};

// Central-difference check of analytic gradients, one parameter at a time:
//   numeric = (loss(theta + eps) - loss(theta - eps)) / (2 eps)
//   rel     = |analytic - numeric| / max(1e-8, |analytic| + |numeric|)
// `loss_fn` must be a pure function of the parameters.
template <class LossFn>
GradCheckReport grad_check(const ModelConfig& cfg, const ModelParams& at, LossFn&& loss_fn,
                           const ModelParams& analytic, double eps) {
    if (!(eps >= 1e-6 && eps <= 1e-3)) {
        throw ConfigError("grad_check: eps must lie in [1e-6, 1e-3], got " + std::to_string(eps));
    }
    ModelParams probe = at;
    {
        const double base = loss_fn(probe);
        if (!std::isfinite(base)) throw NumericError("grad_check: non-finite loss at probe point");
    }

    GradCheckReport report;
    for_each_tensor(
        cfg,
        [&](std::string_view name, auto& t, const auto& gt) {
            auto* data = t.data();
            const auto* gdata = gt.data();
            for (Eigen::Index k = 0; k < t.size(); ++k) {
                const double saved = data[k];
                data[k] = saved + eps;
                const double up = loss_fn(probe);
                data[k] = saved - eps;
                const double down = loss_fn(probe);
                data[k] = saved;
                if (!std::isfinite(up) || !std::isfinite(down)) {
                    throw NumericError("grad_check: non-finite loss while perturbing " +
                                       std::string(name));
                }
                const double numeric = (up - down) / (2.0 * eps);
                const double a = gdata[k];
                const double abs_err = std::abs(a - numeric);
                const double rel = abs_err / std::max(1e-8, std::abs(a) + std::abs(numeric));
                ++report.n_params;
                if (rel > report.max_rel_error) {
                    report.max_rel_error = rel;
                    report.max_abs_error = abs_err;
                    report.worst_tensor = std::string(name);
                    report.worst_index = k;
                }
            }
        },
        probe, analytic);
    return report;
}

}  // namespace agrlab
