#include "fedmt/sgd.hpp"

#include <cmath>

#include "fedmt/errors.hpp"

namespace fedmt {

void SgdConfig::validate() const {
    if (initial_lr <= 0.0f) throw DomainError("initial-lr must be positive");
    if (lr_floor < 0.0f) throw DomainError("lr-floor must be nonnegative");
    if (lr_floor > initial_lr) throw DomainError("lr-floor must not exceed initial-lr");
    if (total_epochs == 0) throw DomainError("total-epochs must be positive");
}

double SgdConfig::lr(uint32_t epoch) const {
    if (schedule == LrSchedule::constant) return initial_lr;
    if (total_epochs <= 1) return initial_lr;
    const double t = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
    return lr_floor + 0.5 * (static_cast<double>(initial_lr) - lr_floor) *
                          (1.0 + std::cos(M_PI * t));
}

ParameterSet sgd_step(const ParameterSet& params, const GradientMap& grads,
                      const SgdConfig& cfg, uint32_t epoch) {
    if (epoch >= cfg.total_epochs) {
        throw StateError("sgd_step epoch " + std::to_string(epoch) +
                         " out of range for total-epochs " + std::to_string(cfg.total_epochs));
    }
    const float lr = static_cast<float>(cfg.lr(epoch));
    ParameterSet out = params;
    for (const auto& [name, g] : grads) {
        auto it = out.entries.find(name);
        if (it == out.entries.end()) {
            throw IntegrityError("gradient for unknown parameter '" + name + "'");
        }
        if (!it->second.same_dims(g)) {
            throw ShapeError("gradient dims " + g.dims_str() + " do not match parameter '" +
                             name + "' dims " + it->second.dims_str());
        }
        Tensor& p = it->second;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
    }
    return out;
}

}  // namespace fedmt
