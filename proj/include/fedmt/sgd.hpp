#pragma once

#include <cstdint>

#include "fedmt/params.hpp"

namespace fedmt {

enum class LrSchedule { constant, cosine_to_floor };

struct SgdConfig {
    float initial_lr = 1e-3f;
    LrSchedule schedule = LrSchedule::cosine_to_floor;
    float lr_floor = 1e-5f;
    uint32_t total_epochs = 1;

    // lr_floor <= lr(e) <= initial_lr for every epoch
    double lr(uint32_t epoch) const;
    void validate() const;
};

// p <- p - lr(epoch) * g elementwise. Parameters without a gradient entry
// stay untouched; a dim mismatch raises ShapeError.
ParameterSet sgd_step(const ParameterSet& params, const GradientMap& grads,
                      const SgdConfig& cfg, uint32_t epoch);

}  // namespace fedmt
