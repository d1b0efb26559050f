#pragma once

#include <cstdint>
#include <string>

#include "tvos/propagation.hpp"
#include "tvos/sampling.hpp"
#include "tvos/similarity.hpp"

namespace tvos {

/// Every tracking tunable in one place. The defaults reproduce the reference
/// configuration: sparse-dense(4,5,40) sampling with the motion prior,
/// sigma 8/21 in grid cells, temperature 0.1, stride 8.
struct RunConfig {
    std::string strategy = "sparse-dense:4:5:40+motion";
    double sigma_local = 8.0;
    double sigma_distant = 21.0;
    std::string sigma_units = "cells";  // cells | pixels
    double temperature = 0.1;
    int stride = 8;
    int window_radius = -1;  // < 0 means off
    bool harden_history = false;
    uint32_t seed = 0;

    PropagationConfig to_propagation_config() const {
        PropagationConfig cfg;
        cfg.strategy = parse_strategy(strategy);
        cfg.spatial.sigma_local = sigma_local;
        cfg.spatial.sigma_distant = sigma_distant;
        cfg.spatial.temperature = temperature;
        if (sigma_units == "pixels")
            cfg.spatial.sigma_in_pixels = true;
        else if (sigma_units != "cells")
            throw std::invalid_argument("--sigma-units must be 'cells' or 'pixels', got '" +
                                        sigma_units + "'");
        if (window_radius >= 0) cfg.spatial.window_radius = window_radius;
        cfg.stride = stride;
        cfg.harden_history = harden_history;
        return cfg;
    }
};

}  // namespace tvos
