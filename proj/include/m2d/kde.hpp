#pragma once

#include <vector>

#include "m2d/types.hpp"

namespace m2d {

// Gaussian kernel density on an evenly spaced grid, Silverman bandwidth.
struct DensityEstimate {
    std::vector<double> grid;
    std::vector<double> density;
};

DensityEstimate kde_gaussian(const std::vector<double>& samples, std::size_t grid_points);

// Location of the deepest density minimum between the two tallest modes,
// or nothing when the density is unimodal.
struct ValleyResult {
    bool bimodal = false;
    double threshold = 0.0;
};

ValleyResult density_valley(const DensityEstimate& d);

// Data-driven thresholds from pooled sessions: v_th from the speed density,
// omega_th from |psi_dot|. Falls back to (0.5, 0.05) per quantity when the
// corresponding density is unimodal.
Thresholds estimate_thresholds(const std::vector<KinematicTrack>& tracks);

}  // namespace m2d
