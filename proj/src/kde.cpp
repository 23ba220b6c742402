#include "m2d/kde.hpp"

#include <algorithm>
#include <cmath>

#include "m2d/errors.hpp"
#include "m2d/kinematics.hpp"

namespace m2d {

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

// Genuinely separated density modes. A local maximum only counts as a
// mode if the density dips below half its height on the way to every
// already-accepted (taller) mode; ripples on a broad hump merge into one.
std::vector<std::size_t> find_modes(const std::vector<double>& d) {
    std::vector<std::size_t> modes;
    if (d.size() < 3) return modes;
    const double floor = 0.01 * *std::max_element(d.begin(), d.end());

    std::vector<std::size_t> maxima;
    for (std::size_t i = 1; i + 1 < d.size(); ++i)
        if (d[i] > d[i - 1] && d[i] >= d[i + 1] && d[i] > floor) maxima.push_back(i);
    std::sort(maxima.begin(), maxima.end(),
              [&](std::size_t a, std::size_t b) { return d[a] > d[b]; });

    for (std::size_t cand : maxima) {
        bool separated = true;
        for (std::size_t m : modes) {
            const std::size_t lo = std::min(cand, m);
            const std::size_t hi = std::max(cand, m);
            double dip = d[lo];
            for (std::size_t i = lo; i <= hi; ++i) dip = std::min(dip, d[i]);
            if (dip > 0.5 * d[cand]) {
                separated = false;
                break;
            }
        }
        if (separated) modes.push_back(cand);
    }
    std::sort(modes.begin(), modes.end());
    return modes;
}

}  // namespace

DensityEstimate kde_gaussian(const std::vector<double>& samples, std::size_t grid_points) {
    if (samples.size() < 2) raise(ErrorKind::Estimation, "kde: need at least 2 samples");

    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());

    const double n = static_cast<double>(sorted.size());
    double mean = 0.0;
    for (double x : sorted) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : sorted) var += (x - mean) * (x - mean);
    var /= n;
    const double sd = std::sqrt(var);
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);

    double spread = sd;
    if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
    if (spread <= 0.0) raise(ErrorKind::Estimation, "kde: degenerate sample spread");
    const double bandwidth = 0.9 * spread * std::pow(n, -0.2);

    // Grid spans [min, 99.5th percentile]; the extreme tail only stretches
    // the grid without moving the valley.
    const double lo = sorted.front();
    const double hi = quantile_sorted(sorted, 0.995);
    if (!(hi > lo)) raise(ErrorKind::Estimation, "kde: zero-width support");

    DensityEstimate out;
    out.grid.resize(grid_points);
    out.density.assign(grid_points, 0.0);
    const double step = (hi - lo) / static_cast<double>(grid_points - 1);
    for (std::size_t g = 0; g < grid_points; ++g) out.grid[g] = lo + step * static_cast<double>(g);

    const double inv_h = 1.0 / bandwidth;
    const double norm = 1.0 / (n * bandwidth * std::sqrt(2.0 * 3.14159265358979323846));
    // Each sample only touches grid points within 6 bandwidths.
    const double reach = 6.0 * bandwidth;
    for (double x : sorted) {
        const auto first = static_cast<std::ptrdiff_t>(std::ceil((x - reach - lo) / step));
        const auto last = static_cast<std::ptrdiff_t>(std::floor((x + reach - lo) / step));
        const std::size_t g0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, first));
        const std::size_t g1 =
            static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(last, -1, static_cast<std::ptrdiff_t>(grid_points) - 1));
        for (std::size_t g = g0; g <= g1 && g < grid_points; ++g) {
            const double z = (out.grid[g] - x) * inv_h;
            out.density[g] += std::exp(-0.5 * z * z);
        }
    }
    for (double& v : out.density) v *= norm;
    return out;
}

ValleyResult density_valley(const DensityEstimate& d) {
    const auto modes = find_modes(d.density);
    ValleyResult res;
    if (modes.size() < 2) return res;

    // Two tallest modes, then the global minimum strictly between them.
    std::vector<std::size_t> by_height = modes;
    std::sort(by_height.begin(), by_height.end(),
              [&](std::size_t a, std::size_t b) { return d.density[a] > d.density[b]; });
    std::size_t m1 = by_height[0];
    std::size_t m2 = by_height[1];
    if (m1 > m2) std::swap(m1, m2);

    std::size_t valley = m1;
    double best = d.density[m1];
    for (std::size_t i = m1 + 1; i < m2; ++i) {
        if (d.density[i] < best) {
            best = d.density[i];
            valley = i;
        }
    }
    if (valley == m1) return res;  // no interior minimum
    res.bimodal = true;
    res.threshold = d.grid[valley];
    return res;
}

Thresholds estimate_thresholds(const std::vector<KinematicTrack>& tracks) {
    std::size_t total = 0;
    for (const auto& t : tracks) total += t.size();
    if (tracks.empty() || total < 1000)
        raise(ErrorKind::Estimation,
              "estimate_thresholds: need >= 1000 pooled samples; pass more sessions "
              "or use the fixed defaults v_th=0.5, omega_th=0.05");

    // Deterministic stride subsample keeps the grid evaluation bounded.
    const std::size_t cap = 200000;
    const std::size_t stride = std::max<std::size_t>(1, total / cap);

    std::vector<double> speeds;
    std::vector<double> yaw_mags;
    speeds.reserve(total / stride + tracks.size());
    yaw_mags.reserve(total / stride + tracks.size());
    for (const auto& t : tracks) {
        t.validate();
        for (std::size_t i = 0; i < t.size(); i += stride) {
            speeds.push_back(speed(t.vx[i], t.vy[i]));
            yaw_mags.push_back(std::abs(t.psi_dot[i]));
        }
    }

    Thresholds th;  // defaults double as the unimodal fallback
    const auto v_valley = density_valley(kde_gaussian(speeds, 512));
    if (v_valley.bimodal) th.v_th = v_valley.threshold;
    const auto w_valley = density_valley(kde_gaussian(yaw_mags, 512));
    if (w_valley.bimodal) th.omega_th = w_valley.threshold;
    th.validate();
    return th;
}

}  // namespace m2d
