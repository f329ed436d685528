#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ricefield/design.hpp"
#include "ricefield/priors.hpp"

namespace ricefield {

// Voxel grid, mask, acquisition scheme and magnitude measurements. Voxels are
// stored in mask order: the raster scan with x fastest, then y, then z,
// restricted to the mask (the same order VoxelGraph uses).
struct Dataset {
    std::array<int, 3> dims{};
    std::array<double, 3> voxel_size_mm{1.0, 1.0, 1.0};
    std::vector<std::uint8_t> mask;
    GradientScheme scheme;
    Eigen::MatrixXd measurements; // m x |V|, one column per masked voxel
    bool quantized = false;

    int voxel_count() const { return static_cast<int>(measurements.cols()); }
    VoxelGraph graph() const { return VoxelGraph::from_mask(dims, mask); }
};

// Ground truth for synthetic data: per-region model coefficients plus
// per-voxel S0 and noise maps.
struct PhantomRegion {
    ModelSpec model;
    Eigen::VectorXd coeffs;
};

struct PhantomSpec {
    std::array<int, 3> dims{};
    std::array<double, 3> voxel_size_mm{1.0, 1.0, 1.0};
    std::vector<std::uint8_t> mask;
    std::vector<int> region_of_voxel; // mask order
    std::vector<PhantomRegion> regions;
    std::vector<double> s0;     // mask order
    std::vector<double> sigma2; // mask order
    bool quantize = false;
};

// The default test object: a 16x16x2 grid with two straight fiber bands
// crossing at 90 degrees in the central square; the crossing carries a
// 4th-order ground truth with maxima along both fiber directions. S0 = 1000,
// sigma = 20 on slice 0 and 50 on slice 1.
PhantomSpec standard_crossing_phantom(bool quantize = false);

// region indices used by standard_crossing_phantom
enum CrossingRegion { RegionBackground = 0, RegionFiberX = 1, RegionFiberY = 2, RegionCrossing = 3 };

// scheme used by the standard phantom: the published 32-direction set at
// the given shells
GradientScheme standard_scheme(const std::vector<double>& b_shells, int repeats = 1);

// the 32 published gradient directions
extern const std::array<std::array<double, 3>, 32> standard_directions;

// forward model: Y = |exp(Z theta) + eps1 + i eps2| with N(0, sigma2) parts,
// optionally floor-quantized to integers; measurements are rounded to float32
// so datasets round-trip bit-exactly through files
Dataset simulate_phantom(const PhantomSpec& spec, const GradientScheme& scheme,
                         std::uint64_t seed);

// evaluates the noiseless phantom diffusivity at a voxel
double phantom_diffusivity(const PhantomSpec& spec, int voxel, const Eigen::Vector3d& u);

struct WlsResult {
    Eigen::MatrixXd theta;          // (1+d) x |V|
    Eigen::VectorXd sigma2;         // |V|
    std::vector<std::uint8_t> flagged; // voxels initialized from a neighbor
};

// Iterated weighted least squares on log Y under the log-normal
// approximation; zeros and b > b_max excluded; rank-deficient voxels are
// filled from the nearest successfully fitted neighbor.
WlsResult wls_initialize(const Dataset& data, const ModelSpec& spec, double b_max);

// header text file plus a flat little-endian float32 array in mask order
void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

} // namespace ricefield
