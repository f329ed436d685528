#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ricefield/chain.hpp"
#include "ricefield/data_io.hpp"

namespace ricefield {

// Deviance information criterion with the posterior-mean plug-in:
// DIC = 2 E[D] - D(E[theta]) and n_eff = E[D] - D(E[theta]), where
// D(theta) = -2 log p(data | theta) under the exact Rice likelihood
// (positive measurements; a floor-quantized zero has no Rice density).
struct DicReport {
    double dic = 0.0;
    double n_eff = 0.0;
    double mean_deviance = 0.0;
    double deviance_at_mean = 0.0;
    Eigen::VectorXd dic_voxel;   // per-voxel DIC
    Eigen::VectorXd n_eff_voxel; // per-voxel effective parameter count
};

// deviance of one voxel at fixed parameters
double rice_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& linpred, double sigma2);

// requires at least two post-burn-in samples in the result
DicReport compute_dic(const ChainResult& chain, const Dataset& data, const ModelSpec& spec);

enum class MapKind { FA, MD, Acceptance, Sigma2 };

// value of the requested map for every voxel
Eigen::VectorXd map_values(const ChainResult& chain, const ModelSpec& spec, MapKind kind);

// One 16-bit P5 graymap per slice (values scaled to the recorded min/max)
// plus a delimited text table of exact values. Returns the written paths.
std::vector<std::string> export_maps(const ChainResult& chain, const Dataset& data,
                                     const ModelSpec& spec, MapKind kind,
                                     const std::string& prefix);

// triangulated icosphere used for the diffusivity profiles
struct SphereMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> faces;

    static SphereMesh icosphere(int subdivisions);
    void save_vertices(const std::string& path) const;
};

// Per voxel: d(u) on the mesh vertices plus the principal-direction color
// code (|ex|, |ey|, |ez| of the 2nd-order principal eigenvector, the
// 4th-order tensors projected first). One row per voxel in the text table.
void export_profiles(const ChainResult& chain, const Dataset& data, const ModelSpec& spec,
                     const SphereMesh& mesh, const std::string& prefix);

// local maxima of the diffusivity over the mesh (antipodally merged),
// strongest first; used to count fiber populations
std::vector<Eigen::Vector3d> diffusivity_peaks(const ModelSpec& spec,
                                               const Eigen::VectorXd& coeffs,
                                               const SphereMesh& mesh);

} // namespace ricefield
