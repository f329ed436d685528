#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ricefield/tensor.hpp"

namespace ricefield {

enum class ModelFamily { Tensor2, Tensor4, SH };

// Model family plus (for SH) the even-harmonic truncation order n; the
// coefficient dimension d excludes the log-intensity intercept.
struct ModelSpec {
    ModelFamily family = ModelFamily::Tensor2;
    int sh_order = 1;

    int coeff_dim() const;
    int param_dim() const { return 1 + coeff_dim(); }

    static ModelSpec tensor2() { return {ModelFamily::Tensor2, 1}; }
    static ModelSpec tensor4() { return {ModelFamily::Tensor4, 2}; }
    static ModelSpec sh(int order) { return {ModelFamily::SH, order}; }

    std::string name() const;
    static ModelSpec parse(const std::string& name);
};

// One acquisition family: gradient direction, b-value (s/mm^2), and how many
// repeated measurements were taken with it.
struct SchemeEntry {
    Eigen::Vector3d u;
    double b = 0.0;
    int repeats = 1;
};

struct GradientScheme {
    std::vector<SchemeEntry> entries;

    int total_acquisitions() const;

    // plain-text table, one row per entry: ux uy uz b repeats
    static GradientScheme load(const std::string& path);
    static GradientScheme parse(std::istream& in, const std::string& origin = "<stream>");
    void save(const std::string& path) const;
};

// design rows; q = u sqrt(2 b) under the convention b = |q|^2 / 2
Eigen::Matrix<double, 7, 1> build_design_row_2nd(const Eigen::Vector3d& q);
Eigen::Matrix<double, 16, 1> build_design_row_4th(const Eigen::Vector3d& u, double b);
Eigen::VectorXd build_design_row_sh(const Eigen::Vector3d& u, double b, int order);

// one row per acquisition (repeats expanded), m x (1+d)
Eigen::MatrixXd build_design_matrix(const GradientScheme& scheme, const ModelSpec& spec);

// directional diffusivity of a coefficient vector (without the intercept)
double diffusivity_eval(const ModelSpec& spec, const Eigen::VectorXd& coeffs,
                        const Eigen::Vector3d& u);

enum class Positivity { Positive, Negative };

struct PositivityReport {
    Positivity verdict = Positivity::Positive;
    double min_diffusivity = 0.0;   // lower bound certificate from the search
    Eigen::Vector3d argmin{0, 0, 1};
    bool converged = true;
};

// search budget of the sphere minimization
struct PositivityBudget {
    int grid = 2048;
    int starts = 32;
};

// Tensor2: eigenvalue check. Tensor4/SH: positive semidefinite dhat is
// accepted immediately (sufficient); otherwise the minimum of d(u) over the
// sphere is located by multi-start projected gradient plus a dense grid pass.
PositivityReport positivity_check(const ModelSpec& spec, const Eigen::VectorXd& coeffs,
                                  double tol_scale = 1e-12, const PositivityBudget& budget = {});

// deterministic quasi-uniform sphere covering (spiral points)
std::vector<Eigen::Vector3d> sphere_grid(int n);

} // namespace ricefield
