#include "ricefield/design.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ricefield/sh.hpp"

namespace ricefield {

int ModelSpec::coeff_dim() const {
    switch (family) {
        case ModelFamily::Tensor2: return 6;
        case ModelFamily::Tensor4: return 15;
        case ModelFamily::SH: return (2 * sh_order + 1) * (sh_order + 1);
    }
    return 0;
}

std::string ModelSpec::name() const {
    switch (family) {
        case ModelFamily::Tensor2: return "tensor2";
        case ModelFamily::Tensor4: return "tensor4";
        case ModelFamily::SH: return "sh" + std::to_string(sh_order);
    }
    return "?";
}

ModelSpec ModelSpec::parse(const std::string& name) {
    if (name == "tensor2") return tensor2();
    if (name == "tensor4") return tensor4();
    if (name.rfind("sh", 0) == 0 && name.size() > 2) {
        const int n = std::stoi(name.substr(2));
        if (n < 0) throw std::invalid_argument("ModelSpec: negative SH order");
        return sh(n);
    }
    throw std::invalid_argument("ModelSpec: unknown model '" + name + "'");
}

int GradientScheme::total_acquisitions() const {
    int m = 0;
    for (const auto& e : entries) m += e.repeats;
    return m;
}

GradientScheme GradientScheme::parse(std::istream& in, const std::string& origin) {
    GradientScheme scheme;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        SchemeEntry e;
        if (!(row >> e.u.x())) continue; // blank or comment line
        if (!(row >> e.u.y() >> e.u.z() >> e.b >> e.repeats))
            throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                     ": expected 'ux uy uz b repeats'");
        if (e.b < 0.0 || e.repeats < 1)
            throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                     ": b must be >= 0 and repeats >= 1");
        if (e.b > 0.0) {
            const double n = e.u.norm();
            // published tables carry 4-decimal directions; renormalize, but
            // reject anything that is not close to a unit vector
            if (std::fabs(n - 1.0) > 1e-3)
                throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                         ": direction is not a unit vector");
            e.u /= n;
        }
        scheme.entries.push_back(e);
    }
    if (scheme.entries.empty()) throw std::runtime_error(origin + ": empty gradient scheme");
    return scheme;
}

GradientScheme GradientScheme::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open gradient scheme '" + path + "'");
    return parse(in, path);
}

void GradientScheme::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write gradient scheme '" + path + "'");
    out << "# ux uy uz b repeats\n";
    char buf[160];
    for (const auto& e : entries) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g %d\n", e.u.x(), e.u.y(), e.u.z(),
                      e.b, e.repeats);
        out << buf;
    }
}

Eigen::Matrix<double, 7, 1> build_design_row_2nd(const Eigen::Vector3d& q) {
    if (!q.allFinite()) throw std::domain_error("build_design_row_2nd: non-finite gradient");
    Eigen::Matrix<double, 7, 1> row;
    row << 1.0, -0.5 * q.x() * q.x(), -0.5 * q.y() * q.y(), -0.5 * q.z() * q.z(),
        -q.x() * q.y(), -q.x() * q.z(), -q.y() * q.z();
    return row;
}

Eigen::Matrix<double, 16, 1> build_design_row_4th(const Eigen::Vector3d& u, double b) {
    if (!u.allFinite() || !std::isfinite(b) || b < 0.0)
        throw std::domain_error("build_design_row_4th: invalid input");
    Eigen::Matrix<double, 16, 1> row = Eigen::Matrix<double, 16, 1>::Zero();
    row(0) = 1.0;
    if (b == 0.0) return row;
    if (std::fabs(u.norm() - 1.0) > 1e-6)
        throw std::domain_error("build_design_row_4th: direction must be a unit vector");
    const double x = u.x(), y = u.y(), z = u.z();
    // multiplicity-weighted monomials in the Tensor4 slot ordering
    const double m[15] = {
        x * x * x * x, y * y * y * y, z * z * z * z,
        6 * x * x * y * y, 6 * x * x * z * z, 6 * y * y * z * z,
        12 * x * x * y * z, 12 * y * y * x * z, 12 * z * z * x * y,
        4 * x * x * x * y, 4 * x * x * x * z, 4 * y * y * y * x,
        4 * y * y * y * z, 4 * z * z * z * x, 4 * z * z * z * y,
    };
    for (int i = 0; i < 15; ++i) row(i + 1) = -b * m[i];
    return row;
}

Eigen::VectorXd build_design_row_sh(const Eigen::Vector3d& u, double b, int order) {
    if (!u.allFinite() || !std::isfinite(b) || b < 0.0 || order < 0)
        throw std::domain_error("build_design_row_sh: invalid input");
    const auto idx = sh_index_list(order);
    Eigen::VectorXd row = Eigen::VectorXd::Zero(1 + static_cast<int>(idx.size()));
    row(0) = 1.0;
    if (b == 0.0) return row;
    if (std::fabs(u.norm() - 1.0) > 1e-6)
        throw std::domain_error("build_design_row_sh: direction must be a unit vector");
    for (std::size_t i = 0; i < idx.size(); ++i)
        row(static_cast<int>(i) + 1) = -b * real_spherical_harmonic(idx[i].first, idx[i].second, u);
    return row;
}

Eigen::MatrixXd build_design_matrix(const GradientScheme& scheme, const ModelSpec& spec) {
    const int m = scheme.total_acquisitions();
    Eigen::MatrixXd z(m, spec.param_dim());
    int r = 0;
    for (const auto& e : scheme.entries) {
        Eigen::VectorXd row;
        switch (spec.family) {
            case ModelFamily::Tensor2:
                row = build_design_row_2nd(e.u * std::sqrt(2.0 * e.b));
                break;
            case ModelFamily::Tensor4:
                row = build_design_row_4th(e.b > 0 ? Eigen::Vector3d(e.u) : Eigen::Vector3d(0, 0, 1),
                                           e.b);
                break;
            case ModelFamily::SH:
                row = build_design_row_sh(e.b > 0 ? Eigen::Vector3d(e.u) : Eigen::Vector3d(0, 0, 1),
                                          e.b, spec.sh_order);
                break;
        }
        for (int k = 0; k < e.repeats; ++k) z.row(r++) = row.transpose();
    }
    return z;
}

double diffusivity_eval(const ModelSpec& spec, const Eigen::VectorXd& coeffs,
                        const Eigen::Vector3d& u) {
    if (coeffs.size() != spec.coeff_dim())
        throw std::invalid_argument("diffusivity_eval: coefficient size mismatch");
    switch (spec.family) {
        case ModelFamily::Tensor2:
            return Tensor2::from_coeffs(coeffs).diffusivity(u);
        case ModelFamily::Tensor4:
            return Tensor4::from_coeffs(coeffs).diffusivity(u);
        case ModelFamily::SH: {
            const auto idx = sh_index_list(spec.sh_order);
            double s = 0.0;
            for (std::size_t i = 0; i < idx.size(); ++i)
                s += coeffs(static_cast<int>(i)) *
                     real_spherical_harmonic(idx[i].first, idx[i].second, u);
            return s;
        }
    }
    return 0.0;
}

std::vector<Eigen::Vector3d> sphere_grid(int n) {
    // Fibonacci spiral
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(static_cast<std::size_t>(n));
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / n;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * i;
        pts.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
    }
    return pts;
}

namespace {

// ambient gradient of d(u); analytic for the tensor families, finite
// differences for spherical harmonics
Eigen::Vector3d diffusivity_grad(const ModelSpec& spec, const Eigen::VectorXd& coeffs,
                                 const Eigen::Vector3d& u) {
    switch (spec.family) {
        case ModelFamily::Tensor2:
            return 2.0 * Tensor2::from_coeffs(coeffs).matrix() * u;
        case ModelFamily::Tensor4: {
            // d(u) = v' dhat v with v = (x^2, y^2, z^2, sqrt2 xy, sqrt2 xz, sqrt2 yz)
            const Eigen::Matrix<double, 6, 6> dh = dhat(Tensor4::from_coeffs(coeffs));
            const double s2 = std::sqrt(2.0);
            Eigen::Matrix<double, 6, 1> v;
            v << u.x() * u.x(), u.y() * u.y(), u.z() * u.z(), s2 * u.x() * u.y(),
                s2 * u.x() * u.z(), s2 * u.y() * u.z();
            const Eigen::Matrix<double, 6, 1> w = 2.0 * dh * v;
            Eigen::Matrix<double, 3, 6> jac = Eigen::Matrix<double, 3, 6>::Zero();
            jac(0, 0) = 2.0 * u.x();
            jac(1, 1) = 2.0 * u.y();
            jac(2, 2) = 2.0 * u.z();
            jac(0, 3) = s2 * u.y();
            jac(1, 3) = s2 * u.x();
            jac(0, 4) = s2 * u.z();
            jac(2, 4) = s2 * u.x();
            jac(1, 5) = s2 * u.z();
            jac(2, 5) = s2 * u.y();
            return jac * w;
        }
        case ModelFamily::SH: {
            const double h = 1e-6;
            Eigen::Vector3d grad;
            for (int k = 0; k < 3; ++k) {
                Eigen::Vector3d up = u, um = u;
                up(k) += h;
                um(k) -= h;
                grad(k) = (diffusivity_eval(spec, coeffs, up.normalized()) -
                           diffusivity_eval(spec, coeffs, um.normalized())) /
                          (2.0 * h);
            }
            return grad;
        }
    }
    return Eigen::Vector3d::Zero();
}

// projected gradient descent for min d(u) on the unit sphere
Eigen::Vector3d refine_minimum(const ModelSpec& spec, const Eigen::VectorXd& coeffs,
                               Eigen::Vector3d u, double scale, double* value, bool* converged) {
    double f = diffusivity_eval(spec, coeffs, u);
    bool ok = false;
    for (int it = 0; it < 100; ++it) {
        Eigen::Vector3d grad = diffusivity_grad(spec, coeffs, u);
        grad -= grad.dot(u) * u; // tangent component
        if (grad.norm() < 1e-9 * scale) {
            ok = true;
            break;
        }
        double step = 0.5;
        bool moved = false;
        for (int ls = 0; ls < 20; ++ls) {
            const Eigen::Vector3d cand = (u - step * grad).normalized();
            const double fc = diffusivity_eval(spec, coeffs, cand);
            if (fc < f - 1e-18 * scale) {
                u = cand;
                f = fc;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) {
            ok = true;
            break;
        }
    }
    *value = f;
    *converged = ok;
    return u;
}

} // namespace

PositivityReport positivity_check(const ModelSpec& spec, const Eigen::VectorXd& coeffs,
                                  double tol_scale, const PositivityBudget& budget) {
    PositivityReport rep;
    const double scale = std::max(coeffs.cwiseAbs().maxCoeff(), 1e-300);
    const double tol = tol_scale * scale;

    if (spec.family == ModelFamily::Tensor2) {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(Tensor2::from_coeffs(coeffs).matrix(),
                                                          Eigen::EigenvaluesOnly);
        rep.min_diffusivity = es.eigenvalues().minCoeff();
        rep.verdict = rep.min_diffusivity >= -tol ? Positivity::Positive : Positivity::Negative;
        return rep;
    }

    // sufficient condition: dhat of the (mapped) tensor is positive semidefinite
    bool have_dhat = false;
    Eigen::Matrix<double, 6, 6> dh;
    if (spec.family == ModelFamily::Tensor4) {
        dh = dhat(Tensor4::from_coeffs(coeffs));
        have_dhat = true;
    } else if (spec.family == ModelFamily::SH && spec.sh_order == 2) {
        dh = dhat(tensor4_from_sh(coeffs));
        have_dhat = true;
    }
    if (have_dhat) {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> es(dh, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() >= 0.0) {
            rep.min_diffusivity = 0.0;
            rep.verdict = Positivity::Positive;
            return rep;
        }
    }

    // locate the Z-eigenvalue: dense pass, then refine the best starts
    const auto grid = sphere_grid(budget.grid);
    double best = std::numeric_limits<double>::infinity();
    Eigen::Vector3d best_u(0, 0, 1);
    for (const auto& u : grid) {
        const double f = diffusivity_eval(spec, coeffs, u);
        if (f < best) {
            best = f;
            best_u = u;
        }
    }
    const auto starts = sphere_grid(budget.starts);
    bool all_ok = true;
    for (auto u : starts) {
        double f;
        bool ok;
        u = refine_minimum(spec, coeffs, u, scale, &f, &ok);
        all_ok = all_ok && ok;
        if (f < best) {
            best = f;
            best_u = u;
        }
    }
    {
        double f;
        bool ok;
        const Eigen::Vector3d u = refine_minimum(spec, coeffs, best_u, scale, &f, &ok);
        all_ok = all_ok && ok;
        if (f < best) {
            best = f;
            best_u = u;
        }
    }
    rep.min_diffusivity = best;
    rep.argmin = best_u;
    rep.converged = all_ok;
    rep.verdict = best >= -tol ? Positivity::Positive : Positivity::Negative;
    return rep;
}

} // namespace ricefield
