#include "ricefield/engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

namespace ricefield {

BlockPartition partition_blocks(const VoxelGraph& graph, int radius, std::uint64_t cycle) {
    if (radius < 0) throw std::invalid_argument("partition_blocks: radius must be >= 0");
    const int s = 2 * radius + 2;
    BlockPartition part;
    part.period = s * s * s;
    part.cycle_offset = static_cast<int>(cycle % static_cast<std::uint64_t>(part.period));
    const int ox = part.cycle_offset % s;
    const int oy = (part.cycle_offset / s) % s;
    const int oz = part.cycle_offset / (s * s);

    std::vector<std::uint8_t> in_block(static_cast<std::size_t>(graph.size()), 0);

    auto ball = [&](int center) {
        std::vector<int> members;
        std::vector<int> dist(static_cast<std::size_t>(graph.size()), -1);
        std::deque<int> queue{center};
        dist[static_cast<std::size_t>(center)] = 0;
        while (!queue.empty()) {
            const int v = queue.front();
            queue.pop_front();
            members.push_back(v);
            if (dist[static_cast<std::size_t>(v)] == radius) continue;
            for (int w : graph.neighbors[static_cast<std::size_t>(v)])
                if (dist[static_cast<std::size_t>(w)] < 0) {
                    dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
                    queue.push_back(w);
                }
        }
        std::sort(members.begin(), members.end());
        return members;
    };

    auto try_place = [&](int center) {
        std::vector<int> members = ball(center);
        for (int v : members) {
            if (in_block[static_cast<std::size_t>(v)]) return;
            for (int w : graph.neighbors[static_cast<std::size_t>(v)])
                if (in_block[static_cast<std::size_t>(w)]) return;
        }
        for (int v : members) in_block[static_cast<std::size_t>(v)] = 1;
        part.centers.push_back(center);
        part.blocks.push_back(std::move(members));
    };

    // sublattice pass: every voxel is such a center at exactly one offset
    for (int v = 0; v < graph.size(); ++v) {
        const auto [x, y, z] = graph.coords[static_cast<std::size_t>(v)];
        if (x % s == ox && y % s == oy && z % s == oz) try_place(v);
    }
    // maximality pass in lexicographic (voxel id) order
    for (int v = 0; v < graph.size(); ++v)
        if (!in_block[static_cast<std::size_t>(v)]) try_place(v);

    return part;
}

AugmentedCounts sample_counts(const Eigen::VectorXd& y, const Eigen::VectorXd& linpred,
                              double sigma2, Rng& rng) {
    if (y.size() != linpred.size()) throw std::invalid_argument("sample_counts: size mismatch");
    AugmentedCounts n(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const ReinforcedPoisson d = conditional_n_given_y(y(i), linpred(i), sigma2);
        n(i) = static_cast<double>(sample_reinforced_poisson(d, rng));
    }
    return n;
}

double sample_sigma2(const Eigen::VectorXd& y, const Eigen::VectorXd& linpred,
                     const AugmentedCounts& counts, Rng& rng) {
    if (y.size() == 0) throw std::invalid_argument("sample_sigma2: no measurements");
    const double shape = 2.0 * counts.sum() + static_cast<double>(y.size());
    const double rate =
        0.5 * (y.squaredNorm() + (2.0 * linpred.array()).exp().sum());
    return rate / rng.gamma(shape);
}

std::optional<double> sample_theta0(const AugmentedCounts& counts,
                                    const Eigen::VectorXd& linpred_no_intercept, double sigma2,
                                    Rng& rng) {
    const double a = counts.sum();
    if (a <= 0.0) return std::nullopt;
    const double b = (2.0 * linpred_no_intercept.array()).exp().sum() / (2.0 * sigma2);
    const double xi = rng.gamma(a) / b;
    return 0.5 * std::log(xi);
}

PoissonBlockModel::PoissonBlockModel(const Eigen::MatrixXd& z, std::vector<AugmentedCounts> counts,
                                     const Eigen::VectorXd& sigma2_of_block, std::vector<int> block,
                                     ScoringOptions opts)
    : z_(z), counts_(std::move(counts)), sigma2_(sigma2_of_block), block_(std::move(block)),
      opts_(opts) {
    if (counts_.size() != block_.size() || sigma2_.size() != static_cast<Eigen::Index>(block_.size()))
        throw std::invalid_argument("PoissonBlockModel: per-voxel data size mismatch");
}

int PoissonBlockModel::block_index(int v) const {
    const auto it = std::lower_bound(block_.begin(), block_.end(), v);
    if (it == block_.end() || *it != v)
        throw std::invalid_argument("PoissonBlockModel: voxel not in block");
    return static_cast<int>(it - block_.begin());
}

LaplaceProposal PoissonBlockModel::laplace(int v, const Eigen::VectorXd& start,
                                           bool fixed_s0) const {
    const int i = block_index(v);
    ScoringOptions o = opts_;
    o.fixed_s0 = fixed_s0;
    return fisher_scoring(start, counts_[static_cast<std::size_t>(i)], sigma2_(i), z_, o);
}

double PoissonBlockModel::log_likelihood(int v, const Eigen::VectorXd& theta) const {
    const int i = block_index(v);
    return poisson_log_conditional(theta, counts_[static_cast<std::size_t>(i)], sigma2_(i), z_);
}

namespace {

struct VoxelLaplace {
    LaplaceProposal prop;
    bool fixed_s0 = false;
};

// condition estimate of the information's free block
double info_condition(const Eigen::MatrixXd& info) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

// scores one voxel, falling back to the fixed-S0 reduced update on
// non-convergence or near-singular information
std::optional<VoxelLaplace> score_voxel(const BlockLocalModel& model, int v,
                                        const Eigen::VectorXd& start, bool force_fixed_s0,
                                        double degeneracy_condition) {
    if (!force_fixed_s0) {
        LaplaceProposal prop = model.laplace(v, start, false);
        if (prop.converged) {
            const Eigen::Index p = prop.precision.rows();
            if (info_condition(prop.precision) <= degeneracy_condition || p == 1)
                return VoxelLaplace{std::move(prop), false};
        }
    }
    LaplaceProposal prop = model.laplace(v, start, true);
    if (prop.converged) return VoxelLaplace{std::move(prop), true};
    return std::nullopt;
}

struct BlockSystem {
    Eigen::SparseMatrix<double> psi; // free coordinates only
    Eigen::VectorXd xi;
    std::vector<int> free_offset;  // per block voxel, offset into the free vector
    std::vector<int> free_count;   // p or p-1
    int total_free = 0;
};

BlockSystem assemble(const std::vector<int>& block, const Eigen::MatrixXd& theta,
                     const VoxelGraph& graph, const Eigen::MatrixXd& omega,
                     const std::vector<VoxelLaplace>& lap) {
    const int p = static_cast<int>(theta.rows());
    const int nb = static_cast<int>(block.size());
    BlockSystem sys;
    sys.free_offset.resize(static_cast<std::size_t>(nb));
    sys.free_count.resize(static_cast<std::size_t>(nb));
    for (int i = 0; i < nb; ++i) {
        sys.free_offset[static_cast<std::size_t>(i)] = sys.total_free;
        sys.free_count[static_cast<std::size_t>(i)] =
            lap[static_cast<std::size_t>(i)].fixed_s0 ? p - 1 : p;
        sys.total_free += sys.free_count[static_cast<std::size_t>(i)];
    }

    auto index_of = [&](int vi) {
        const auto it = std::lower_bound(block.begin(), block.end(), vi);
        return (it != block.end() && *it == vi) ? static_cast<int>(it - block.begin()) : -1;
    };
    auto lo_of = [&](int i) { return lap[static_cast<std::size_t>(i)].fixed_s0 ? 1 : 0; };

    std::vector<Eigen::Triplet<double>> trips;
    sys.xi = Eigen::VectorXd::Zero(sys.total_free);

    for (int i = 0; i < nb; ++i) {
        const int v = block[static_cast<std::size_t>(i)];
        const int li = lo_of(i);
        const int ni = sys.free_count[static_cast<std::size_t>(i)];
        const int oi = sys.free_offset[static_cast<std::size_t>(i)];
        const auto& prop = lap[static_cast<std::size_t>(i)].prop;

        // diagonal block: #neighbors * Omega + information
        const double deg = graph.degree(v);
        Eigen::MatrixXd diag = deg * omega + prop.precision;
        // linear term: I(v) theta_hat(v) + Omega * sum of exterior neighbors
        Eigen::VectorXd boundary_sum = Eigen::VectorXd::Zero(p);
        for (int w : graph.neighbors[static_cast<std::size_t>(v)])
            if (index_of(w) < 0) boundary_sum += theta.col(w);
        Eigen::VectorXd xi_full = prop.precision * prop.mode + omega * boundary_sum;
        // frozen intercept moves its couplings into the linear term
        if (li == 1) xi_full -= diag.col(0) * theta(0, v);

        for (int a = 0; a < ni; ++a) {
            sys.xi(oi + a) += xi_full(li + a);
            for (int b = 0; b < ni; ++b)
                trips.emplace_back(oi + a, oi + b, diag(li + a, li + b));
        }

        // off-diagonal -Omega couplings to in-block neighbors
        for (int w : graph.neighbors[static_cast<std::size_t>(v)]) {
            const int j = index_of(w);
            if (j < 0) continue;
            const int lj = lo_of(j);
            const int nj = sys.free_count[static_cast<std::size_t>(j)];
            const int oj = sys.free_offset[static_cast<std::size_t>(j)];
            for (int a = 0; a < ni; ++a)
                for (int b = 0; b < nj; ++b)
                    trips.emplace_back(oi + a, oj + b, -omega(li + a, lj + b));
            if (lj == 1) // neighbor's frozen intercept contributes +Omega col0 * theta0(w)
                for (int a = 0; a < ni; ++a) sys.xi(oi + a) += omega(li + a, 0) * theta(0, w);
        }
    }

    sys.psi.resize(sys.total_free, sys.total_free);
    sys.psi.setFromTriplets(trips.begin(), trips.end());
    return sys;
}

Eigen::VectorXd gather_free(const std::vector<int>& block, const Eigen::MatrixXd& theta,
                            const BlockSystem& sys, const std::vector<VoxelLaplace>& lap) {
    Eigen::VectorXd x(sys.total_free);
    for (std::size_t i = 0; i < block.size(); ++i) {
        const int lo = lap[i].fixed_s0 ? 1 : 0;
        for (int a = 0; a < sys.free_count[i]; ++a)
            x(sys.free_offset[i] + a) = theta(lo + a, block[i]);
    }
    return x;
}

double prior_energy_around_block(const std::vector<int>& block, const Eigen::MatrixXd& theta,
                                 const VoxelGraph& graph, const Eigen::MatrixXd& omega) {
    auto in_block = [&](int v) {
        return std::binary_search(block.begin(), block.end(), v);
    };
    double e = 0.0;
    for (int v : block) {
        for (int w : graph.neighbors[static_cast<std::size_t>(v)]) {
            if (in_block(w) && w < v) continue; // count in-block edges once
            const Eigen::VectorXd d = theta.col(v) - theta.col(w);
            e += 0.5 * d.dot(omega * d);
        }
    }
    return e;
}

} // namespace

BlockUpdateResult update_theta_block(const std::vector<int>& block, Eigen::MatrixXd& theta,
                                     const VoxelGraph& graph, const Eigen::MatrixXd& omega,
                                     const BlockLocalModel& model, Rng& rng,
                                     const BlockUpdateOptions& opts) {
    BlockUpdateResult res;
    const int nb = static_cast<int>(block.size());
    if (nb == 0) return res;

    // forward scoring from the current state
    std::vector<VoxelLaplace> fwd;
    fwd.reserve(static_cast<std::size_t>(nb));
    for (int v : block) {
        auto s = score_voxel(model, v, theta.col(v), false, opts.degeneracy_condition);
        if (!s) return res; // skipped
        fwd.push_back(std::move(*s));
    }

    const double infl = opts.proposal_inflation;
    const BlockSystem sys = assemble(block, theta, graph, omega, fwd);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> llt(sys.psi);
    if (llt.info() != Eigen::Success) return res;
    const Eigen::VectorXd mu = llt.solve(sys.xi);

    auto log_density = [&](const Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>& f,
                           const Eigen::SparseMatrix<double>& psi, const Eigen::VectorXd& mean,
                           const Eigen::VectorXd& x, int n) {
        const Eigen::VectorXd d = x - mean;
        double logdet = 0.0;
        const auto diag = f.vectorD();
        for (int i = 0; i < n; ++i) logdet += std::log(diag(i));
        logdet -= 2.0 * n * std::log(infl);
        return 0.5 * logdet - 0.5 * n * std::log(2.0 * M_PI) -
               0.5 * d.dot(psi * d) / (infl * infl);
    };

    // draw proposal: mu + infl * P^T L^{-T} D^{-1/2} z
    Eigen::VectorXd zvec(sys.total_free);
    for (int i = 0; i < sys.total_free; ++i)
        zvec(i) = rng.normal() / std::sqrt(llt.vectorD()(i));
    Eigen::VectorXd offset = llt.matrixU().solve(zvec);
    const Eigen::VectorXd proposal_free =
        mu + infl * (llt.permutationP().transpose() * offset);

    res.attempted = true;

    // scatter into a trial field
    Eigen::MatrixXd theta_trial = theta;
    for (int i = 0; i < nb; ++i) {
        const int lo = fwd[static_cast<std::size_t>(i)].fixed_s0 ? 1 : 0;
        for (int a = 0; a < sys.free_count[static_cast<std::size_t>(i)]; ++a)
            theta_trial(lo + a, block[static_cast<std::size_t>(i)]) =
                proposal_free(sys.free_offset[static_cast<std::size_t>(i)] + a);
    }

    if (opts.constraint) {
        for (int v : block)
            if (!opts.constraint(v, theta_trial.col(v))) return res; // rejected
    }

    // backward scoring from the proposal, same per-voxel masks
    std::vector<VoxelLaplace> bwd;
    bwd.reserve(static_cast<std::size_t>(nb));
    for (int i = 0; i < nb; ++i) {
        const int v = block[static_cast<std::size_t>(i)];
        auto s = score_voxel(model, v, theta_trial.col(v),
                             fwd[static_cast<std::size_t>(i)].fixed_s0, opts.degeneracy_condition);
        if (!s || s->fixed_s0 != fwd[static_cast<std::size_t>(i)].fixed_s0) return res;
        bwd.push_back(std::move(*s));
    }
    const BlockSystem sys_b = assemble(block, theta, graph, omega, bwd);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> llt_b(sys_b.psi);
    if (llt_b.info() != Eigen::Success) return res;
    const Eigen::VectorXd mu_b = llt_b.solve(sys_b.xi);

    double log_hr = 0.0;
    for (int i = 0; i < nb; ++i) {
        const int v = block[static_cast<std::size_t>(i)];
        log_hr += model.log_likelihood(v, theta_trial.col(v)) -
                  model.log_likelihood(v, theta.col(v));
    }
    log_hr -= prior_energy_around_block(block, theta_trial, graph, omega) -
              prior_energy_around_block(block, theta, graph, omega);
    const Eigen::VectorXd current_free = gather_free(block, theta, sys_b, bwd);
    log_hr += log_density(llt_b, sys_b.psi, mu_b, current_free, sys_b.total_free) -
              log_density(llt, sys.psi, mu, proposal_free, sys.total_free);
    res.log_hastings = log_hr;

    if (std::log(rng.uniform()) <= log_hr) {
        res.accepted = true;
        for (int v : block) theta.col(v) = theta_trial.col(v);
    }
    return res;
}

} // namespace ricefield
