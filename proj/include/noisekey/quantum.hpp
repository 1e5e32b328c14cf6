#pragma once

// Quantum-optics analysis core: coherent-state overlaps, the four-state
// density matrix in its exact and first-order forms, eigen-decompositions,
// von Neumann entropy, discrete phase distributions on a truncated number
// basis, and the phase signal-to-noise ratio used in the security analysis.
//
// Conventions: alpha >= 0 is the real field amplitude, <n> = alpha^2 the mean
// photon number. The four signal states sit at phases
// {0, dphi1, pi, pi + dphi1}, mixed with equal weight 1/4.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <vector>

#include "noisekey/errors.hpp"
#include "noisekey/wheel.hpp"

namespace noisekey {

// <alpha e^{i phi_i} | alpha e^{i phi_k}> = exp(-alpha^2 (1 - e^{i(phi_k - phi_i)})).
inline std::complex<double> coherent_overlap(double alpha, double phi_i, double phi_k) {
    if (!(alpha >= 0.0)) throw UsageError("coherent_overlap: alpha must be >= 0");
    std::complex<double> rot = std::polar(1.0, phi_k - phi_i);
    return std::exp(-(alpha * alpha) * (1.0 - rot));
}

// Stable sech on the nonnegative axis: 2 e^-x / (1 + e^-2x). Avoids the
// cosh overflow that the naive form hits around x ~ 710.
inline double stable_sech(double x) {
    double ax = std::abs(x);
    double e = std::exp(-ax);
    return 2.0 * e / (1.0 + e * e);
}

enum class DensityForm {
    ExactOverlap,  // entries are the Gram mixture form, 1/4 <phi_i|phi_k>
    FirstOrder,    // near-pair entries expanded to first order in dphi1
};

struct DensityMatrix {
    DensityForm form = DensityForm::ExactOverlap;
    double alpha = 0.0;
    double delta_phi1 = 0.0;
    // Row i, column k over the state order {0, dphi1, pi, pi + dphi1}.
    std::array<std::array<std::complex<double>, 4>, 4> entries{};
};

inline std::array<double, 4> four_state_phases(double delta_phi1) {
    return {0.0, delta_phi1, kPi, kPi + delta_phi1};
}

// Equal mixture of the four signal states in the Gram representation:
// entry(i,k) = 1/4 <phi_i|phi_k>. The ordinary eigenvalues of this matrix are
// the spectrum of the mixture restricted to the four-state span (weights are
// uniform, so the weighted Gram map is already Hermitian).
inline DensityMatrix density_matrix_exact(double alpha, double delta_phi1) {
    if (!(alpha >= 0.0)) throw UsageError("density_matrix_exact: alpha must be >= 0");
    if (!(delta_phi1 >= 0.0)) {
        throw UsageError("density_matrix_exact: delta_phi1 must be >= 0");
    }
    DensityMatrix dm;
    dm.form = DensityForm::ExactOverlap;
    dm.alpha = alpha;
    dm.delta_phi1 = delta_phi1;
    auto phis = four_state_phases(delta_phi1);
    for (int i = 0; i < 4; ++i) {
        for (int k = 0; k < 4; ++k) {
            dm.entries[i][k] = 0.25 * coherent_overlap(alpha, phis[i], phis[k]);
        }
    }
    return dm;
}

// First-order form of the same matrix: unit diagonal, sech(2 alpha^2) for
// well-separated pairs, and 1 +- i alpha^2 dphi1 tanh(2 alpha^2) inside the
// two near pairs (0,dphi1) and (pi,pi+dphi1); everything scaled by 1/4.
inline DensityMatrix density_matrix_first_order(double alpha, double delta_phi1) {
    if (!(alpha >= 0.0)) throw UsageError("density_matrix_first_order: alpha must be >= 0");
    DensityMatrix dm;
    dm.form = DensityForm::FirstOrder;
    dm.alpha = alpha;
    dm.delta_phi1 = delta_phi1;
    double n = alpha * alpha;
    double s = stable_sech(2.0 * n);
    std::complex<double> near(1.0, n * delta_phi1 * std::tanh(2.0 * n));
    for (int i = 0; i < 4; ++i) {
        for (int k = 0; k < 4; ++k) {
            dm.entries[i][k] = 0.25 * s;
        }
        dm.entries[i][i] = 0.25;
    }
    dm.entries[0][1] = 0.25 * near;
    dm.entries[1][0] = 0.25 * std::conj(near);
    dm.entries[2][3] = 0.25 * near;
    dm.entries[3][2] = 0.25 * std::conj(near);
    return dm;
}

struct EigenSystem {
    // Descending. The mixture spectrum always satisfies sum = 1.
    std::array<double, 4> eigenvalues{};
    // Row j holds the coefficients of eigenvector j over the four signal
    // states, aligned with eigenvalues[j].
    std::array<std::array<std::complex<double>, 4>, 4> eigenvectors{};
    // Closed-form route only; NaN when produced numerically.
    double phi_c = std::numeric_limits<double>::quiet_NaN();
    double phi_t = std::numeric_limits<double>::quiet_NaN();
    double normalizer = std::numeric_limits<double>::quiet_NaN();
};

// Closed-form eigensystem of the first-order matrix. Two eigenvalues vanish;
// the nonzero pair is
//   lambda2 = sech(2 a) sinh^2(a)  and  lambda4 = (1 + sech(2 a)) / 2,
// with a = alpha^2. lambda2 is evaluated through the identity
// sech(2a) sinh^2(a) = (1 - sech(2a)) / 2, which keeps the pair summing to
// one exactly and avoids inf * 0 at large alpha.
inline EigenSystem eigensystem_analytic(double alpha, double delta_phi1) {
    if (!(alpha > 0.0)) {
        throw UsageError("eigensystem_analytic: degenerate at alpha == 0 (rank-1 mixture)");
    }
    if (!(delta_phi1 >= 0.0)) {
        throw UsageError("eigensystem_analytic: delta_phi1 must be >= 0");
    }
    double n = alpha * alpha;
    double s = stable_sech(2.0 * n);
    double lambda2 = 0.5 * (1.0 - s);
    double lambda4 = 0.5 * (1.0 + s);

    EigenSystem sys;
    sys.eigenvalues = {lambda4, lambda2, 0.0, 0.0};
    double t = std::tanh(n);
    sys.phi_c = std::atan(n * delta_phi1 / t);
    sys.phi_t = std::atan(n * delta_phi1 * t);
    sys.normalizer = 2.0 * std::sqrt(2.0 * (1.0 - std::exp(-n)));

    std::complex<double> ec = std::polar(1.0, sys.phi_c);
    std::complex<double> et = std::polar(1.0, sys.phi_t);
    double inv_n = 1.0 / sys.normalizer;
    auto scaled = [inv_n](std::complex<double> a, std::complex<double> b,
                          std::complex<double> c, std::complex<double> d) {
        return std::array<std::complex<double>, 4>{a * inv_n, b * inv_n, c * inv_n,
                                                   d * inv_n};
    };
    sys.eigenvectors[0] = scaled(et, 1.0, et, 1.0);     // lambda4, symmetric
    sys.eigenvectors[1] = scaled(-ec, -1.0, ec, 1.0);   // lambda2, antisymmetric
    sys.eigenvectors[2] = scaled(ec, -1.0, -ec, 1.0);   // null pair
    sys.eigenvectors[3] = scaled(-et, 1.0, -et, 1.0);
    return sys;
}

// Numeric spectrum of the four-state mixture. The signal states are not
// orthogonal, so the operator is diagonalized over an orthonormalized span:
// the Gram matrix G = 4 * entries is eigen-decomposed, directions below a
// relative tolerance of 1e-12 are dropped (degenerate constellations), the
// operator sandwich <phi_i|rho|phi_k> = G^2/4 is mapped into the retained
// orthonormal basis, and that small Hermitian matrix is diagonalized.
inline EigenSystem eigensystem_numeric(const DensityMatrix& dm) {
    if (dm.form != DensityForm::ExactOverlap) {
        throw UsageError("eigensystem_numeric: requires the exact-overlap form");
    }
    Eigen::Matrix4cd g;
    for (int i = 0; i < 4; ++i) {
        for (int k = 0; k < 4; ++k) {
            g(i, k) = 4.0 * dm.entries[i][k];
        }
    }
    if ((g - g.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
        throw UsageError("eigensystem_numeric: input is not Hermitian");
    }

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> gram_es(g);
    if (gram_es.info() != Eigen::Success) {
        throw AccuracyError("eigensystem_numeric: Gram eigendecomposition failed");
    }
    const auto& d = gram_es.eigenvalues();  // ascending
    double tol = 1e-12 * std::max(d(3), 1.0);
    int first = 0;
    while (first < 4 && d(first) <= tol) ++first;
    int rank = 4 - first;
    if (rank == 0) {
        throw UsageError("eigensystem_numeric: Gram matrix has no significant rank");
    }

    // Columns of x span the constellation orthonormally: x^H G x = I.
    Eigen::MatrixXcd x(4, rank);
    for (int j = 0; j < rank; ++j) {
        x.col(j) = gram_es.eigenvectors().col(first + j) / std::sqrt(d(first + j));
    }
    Eigen::MatrixXcd sandwich = (g * g) * 0.25;  // <phi_i|rho|phi_k>
    Eigen::MatrixXcd rho_on = x.adjoint() * sandwich * x;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> rho_es(rho_on);
    if (rho_es.info() != Eigen::Success) {
        throw AccuracyError("eigensystem_numeric: span eigendecomposition failed");
    }

    EigenSystem sys;
    // rho_es orders ascending; emit descending with zero padding at the tail.
    for (int j = 0; j < rank; ++j) {
        sys.eigenvalues[j] = rho_es.eigenvalues()(rank - 1 - j);
        Eigen::Vector4cd coeff = x * rho_es.eigenvectors().col(rank - 1 - j);
        for (int i = 0; i < 4; ++i) sys.eigenvectors[j][i] = coeff(i);
    }
    for (int j = rank; j < 4; ++j) {
        sys.eigenvalues[j] = 0.0;
        sys.eigenvectors[j] = {0.0, 0.0, 0.0, 0.0};
    }
    return sys;
}

// Descending eigenvalues of the mixture seen through its Gram sandwich:
// M = G^2 / (4 (G^2)_00) with G_ik = <phi_i|phi_k>. Every row of |G_ik|^2
// sums identically for this constellation, so M has unit trace, and it is
// PSD because G is. As delta_phi1 -> 0 the spectrum lands exactly on the
// closed-form pair {lambda_4, lambda_2, 0, 0} and deviates from it only at
// O(delta_phi1^2), which makes it the numeric cross-check for
// eigensystem_analytic. (eigensystem_numeric answers a different question:
// the spectrum of the mixture as an operator, which does not collapse onto
// the closed-form pair.)
inline std::array<double, 4> gram_sandwich_spectrum(double alpha, double delta_phi1) {
    if (!(alpha >= 0.0)) {
        throw UsageError("gram_sandwich_spectrum: alpha must be >= 0");
    }
    if (!(delta_phi1 >= 0.0)) {
        throw UsageError("gram_sandwich_spectrum: delta_phi1 must be >= 0");
    }
    auto phis = four_state_phases(delta_phi1);
    Eigen::Matrix4cd g;
    for (int i = 0; i < 4; ++i) {
        for (int k = 0; k < 4; ++k) {
            g(i, k) = coherent_overlap(alpha, phis[i], phis[k]);
        }
    }
    Eigen::Matrix4cd s = g * g;
    Eigen::Matrix4cd m = s * (0.25 / s(0, 0).real());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(m);
    if (es.info() != Eigen::Success) {
        throw AccuracyError("gram_sandwich_spectrum: eigendecomposition failed");
    }
    std::array<double, 4> out{};
    for (int j = 0; j < 4; ++j) out[j] = es.eigenvalues()(3 - j);
    return out;
}

// Shannon entropy of a spectrum in bits. Values within 1e-9 below zero are
// treated as rounding and clamped; anything more negative is rejected.
inline double von_neumann_entropy(std::span<const double> eigenvalues) {
    double h = 0.0;
    for (double lambda : eigenvalues) {
        if (lambda < -1e-9) {
            throw UsageError("von_neumann_entropy: negative eigenvalue");
        }
        if (lambda > 0.0) {
            h -= lambda * std::log2(lambda);
        }
    }
    return h;
}

inline double von_neumann_entropy(const EigenSystem& sys) {
    return von_neumann_entropy(std::span<const double>(sys.eigenvalues));
}

// Upper bound on the photon-number tail mass P[N > q] for a Poisson law of
// the given mean, via the geometric bound pmf(q+1) / (1 - mean/(q+2)).
inline double poisson_tail_bound(double mean, int q) {
    if (!(mean >= 0.0)) throw UsageError("poisson_tail_bound: mean must be >= 0");
    if (mean == 0.0) return 0.0;
    if (q + 2 <= mean) return 1.0;
    double log_pmf = -mean + (q + 1) * std::log(mean) - std::lgamma(static_cast<double>(q) + 2.0);
    double bound = std::exp(log_pmf) / (1.0 - mean / (q + 2));
    return bound < 1.0 ? bound : 1.0;
}

// Unweighted phase density of a single coherent state on the discrete grid
// phi_dm = 2 pi m / (q+1), m = 0..q:
//   p(phi_dm) = |<phi_dm|alpha e^{i phi}>|^2
//             = e^{-n}/(q+1) |sum_k alpha^k/sqrt(k!) e^{ik(phi - phi_dm)}|^2.
// The Fock sum runs by the recurrence term_{k+1} = term_k * alpha e^{i
// theta} / sqrt(k+1) seeded with e^{-n/2}, so the largest term stays O(1)
// for any intensity, with compensated (Kahan) accumulation.
inline std::vector<double> single_state_phase_density(double alpha, double phi, int q) {
    if (!(alpha >= 0.0)) throw UsageError("single_state_phase_density: alpha must be >= 0");
    if (q < 1) throw UsageError("single_state_phase_density: q must be >= 1");
    double n = alpha * alpha;
    std::size_t points = static_cast<std::size_t>(q) + 1;

    std::vector<double> inv_sqrt(points);
    for (std::size_t k = 1; k < points; ++k) {
        inv_sqrt[k] = 1.0 / std::sqrt(static_cast<double>(k));
    }

    std::vector<double> density(points);
    double seed = std::exp(-0.5 * n);
    for (std::size_t mpt = 0; mpt < points; ++mpt) {
        double theta = phi - kTwoPi * static_cast<double>(mpt) / static_cast<double>(points);
        std::complex<double> step = alpha * std::polar(1.0, theta);
        std::complex<double> term(seed, 0.0);
        std::complex<double> sum = term;
        std::complex<double> comp(0.0, 0.0);
        for (std::size_t k = 1; k < points; ++k) {
            term *= step * inv_sqrt[k];
            std::complex<double> y = term - comp;
            std::complex<double> t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        density[mpt] = std::norm(sum) / static_cast<double>(points);
    }
    return density;
}

struct PhaseDistribution {
    double alpha = 0.0;
    int q = 0;
    std::vector<double> grid;                     // phi_dm values
    std::vector<double> phis;                     // component state phases
    std::vector<double> weights;                  // mixture weights, sum 1
    std::vector<std::vector<double>> components;  // weighted contributions
    std::vector<double> total;                    // p(phi_dm)
};

// Mixture phase distribution over the grid. Weighted per-state contributions
// are retained so moments of individual components can undo their weight.
// Throws AccuracyError when the grid cannot hold the photon-number support.
inline PhaseDistribution phase_distribution(double alpha, std::span<const double> phis,
                                            int q, std::span<const double> weights = {}) {
    if (phis.empty()) throw UsageError("phase_distribution: need at least one state");
    std::vector<double> w(weights.begin(), weights.end());
    if (w.empty()) {
        w.assign(phis.size(), 1.0 / static_cast<double>(phis.size()));
    }
    if (w.size() != phis.size()) {
        throw UsageError("phase_distribution: weights must match states");
    }
    double wsum = 0.0;
    for (double v : w) {
        if (!(v >= 0.0)) throw UsageError("phase_distribution: weights must be >= 0");
        wsum += v;
    }
    if (std::abs(wsum - 1.0) > 1e-12) {
        throw UsageError("phase_distribution: weights must sum to 1");
    }
    if (poisson_tail_bound(alpha * alpha, q) > 1e-8) {
        throw AccuracyError("phase_distribution: q too small for alpha (tail mass > 1e-8)");
    }

    PhaseDistribution dist;
    dist.alpha = alpha;
    dist.q = q;
    dist.phis.assign(phis.begin(), phis.end());
    dist.weights = std::move(w);
    std::size_t points = static_cast<std::size_t>(q) + 1;
    dist.grid.resize(points);
    for (std::size_t mpt = 0; mpt < points; ++mpt) {
        dist.grid[mpt] = kTwoPi * static_cast<double>(mpt) / static_cast<double>(points);
    }
    dist.total.assign(points, 0.0);
    dist.components.reserve(phis.size());
    for (std::size_t i = 0; i < phis.size(); ++i) {
        std::vector<double> comp = single_state_phase_density(alpha, phis[i], q);
        for (std::size_t mpt = 0; mpt < points; ++mpt) {
            comp[mpt] *= dist.weights[i];
            dist.total[mpt] += comp[mpt];
        }
        dist.components.push_back(std::move(comp));
    }
    return dist;
}

// The protocol's four-state constellation at equal weights.
inline PhaseDistribution four_state_distribution(double alpha, double delta_phi1, int q) {
    auto phis = four_state_phases(delta_phi1);
    std::array<double, 4> w{0.25, 0.25, 0.25, 0.25};
    return phase_distribution(alpha, std::span<const double>(phis.data(), 4), q,
                              std::span<const double>(w.data(), 4));
}

struct PhaseMoments {
    double mean = 0.0;           // linearized circular mean, near [0, 2 pi)
    double second_moment = 0.0;  // matching <phi^2>
    double variance = 0.0;
};

// First and second phase moments of one component, with the component weight
// divided back out (weight 1/4 recovers the factor-4 convention of the
// four-state mixture). A peak near the 0/2 pi seam is handled by unwrapping
// the grid around the circular mean; an (exactly) uniform distribution has
// no circular mean, so the plain grid moments are used when the resultant
// magnitude is below 1e-9.
inline PhaseMoments phase_moments(const PhaseDistribution& dist, std::size_t component) {
    if (component >= dist.components.size()) {
        throw UsageError("phase_moments: component index out of range");
    }
    double w = dist.weights[component];
    if (!(w > 0.0)) throw UsageError("phase_moments: component weight is zero");
    const auto& comp = dist.components[component];

    std::complex<double> resultant(0.0, 0.0);
    for (std::size_t mpt = 0; mpt < comp.size(); ++mpt) {
        resultant += comp[mpt] * std::polar(1.0, dist.grid[mpt]);
    }

    PhaseMoments out;
    double inv_w = 1.0 / w;
    if (std::abs(resultant) * inv_w < 1e-9) {
        for (std::size_t mpt = 0; mpt < comp.size(); ++mpt) {
            double p = comp[mpt] * inv_w;
            out.mean += p * dist.grid[mpt];
            out.second_moment += p * dist.grid[mpt] * dist.grid[mpt];
        }
    } else {
        double center = wrap_two_pi(std::arg(resultant));
        for (std::size_t mpt = 0; mpt < comp.size(); ++mpt) {
            double p = comp[mpt] * inv_w;
            double phi = center + wrap_pi(dist.grid[mpt] - center);
            out.mean += p * phi;
            out.second_moment += p * phi * phi;
        }
    }
    out.variance = out.second_moment - out.mean * out.mean;
    return out;
}

// SNR of a set of phase moments: <phi>^2 / (<phi^2> - <phi>^2).
inline double snr_from_moments(const PhaseMoments& moments) {
    if (!(moments.variance > 0.0)) {
        throw SingularityError("snr_from_moments: zero or negative variance");
    }
    return moments.mean * moments.mean / moments.variance;
}

// Distinguishability of the state displaced by dphi1 from the reference
// position: its mean phase (~ dphi1) squared over its phase variance. This
// is the quantity whose crossing of 1 marks where the sector separation
// drops below the intrinsic phase noise.
inline double snr_phase(double alpha, double delta_phi1, int q) {
    if (!(delta_phi1 > 0.0)) throw UsageError("snr_phase: delta_phi1 must be positive");
    double phi = delta_phi1;
    double weight = 1.0;
    PhaseDistribution dist =
        phase_distribution(alpha, std::span<const double>(&phi, 1), q,
                           std::span<const double>(&weight, 1));
    return snr_from_moments(phase_moments(dist, 0));
}

// Count grid maxima that rise above both circular neighbours and above a
// relative floor. The floor discards float-level ripple (~1e-14 relative) in
// the dead zones between genuine peaks.
inline int count_significant_maxima(std::span<const double> values,
                                    double relative_floor = 1e-6) {
    if (values.size() < 3) throw UsageError("count_significant_maxima: need >= 3 points");
    double peak = *std::max_element(values.begin(), values.end());
    double floor = peak * relative_floor;
    int count = 0;
    std::size_t n = values.size();
    for (std::size_t i = 0; i < n; ++i) {
        double prev = values[(i + n - 1) % n];
        double next = values[(i + 1) % n];
        if (values[i] > prev && values[i] > next && values[i] >= floor) ++count;
    }
    return count;
}

}  // namespace noisekey
