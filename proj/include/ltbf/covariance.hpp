#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "ltbf/channel.hpp"
#include "ltbf/rng.hpp"
#include "ltbf/types.hpp"

namespace ltbf {

/// N_rx x N_SRS matrix of noisy channel snapshots for one UE over one
/// long-term estimation window.
struct SrsBatch {
  CMat estimates;
  int user = 0;
  double period_start_s = 0.0;
  double period_end_s = 0.0;

  int n_srs() const { return static_cast<int>(estimates.cols()); }
};

enum class CovKind { PerUserTrue, PerUserEstimate, Aggregate, Interference };

/// Hermitian PSD spatial covariance; the aggregate kind additionally
/// dominates the identity.
struct SpatialCovariance {
  CMat matrix;
  CovKind kind = CovKind::PerUserTrue;

  Eigen::Index dim() const { return matrix.rows(); }
};

/// Sound the channel at the given times, one random subcarrier per
/// measurement, with i.i.d. estimation noise of std est_noise_std per entry.
inline SrsBatch simulate_srs(const UserLink& link, const ArrayGeometry& geom,
                             std::span<const double> times, double est_noise_std,
                             Rng& rng, int user_id = 0) {
  if (times.empty()) throw std::invalid_argument("simulate_srs: no measurement times");
  const int n_rx = geom.n_rx();
  SrsBatch batch;
  batch.user = user_id;
  batch.period_start_s = times.front();
  batch.period_end_s = times.back();
  batch.estimates.resize(n_rx, static_cast<Eigen::Index>(times.size()));
  for (std::size_t t = 0; t < times.size(); ++t) {
    const int sc = rng.uniform_int(0, link.n_subcarriers - 1);
    CVec col = channel_at(link, geom, times[t], sc).matrix.col(0);
    if (est_noise_std > 0.0) {
      for (int k = 0; k < n_rx; ++k) col[k] += est_noise_std * rng.cgaussian();
    }
    batch.estimates.col(static_cast<Eigen::Index>(t)) = col;
  }
  return batch;
}

/// Raw covariance estimate (1/N_SRS) * H H^H; PSD by construction, rank
/// at most N_SRS.
inline SpatialCovariance estimate_user_covariance(const SrsBatch& batch) {
  const double inv_n = 1.0 / batch.n_srs();
  CMat q = inv_n * (batch.estimates * batch.estimates.adjoint());
  return {hermitize(q), CovKind::PerUserEstimate};
}

/// Expectation of H H^H over independent per-path phases:
/// sum_p |g_p|^2 a_p a_p^H (unit-norm transmit signatures).
inline SpatialCovariance true_user_covariance(const UserLink& link,
                                              const ArrayGeometry& geom) {
  CMat q = CMat::Zero(geom.n_rx(), geom.n_rx());
  for (const auto& p : link.paths) {
    const CVec a = steering_vector(geom, p.azimuth_rad, p.elevation_rad);
    q.noalias() += std::norm(p.gain) * (a * a.adjoint());
  }
  return {hermitize(q), CovKind::PerUserTrue};
}

/// Q = I + sum_j alpha_j Q_j; dominates the identity for any PSD inputs.
inline SpatialCovariance aggregate_covariance(std::span<const SpatialCovariance> estimates,
                                              std::span<const double> alphas,
                                              Eigen::Index dim) {
  if (estimates.size() != alphas.size())
    throw std::invalid_argument("aggregate_covariance: one alpha per estimate");
  CMat q = CMat::Identity(dim, dim);
  for (std::size_t j = 0; j < estimates.size(); ++j) {
    if (estimates[j].dim() != dim)
      throw std::invalid_argument("aggregate_covariance: mismatched dimensions");
    q.noalias() += alphas[j] * estimates[j].matrix;
  }
  return {hermitize(q), CovKind::Aggregate};
}

/// R_i = Q - alpha_i Q_i. Consistent inputs keep R_i above the identity;
/// a smaller minimum eigenvalue means Q was not built from this Q_i.
inline SpatialCovariance interference_covariance(const SpatialCovariance& q_aggregate,
                                                 const SpatialCovariance& q_i,
                                                 double alpha_i) {
  if (q_aggregate.kind != CovKind::Aggregate)
    throw std::invalid_argument("interference_covariance: first argument must be aggregate");
  if (q_aggregate.dim() != q_i.dim())
    throw std::invalid_argument("interference_covariance: mismatched dimensions");
  CMat r = hermitize(q_aggregate.matrix - alpha_i * q_i.matrix);
  Eigen::SelfAdjointEigenSolver<CMat> eig(r, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < 1.0 - 1e-6)
    throw std::runtime_error("interference_covariance: inconsistent inputs");
  return {std::move(r), CovKind::Interference};
}

}  // namespace ltbf
