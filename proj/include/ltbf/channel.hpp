#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "ltbf/rng.hpp"
#include "ltbf/types.hpp"

namespace ltbf {

/// Uniform planar array at the base station, element spacing in wavelengths.
struct ArrayGeometry {
  int n_h = 1;
  int n_v = 1;
  double spacing = 0.5;

  int n_rx() const { return n_h * n_v; }
  bool valid() const { return n_h >= 1 && n_v >= 1 && spacing > 0.0; }
};

/// One propagation path of the geometric multipath model.
struct Path {
  Complex gain;               // complex amplitude, linear
  double azimuth_rad = 0.0;
  double elevation_rad = 0.0;
  double doppler_hz = 0.0;
  double delay_s = 0.0;       // drives the per-subcarrier phase ramp
  CVec tx_signature;          // unit-norm N_s-dim signature; [1] for single stream
};

/// Per-UE uplink: path set plus the transmit-SNR knob alpha.
struct UserLink {
  std::vector<Path> paths;
  double alpha = 1.0;         // transmit SNR, linear; set by power control
  int n_streams = 1;
  double scs_hz = 60e3;       // subcarrier spacing for the frequency ramp
  int n_subcarriers = 1024;
  double alpha_max = 1e30;    // transmit SNR achievable at max UE power
};

struct ChannelRealization {
  CMat matrix;                // N_rx x N_s
  double time_s = 0.0;
  int subcarrier = 0;
};

/// Knobs of the clustered geometric channel model used by draw_user.
struct ChannelScenario {
  int n_paths_min = 1;
  int n_paths_max = 8;
  double angle_spread_deg = 10.0;       // Laplacian spread around the boresight
  double elevation_spread_deg = 3.0;
  double boresight_az_range_deg = 60.0; // boresight azimuth uniform in +-range
  double boresight_el_range_deg = 10.0;
  double carrier_hz = 3.5e9;
  double v_max_mps = 100.0 / 3.6;
  double delay_max_s = 1e-6;
  double scs_hz = 60e3;
  int n_subcarriers = 1024;
  int n_streams = 1;
  // Link budget for the max-power outage rule; the large-scale gain itself is
  // folded into alpha by power control.
  double d_min_m = 100.0;
  double d_max_m = 2000.0;
  double pathloss_exponent = 3.5;
  double shadowing_std_db = 8.0;
  double p_ue_max_dbm = 26.0;
  double noise_figure_db = 2.0;
};

enum class SymbolKind { Gaussian, Qpsk };

/// Steering vector of the planar array: unit-modulus entries with phase
/// 2*pi*spacing*(i_h*sin(az)cos(el) + i_v*sin(el)), element order i_h fastest.
inline CVec steering_vector(const ArrayGeometry& geom, double azimuth_rad,
                            double elevation_rad) {
  if (!geom.valid()) throw std::invalid_argument("steering_vector: bad geometry");
  const double u = std::sin(azimuth_rad) * std::cos(elevation_rad);
  const double v = std::sin(elevation_rad);
  CVec a(geom.n_rx());
  for (int iv = 0; iv < geom.n_v; ++iv) {
    for (int ih = 0; ih < geom.n_h; ++ih) {
      const double phase = 2.0 * kPi * geom.spacing * (ih * u + iv * v);
      a[iv * geom.n_h + ih] = std::polar(1.0, phase);
    }
  }
  return a;
}

namespace detail {

// Zero-mean Laplacian with standard deviation sigma.
inline double laplacian(Rng& rng, double sigma) {
  const double u = rng.uniform() - 0.5;
  const double b = sigma / std::sqrt(2.0);
  return (u < 0.0 ? b : -b) * std::log1p(-2.0 * std::abs(u));
}

}  // namespace detail

/// Draw one UE: clustered paths around a random boresight, unit total path
/// power, per-path Doppler from a random travel direction, and the max-power
/// transmit SNR from a log-distance link budget.
inline UserLink draw_user(Rng& rng, const ChannelScenario& sc) {
  if (sc.n_paths_min < 1 || sc.n_paths_max < sc.n_paths_min)
    throw std::invalid_argument("draw_user: bad path-count range");

  UserLink link;
  link.n_streams = sc.n_streams;
  link.scs_hz = sc.scs_hz;
  link.n_subcarriers = sc.n_subcarriers;

  const int n_paths = rng.uniform_int(sc.n_paths_min, sc.n_paths_max);
  const double bore_az = deg_to_rad(rng.uniform(-sc.boresight_az_range_deg,
                                                sc.boresight_az_range_deg));
  const double bore_el = deg_to_rad(rng.uniform(-sc.boresight_el_range_deg,
                                                sc.boresight_el_range_deg));
  const double speed = rng.uniform(0.0, sc.v_max_mps);
  const double f_max = speed * sc.carrier_hz / kSpeedOfLight;

  link.paths.resize(n_paths);
  double total_power = 0.0;
  for (auto& p : link.paths) {
    p.gain = rng.cgaussian();
    total_power += std::norm(p.gain);
    p.azimuth_rad = bore_az + detail::laplacian(rng, deg_to_rad(sc.angle_spread_deg));
    p.elevation_rad = bore_el + detail::laplacian(rng, deg_to_rad(sc.elevation_spread_deg));
    p.doppler_hz = f_max * std::cos(rng.uniform(0.0, 2.0 * kPi));
    p.delay_s = rng.uniform(0.0, sc.delay_max_s);
    if (sc.n_streams == 1) {
      p.tx_signature = CVec::Ones(1);
    } else {
      CVec b(sc.n_streams);
      for (int s = 0; s < sc.n_streams; ++s) b[s] = rng.cgaussian();
      p.tx_signature = b / b.norm();
    }
  }
  if (total_power <= 0.0) total_power = 1.0;
  const double scale = 1.0 / std::sqrt(total_power);
  for (auto& p : link.paths) p.gain *= scale;

  // Max-power transmit SNR: per-subcarrier EIRP over thermal noise in one
  // subcarrier, through a log-distance path loss anchored at free space @100 m.
  const double dist = rng.uniform(sc.d_min_m, sc.d_max_m);
  const double d0 = 100.0;
  const double fspl_d0_db =
      20.0 * std::log10(4.0 * kPi * d0 * sc.carrier_hz / kSpeedOfLight);
  const double pl_db = fspl_d0_db +
                       10.0 * sc.pathloss_exponent * std::log10(std::max(dist, d0) / d0) +
                       sc.shadowing_std_db * rng.gaussian();
  const double noise_dbm = -174.0 + 10.0 * std::log10(sc.scs_hz) + sc.noise_figure_db;
  const double tx_per_sc_dbm = sc.p_ue_max_dbm - 10.0 * std::log10(double(sc.n_subcarriers));
  link.alpha_max = from_db(tx_per_sc_dbm - pl_db - noise_dbm);
  return link;
}

/// Channel matrix at (time, subcarrier): sum over paths of
/// gain * doppler phase * delay phase ramp * steering * signature^H.
inline ChannelRealization channel_at(const UserLink& link, const ArrayGeometry& geom,
                                     double time_s, int subcarrier) {
  CMat h = CMat::Zero(geom.n_rx(), link.n_streams);
  for (const auto& p : link.paths) {
    const double phase = 2.0 * kPi * (p.doppler_hz * time_s -
                                      p.delay_s * link.scs_hz * subcarrier);
    const Complex c = p.gain * std::polar(1.0, phase);
    h.noalias() += c * steering_vector(geom, p.azimuth_rad, p.elevation_rad) *
                   p.tx_signature.adjoint();
  }
  return {std::move(h), time_s, subcarrier};
}

/// Transmit symbol vector with covariance (energy/N_s) * I.
inline CVec draw_symbols(Rng& rng, int n_streams, double energy,
                         SymbolKind kind = SymbolKind::Gaussian) {
  const double amp = std::sqrt(energy / n_streams);
  CVec x(n_streams);
  for (int s = 0; s < n_streams; ++s) {
    if (kind == SymbolKind::Gaussian) {
      x[s] = amp * rng.cgaussian();
    } else {
      const double re = rng.uniform() < 0.5 ? -1.0 : 1.0;
      const double im = rng.uniform() < 0.5 ? -1.0 : 1.0;
      x[s] = amp * Complex(re, im) * 0.7071067811865475244;
    }
  }
  return x;
}

/// y = sum_i H_i x_i + w, with w circularly symmetric, per-entry variance
/// noise_std^2.
inline CVec received_signal(int n_rx, std::span<const ChannelRealization> channels,
                            std::span<const CVec> symbols, double noise_std, Rng& rng) {
  if (channels.size() != symbols.size())
    throw std::invalid_argument("received_signal: one symbol vector per channel");
  CVec y = CVec::Zero(n_rx);
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (channels[i].matrix.rows() != n_rx ||
        channels[i].matrix.cols() != symbols[i].size())
      throw std::invalid_argument("received_signal: dimension mismatch");
    y.noalias() += channels[i].matrix * symbols[i];
  }
  if (noise_std > 0.0) {
    for (int k = 0; k < n_rx; ++k) y[k] += noise_std * rng.cgaussian();
  }
  return y;
}

}  // namespace ltbf
