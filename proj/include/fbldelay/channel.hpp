// Copyright 2026 The fbldelay Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file channel.hpp
 * @brief Rayleigh block fading with MMSE channel estimation from m training symbols.
 *
 * Per slot the fading coefficient is H ~ CN(0,1) and the receive SNR is
 * Gamma = avg_snr |H|^2. The estimate satisfies H = Hhat + Z with
 * Hhat ~ CN(0, rho^2), Z ~ CN(0, sigma_N^2) independent, where
 * rho^2 = avg_snr m / (1 + avg_snr m) and sigma_N^2 = 1 / (1 + avg_snr m).
 * Conditioned on the estimated SNR gamma_hat = avg_snr |Hhat|^2, Gamma is a
 * scaled noncentral chi-square variable with two degrees of freedom.
 *
 * SNRs are linear power ratios throughout; use db_to_linear at the edges.
 */

#pragma once

#include "fbldelay/errors.hpp"
#include "fbldelay/rng.hpp"
#include "fbldelay/specfun.hpp"

#include <cmath>
#include <complex>
#include <optional>

namespace fbldelay {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// Physical-layer parameters of one slot.
struct LinkConfig {
    double avg_snr = 1.0; ///< linear
    int n_slot = 1;       ///< symbols per slot
    int m = 0;            ///< training symbols

    int data_symbols() const { return n_slot - m; }

    void validate() const
    {
        if (!(avg_snr > 0.0) || !std::isfinite(avg_snr))
            throw domain_error(detail::concat("avg_snr must be positive, got ", avg_snr));
        if (n_slot < 1) throw domain_error(detail::concat("n_slot must be >= 1, got ", n_slot));
        if (m < 0 || m >= n_slot)
            throw domain_error(detail::concat("training length m must satisfy 0 <= m < n_slot, got m=", m,
                                              " n_slot=", n_slot));
    }
};

/// Estimation statistics derived from a LinkConfig (or from an outdated-CSI correlation).
struct EstimationModel {
    double avg_snr = 1.0;
    double rho_sq = 0.0;     ///< variance of the channel estimate
    double sigma_n_sq = 1.0; ///< variance of the estimation error
    std::optional<LinkConfig> parent;

    /// Mean of the exponential law of the estimated SNR.
    double estimated_snr_mean() const { return rho_sq * avg_snr; }
    /// Scale avg_snr * sigma_N^2 of the conditional SNR law.
    double conditional_scale() const { return avg_snr * sigma_n_sq; }
    bool perfect_csi() const { return sigma_n_sq == 0.0; }
};

inline EstimationModel build_estimation_model(const LinkConfig& cfg)
{
    cfg.validate();
    const double gm = cfg.avg_snr * cfg.m;
    EstimationModel model;
    model.avg_snr = cfg.avg_snr;
    model.rho_sq = gm / (1.0 + gm);
    model.sigma_n_sq = 1.0 / (1.0 + gm);
    model.parent = cfg;
    return model;
}

/// Model for a transmitter whose estimate is an outdated observation with
/// correlation rho to the current channel: sigma_N^2 = 1 - rho^2.
inline EstimationModel outdated_csi_model(double avg_snr, double rho)
{
    if (!(avg_snr > 0.0)) throw domain_error(detail::concat("avg_snr must be positive, got ", avg_snr));
    if (!(rho >= 0.0 && rho < 1.0)) throw domain_error(detail::concat("correlation must lie in [0,1), got ", rho));
    EstimationModel model;
    model.avg_snr = avg_snr;
    model.rho_sq = rho * rho;
    model.sigma_n_sq = 1.0 - rho * rho;
    return model;
}

/// Transmitter and receiver know the channel exactly (sigma_N^2 = 0).
inline EstimationModel perfect_csi_model(double avg_snr)
{
    if (!(avg_snr > 0.0)) throw domain_error(detail::concat("avg_snr must be positive, got ", avg_snr));
    EstimationModel model;
    model.avg_snr = avg_snr;
    model.rho_sq = 1.0;
    model.sigma_n_sq = 0.0;
    return model;
}

/// Exponential density of the estimated SNR, mean rho^2 avg_snr.
inline double estimated_snr_pdf(const EstimationModel& model, double gamma_hat)
{
    detail::require_nonnegative(gamma_hat, "estimated SNR");
    const double mean = model.estimated_snr_mean();
    if (!(mean > 0.0)) throw domain_error("estimated SNR law is degenerate (no training)");
    return std::exp(-gamma_hat / mean) / mean;
}

inline double estimated_snr_cdf(const EstimationModel& model, double gamma_hat)
{
    detail::require_nonnegative(gamma_hat, "estimated SNR");
    const double mean = model.estimated_snr_mean();
    if (!(mean > 0.0)) throw domain_error("estimated SNR law is degenerate (no training)");
    return -std::expm1(-gamma_hat / mean);
}

/// Density of the true SNR at x given the estimate gamma_hat (noncentral chi-square,
/// two degrees of freedom). Evaluated as exp(-(sqrt x - sqrt gamma_hat)^2 / c) * e^{-z} I0(z)
/// so that large noncentrality cannot overflow.
inline double conditional_snr_pdf(const EstimationModel& model, double gamma_hat, double x)
{
    detail::require_nonnegative(gamma_hat, "estimated SNR");
    detail::require_nonnegative(x, "SNR");
    const double c = model.conditional_scale();
    if (!(c > 0.0)) throw domain_error("conditional SNR density is a point mass under perfect CSI");
    const double d = std::sqrt(x) - std::sqrt(gamma_hat);
    const double z = 2.0 * std::sqrt(x * gamma_hat) / c;
    return std::exp(-d * d / c) * specfun::bessel_i0e(z) / c;
}

/// P{Gamma <= x | gamma_hat} = 1 - Q1(sqrt(2 gamma_hat / c), sqrt(2 x / c)).
inline double conditional_snr_cdf(const EstimationModel& model, double gamma_hat, double x)
{
    detail::require_nonnegative(gamma_hat, "estimated SNR");
    detail::require_nonnegative(x, "SNR");
    const double c = model.conditional_scale();
    if (c == 0.0) return x >= gamma_hat ? 1.0 : 0.0;
    if (std::isinf(x)) return 1.0;
    return 1.0 - specfun::marcum_q1(std::sqrt(2.0 * gamma_hat / c), std::sqrt(2.0 * x / c));
}

struct SlotSample {
    double gamma_hat; ///< estimated SNR
    double gamma;     ///< true SNR
};

/// Draws Hhat ~ CN(0, rho^2) and Z ~ CN(0, sigma_N^2) and returns both SNRs.
inline SlotSample sample_slot(const EstimationModel& model, Xoshiro256pp& rng)
{
    const std::complex<double> h_hat = rng.complex_normal(model.rho_sq);
    const std::complex<double> z = rng.complex_normal(model.sigma_n_sq);
    return {model.avg_snr * std::norm(h_hat), model.avg_snr * std::norm(h_hat + z)};
}

} // namespace fbldelay
