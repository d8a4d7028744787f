"""Sensing mutual-information and communication-rate interval coefficients.

For every (grid, location, subcarrier) the worst case uses the longest
grid-to-location distance and the best case the shortest one. Each interval is
stored as an average and a non-negative half-width ("bias").
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .scenario import RadioConfig, Scenario, distance_bound_tables

SPEED_OF_LIGHT = 299_792_458.0


def subcarrier_frequency(k, radio: RadioConfig):
    k_arr = np.asarray(k)
    if np.any(k_arr < 0) or np.any(k_arr >= radio.num_subcarriers):
        raise IndexError(f"subcarrier index {k} outside [0, {radio.num_subcarriers})")
    if k_arr.ndim == 0:
        return radio.f0_hz + float(k_arr) * radio.delta_f_hz
    return radio.f0_hz + k_arr * radio.delta_f_hz


def wavelength(k, radio: RadioConfig):
    return SPEED_OF_LIGHT / subcarrier_frequency(k, radio)


def _check_distance(d):
    if np.any(np.asarray(d) <= 0):
        raise ValueError("distance must be positive")


def sensing_channel_gain(d, k, radio: RadioConfig):
    """Two-way radar path gain ``Gt Gr eta lambda^2 / ((4 pi)^3 d^4)``."""
    _check_distance(d)
    lam = wavelength(k, radio)
    return radio.gt_s * radio.gr_s * radio.eta_m2 * lam ** 2 / ((4 * math.pi) ** 3 * np.asarray(d, float) ** 4)


def comm_channel_gain(d, k, radio: RadioConfig):
    """Free-space gain ``Gt Gr lambda^2 / ((4 pi)^2 d^2)``."""
    _check_distance(d)
    lam = wavelength(k, radio)
    return radio.gt_c * radio.gr_c * lam ** 2 / ((4 * math.pi) ** 2 * np.asarray(d, float) ** 2)


def sensing_mi(h_gain, k, radio: RadioConfig):
    """Mutual information (bits) accumulated over ``ns_symbols`` OFDM symbols."""
    snr = radio.tx_power_w * radio.ts_s ** 2 * radio.ns_symbols * np.asarray(h_gain, float) / radio.noise_power_w
    return 0.5 * radio.delta_f_hz * radio.ts_s * radio.ns_symbols * np.log2(1.0 + snr)


def comm_rate(h_gain, k, radio: RadioConfig):
    """Achievable rate (bit/s) on one subcarrier."""
    snr = radio.tx_power_w * np.asarray(h_gain, float) / radio.noise_power_w
    return radio.delta_f_hz * np.log2(1.0 + snr)


@dataclass(frozen=True)
class LinkCoefficients:
    """Average/bias tables indexed ``[i, j, k]``."""
    m_bar: np.ndarray
    m_hat: np.ndarray
    r_bar: np.ndarray
    r_hat: np.ndarray

    @property
    def m_lb(self):
        return self.m_bar - self.m_hat

    @property
    def m_ub(self):
        return self.m_bar + self.m_hat

    @property
    def r_lb(self):
        return self.r_bar - self.r_hat

    @property
    def r_ub(self):
        return self.r_bar + self.r_hat

    @property
    def shape(self):
        return self.m_bar.shape

    def to_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "k", "m_bar", "m_hat", "r_bar", "r_hat"])
        I, J, K = self.shape
        for i in range(I):
            for j in range(J):
                for k in range(K):
                    w.writerow([i, j, k] + [format(float(t[i, j, k]), ".9g") for t in
                                            (self.m_bar, self.m_hat, self.r_bar, self.r_hat)])


def build_coefficients(scenario: Scenario) -> LinkCoefficients:
    radio = scenario.radio
    far, near = distance_bound_tables(scenario.grids, scenario.locations)
    K = radio.num_subcarriers
    ks = np.arange(K)
    if K == 0:
        empty = np.zeros(far.shape + (0,))
        return LinkCoefficients(empty, empty, empty, empty)
    d_lb = far[:, :, None]
    d_ub = near[:, :, None]
    m_lb = sensing_mi(sensing_channel_gain(d_lb, ks, radio), ks, radio)
    m_ub = sensing_mi(sensing_channel_gain(d_ub, ks, radio), ks, radio)
    r_lb = comm_rate(comm_channel_gain(d_lb, ks, radio), ks, radio)
    r_ub = comm_rate(comm_channel_gain(d_ub, ks, radio), ks, radio)
    return LinkCoefficients((m_ub + m_lb) / 2, (m_ub - m_lb) / 2,
                            (r_ub + r_lb) / 2, (r_ub - r_lb) / 2)
