"""Independent reference solutions used by the test suite.

``SphereFV`` solves spherical Fickian diffusion in one electrode particle on
equal-width shells with a prescribed surface flux, stepping with the exact
zero-order-hold matrix exponential, so its only error is spatial.
``straight_line_voltage`` re-derives the reduced-order terminal voltage one
sample at a time without touching the vectorized code path.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy.linalg import expm

F = 96485.33212
R_GAS = 8.314462618


class SphereFV:
    """Finite-volume particle, ``n`` shells of width ``radius / n``.

    ``gain`` converts cell current to surface flux density:
    ``D dc/dr |_R = gain * I``.
    """

    def __init__(self, radius, diffusivity, gain, c0, n=200, dt=1.0):
        self.radius, self.diffusivity, self.gain, self.n = radius, diffusivity, gain, n
        dr = radius / n
        edges = dr * np.arange(n + 1)
        vol = (edges[1:] ** 3 - edges[:-1] ** 3) / 3.0
        area = edges**2
        a = np.zeros((n, n))
        for i in range(n - 1):
            k = diffusivity * area[i + 1] / dr
            a[i, i] -= k / vol[i]
            a[i, i + 1] += k / vol[i]
            a[i + 1, i + 1] -= k / vol[i + 1]
            a[i + 1, i] += k / vol[i + 1]
        b = np.zeros(n)
        b[-1] = area[-1] * gain / vol[-1]
        aug = np.zeros((n + 1, n + 1))
        aug[:n, :n] = a
        aug[:n, n] = b
        phi = expm(aug * dt)
        self.phi, self.gamma = phi[:n, :n], phi[:n, n]
        self.vol, self.dr = vol, dr
        self.c = np.full(n, float(c0))

    def step(self, current):
        self.c = self.phi @ self.c + self.gamma * current

    def surface(self, current):
        # half-cell extrapolation with the imposed boundary gradient
        return self.c[-1] + self.gain * current * (self.dr / 2.0) / self.diffusivity

    def average(self):
        return float(np.dot(self.vol, self.c) / self.vol.sum())


def fv_surface_path(params, current, dt=1.0, n=200):
    """Surface concentrations (negative, positive) after each sample of ``current``."""
    est, fx = params.estimands, params.fixed
    vn = fx.a_n * fx.L_n * est.eps_n
    vp = fx.a_p * fx.L_p * est.eps_p
    neg = SphereFV(fx.R_s_n, est.D_n, fx.R_s_n / (3 * F * vn), est.c_n0, n, dt)
    pos = SphereFV(fx.R_s_p, est.D_p, -fx.R_s_p / (3 * F * vp), est.c_p0, n, dt)
    out_n, out_p = np.empty(len(current)), np.empty(len(current))
    for k, i in enumerate(current):
        neg.step(i)
        pos.step(i)
        out_n[k], out_p[k] = neg.surface(i), pos.surface(i)
    return out_n, out_p


def terminal_voltage(params, current, css_n, css_p):
    """Voltage from given surface concentrations, written out term by term."""
    est, fx = params.estimands, params.fixed
    current = np.asarray(current, dtype=float)
    th_n, th_p = css_n / est.c_max_n, css_p / est.c_max_p
    s_n = 3 * fx.a_n * fx.L_n * est.eps_n / fx.R_s_n
    s_p = 3 * fx.a_p * fx.L_p * est.eps_p / fx.R_s_p
    j0_n = est.r_eff_n * np.sqrt(fx.c_e * css_n * (est.c_max_n - css_n))
    j0_p = est.r_eff_p * np.sqrt(fx.c_e * css_p * (est.c_max_p - css_p))
    kt = 2 * R_GAS * fx.temperature / F
    eta_n = kt * np.arcsinh(-current / (2 * s_n * j0_n))
    eta_p = kt * np.arcsinh(current / (2 * s_p * j0_p))
    return params.ocp_p(th_p) - params.ocp_n(th_n) + eta_p - eta_n + current * est.R0


def straight_line_surface(params, current, dt=1.0):
    """Parabolic-profile states advanced one sample at a time in plain floats."""
    est, fx = params.estimands, params.fixed
    vn = fx.a_n * fx.L_n * est.eps_n
    vp = fx.a_p * fx.L_p * est.eps_p
    cb_n, cb_p, cf_n, cf_p = est.c_n0, est.c_p0, 0.0, 0.0
    out_n, out_p = [], []
    for i in current:
        i = float(i)
        cb_n += dt * i / (F * vn)
        cb_p -= dt * i / (F * vp)
        cf_n = (1 - 30 * est.D_n * dt / fx.R_s_n**2) * cf_n + 15 * dt * i / (2 * F * fx.R_s_n * vn)
        cf_p = (1 - 30 * est.D_p * dt / fx.R_s_p**2) * cf_p - 15 * dt * i / (2 * F * fx.R_s_p * vp)
        out_n.append(cb_n + 8 * fx.R_s_n / 35 * cf_n + fx.R_s_n**2 * i / (105 * est.D_n * F * vn))
        out_p.append(cb_p + 8 * fx.R_s_p / 35 * cf_p - fx.R_s_p**2 * i / (105 * est.D_p * F * vp))
    return np.array(out_n), np.array(out_p)


def straight_line_voltage(params, current, dt=1.0):
    css_n, css_p = straight_line_surface(params, current, dt)
    return terminal_voltage(params, current, css_n, css_p)


def naive_histogram(values, width):
    """Bin index -> count, with the floor taken in exact rational arithmetic."""
    counts = {}
    for v in values:
        k = math.floor(Fraction(v) / Fraction(width))
        counts[k] = counts.get(k, 0) + 1
    return counts
