"""Analytic expansions of holomorphic differentials in the disk chart.

A degree-d expansion evaluated at radius R along the flow from a rotated base
vector contributes c_n R^n (1 - R^2)^d e^{i (n + d) theta}; rotation averaging
of triple products isolates the bilinear combinations with a fixed index
offset, which is what the vanishing recursions act on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegreeMismatch


@dataclass(frozen=True)
class DifferentialExpansion:
    """degree in {2, 3}; finite complex coefficient list c_0..c_N."""

    degree: int
    coeffs: tuple

    def __post_init__(self):
        if self.degree not in (2, 3):
            raise DegreeMismatch("degree must be 2 or 3")
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in self.coeffs))

    def eval_at_radius(self, R: float, theta: float) -> complex:
        """sum_n c_n R^n (1 - R^2)^d e^{i (n + d) theta}."""
        out = 0.0 + 0.0j
        shrink = (1.0 - R * R) ** self.degree
        for n, c in enumerate(self.coeffs):
            out += c * R ** n * np.exp(1j * (n + self.degree) * theta)
        return out * shrink

    def eval_on_flow(self, r: float, theta: float) -> complex:
        """Radius map R = tanh(r) for flow time r >= 0."""
        if r < 0:
            raise ValueError("flow time must be nonnegative")
        return self.eval_at_radius(math.tanh(r), theta)

    def rotate(self, theta0: float) -> "DifferentialExpansion":
        """Expansion in the theta-shifted frame: c_n -> c_n e^{i (n + d) theta0}."""
        return DifferentialExpansion(
            self.degree,
            tuple(c * np.exp(1j * (n + self.degree) * theta0)
                  for n, c in enumerate(self.coeffs)))

    def rotate_pi_exact(self) -> "DifferentialExpansion":
        """Rotation by pi with exact signs (-1)^(n + d)."""
        return DifferentialExpansion(
            self.degree,
            tuple(c * (-1) ** ((n + self.degree) % 2)
                  for n, c in enumerate(self.coeffs)))


@dataclass(frozen=True)
class AngularReduction:
    """Theta-averaged triple product as a bivariate series in (T, S).

    value(T, S) = (1/4) sum_n [ Re(x0 y_n conj(z_{n+k})) T^n S^{n+k}
                              + Re(x0 conj(y_{n+k'}) z_n) T^{n+k'} S^n ]
                  * (1-T^2)^{deg2} (1-S^2)^{deg3}
    with offsets k = d1 + d2 - d3 and k' = d1 + d3 - d2.
    """

    deg2: int
    deg3: int
    offset_a: int
    offset_b: int
    terms_a: tuple  # Re(x0 y_n conj(z_{n+k})), index n
    terms_b: tuple  # Re(x0 conj(y_{n+k'}) z_n), index n

    def value(self, T: float, S: float) -> float:
        out = 0.0
        for n, c in enumerate(self.terms_a):
            out += c * T ** n * S ** (n + self.offset_a)
        for n, c in enumerate(self.terms_b):
            out += c * T ** (n + self.offset_b) * S ** n
        return 0.25 * out * (1 - T * T) ** self.deg2 * (1 - S * S) ** self.deg3


def angular_triple_reduce(e1: DifferentialExpansion, e2: DifferentialExpansion,
                          e3: DifferentialExpansion) -> AngularReduction:
    """Reduce (1/2pi) int Re(e1@0) Re(e2@T) Re(e3@S) dtheta to its (T, S) series.

    Only the r = 0 value of e1 enters (its higher coefficients vanish at the
    origin); the surviving terms pair indices with offset d1 + d2 - d3 one way
    and d1 + d3 - d2 the other.
    """
    d1, d2, d3 = e1.degree, e2.degree, e3.degree
    x0 = e1.coeffs[0] if e1.coeffs else 0.0
    ka = d1 + d2 - d3
    kb = d1 + d3 - d2
    if ka < 0 or kb < 0:
        raise DegreeMismatch("incompatible degrees")
    terms_a = []
    for n, y in enumerate(e2.coeffs):
        z = e3.coeffs[n + ka] if n + ka < len(e3.coeffs) else 0.0
        terms_a.append(float(np.real(x0 * y * np.conj(z))))
    terms_b = []
    for n, z in enumerate(e3.coeffs):
        y = e2.coeffs[n + kb] if n + kb < len(e2.coeffs) else 0.0
        terms_b.append(float(np.real(x0 * np.conj(y) * z)))
    return AngularReduction(deg2=d2, deg3=d3, offset_a=ka, offset_b=kb,
                            terms_a=tuple(terms_a), terms_b=tuple(terms_b))


def quadrature_triple(e1: DifferentialExpansion, e2: DifferentialExpansion,
                      e3: DifferentialExpansion, T: float, S: float,
                      n_theta: int = 512) -> float:
    """Direct trapezoidal theta-average of the triple product (spectrally exact
    for finite expansions once n_theta exceeds the total bandwidth)."""
    thetas = np.linspace(0.0, 2 * math.pi, n_theta, endpoint=False)
    total = 0.0
    for th in thetas:
        total += (np.real(e1.eval_at_radius(0.0, th))
                  * np.real(e2.eval_at_radius(T, th))
                  * np.real(e3.eval_at_radius(S, th)))
    return float(total / n_theta)


def monte_carlo_triple(e1: DifferentialExpansion, e2: DifferentialExpansion,
                       e3: DifferentialExpansion, T: float, S: float,
                       n_samples: int, seed: int) -> tuple:
    """Rotation-averaged Monte Carlo estimate (mean, stderr) of the triple.

    Rotation invariance alone annihilates every theta-isolated term, so the
    estimate must vanish (within noise) whenever the reduced series does.
    """
    rng = np.random.default_rng(seed)
    thetas = rng.uniform(0.0, 2 * math.pi, size=n_samples)
    vals = np.array([
        np.real(e1.eval_at_radius(0.0, th))
        * np.real(e2.eval_at_radius(T, th))
        * np.real(e3.eval_at_radius(S, th))
        for th in thetas])
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    return mean, stderr
