"""Parallel transport for the rank-3 flat connection along closed geodesics.

At the hyperbolic base point the connection along a unit-speed closed geodesic
reduces to the constant matrix M below; its eigenframe (growth rates e^l, 1,
e^{-l}) carries all the holonomy data. Cubic/quadratic deformation directions
drive first variations (trace formula) and second variations (inhomogeneous
ODE systems with explicit kernel solutions).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.linalg import expm

from .errors import DegenerateSpectrum, QuadratureFailure, StepTooLarge, UnsupportedCase

SQ2 = math.sqrt(2.0)

# Connection matrix along the geodesic in the holomorphic frame.
M_CONN = np.array([[0.0, 0.5, 0.0],
                   [1.0, 0.0, 0.5],
                   [0.0, 1.0, 0.0]])

# Hermitian pairing of the frame on the geodesic (conjugate-linear first slot).
H_METRIC = np.diag([2.0, 1.0, 0.5])

PI0 = 0.5 * np.array([[0.5, -0.5, 0.25],
                      [-1.0, 1.0, -0.5],
                      [1.0, -1.0, 0.5]])


def hermitian(u: np.ndarray, v: np.ndarray) -> complex:
    return complex(np.conj(u) @ (H_METRIC @ v))


class BaseFrame:
    """Eigenvector paths, change of basis, and spectral projection at the base."""

    matrix = M_CONN
    pi0 = PI0

    @staticmethod
    def eigenvalues(l: float) -> tuple:
        return (math.exp(l), 1.0, math.exp(-l))

    @staticmethod
    def e(i: int, t: float) -> np.ndarray:
        if i == 1:
            return (SQ2 / 2) * math.exp(t) * np.array([0.5, -1.0, 1.0])
        if i == 2:
            return 0.5 * np.array([-1.0, 0.0, 2.0])
        if i == 3:
            return (SQ2 / 2) * math.exp(-t) * np.array([0.5, 1.0, 1.0])
        raise ValueError("i must be 1, 2 or 3")

    @classmethod
    def e_matrix(cls, t: float) -> np.ndarray:
        """Rows are the eigenvector paths e_1(t), e_2(t), e_3(t)."""
        return np.vstack([cls.e(1, t), cls.e(2, t), cls.e(3, t)])

    @staticmethod
    def a_matrix(t: float) -> np.ndarray:
        """Closed-form inverse of the eigenvector rows: sum_j a_ij e_jk = delta_ik."""
        emt, ept = math.exp(-t), math.exp(t)
        return np.array([
            [(SQ2 / 2) * emt, -1.0, (SQ2 / 2) * ept],
            [-(SQ2 / 2) * emt, 0.0, (SQ2 / 2) * ept],
            [(SQ2 / 4) * emt, 0.5, (SQ2 / 4) * ept],
        ])

    @classmethod
    def pi(cls, t: float) -> np.ndarray:
        """Projection onto e_1(t) along span(e_2, e_3)(t); constant in t."""
        a = cls.a_matrix(t)
        e1 = cls.e(1, t)
        return np.outer(e1, a[:, 0])


class FourierSampler:
    """Complex finite Fourier series with period l: sum_k c_k e^{2 pi i k t / l}."""

    def __init__(self, l: float, modes: dict):
        self.l = float(l)
        self.modes = {int(k): complex(c) for k, c in modes.items()}
        self._freqs = tuple((2j * math.pi * k / self.l, complex(c))
                            for k, c in sorted(self.modes.items()))

    def __call__(self, t):
        if isinstance(t, (int, float)):
            out = 0j
            for w, c in self._freqs:
                out += c * cmath.exp(w * t)
            return out
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t, dtype=complex)
        for k, c in self.modes.items():
            out = out + c * np.exp(2j * math.pi * k * t / self.l)
        return out if out.shape else complex(out)

    def periodicity_defect(self, n: int = 16) -> float:
        ts = np.linspace(0.0, self.l, n, endpoint=False)
        return float(np.max(np.abs(self(ts + self.l) - self(ts))))

    @staticmethod
    def zero(l: float) -> "FourierSampler":
        return FourierSampler(l, {})

    @staticmethod
    def random(l: float, rng, max_mode: int = 3, scale: float = 0.5) -> "FourierSampler":
        modes = {}
        for k in range(-max_mode, max_mode + 1):
            modes[k] = complex(rng.normal(0, scale), rng.normal(0, scale))
        return FourierSampler(l, modes)

    def to_json_modes(self):
        return [[k, c.real, c.imag] for k, c in sorted(self.modes.items())]

    @staticmethod
    def from_json_modes(l: float, modes) -> "FourierSampler":
        return FourierSampler(l, {int(k): complex(re, im) for k, re, im in modes})


@dataclass
class OrbitData:
    """Closed-orbit samplers: cubic (alpha, beta) and quadratic (i, j) values."""

    l: float
    q_alpha: FourierSampler | None = None
    q_beta: FourierSampler | None = None
    q_i: FourierSampler | None = None
    q_j: FourierSampler | None = None

    def sampler(self, name: str) -> FourierSampler:
        s = getattr(self, name)
        if s is None:
            raise ValueError(f"orbit has no sampler {name}")
        return s

    def to_json(self) -> str:
        import json
        data = {"l": self.l, "samplers": {}}
        for name in ("q_alpha", "q_beta", "q_i", "q_j"):
            s = getattr(self, name)
            if s is not None:
                data["samplers"][name] = s.to_json_modes()
        return json.dumps(data, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "OrbitData":
        import json
        data = json.loads(text)
        l = float(data["l"])
        samplers = {name: FourierSampler.from_json_modes(l, modes)
                    for name, modes in data["samplers"].items()}
        return OrbitData(l=l, **samplers)


# --------------------------------------------------------------------------
# parallel transport
# --------------------------------------------------------------------------

def _rk4_transport(A: Callable, V0: np.ndarray, T: float, steps: int) -> np.ndarray:
    V = np.array(V0, dtype=complex)
    h = T / steps
    for k in range(steps):
        t = k * h
        k1 = -(A(t) @ V)
        k2 = -(A(t + h / 2) @ (V + (h / 2) * k1))
        k3 = -(A(t + h / 2) @ (V + (h / 2) * k2))
        k4 = -(A(t + h) @ (V + h * k3))
        V = V + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return V


def parallel_transport(A: Callable, V0: np.ndarray, T: float,
                       steps: int | None = None, richardson_tol: float | None = 1e-8):
    """Solve V' = -A(t) V by RK4; one step-halving Richardson check by default."""
    steps = steps or 2048
    coarse = _rk4_transport(A, V0, T, steps)
    if richardson_tol is None:
        return coarse
    fine = _rk4_transport(A, V0, T, 2 * steps)
    est = float(np.max(np.abs(fine - coarse))) / 15.0
    if est > richardson_tol:
        raise StepTooLarge(est, richardson_tol)
    return fine


# --------------------------------------------------------------------------
# connection families and the trace formula for eigenvalue derivatives
# --------------------------------------------------------------------------

def cubic_direction(q: FourierSampler) -> Callable:
    """dD/ds for a cubic deformation with sampled values q(t)."""

    def dD(t):
        qt = complex(q(t))
        return np.array([[0.0, 0.0, qt],
                         [0.0, 0.0, 0.0],
                         [4 * np.conj(qt), 0.0, 0.0]])

    return dD


def quadratic_direction(q: FourierSampler) -> Callable:
    """dD/ds for a quadratic deformation with sampled values q(t)."""

    def dD(t):
        qt = complex(q(t))
        return np.array([[0.0, qt, 0.0],
                         [2 * np.conj(qt), 0.0, qt],
                         [0.0, 2 * np.conj(qt), 0.0]])

    return dD


@dataclass
class ConnectionFamily:
    """s-family of connection coefficients along an orbit, D(s, t)."""

    l: float
    dD: Callable                      # t -> 3x3 derivative at s = 0
    evaluator: Callable | None = None  # s -> (t -> 3x3); defaults to M + s dD

    def connection_at(self, s: float) -> Callable:
        if self.evaluator is not None:
            return self.evaluator(s)
        return lambda t: M_CONN + s * self.dD(t)

    def gauge_shifted(self, gdot: Callable, gdot_prime: Callable) -> "ConnectionFamily":
        """dD -> dD + d(gdot)/dt + [A0, gdot] for a periodic section gdot."""

        def shifted(t):
            g = gdot(t)
            return self.dD(t) + gdot_prime(t) + M_CONN @ g - g @ M_CONN

        return ConnectionFamily(l=self.l, dD=shifted, evaluator=None)


def _check_base_spectrum(l: float):
    lam = BaseFrame.eigenvalues(l)
    if (lam[0] - lam[1]) / lam[0] < 1e-9:
        raise DegenerateSpectrum(f"top eigenvalue moduli too close at l = {l}")


def trace_derivative(family: ConnectionFamily, T: float | None = None,
                     n_panels: int = 2048) -> complex:
    """-int_0^l Tr(dD(t) pi(t)) dt by composite Simpson.

    Equals d/ds log(top holonomy eigenvalue) at s = 0 and is invariant under
    infinitesimal gauge transformations of the family.
    """
    T = T if T is not None else family.l
    _check_base_spectrum(T)
    if n_panels % 2:
        n_panels += 1
    ts = np.linspace(0.0, T, n_panels + 1)
    vals = np.array([np.trace(family.dD(t) @ BaseFrame.pi(t)) for t in ts])
    integral = integrate.simpson(vals, x=ts)
    return -complex(integral)


def monodromy(A: Callable, T: float, steps: int = 2048) -> np.ndarray:
    return _rk4_transport(A, np.eye(3, dtype=complex), T, steps)


def top_eigenvalue(mat: np.ndarray) -> complex:
    lam = np.linalg.eigvals(mat)
    order = np.argsort(-np.abs(lam))
    lam = lam[order]
    if (abs(lam[0]) - abs(lam[1])) / abs(lam[0]) < 1e-9:
        raise DegenerateSpectrum("top two eigenvalue moduli coincide")
    return complex(lam[0])


def eigenvalue_derivative_fd(family: ConnectionFamily, T: float | None = None,
                             h_s: float = 1e-4, steps: int = 2048) -> complex:
    """Central finite difference of s -> log(top eigenvalue of the monodromy)."""
    T = T if T is not None else family.l
    lam_p = top_eigenvalue(monodromy(family.connection_at(h_s), T, steps))
    lam_m = top_eigenvalue(monodromy(family.connection_at(-h_s), T, steps))
    return (cmath.log(lam_p) - cmath.log(lam_m)) / (2 * h_s)


# --------------------------------------------------------------------------
# closed-form variation solutions
# --------------------------------------------------------------------------

def _quad(f: Callable, a: float, b: float) -> float:
    val, err = integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=400)
    if err > 1e-8 * (1.0 + abs(val)):
        raise QuadratureFailure(f"quadrature error {err:.3e} on [{a}, {b}]")
    return val


class _KernelExpr:
    """Value sum_j c_j e^{mu_j t} I_j with I_j local (int_0^t) or global (int_0^l)
    integrals of e^{a s} g(s); carries enough structure for an exact t-derivative.
    """

    def __init__(self, l: float):
        self.l = l
        self.loc = []   # (coef, mu, a, g)
        self.glob = []  # (coef, mu, value)

    def add_loc(self, coef, mu, a, g):
        self.loc.append((complex(coef), mu, a, g))

    def add_glob(self, coef, mu, a, g):
        val = _quad(lambda s: math.exp(a * s) * g(s), 0.0, self.l)
        self.glob.append((complex(coef), mu, val))

    def value(self, t: float) -> complex:
        out = 0.0 + 0.0j
        for coef, mu, a, g in self.loc:
            integral = _quad(lambda s: math.exp(a * s) * g(s), 0.0, t) if t else 0.0
            out += coef * math.exp(mu * t) * integral
        for coef, mu, val in self.glob:
            out += coef * math.exp(mu * t) * val
        return out

    def values_on_grid(self, ts) -> np.ndarray:
        """Values at sorted nonnegative times, accumulating the local integrals
        segment by segment instead of restarting at zero."""
        ts = list(ts)
        out = np.zeros(len(ts), dtype=complex)
        for coef, mu, a, g in self.loc:
            acc, prev = 0.0, 0.0
            for idx, t in enumerate(ts):
                if t > prev:
                    acc += _quad(lambda s: math.exp(a * s) * g(s), prev, t)
                    prev = t
                out[idx] += coef * math.exp(mu * t) * acc
        for coef, mu, val in self.glob:
            out += coef * val * np.exp(mu * np.asarray(ts))
        return out

    def derivative(self, t: float) -> complex:
        out = 0.0 + 0.0j
        for coef, mu, a, g in self.loc:
            integral = _quad(lambda s: math.exp(a * s) * g(s), 0.0, t) if t else 0.0
            out += coef * (mu * math.exp(mu * t) * integral
                           + math.exp((mu + a) * t) * g(t))
        for coef, mu, val in self.glob:
            out += coef * mu * math.exp(mu * t) * val
        return out


@dataclass
class VariationSolution:
    """One eigenvector variation path with its ODE/boundary metadata."""

    l: float
    index: int
    direction: str
    components: tuple
    forcing: Callable
    boundary_kappa: complex
    eigenvalue: float

    def value(self, t: float) -> np.ndarray:
        return np.array([c.value(t) for c in self.components])

    def values_on_grid(self, ts) -> np.ndarray:
        return np.column_stack([c.values_on_grid(ts) for c in self.components])

    def derivative(self, t: float) -> np.ndarray:
        return np.array([c.derivative(t) for c in self.components])

    def ode_residual(self, t: float) -> float:
        res = self.derivative(t) + M_CONN @ self.value(t) - self.forcing(t)
        return float(np.max(np.abs(res)))

    def boundary_residual(self) -> float:
        y0 = self.value(0.0)
        yl = self.value(self.l)
        target = self.boundary_kappa * BaseFrame.e(self.index, 0.0) + self.eigenvalue * y0
        bnd = float(np.max(np.abs(yl - target)))
        orth = abs(hermitian(y0, BaseFrame.e(self.index, 0.0)))
        return max(bnd, orth)


def _re(q: FourierSampler):
    return lambda s: float(np.real(q(s)))


def _im(q: FourierSampler):
    return lambda s: float(np.imag(q(s)))


def variation_ode_closed_form(i: int, orbit: OrbitData, direction: str) -> VariationSolution:
    """Explicit kernel solution of d_t y + M y = -dD(t) e_i(t) with the
    holonomy boundary conditions (H-orthogonality at 0, monodromy at l).

    Cubic forcing covers i = 1, 2, 3; quadratic forcing covers i = 1.
    """
    l = orbit.l
    if direction == "cubic":
        q = orbit.sampler("q_beta")
        re, im = _re(q), _im(q)
        K0 = _quad(re, 0.0, l)
        if i == 1:
            c2p = 1.0 / (math.exp(2 * l) - 1.0)
            c1p = 1.0 / (math.exp(l) - 1.0)
            comps = []
            spec = [
                # (loc terms, glob terms) per component
                ([(-SQ2 / 4, 1, 0, re), (-SQ2 / 4, -1, 2, re), (-SQ2 / 2 * 1j, 0, 1, im)],
                 [(-SQ2 / 4 * c2p, -1, 2, re), (-SQ2 / 2 * 1j * c1p, 0, 1, im)]),
                ([(SQ2 / 2, 1, 0, re), (-SQ2 / 2, -1, 2, re)],
                 [(-SQ2 / 2 * c2p, -1, 2, re)]),
                ([(-SQ2 / 2, 1, 0, re), (-SQ2 / 2, -1, 2, re), (SQ2 * 1j, 0, 1, im)],
                 [(-SQ2 / 2 * c2p, -1, 2, re), (SQ2 * 1j * c1p, 0, 1, im)]),
            ]
            kappa, lam = -math.exp(l) * K0, math.exp(l)
            forcing = lambda t: -(SQ2 / 2) * math.exp(t) * np.array(
                [complex(q(t)), 0.0, 2 * np.conj(complex(q(t)))])
        elif i == 2:
            d1p = math.exp(l) / (1.0 - math.exp(l))
            d1m = math.exp(-l) / (1.0 - math.exp(-l))
            spec = [
                ([(-1.0, 0, 0, re), (-0.5j, 1, -1, im), (-0.5j, -1, 1, im)],
                 [(-0.5j * d1p, 1, -1, im), (-0.5j * d1m, -1, 1, im)]),
                ([(1j, 1, -1, im), (-1j, -1, 1, im)],
                 [(1j * d1p, 1, -1, im), (-1j * d1m, -1, 1, im)]),
                ([(2.0, 0, 0, re), (-1j, 1, -1, im), (-1j, -1, 1, im)],
                 [(-1j * d1p, 1, -1, im), (-1j * d1m, -1, 1, im)]),
            ]
            kappa, lam = 2.0 * K0, 1.0
            forcing = lambda t: np.array(
                [-complex(q(t)), 0.0, 2 * np.conj(complex(q(t)))])
        elif i == 3:
            c2m = 1.0 / (math.exp(-2 * l) - 1.0)
            c1m = 1.0 / (math.exp(-l) - 1.0)
            spec = [
                ([(-SQ2 / 4, 1, -2, re), (-SQ2 / 4, -1, 0, re), (-SQ2 / 2 * 1j, 0, -1, im)],
                 [(-SQ2 / 4 * c2m, 1, -2, re), (-SQ2 / 2 * 1j * c1m, 0, -1, im)]),
                ([(SQ2 / 2, 1, -2, re), (-SQ2 / 2, -1, 0, re)],
                 [(SQ2 / 2 * c2m, 1, -2, re)]),
                ([(-SQ2 / 2, 1, -2, re), (-SQ2 / 2, -1, 0, re), (SQ2 * 1j, 0, -1, im)],
                 [(-SQ2 / 2 * c2m, 1, -2, re), (SQ2 * 1j * c1m, 0, -1, im)]),
            ]
            kappa, lam = -math.exp(-l) * K0, math.exp(-l)
            forcing = lambda t: -(SQ2 / 2) * math.exp(-t) * np.array(
                [complex(q(t)), 0.0, 2 * np.conj(complex(q(t)))])
        else:
            raise UnsupportedCase("cubic direction supports i in {1, 2, 3}")
    elif direction == "quadratic":
        if i != 1:
            raise UnsupportedCase("quadratic closed form is available for i = 1 only")
        q = orbit.sampler("q_i")
        re, im = _re(q), _im(q)
        K0 = _quad(re, 0.0, l)
        e1p = 1.0 / (math.exp(l) - 1.0)
        spec = [
            ([(SQ2 / 2, 1, 0, re), (SQ2 / 2 * 1j, 0, 1, im)],
             [(SQ2 / 2 * 1j * e1p, 0, 1, im)]),
            ([(-SQ2, 1, 0, re)], []),
            ([(SQ2, 1, 0, re), (-SQ2 * 1j, 0, 1, im)],
             [(-SQ2 * 1j * e1p, 0, 1, im)]),
        ]
        kappa, lam = 2.0 * math.exp(l) * K0, math.exp(l)

        def forcing(t):
            qt = complex(q(t))
            return (SQ2 / 2) * math.exp(t) * np.array([qt, -2 * qt.real, 2 * np.conj(qt)])
    else:
        raise UnsupportedCase("direction must be 'cubic' or 'quadratic'")

    components = []
    for loc_terms, glob_terms in spec:
        expr = _KernelExpr(l)
        for coef, mu, a, g in loc_terms:
            expr.add_loc(coef, mu, a, g)
        for coef, mu, a, g in glob_terms:
            expr.add_glob(coef, mu, a, g)
        components.append(expr)
    return VariationSolution(l=l, index=i, direction=direction,
                             components=tuple(components), forcing=forcing,
                             boundary_kappa=kappa, eigenvalue=lam)


# --------------------------------------------------------------------------
# shooting oracle for the same boundary-value problems
# --------------------------------------------------------------------------

def _forcing_for(i: int, direction: str, orbit: OrbitData):
    l = orbit.l
    if direction == "cubic":
        q = orbit.sampler("q_beta")
        K0 = _quad(_re(q), 0.0, l)
        if i == 1:
            return (lambda t: -(SQ2 / 2) * math.exp(t) * np.array(
                [complex(q(t)), 0.0, 2 * np.conj(complex(q(t)))]),
                -math.exp(l) * K0, math.exp(l))
        if i == 2:
            return (lambda t: np.array([-complex(q(t)), 0.0, 2 * np.conj(complex(q(t)))]),
                    2.0 * K0, 1.0)
        if i == 3:
            return (lambda t: -(SQ2 / 2) * math.exp(-t) * np.array(
                [complex(q(t)), 0.0, 2 * np.conj(complex(q(t)))]),
                -math.exp(-l) * K0, math.exp(-l))
    if direction == "quadratic":
        q = orbit.sampler("q_i")
        K0 = _quad(_re(q), 0.0, l)
        if i == 1:
            def f1(t):
                qt = complex(q(t))
                return (SQ2 / 2) * math.exp(t) * np.array(
                    [qt, -2 * qt.real, 2 * np.conj(qt)])
            return f1, 2.0 * math.exp(l) * K0, math.exp(l)
        if i == 2:
            def f2(t):
                qt = complex(q(t))
                return np.array([0.0, -2j * qt.imag, 0.0])
            return f2, 0.0, 1.0
        if i == 3:
            def f3(t):
                qt = complex(q(t))
                return -(SQ2 / 2) * math.exp(-t) * np.array(
                    [qt, 2 * qt.real, 2 * np.conj(qt)])
            return f3, -2.0 * math.exp(-l) * K0, math.exp(-l)
    raise UnsupportedCase(f"no forcing for i={i}, direction={direction}")


def _rk4_inhomogeneous(forcing: Callable, y0: np.ndarray, t0: float, t1: float,
                       steps: int) -> np.ndarray:
    y = np.array(y0, dtype=complex)
    h = (t1 - t0) / steps

    def rhs(t, yv):
        return -(M_CONN @ yv) + forcing(t)

    for k in range(steps):
        t = t0 + k * h
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + (h / 2) * k1)
        k3 = rhs(t + h / 2, y + (h / 2) * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


class ShootingSolution:
    """BVP solution d_t y + M y = forcing with monodromy boundary conditions,
    solved by matching the particular RK4 path against the known eigenframe."""

    def __init__(self, i: int, direction: str, orbit: OrbitData, steps: int = 4096):
        forcing, kappa, lam = _forcing_for(i, direction, orbit)
        l = orbit.l
        self.l, self.i, self.steps, self.forcing = l, i, steps, forcing
        yp_l = _rk4_inhomogeneous(forcing, np.zeros(3, dtype=complex), 0.0, l, steps)
        Phi = expm(-M_CONN * l)
        rhs = kappa * BaseFrame.e(i, 0.0).astype(complex) - yp_l
        A = Phi - lam * np.eye(3)
        y0, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        # fix the kernel component via H-orthogonality to e_i(0)
        ei0 = BaseFrame.e(i, 0.0).astype(complex)
        y0 = y0 - np.conj(hermitian(y0, ei0)) * ei0
        self.y0 = y0
        self.kappa, self.lam = kappa, lam
        self.match_residual = float(np.max(np.abs(A @ y0 - rhs)))

    def value(self, t: float) -> np.ndarray:
        steps = max(8, int(self.steps * t / self.l)) if t > 0 else 0
        if steps == 0:
            return self.y0.copy()
        return _rk4_inhomogeneous(self.forcing, self.y0, 0.0, t, steps)

    def values_on_grid(self, ts) -> np.ndarray:
        """One integration sweep through sorted nonnegative times."""
        out = []
        y, prev = self.y0.copy(), 0.0
        for t in ts:
            if t > prev:
                steps = max(8, int(math.ceil(self.steps * (t - prev) / self.l)))
                y = _rk4_inhomogeneous(self.forcing, y, prev, t, steps)
                prev = t
            out.append(y.copy())
        return np.array(out)


# --------------------------------------------------------------------------
# second-variation trace kernels
# --------------------------------------------------------------------------

def second_variation_trace_cc(orbit: OrbitData, t: float) -> float:
    """Tr(dD_cubic * d_v pi)(Phi_t x): exponential kernels on Re parts (rate 2)
    and Im parts (rate 1) plus monodromy boundary terms."""
    l = orbit.l
    qa, qb = orbit.sampler("q_alpha"), orbit.sampler("q_beta")
    re_a, im_a = float(np.real(qa(t))), float(np.imag(qa(t)))
    re_b, im_b = _re(qb), _im(qb)
    loc_re = _quad(lambda s: (math.exp(2 * (t - s)) - math.exp(2 * (s - t))) * re_b(s),
                   0.0, t) if t else 0.0
    loc_im = _quad(lambda s: (math.exp(t - s) - math.exp(s - t)) * im_b(s),
                   0.0, t) if t else 0.0
    den2 = 1.0 - math.exp(-2 * l)
    den1 = 1.0 - math.exp(-l)
    # kernels e^{2(t-s)}/(e^{-2l}-1) - e^{2(s-t)}/(e^{2l}-1), written stably
    glob_re = _quad(lambda s: (-math.exp(2 * (t - s)) - math.exp(2 * (s - t) - 2 * l))
                    / den2 * re_b(s), 0.0, l)
    glob_im = _quad(lambda s: (-math.exp(t - s) - math.exp(s - t - l))
                    / den1 * im_b(s), 0.0, l)
    return re_a * (loc_re + glob_re) + 2.0 * im_a * (loc_im + glob_im)


def psi_cc(orbit: OrbitData, r: float) -> float:
    """The boundary kernel at t = 0 with horizon r (periodic samplers extended)."""
    qa, qb = orbit.sampler("q_alpha"), orbit.sampler("q_beta")
    re_a, im_a = float(np.real(qa(0.0))), float(np.imag(qa(0.0)))
    re_b, im_b = _re(qb), _im(qb)
    den2 = 1.0 - math.exp(-2 * r)
    den1 = 1.0 - math.exp(-r)

    def int_periodwise(f):
        # integrate over [0, r] in unit chunks for accuracy on long horizons
        total, a = 0.0, 0.0
        while a < r - 1e-12:
            b = min(a + 1.0, r)
            total += _quad(f, a, b)
            a = b
        return total

    glob_re = int_periodwise(lambda s: (-math.exp(-2 * s) - math.exp(2 * (s - r)))
                             / den2 * re_b(s))
    glob_im = int_periodwise(lambda s: (-math.exp(-s) - math.exp(s - r))
                             / den1 * im_b(s))
    return re_a * glob_re + 2.0 * im_a * glob_im


def eta_cc(orbit: OrbitData, T: float) -> tuple:
    """(eta value with cutoff T, truncation bound 3 M^2 e^{-T}).

    eta(x) = -Re q_a(0) (int_0^T e^{-2s} Re q_b + int_{-T}^0 e^{2s} Re q_b)
             -2 Im q_a(0) (same with e^{-|s|} kernels on Im q_b).
    """
    qa, qb = orbit.sampler("q_alpha"), orbit.sampler("q_beta")
    re_a, im_a = float(np.real(qa(0.0))), float(np.imag(qa(0.0)))
    re_b, im_b = _re(qb), _im(qb)

    def halfline(f, rate):
        total, a = 0.0, 0.0
        while a < T - 1e-12:
            b = min(a + 1.0, T)
            total += _quad(lambda s: math.exp(-rate * s) * f(s), a, b)
            total += _quad(lambda s: math.exp(-rate * s) * f(-s), a, b)
            a = b
        return total

    val = -re_a * halfline(re_b, 2.0) - 2.0 * im_a * halfline(im_b, 1.0)
    grid = np.linspace(0.0, orbit.l, 64, endpoint=False)
    m_bound = max(float(np.max(np.abs(qa(grid)))), float(np.max(np.abs(qb(grid)))))
    return val, 3.0 * m_bound ** 2 * math.exp(-T)


def psi_cq(orbit: OrbitData, r: float) -> float:
    """t = 0 boundary kernel of the mixed case with horizon r: the telescoping
    argument makes it invariant under replacing r by multiples of the period."""
    qa, qi = orbit.sampler("q_alpha"), orbit.sampler("q_i")
    im_a = float(np.imag(qa(0.0)))
    im_i = _im(qi)
    den1 = 1.0 - math.exp(-r)

    def chunked(f):
        total, a = 0.0, 0.0
        while a < r - 1e-12:
            b = min(a + 1.0, r)
            total += _quad(f, a, b)
            a = b
        return total

    glob = chunked(lambda s: (math.exp(s - r) + math.exp(-s)) / den1 * im_i(s))
    return -2.0 * im_a * glob


def second_variation_trace_cq(orbit: OrbitData, t: float,
                              y21: Callable | None = None) -> float:
    """(1/2) Re y21(t) - 2 Im q_alpha(t) * [e^{+-(t-s)} kernels on Im q_i].

    y21 is caller-supplied opaque data (solution of an elliptic system off this
    module's scope); it defaults to zero.
    """
    l = orbit.l
    qa, qi = orbit.sampler("q_alpha"), orbit.sampler("q_i")
    im_a = float(np.imag(qa(t)))
    im_i = _im(qi)
    loc = _quad(lambda s: (math.exp(s - t) - math.exp(t - s)) * im_i(s),
                0.0, t) if t else 0.0
    den1 = 1.0 - math.exp(-l)
    glob = _quad(lambda s: (math.exp(s - t - l) + math.exp(t - s)) / den1 * im_i(s),
                 0.0, l)
    y_term = 0.5 * float(np.real(y21(t))) if y21 is not None else 0.0
    return y_term - 2.0 * im_a * (loc + glob)


# --------------------------------------------------------------------------
# trace reassembly from variation paths
# --------------------------------------------------------------------------

def _dv_a_columns(t: float, dvE_rows) -> np.ndarray:
    """d_v a(0, t) = -a (d_v E) a for the eigenvector row matrix E."""
    a = BaseFrame.a_matrix(t).astype(complex)
    dvE = np.vstack(dvE_rows)
    return -(a @ dvE @ a)


def reassemble_trace_cc(orbit: OrbitData, t: float, paths=None) -> float:
    """Tr(dD_cubic d_v pi) rebuilt from d_v e_j paths and the frame inverse."""
    if paths is None:
        paths = [variation_ode_closed_form(i, orbit, "cubic") for i in (1, 2, 3)]
    return _reassemble(orbit, t, paths, "q_alpha")


def reassemble_trace_cq(orbit: OrbitData, t: float, paths=None) -> float:
    """Same assembly with quadratic-direction variation paths (shooting)."""
    if paths is None:
        paths = [ShootingSolution(i, "quadratic", orbit) for i in (1, 2, 3)]
    return _reassemble(orbit, t, paths, "q_alpha")


def _reassemble(orbit: OrbitData, t: float, paths, base_sampler: str) -> float:
    qa = orbit.sampler(base_sampler)
    qt = complex(qa(t))
    dvE_rows = [p.value(t) for p in paths]
    dva = _dv_a_columns(t, dvE_rows)
    a = BaseFrame.a_matrix(t)
    e1 = BaseFrame.e(1, t)
    dve1 = dvE_rows[0]
    total = qt * (dva[0, 0] * e1[2] + a[0, 0] * dve1[2]) \
        + 4 * np.conj(qt) * (dva[2, 0] * e1[0] + a[2, 0] * dve1[0])
    return float(np.real(total))
