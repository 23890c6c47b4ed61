"""Ruelle transfer operator on depth-k functions, RPF data, pressure.

The operator (L_w f)(x) = sum_{sigma y = x} e^{w(y)} f(y) acts on locally
constant functions as a sparse nonnegative matrix indexed by admissible
k-words; its simple dominant eigenvalue gives the pressure log rho.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import (DepthMismatch, NoConvergence, NonPositiveEigenfunction, NotMixing,
                     NotNormalized)
from .sft import DepthKFunction, Sft, admissible_words

DEFAULT_TOL = 1e-13
DEFAULT_MAX_ITER = 200_000


@dataclass(frozen=True)
class RuelleMatrix:
    sft: Sft
    depth: int
    words: tuple
    index: dict
    matrix: sp.csr_matrix

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec

    def vector_of(self, f: DepthKFunction) -> np.ndarray:
        g = f.promote(self.depth)
        return np.array([g.values[w] for w in self.words])

    def function_of(self, vec: np.ndarray) -> DepthKFunction:
        return DepthKFunction(self.sft, self.depth,
                              {w: vec[i] for i, w in enumerate(self.words)})

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()


def ruelle_matrix(sft: Sft, w: DepthKFunction, depth: int | None = None) -> RuelleMatrix:
    """Matrix of L_w on depth-k value vectors, k = max(depth(w), depth, 1).

    Entry (u, v) is e^{w(v)} when v is an admissible one-symbol extension whose
    shift is compatible with u (v[1:] == u[:k-1]); rows enumerate preimages.
    """
    if not sft.is_mixing:
        raise NotMixing("transfer operator requires a topologically mixing shift")
    if not w.is_real(1e-12):
        raise ValueError("transfer operator potentials must be real-valued")
    k = max(w.depth, depth or 1, 1)
    words = tuple(admissible_words(sft, k))
    index = {u: i for i, u in enumerate(words)}
    wk = w.promote(k)
    rows, cols, vals = [], [], []
    for i, u in enumerate(words):
        prefix = u[: k - 1]
        for a in range(sft.alphabet_size):
            if not sft.transition[a][u[0]]:
                continue
            v = (a,) + prefix
            j = index.get(v)
            if j is None:
                continue
            rows.append(i)
            cols.append(j)
            vals.append(math.exp(float(np.real(wk.values[v]))))
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(len(words), len(words)))
    return RuelleMatrix(sft=sft, depth=k, words=words, index=index, matrix=mat)


@dataclass(frozen=True)
class RpfData:
    """Leading spectral data of a Ruelle operator."""

    rho: float
    eigenfunction: DepthKFunction
    adjoint_measure: dict
    pressure: float
    gap_estimate: float
    residual: float
    depth: int

    def to_json(self) -> str:
        sep = "" if self.eigenfunction.sft.alphabet_size <= 10 else ","

        def key(w):
            return sep.join(str(sym) for sym in w)

        return json.dumps({
            "rho": self.rho,
            "pressure": self.pressure,
            "gap_estimate": self.gap_estimate,
            "residual": self.residual,
            "depth": self.depth,
            "eigenfunction": {key(w): float(np.real(v))
                              for w, v in self.eigenfunction.values.items()},
            "adjoint_measure": {key(w): v for w, v in self.adjoint_measure.items()},
        }, sort_keys=True)


def _power_iterate(mat: sp.csr_matrix, v0: np.ndarray, tol: float, max_iter: int):
    v = v0 / v0.sum()
    rho_prev = None
    for _ in range(max_iter):
        u = mat @ v
        rho = u.sum()
        v_new = u / rho
        if rho_prev is not None and abs(rho - rho_prev) <= tol * max(1.0, rho):
            resid = np.max(np.abs(mat @ v_new - rho * v_new)) / np.max(np.abs(v_new))
            if resid <= 10 * tol * max(1.0, rho):
                return rho, v_new, resid
        rho_prev = rho
        v = v_new
    raise NoConvergence(max_iter, residual=abs(rho - (rho_prev or 0.0)))


def _gap_estimate(mat, rho, h, nu, iters=400):
    """Deflated power iteration on the complement of the leading eigendirection."""
    n = mat.shape[0]
    if n == 1:
        return 0.0
    u = np.cos(np.arange(1, n + 1) * 2.4567)  # fixed deterministic start
    nu_h = nu @ h
    u = u - h * (nu @ u) / nu_h
    norm = np.max(np.abs(u))
    if norm < 1e-290:
        return 0.0
    u = u / norm
    ratios = []
    for _ in range(iters):
        u = u - h * (nu @ u) / nu_h  # re-deflate to control roundoff drift
        u = mat @ u
        norm = np.max(np.abs(u))
        if norm < 1e-290:
            return 0.0
        ratios.append(norm / rho)
        u = u / norm
    gap = float(np.median(ratios[-20:]))
    return min(max(gap, 0.0), 1.0 - 1e-12)


def rpf(sft: Sft, w: DepthKFunction, tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER, depth: int | None = None) -> RpfData:
    """Ruelle-Perron-Frobenius data by power iteration with 1-norm renormalization."""
    rm = ruelle_matrix(sft, w, depth=depth)
    n = len(rm.words)
    rho, h, resid = _power_iterate(rm.matrix, np.ones(n), tol, max_iter)
    if np.any(h <= 0):
        raise NonPositiveEigenfunction("eigenfunction has nonpositive entries")
    _, nu, _ = _power_iterate(rm.matrix.T.tocsr(), np.ones(n), tol, max_iter)
    nu = nu / nu.sum()                       # adjoint weights sum to 1
    h = h / (nu @ h)                         # pairing <nu, h> = 1
    gap = _gap_estimate(rm.matrix, rho, h, nu)
    eigenfunction = rm.function_of(h)
    adjoint = {wd: float(nu[i]) for i, wd in enumerate(rm.words)}
    return RpfData(rho=float(rho), eigenfunction=eigenfunction, adjoint_measure=adjoint,
                   pressure=float(np.log(rho)), gap_estimate=gap, residual=float(resid),
                   depth=rm.depth)


def pressure(sft: Sft, w: DepthKFunction, **kw) -> float:
    return rpf(sft, w, **kw).pressure


def normalize_potential(sft: Sft, w: DepthKFunction, data: RpfData) -> DepthKFunction:
    """w' = w + log h - log h o sigma - log rho, so that L_{w'} 1 = 1.

    The depth grows by one because of the shifted eigenfunction term.
    """
    h = data.eigenfunction
    if any(v <= 0 for v in h.values.values()):
        raise NonPositiveEigenfunction("cannot normalize with nonpositive eigenfunction")
    log_h = h.map(lambda x: math.log(x.real if isinstance(x, complex) else x))
    return w + log_h - log_h.compose_shift() - data.pressure


@dataclass(frozen=True)
class MarkovMeasure:
    """Nonnegative weights on admissible depth-words summing to one."""

    sft: Sft
    depth: int
    weights: dict

    def integrate(self, f: DepthKFunction):
        if f.depth > self.depth:
            raise DepthMismatch(
                f"measure depth {self.depth} < function depth {f.depth}")
        return sum(m * f.values[w[: f.depth]] for w, m in self.weights.items())

    def invariance_defect(self) -> float:
        """Max over (depth-1)-words of |sum_a m(a u) - sum_b m(u b)|."""
        left: dict = {}
        right: dict = {}
        for w, m in self.weights.items():
            left[w[1:]] = left.get(w[1:], 0.0) + m
            right[w[:-1]] = right.get(w[:-1], 0.0) + m
        return max(abs(left.get(u, 0.0) - right.get(u, 0.0))
                   for u in set(left) | set(right))

    def to_json(self) -> str:
        sep = "" if self.sft.alphabet_size <= 10 else ","
        return json.dumps({sep.join(str(s) for s in w): v
                           for w, v in self.weights.items()}, sort_keys=True)


def equilibrium_measure(sft: Sft, w: DepthKFunction, data: RpfData | None = None,
                        **kw) -> MarkovMeasure:
    """Equilibrium weights h * nu on depth-words, normalized to a probability."""
    if data is None:
        data = rpf(sft, w, **kw)
    h = data.eigenfunction
    raw = {wd: data.adjoint_measure[wd] * float(np.real(h.values[wd]))
           for wd in data.adjoint_measure}
    total = sum(raw.values())
    return MarkovMeasure(sft=sft, depth=data.depth,
                         weights={wd: v / total for wd, v in raw.items()})


def normalization_defect(sft: Sft, w: DepthKFunction) -> float:
    rm = ruelle_matrix(sft, w)
    return float(np.max(np.abs(rm.row_sums() - 1.0)))


def require_normalized(sft: Sft, w: DepthKFunction, tol: float = 1e-8):
    defect = normalization_defect(sft, w)
    if defect > tol:
        raise NotNormalized(f"row-sum defect {defect:.3e} exceeds {tol:.3e}")


def stationary_vector(rm: RuelleMatrix, tol: float = DEFAULT_TOL,
                      max_iter: int = DEFAULT_MAX_ITER) -> np.ndarray:
    """Probability vector with L^T m = m for a normalized transfer matrix."""
    _, m, _ = _power_iterate(rm.matrix.T.tocsr(), np.ones(len(rm.words)), tol, max_iter)
    return m / m.sum()


class TransferWithProjection:
    """T_w = L_w o P_m: the transfer operator composed with mean-zero projection.

    For mean-zero functions this is just L_w, and its spectral radius estimate
    r < 1 controls the geometric truncation of correlation sums.
    """

    def __init__(self, sft: Sft, w: DepthKFunction, m: MarkovMeasure,
                 depth: int | None = None, tol: float = 1e-8):
        require_normalized(sft, w, tol=tol)
        k = max(w.depth, m.depth, depth or 1)
        self.rm = ruelle_matrix(sft, w, depth=k)
        self.m_vec = stationary_vector(self.rm)
        self.words = self.rm.words
        ones = np.ones(len(self.words))
        self.spectral_radius_estimate = _gap_estimate(self.rm.matrix, 1.0, ones, self.m_vec)

    def project(self, vec: np.ndarray) -> np.ndarray:
        return vec - (self.m_vec @ vec)

    def apply(self, f) -> np.ndarray:
        vec = f if isinstance(f, np.ndarray) else self.rm.vector_of(f)
        return self.rm.apply(self.project(vec))
