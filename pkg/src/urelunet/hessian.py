"""Analytic second derivatives of the polynomial model, stacked over operating points."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polyfit import PolyNarxModel


@dataclass(frozen=True)
class HessianTensor:
    """m x m x N stack of polynomial Hessians evaluated at N operating points."""

    data: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if data.ndim != 3 or data.shape[0] != data.shape[1]:
            raise ValueError("data must be m x m x N")
        if data.shape[2] != points.shape[0]:
            raise ValueError("slice count must match number of points")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "points", points)

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def n_points(self) -> int:
        return self.data.shape[2]


def poly_hessian_at(model: PolyNarxModel, u: np.ndarray) -> np.ndarray:
    """Exact Hessian of the polynomial at a single point, by exponent-rule differentiation."""
    u = np.asarray(u, dtype=float)
    if u.shape != (model.m,):
        raise ValueError(f"expected vector of length {model.m}, got shape {u.shape}")
    return stack_hessians(model, u[None, :]).data[:, :, 0]


def stack_hessians(model: PolyNarxModel, points: np.ndarray) -> HessianTensor:
    """Evaluate the analytic Hessian at every row of `points` and stack along mode 3."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.shape[1] != model.m:
        raise ValueError(f"points must have {model.m} columns, got {P.shape[1]}")
    N, m = P.shape
    H = np.zeros((m, m, N))
    for term, c in zip(model.terms, model.coeffs):
        exps = np.array(term.exponents)
        vars_present = np.nonzero(exps)[0]
        for ia, a in enumerate(vars_present):
            # diagonal entry: d^2/du_a^2
            if exps[a] >= 2:
                red = exps.copy()
                red[a] -= 2
                H[a, a, :] += c * exps[a] * (exps[a] - 1) * _monomial(P, red)
            # off-diagonal entries: d^2/du_a du_b, b > a
            for b in vars_present[ia + 1 :]:
                red = exps.copy()
                red[a] -= 1
                red[b] -= 1
                val = c * exps[a] * exps[b] * _monomial(P, red)
                H[a, b, :] += val
                H[b, a, :] += val
    return HessianTensor(data=H, points=P)


def _monomial(P: np.ndarray, exps: np.ndarray) -> np.ndarray:
    out = np.ones(P.shape[0])
    for j in np.nonzero(exps)[0]:
        out *= P[:, j] ** exps[j]
    return out
