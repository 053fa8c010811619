"""Single-hidden-layer network with univariate ReLU ramps on a data-derived knot grid."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dataset import RegressorSpec


def transform(U: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Project the N x m input matrix through the m x n linear transform: X = U V."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    V = np.asarray(V, dtype=float)
    if U.shape[1] != V.shape[0]:
        raise ValueError(f"inner dimensions disagree: U has {U.shape[1]} columns, V has {V.shape[0]} rows")
    return U @ V


def knot_fractions(q: int) -> np.ndarray:
    """The fixed grid [0, 1/q, ..., (q-1)/q]."""
    if q < 2:
        raise ValueError("q must be >= 2")
    return np.arange(q) / q


def bias_grid(X: np.ndarray, q: int) -> np.ndarray:
    """Per-dimension knot positions spanning the observed range of each column of X.

    Row i is min(x_i) + (max(x_i) - min(x_i)) * [0, 1/q, ..., (q-1)/q]. A
    constant column yields a constant row.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 1:
        raise ValueError("X must have at least one row")
    s = knot_fractions(q)
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    return lo[:, None] + (hi - lo)[:, None] * s[None, :]


def build_B(X: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Ramp activations max(0, x_i - beta_ij), columns ordered dimension-major, knot-minor."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    beta = np.atleast_2d(np.asarray(beta, dtype=float))
    N, n = X.shape
    if beta.shape[0] != n:
        raise ValueError(f"beta has {beta.shape[0]} rows, X has {n} columns")
    q = beta.shape[1]
    return np.maximum(0.0, X[:, :, None] - beta[None, :, :]).reshape(N, n * q)


@dataclass(frozen=True)
class UReluNet:
    """Trained network: linear transform V, frozen knot grid beta, output weights w.

    The knot grid is derived from the training data and stored with the model;
    it is never recomputed at inference time.
    """

    V: np.ndarray
    q: int
    beta: np.ndarray
    w: np.ndarray
    x_min: np.ndarray
    x_max: np.ndarray
    regressor_spec: RegressorSpec | None = field(default=None, compare=False)

    def __post_init__(self):
        V = np.asarray(self.V, dtype=float)
        beta = np.atleast_2d(np.asarray(self.beta, dtype=float))
        w = np.asarray(self.w, dtype=float)
        x_min = np.asarray(self.x_min, dtype=float)
        x_max = np.asarray(self.x_max, dtype=float)
        if self.q < 2:
            raise ValueError("q must be >= 2")
        n = V.shape[1]
        if beta.shape != (n, self.q):
            raise ValueError(f"beta must be {n} x {self.q}, got {beta.shape}")
        if w.shape != (n * self.q + 1,):
            raise ValueError(f"w must have length n*q + 1 = {n * self.q + 1}, got {w.shape}")
        if x_min.shape != (n,) or x_max.shape != (n,):
            raise ValueError("x_min and x_max must be length-n vectors")
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "x_min", x_min)
        object.__setattr__(self, "x_max", x_max)

    @property
    def m(self) -> int:
        return self.V.shape[0]

    @property
    def n(self) -> int:
        return self.V.shape[1]

    @property
    def s(self) -> np.ndarray:
        return knot_fractions(self.q)

    def __call__(self, u: np.ndarray) -> float:
        return float(forward(self, np.asarray(u)[None, :])[0])

    def to_json(self) -> str:
        doc = {
            "m": self.m,
            "n": self.n,
            "q": self.q,
            "V": [float(v) for v in self.V.ravel(order="C")],
            "beta": [float(b) for b in self.beta.ravel(order="C")],
            "w": [float(wi) for wi in self.w],
            "regressor_spec": (
                {"n_u": self.regressor_spec.n_u, "n_y": self.regressor_spec.n_y}
                if self.regressor_spec is not None
                else None
            ),
            "x_min": [float(v) for v in self.x_min],
            "x_max": [float(v) for v in self.x_max],
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "UReluNet":
        doc = json.loads(text)
        m, n, q = int(doc["m"]), int(doc["n"]), int(doc["q"])
        spec = doc.get("regressor_spec")
        return cls(
            V=np.array(doc["V"], dtype=float).reshape(m, n),
            q=q,
            beta=np.array(doc["beta"], dtype=float).reshape(n, q),
            w=np.array(doc["w"], dtype=float),
            x_min=np.array(doc["x_min"], dtype=float),
            x_max=np.array(doc["x_max"], dtype=float),
            regressor_spec=(
                RegressorSpec(n_u=int(spec["n_u"]), n_y=int(spec["n_y"]))
                if spec is not None
                else None
            ),
        )


def make_net(
    V: np.ndarray,
    q: int,
    w: np.ndarray,
    X: np.ndarray,
    regressor_spec: RegressorSpec | None = None,
) -> UReluNet:
    """Construct a network with the knot grid frozen from the given intermediate data X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return UReluNet(
        V=V,
        q=q,
        beta=bias_grid(X, q),
        w=w,
        x_min=X.min(axis=0),
        x_max=X.max(axis=0),
        regressor_spec=regressor_spec,
    )


def forward(net: UReluNet, U: np.ndarray) -> np.ndarray:
    """Evaluate the network on the rows of U: constant weight plus ramp combination."""
    X = transform(U, net.V)
    B = build_B(X, net.beta)
    return net.w[0] + B @ net.w[1:]


def param_count(net: UReluNet) -> int:
    """Trainable parameters: V entries, ramp weights, and the constant weight.

    The knot grid (beta, s) is derived from data and not counted.
    """
    return net.m * net.n + net.n * net.q + 1
