"""Polynomial NARX model: term enumeration, FROLS selection, evaluation."""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dataset import RegressionDataset

# Hard cap on enumerated candidate terms; past this the candidate matrix
# no longer fits comfortably in memory for benchmark-sized records.
MAX_CANDIDATES = 200_000


@dataclass(frozen=True)
class PolyTerm:
    """One monomial, stored as a tuple of per-variable exponents."""

    exponents: tuple[int, ...]

    def __post_init__(self):
        exps = tuple(int(e) for e in self.exponents)
        if any(e < 0 for e in exps):
            raise ValueError("exponents must be non-negative")
        object.__setattr__(self, "exponents", exps)

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    def evaluate(self, U: np.ndarray) -> np.ndarray:
        """Evaluate the monomial on each row of U (or a single vector)."""
        U = np.atleast_2d(np.asarray(U, dtype=float))
        out = np.ones(U.shape[0])
        for j, e in enumerate(self.exponents):
            if e:
                out *= U[:, j] ** e
        return out


@dataclass(frozen=True)
class PolyNarxModel:
    """Sparse polynomial model: a list of monomials with matching coefficients."""

    terms: tuple[PolyTerm, ...]
    coeffs: np.ndarray
    m: int
    err_values: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        terms = tuple(self.terms)
        if len(terms) != len(coeffs):
            raise ValueError("terms and coeffs length mismatch")
        if len(set(t.exponents for t in terms)) != len(terms):
            raise ValueError("duplicate terms")
        for t in terms:
            if len(t.exponents) != self.m:
                raise ValueError("term dimension does not match m")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "coeffs", coeffs)

    def __call__(self, u: np.ndarray) -> float:
        return poly_eval(self, u)

    def design_matrix(self, U: np.ndarray) -> np.ndarray:
        """Evaluate every term on the rows of U; returns N x n_terms."""
        U = np.atleast_2d(np.asarray(U, dtype=float))
        return np.column_stack([t.evaluate(U) for t in self.terms])

    def predict(self, U: np.ndarray) -> np.ndarray:
        return self.design_matrix(U) @ self.coeffs

    def to_json(self) -> str:
        doc = {
            "m": self.m,
            "terms": [list(t.exponents) for t in self.terms],
            "coeffs": [float(c) for c in self.coeffs],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "PolyNarxModel":
        doc = json.loads(text)
        return cls(
            terms=tuple(PolyTerm(tuple(e)) for e in doc["terms"]),
            coeffs=np.array(doc["coeffs"], dtype=float),
            m=int(doc["m"]),
        )


def enumerate_terms(m: int, max_degree: int) -> list[PolyTerm]:
    """All monomials in m variables of total degree <= max_degree.

    Order is graded lexicographic: degree ascending, then lexicographic in the
    chosen variable indices, which makes the output deterministic.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if max_degree < 1:
        raise ValueError("max_degree must be >= 1")
    total = math.comb(m + max_degree, max_degree)
    if total > MAX_CANDIDATES:
        raise ValueError(
            f"candidate count {total} exceeds cap {MAX_CANDIDATES}; lower max_degree"
        )
    terms = []
    for d in range(max_degree + 1):
        for combo in itertools.combinations_with_replacement(range(m), d):
            exps = [0] * m
            for v in combo:
                exps[v] += 1
            terms.append(PolyTerm(tuple(exps)))
    return terms


def frols_select(
    dataset: RegressionDataset,
    candidates: list[PolyTerm],
    max_terms: int = 50,
    esr_tol: float = 1e-6,
) -> PolyNarxModel:
    """Greedy forward selection of polynomial terms by error reduction ratio.

    Each iteration orthogonalizes the remaining candidate columns against the
    already-selected ones (classical Gram-Schmidt with a second pass for
    conditioning) and picks the candidate explaining the largest fraction of
    the remaining output energy. Selection stops when the cumulative error
    reduction ratio reaches 1 - esr_tol or max_terms terms are selected. The
    final coefficients are re-estimated by ordinary least squares on the raw
    selected columns.
    """
    if max_terms < 1:
        raise ValueError("max_terms must be >= 1")
    if not candidates:
        raise ValueError("candidate list is empty")
    y = dataset.y
    N = len(y)
    if N <= max_terms:
        raise ValueError(f"need more samples ({N}) than max_terms ({max_terms})")
    # Single N x K working matrix; raw columns are re-evaluated from the terms
    # for the final OLS refit, which keeps the peak memory at one copy even for
    # benchmark-sized candidate sets.
    K = len(candidates)
    W = np.empty((N, K))
    for j, term in enumerate(candidates):
        W[:, j] = term.evaluate(dataset.U)
    # Unit-norm scaling stabilizes the Gram-Schmidt arithmetic; ERR itself is
    # scale-invariant and the final OLS refit is done on raw columns.
    norms = np.linalg.norm(W, axis=0)
    alive = norms > 0
    W[:, alive] /= norms[alive]
    W[:, ~alive] = 0.0
    yty = float(y @ y)
    if yty == 0:
        # Zero target: the first candidate with a zero coefficient.
        return PolyNarxModel(terms=(candidates[0],), coeffs=np.zeros(1), m=dataset.m)

    selected: list[int] = []
    err_values: list[float] = []
    Q = np.empty((N, 0))
    esr = 1.0
    drop_tol = 1e-10
    chunk = 1024
    for _ in range(max_terms):
        wn2 = np.einsum("ij,ij->j", W, W)
        ok = alive.copy()
        ok[selected] = False
        degenerate = ok & (wn2 <= drop_tol)
        if degenerate.any():
            warnings.warn(
                f"{int(degenerate.sum())} candidate columns numerically zero after "
                "orthogonalization; skipped"
            )
            alive[degenerate] = False
            ok[degenerate] = False
        if not ok.any():
            if not selected:
                raise ValueError("all candidate columns are degenerate")
            break
        wy = W.T @ y
        err = np.zeros(K)
        err[ok] = wy[ok] ** 2 / (wn2[ok] * yty)
        best = int(np.argmax(err))
        selected.append(best)
        err_values.append(float(err[best]))
        q = W[:, best] / np.sqrt(wn2[best])
        Q = np.column_stack([Q, q])
        esr -= err[best]
        if esr <= esr_tol or len(selected) == max_terms:
            break
        # orthogonalize the survivors against the new direction, then a second
        # pass against the whole selected basis to guard conditioning; chunked
        # to bound temporary memory at benchmark scale
        for lo in range(0, K, chunk):
            sl = slice(lo, min(lo + chunk, K))
            W[:, sl] -= q[:, None] * (q @ W[:, sl])[None, :]
            W[:, sl] -= Q @ (Q.T @ W[:, sl])

    cols = np.empty((N, len(selected)))
    for j, idx in enumerate(selected):
        cols[:, j] = candidates[idx].evaluate(dataset.U)
    coeffs, *_ = np.linalg.lstsq(cols, y, rcond=None)
    return PolyNarxModel(
        terms=tuple(candidates[i] for i in selected),
        coeffs=coeffs,
        m=dataset.m,
        err_values=tuple(err_values),
    )


def poly_eval(model: PolyNarxModel, u: np.ndarray) -> float:
    """Evaluate the polynomial model at a single m-vector."""
    u = np.asarray(u, dtype=float)
    if u.shape != (model.m,):
        raise ValueError(f"expected vector of length {model.m}, got shape {u.shape}")
    total = 0.0
    for term, c in zip(model.terms, model.coeffs):
        val = 1.0
        for x, e in zip(u, term.exponents):
            if e:
                val *= x**e
        total += c * val
    return total
