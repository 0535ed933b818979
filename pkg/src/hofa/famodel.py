"""
The k-th order factor analysis model ``X = Lambda Y + eps``.

Its cumulant tensors of orders ``2..k`` are the image of

    phi_k(eps^(2..k), delta^(2..k), Lambda) = (E^(r) + D^(r) . Lambda^T ... Lambda^T)_{r=2..k}

with diagonal ``E^(r)`` (noise cumulants), diagonal ``D^(r)`` (factor
cumulants) and ``Lambda`` lower-triangular.  This module holds the parameter
space, the map and the dimension counts of its domain and codomain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Mapping, Sequence

import numpy as np

from .cumulants import TensorSequence
from .exceptions import DomainError
from .symtensor import (
    FLOAT,
    RATIONAL,
    DiagTensor,
    LoadingMatrix,
    add_diag,
    format_scalar,
    parse_scalar,
    to_scalar_array,
    tucker_diag,
)

__all__ = [
    "ModelSpec",
    "FactorParams",
    "Dims",
    "Projection",
    "phi",
    "dims",
    "projection_sufficient",
    "f_poly_value",
    "m_star",
    "loading_coordinates",
]


@dataclass(frozen=True)
class ModelSpec:
    """Observed dimension ``p``, factor count ``m`` and maximal order ``k``."""

    p: int
    m: int
    k: int

    def __post_init__(self):
        for name in ("p", "m", "k"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise DomainError(f"{name} must be an integer, got {v!r}")
        if self.p < 1 or self.m < 1:
            raise DomainError(f"need p >= 1 and m >= 1, got p={self.p}, m={self.m}")
        if self.k < 2:
            raise DomainError(f"need k >= 2, got k={self.k}")

    @property
    def n_loadings(self) -> int:
        return self.p * self.m - comb(self.m, 2)

    @property
    def M(self) -> int:
        """Dimension of the parameter space."""
        return (self.k - 1) * (self.p + self.m) + self.n_loadings

    @property
    def N(self) -> int:
        """Dimension of ``Sym^2 x ... x Sym^k`` over ``R^p``."""
        return comb(self.p + self.k, self.k) - self.p - 1

    @property
    def N_prime(self) -> int:
        """Number of entries ``t_{j..j,l}`` (``j <= l``) kept by the restricted Jacobian."""
        return (self.k - 1) * comb(self.p + 1, 2)


def loading_coordinates(p: int, m: int) -> list[tuple[int, int]]:
    """Free loadings ``(i, j)`` (1-based) in parameter order.

    Diagonal ``lambda_11..lambda_mm`` first, then each column below its
    diagonal: ``lambda_{>1}, ..., lambda_{>m}``.
    """
    coords = [(j, j) for j in range(1, m + 1)]
    for j in range(1, m + 1):
        coords.extend((i, j) for i in range(j + 1, p + 1))
    return coords


class FactorParams:
    """A point ``(eps^(2..k), delta^(2..k), Lambda)`` of the domain of ``phi_k``.

    ``eps[r-2]`` and ``delta[r-2]`` are the order-``r`` diagonal tensors over
    ``p`` and ``m`` coordinates.  ``Lambda`` must be lower-triangular.
    """

    __slots__ = ("spec", "eps", "delta", "loading", "scalar")

    def __init__(
        self,
        spec: ModelSpec,
        eps: Sequence[DiagTensor],
        delta: Sequence[DiagTensor],
        loading: LoadingMatrix,
    ):
        if spec.p < spec.m:
            raise DomainError(f"the model needs p >= m, got p={spec.p}, m={spec.m}")
        k = spec.k
        if len(eps) != k - 1 or len(delta) != k - 1:
            raise DomainError(f"need {k - 1} noise and factor diagonals, got {len(eps)} and {len(delta)}")
        kinds = {loading.scalar}
        for r, (e, d) in enumerate(zip(eps, delta), start=2):
            if (e.n, e.order) != (spec.p, r):
                raise DomainError(f"eps for order {r} has n={e.n}, order={e.order}")
            if (d.n, d.order) != (spec.m, r):
                raise DomainError(f"delta for order {r} has n={d.n}, order={d.order}")
            kinds.update((e.scalar, d.scalar))
        if (loading.p, loading.m) != (spec.p, spec.m):
            raise DomainError(f"loading is {loading.p} x {loading.m}, expected {spec.p} x {spec.m}")
        if not loading.lower_triangular:
            loading = LoadingMatrix(loading.values, loading.scalar, lower_triangular=True)
        if len(kinds) != 1:
            raise DomainError(f"mixed scalar kinds {sorted(kinds)}; convert explicitly")
        self.spec = spec
        self.eps = tuple(eps)
        self.delta = tuple(delta)
        self.loading = loading
        self.scalar = kinds.pop()

    # -- flat coordinates --------------------------------------------------

    @staticmethod
    def labels(spec: ModelSpec) -> list[str]:
        """Names of the ``M`` coordinates in flattened order."""
        out = []
        for r in range(2, spec.k + 1):
            out.extend(f"eps{r}[{j}]" for j in range(1, spec.p + 1))
        for r in range(2, spec.k + 1):
            out.extend(f"delta{r}[{j}]" for j in range(1, spec.m + 1))
        out.extend(f"lambda[{i},{j}]" for i, j in loading_coordinates(spec.p, spec.m))
        return out

    def flatten(self) -> np.ndarray:
        L = self.loading.values
        parts = [e.diag for e in self.eps] + [d.diag for d in self.delta]
        lam = [L[i - 1, j - 1] for i, j in loading_coordinates(self.spec.p, self.spec.m)]
        return to_scalar_array(np.concatenate([np.asarray(x, dtype=object) for x in parts] + [np.array(lam, dtype=object)]), self.scalar)

    @classmethod
    def from_vector(cls, spec: ModelSpec, vec, scalar: str | None = None) -> "FactorParams":
        if spec.p < spec.m:
            raise DomainError(f"the model needs p >= m, got p={spec.p}, m={spec.m}")
        if scalar is None:
            scalar = FLOAT if np.asarray(vec).dtype.kind == "f" else RATIONAL
        vec = to_scalar_array(vec, scalar)
        if vec.shape != (spec.M,):
            raise DomainError(f"expected {spec.M} coordinates, got shape {vec.shape}")
        p, m, k = spec.p, spec.m, spec.k
        pos = 0
        eps = []
        for r in range(2, k + 1):
            eps.append(DiagTensor(vec[pos:pos + p], r, scalar))
            pos += p
        delta = []
        for r in range(2, k + 1):
            delta.append(DiagTensor(vec[pos:pos + m], r, scalar))
            pos += m
        L = np.zeros((p, m), dtype=np.float64 if scalar == FLOAT else object)
        if scalar == RATIONAL:
            L[...] = Fraction(0)
        for (i, j), v in zip(loading_coordinates(p, m), vec[pos:]):
            L[i - 1, j - 1] = v
        return cls(spec, eps, delta, LoadingMatrix(L, scalar, lower_triangular=True))

    @classmethod
    def zeros(cls, spec: ModelSpec, scalar: str = RATIONAL) -> "FactorParams":
        return cls.from_vector(spec, [0] * spec.M if scalar == RATIONAL else np.zeros(spec.M), scalar)

    def to_float(self) -> "FactorParams":
        return FactorParams.from_vector(self.spec, np.array([float(v) for v in self.flatten()]), FLOAT)

    def to_json(self) -> dict:
        return {
            "p": self.spec.p,
            "m": self.spec.m,
            "k": self.spec.k,
            "scalar": self.scalar,
            "labels": self.labels(self.spec),
            "values": [format_scalar(v, self.scalar) for v in self.flatten()],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "FactorParams":
        for key in ("p", "m", "k", "scalar", "values"):
            if key not in obj:
                raise DomainError(f"params: missing field '{key}'")
        spec = ModelSpec(obj["p"], obj["m"], obj["k"])
        if "labels" in obj and list(obj["labels"]) != cls.labels(spec):
            raise DomainError("params.labels: do not match the coordinate order for this (p, m, k)")
        scalar = obj["scalar"]
        if scalar not in (RATIONAL, FLOAT):
            raise DomainError(f"params.scalar: expected 'rational' or 'float', got {scalar!r}")
        vals = obj["values"]
        if not isinstance(vals, list) or len(vals) != spec.M:
            raise DomainError(f"params.values: expected a list of {spec.M} values")
        return cls.from_vector(spec, [parse_scalar(v, scalar) for v in vals], scalar)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FactorParams):
            return NotImplemented
        return self.spec == other.spec and self.scalar == other.scalar and bool(
            np.all(self.flatten() == other.flatten())
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"FactorParams({self.spec}, scalar={self.scalar!r})"


def phi(params: FactorParams) -> TensorSequence:
    """Cumulant tensors of orders ``2..k`` predicted by the model at ``params``."""
    tensors = {}
    for r, (e, d) in enumerate(zip(params.eps, params.delta), start=2):
        tensors[r] = add_diag(tucker_diag(d, params.loading), e)
    return TensorSequence(params.spec.p, params.spec.k, tensors, zero_mean=True)


@dataclass(frozen=True)
class Dims:
    M: int
    N: int
    N_prime: int
    dim: int
    codim: int

    def to_json(self) -> dict:
        return {"M": self.M, "N": self.N, "N_prime": self.N_prime, "dim": self.dim, "codim": self.codim}


def dims(spec: ModelSpec) -> Dims:
    """Parameter count, ambient dimension and the dimension/codimension formula.

    ``dim = min(M, N)`` and ``codim = N - dim``.  Also checks that
    ``k! (N - M)`` equals the codimension polynomial at ``p``.
    """
    from .codim import h_poly

    M, N = spec.M, spec.N
    lhs = factorial(spec.k) * (N - M)
    rhs = h_poly(spec.k, spec.m)(spec.p)
    if lhs != rhs:
        raise AssertionError(f"k!(N - M) = {lhs} but h({spec.p}) = {rhs} for {spec}")
    dim = min(M, N)
    return Dims(M=M, N=N, N_prime=spec.N_prime, dim=dim, codim=N - dim)


def f_poly_value(k: int, m: int, p: int) -> int:
    """``(k-1)p^2 - (2m+k-1)p + m^2 - (2k-1)m``, which equals ``2 (N' - M)``."""
    return (k - 1) * p * p - (2 * m + k - 1) * p + m * m - (2 * k - 1) * m


def _disc(k: int, m: int) -> int:
    return 4 * (2 - k) * m * m + 8 * k * (k - 1) * m + (k - 1) ** 2


def m_star(k: int) -> int:
    """Largest integer ``m`` at which the discriminant of ``f_k`` is nonnegative.

    Equals ``floor((k-1)/(k-2) * (2k + sqrt(4k^2 + k - 2)) / 2)``; computed from
    the float formula and then corrected against the exact integer discriminant.
    """
    if k < 3:
        raise DomainError("m_star is defined for k >= 3")
    guess = math.floor(0.5 * (k - 1) / (k - 2) * (2 * k + math.sqrt(4 * k * k + k - 2)))
    while _disc(k, guess + 1) >= 0:
        guess += 1
    while _disc(k, guess) < 0:
        guess -= 1
    return guess


@dataclass(frozen=True)
class Projection:
    f_value: int
    sufficient: bool
    m_star: int | None


def projection_sufficient(spec: ModelSpec) -> Projection:
    """Whether ``M <= N'``, i.e. the restricted rows can carry full column rank."""
    f = f_poly_value(spec.k, spec.m, spec.p)
    return Projection(f_value=f, sufficient=f >= 0, m_star=m_star(spec.k) if spec.k >= 3 else None)
