"""
Symmetric and diagonal tensors stored on canonical multi-indices.

A symmetric tensor of order ``r`` over ``p`` coordinates is determined by its
entries at weakly increasing index tuples ``i1 <= ... <= ir``.  Those tuples
are ordered lexicographically and the entries are kept in a flat array at the
tuple's lexicographic rank.

Indices are 1-based in every public function, matching the usual
``t_{i1...ir}`` notation.  Scalars are either exact (``fractions.Fraction`` in
an object array) or ``float64``; the two kinds never mix silently.
"""

from __future__ import annotations

import functools
import itertools
from fractions import Fraction
from math import comb
from numbers import Rational
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .exceptions import DomainError

RATIONAL = "rational"
FLOAT = "float"
SCALAR_KINDS = (RATIONAL, FLOAT)

__all__ = [
    "RATIONAL",
    "FLOAT",
    "canonical_index",
    "enumerate_indices",
    "index_rank",
    "n_entries",
    "index_array",
    "to_scalar_array",
    "format_scalar",
    "parse_scalar",
    "SymTensor",
    "DiagTensor",
    "LoadingMatrix",
    "tucker_diag",
    "tucker_entry",
    "add_diag",
]


# ---------------------------------------------------------------------------
# scalars


def _check_kind(scalar: str) -> str:
    if scalar not in SCALAR_KINDS:
        raise DomainError(f"unknown scalar kind {scalar!r}; expected one of {SCALAR_KINDS}")
    return scalar


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (bool, np.bool_)):
        raise DomainError("booleans are not scalars")
    if isinstance(x, (int, np.integer, Rational)):
        return Fraction(int(x)) if isinstance(x, (int, np.integer)) else Fraction(x)
    if isinstance(x, str):
        return parse_scalar(x, RATIONAL)
    raise DomainError(
        f"cannot use {type(x).__name__} value {x!r} as an exact rational; convert explicitly"
    )


def to_scalar_array(values, scalar: str, shape: tuple[int, ...] | None = None) -> np.ndarray:
    """Return a read-only array of ``values`` in the requested scalar kind.

    Rational arrays accept ints, Fractions and ``"num/den"`` strings only; a
    float sneaking into an exact computation is an error, not a rounding.
    """
    _check_kind(scalar)
    if scalar == FLOAT:
        arr = np.array(values, dtype=np.float64)
    else:
        src = np.asarray(values, dtype=object)
        arr = np.empty(src.shape, dtype=object)
        for pos, v in np.ndenumerate(src):
            arr[pos] = _to_fraction(v)
    if shape is not None and arr.shape != shape:
        raise DomainError(f"expected shape {shape}, got {arr.shape}")
    arr.flags.writeable = False
    return arr


def _infer_kind(values) -> str:
    arr = np.asarray(values, dtype=object).ravel()
    if all(isinstance(v, (Fraction, int, np.integer, str)) for v in arr):
        return RATIONAL
    return FLOAT


def format_scalar(value, scalar: str):
    """JSON representation: ``"num/den"`` for rationals, a number for floats."""
    if scalar == RATIONAL:
        f = _to_fraction(value)
        return f"{f.numerator}/{f.denominator}"
    return float(value)


def parse_scalar(raw, scalar: str):
    _check_kind(scalar)
    if scalar == FLOAT:
        if isinstance(raw, str):
            return float(Fraction(raw))
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise DomainError(f"bad float value {raw!r}")
        return float(raw)
    if isinstance(raw, str):
        try:
            return Fraction(raw.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"bad rational value {raw!r}") from exc
    if isinstance(raw, int) and not isinstance(raw, bool):
        return Fraction(raw)
    raise DomainError(f"rational values must be 'num/den' strings or integers, got {raw!r}")


# ---------------------------------------------------------------------------
# multi-indices


def canonical_index(raw: Iterable[int], p: int | None = None) -> tuple[int, ...]:
    """Sort an index tuple into its canonical weakly increasing form.

    >>> canonical_index((3, 1, 2))
    (1, 2, 3)
    """
    idx = tuple(int(i) for i in raw)
    if not idx:
        raise DomainError("multi-index must have length >= 1")
    upper = p if p is not None else max(idx)
    for i in idx:
        if i < 1 or i > upper:
            raise DomainError(f"index {i} outside [1, {upper}]")
    return tuple(sorted(idx))


def n_entries(p: int, r: int) -> int:
    """Number of canonical entries of an order-``r`` symmetric tensor over ``p``."""
    return comb(p + r - 1, r)


@functools.lru_cache(maxsize=None)
def _enumerate(p: int, r: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.combinations_with_replacement(range(1, p + 1), r))


def enumerate_indices(p: int, r: int) -> list[tuple[int, ...]]:
    """All weakly increasing ``r``-tuples over ``[p]`` in lexicographic order."""
    if p < 1 or r < 1:
        raise DomainError(f"need p >= 1 and r >= 1, got p={p}, r={r}")
    return list(_enumerate(p, r))


@functools.lru_cache(maxsize=None)
def index_array(p: int, r: int) -> np.ndarray:
    """The canonical indices of ``enumerate_indices(p, r)`` as a 0-based int array."""
    arr = np.array(_enumerate(p, r), dtype=np.intp).reshape(-1, r) - 1
    arr.flags.writeable = False
    return arr


def index_rank(idx: Sequence[int], p: int) -> int:
    """Lexicographic position of a canonical multi-index among all of its order.

    Counts, position by position, the tuples that agree on the prefix and are
    smaller at the current slot; a tuple of length ``n`` with entries in
    ``[v, p]`` can be completed in ``comb(p - v + n, n)`` ways.
    """
    r = len(idx)
    rank = 0
    lo = 1
    for s, i in enumerate(idx):
        rest = r - s - 1
        for v in range(lo, i):
            rank += comb(p - v + rest, rest)
        lo = i
    return rank


# ---------------------------------------------------------------------------
# tensors


class SymTensor:
    """Order-``r`` symmetric tensor over ``p`` coordinates.

    Entries are read with any (1-based) index tuple; permutations resolve to
    the same canonical entry.  Instances are immutable.
    """

    __slots__ = ("p", "order", "scalar", "_values")

    def __init__(self, p: int, order: int, values, scalar: str | None = None):
        if p < 1 or order < 1:
            raise DomainError(f"need p >= 1 and order >= 1, got p={p}, order={order}")
        scalar = _infer_kind(values) if scalar is None else _check_kind(scalar)
        self.p = int(p)
        self.order = int(order)
        self.scalar = scalar
        self._values = to_scalar_array(values, scalar, (n_entries(p, order),))

    @classmethod
    def zeros(cls, p: int, order: int, scalar: str = RATIONAL) -> "SymTensor":
        return cls(p, order, [0] * n_entries(p, order), scalar)

    @classmethod
    def from_entries(
        cls,
        p: int,
        order: int,
        entries: Mapping[Sequence[int], object],
        scalar: str = RATIONAL,
    ) -> "SymTensor":
        """Build from a sparse mapping; omitted entries are zero.

        Two keys naming the same canonical entry must carry the same value.
        """
        vals: list = [0] * n_entries(p, order)
        seen: dict[int, object] = {}
        for raw, v in entries.items():
            if len(raw) != order:
                raise DomainError(f"index {tuple(raw)} has length {len(raw)}, expected {order}")
            pos = index_rank(canonical_index(raw, p), p)
            v = parse_scalar(v, scalar) if isinstance(v, str) else v
            if pos in seen and seen[pos] != v:
                raise DomainError(f"conflicting values for canonical index {canonical_index(raw, p)}")
            seen[pos] = v
            vals[pos] = v
        return cls(p, order, vals, scalar)

    @classmethod
    def from_dense(cls, array, scalar: str | None = None) -> "SymTensor":
        """Read the canonical entries of a full ``p x ... x p`` array (no symmetry check)."""
        arr = np.asarray(array, dtype=object if scalar == RATIONAL else None)
        order = arr.ndim
        p = arr.shape[0]
        vals = [arr[tuple(i - 1 for i in idx)] for idx in _enumerate(p, order)]
        return cls(p, order, vals, scalar)

    # -- access ---------------------------------------------------------

    @property
    def values(self) -> np.ndarray:
        """Read-only flat array of canonical entries (lexicographic order)."""
        return self._values

    def __len__(self) -> int:
        return len(self._values)

    def __getitem__(self, idx) -> object:
        if isinstance(idx, (int, np.integer)):
            idx = (idx,)
        if len(idx) != self.order:
            raise DomainError(f"index {tuple(idx)} has length {len(idx)}, expected {self.order}")
        return self._values[index_rank(canonical_index(idx, self.p), self.p)]

    def items(self) -> Iterator[tuple[tuple[int, ...], object]]:
        return zip(_enumerate(self.p, self.order), self._values)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.p,) * self.order, dtype=self._values.dtype)
        if self.scalar == RATIONAL:
            out[...] = Fraction(0)
        for idx, v in self.items():
            for perm in set(itertools.permutations(idx)):
                out[tuple(i - 1 for i in perm)] = v
        return out

    # -- arithmetic -----------------------------------------------------

    def _check_compatible(self, other: "SymTensor") -> None:
        if not isinstance(other, SymTensor):
            raise DomainError(f"expected SymTensor, got {type(other).__name__}")
        if (self.p, self.order) != (other.p, other.order):
            raise DomainError(
                f"shape mismatch: (p={self.p}, order={self.order}) vs (p={other.p}, order={other.order})"
            )
        if self.scalar != other.scalar:
            raise DomainError(f"scalar mismatch: {self.scalar} vs {other.scalar}; convert explicitly")

    def __add__(self, other: "SymTensor") -> "SymTensor":
        self._check_compatible(other)
        return SymTensor(self.p, self.order, self._values + other._values, self.scalar)

    def __sub__(self, other: "SymTensor") -> "SymTensor":
        self._check_compatible(other)
        return SymTensor(self.p, self.order, self._values - other._values, self.scalar)

    def scale(self, c) -> "SymTensor":
        c = _to_fraction(c) if self.scalar == RATIONAL else float(c)
        return SymTensor(self.p, self.order, self._values * c, self.scalar)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymTensor):
            return NotImplemented
        return (
            (self.p, self.order, self.scalar) == (other.p, other.order, other.scalar)
            and bool(np.all(self._values == other._values))
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"SymTensor(p={self.p}, order={self.order}, scalar={self.scalar!r})"

    # -- conversion -----------------------------------------------------

    def to_float(self) -> "SymTensor":
        return SymTensor(self.p, self.order, [float(v) for v in self._values], FLOAT)

    def to_rational(self) -> "SymTensor":
        """Exact conversion of float entries (each double is a dyadic rational)."""
        return SymTensor(self.p, self.order, [Fraction(v) for v in self._values], RATIONAL)

    def to_json(self) -> dict:
        entries = [
            {"idx": list(idx), "val": format_scalar(v, self.scalar)}
            for idx, v in self.items()
            if v != 0
        ]
        return {"p": self.p, "order": self.order, "scalar": self.scalar, "entries": entries}

    @classmethod
    def from_json(cls, obj: Mapping, where: str = "tensor") -> "SymTensor":
        for key in ("p", "order", "scalar", "entries"):
            if key not in obj:
                raise DomainError(f"{where}: missing field '{key}'")
        p, order, scalar = obj["p"], obj["order"], obj["scalar"]
        if not isinstance(p, int) or isinstance(p, bool) or p < 1:
            raise DomainError(f"{where}.p: expected positive integer, got {p!r}")
        if not isinstance(order, int) or isinstance(order, bool) or order < 1:
            raise DomainError(f"{where}.order: expected positive integer, got {order!r}")
        if scalar not in SCALAR_KINDS:
            raise DomainError(f"{where}.scalar: expected 'rational' or 'float', got {scalar!r}")
        if not isinstance(obj["entries"], list):
            raise DomainError(f"{where}.entries: expected a list")
        mapping: dict[tuple[int, ...], object] = {}
        for n, e in enumerate(obj["entries"]):
            here = f"{where}.entries[{n}]"
            if not isinstance(e, Mapping) or "idx" not in e or "val" not in e:
                raise DomainError(f"{here}: expected an object with 'idx' and 'val'")
            idx = e["idx"]
            if not isinstance(idx, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in idx):
                raise DomainError(f"{here}.idx: expected a list of integers")
            if list(idx) != sorted(idx):
                raise DomainError(f"{here}.idx: indices must be weakly increasing")
            if len(idx) != order or any(i < 1 or i > p for i in idx):
                raise DomainError(f"{here}.idx: {idx} is not an order-{order} index over [1, {p}]")
            if tuple(idx) in mapping:
                raise DomainError(f"{here}.idx: duplicate index {idx}")
            try:
                mapping[tuple(idx)] = parse_scalar(e["val"], scalar)
            except DomainError as exc:
                raise DomainError(f"{here}.val: {exc}") from None
        return cls.from_entries(p, order, mapping, scalar)


class DiagTensor:
    """Diagonal order-``r`` tensor over ``n`` coordinates, stored as its diagonal."""

    __slots__ = ("n", "order", "scalar", "diag")

    def __init__(self, diag, order: int, scalar: str | None = None):
        scalar = _infer_kind(diag) if scalar is None else _check_kind(scalar)
        arr = to_scalar_array(diag, scalar)
        if arr.ndim != 1 or arr.size < 1:
            raise DomainError("diagonal must be a non-empty vector")
        if order < 1:
            raise DomainError(f"order must be >= 1, got {order}")
        self.n = arr.size
        self.order = int(order)
        self.scalar = scalar
        self.diag = arr

    def to_sym(self) -> SymTensor:
        vals = np.zeros(n_entries(self.n, self.order), dtype=self.diag.dtype)
        if self.scalar == RATIONAL:
            vals[:] = Fraction(0)
        for j in range(self.n):
            vals[index_rank((j + 1,) * self.order, self.n)] = self.diag[j]
        return SymTensor(self.n, self.order, vals, self.scalar)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiagTensor):
            return NotImplemented
        return (self.n, self.order, self.scalar) == (other.n, other.order, other.scalar) and bool(
            np.all(self.diag == other.diag)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"DiagTensor(n={self.n}, order={self.order}, diag={list(self.diag)!r})"


class LoadingMatrix:
    """A ``p x m`` loading matrix, optionally constrained to be lower-triangular.

    With ``lower_triangular=True`` any nonzero ``values[i, j]`` with ``i < j``
    (0-based) is rejected.
    """

    __slots__ = ("p", "m", "scalar", "values", "lower_triangular")

    def __init__(self, values, scalar: str | None = None, lower_triangular: bool = False):
        scalar = _infer_kind(values) if scalar is None else _check_kind(scalar)
        arr = to_scalar_array(values, scalar)
        if arr.ndim != 2:
            raise DomainError(f"loading matrix must be 2-D, got shape {arr.shape}")
        p, m = arr.shape
        if p < m or m < 1:
            raise DomainError(f"loading matrix needs p >= m >= 1, got {p} x {m}")
        if lower_triangular:
            for i in range(m):
                for j in range(i + 1, m):
                    if arr[i, j] != 0:
                        raise DomainError(f"entry ({i + 1},{j + 1}) must vanish in the lower-triangular gauge")
        self.p, self.m = p, m
        self.scalar = scalar
        self.values = arr
        self.lower_triangular = bool(lower_triangular)

    def __repr__(self) -> str:
        return f"LoadingMatrix(p={self.p}, m={self.m}, scalar={self.scalar!r})"


def tucker_diag(D: DiagTensor, L: LoadingMatrix) -> SymTensor:
    """Tucker product of a diagonal core with ``L^T`` in every mode.

    Entry ``(i1..ir)`` of the result is ``sum_l d_l * L[i1,l] * ... * L[ir,l]``.
    """
    if D.n != L.m:
        raise DomainError(f"core has {D.n} coordinates but the loading matrix has {L.m} columns")
    if D.scalar != L.scalar:
        raise DomainError(f"scalar mismatch: core {D.scalar} vs loading {L.scalar}")
    idx = index_array(L.p, D.order)
    prod = L.values[idx[:, 0]]
    for s in range(1, D.order):
        prod = prod * L.values[idx[:, s]]
    vals = (prod * D.diag).sum(axis=1)
    return SymTensor(L.p, D.order, vals, D.scalar)


def tucker_entry(D: DiagTensor, L: LoadingMatrix, idx: Sequence[int]):
    """Single entry of :func:`tucker_diag`.

    For a lower-triangular ``L`` only columns ``l <= min(m, i1)`` of the sorted
    index can contribute, so the sum stops there.
    """
    idx = canonical_index(idx, L.p)
    top = min(L.m, idx[0]) if L.lower_triangular else L.m
    total = Fraction(0) if D.scalar == RATIONAL else 0.0
    for l in range(top):
        term = D.diag[l]
        for i in idx:
            term = term * L.values[i - 1, l]
        total += term
    return total


def add_diag(T: SymTensor, E: DiagTensor) -> SymTensor:
    """``T + E`` where ``E`` is diagonal; only the entries ``(j, ..., j)`` change."""
    if (T.p, T.order) != (E.n, E.order):
        raise DomainError(f"shape mismatch: tensor (p={T.p}, order={T.order}) vs diagonal (n={E.n}, order={E.order})")
    if T.scalar != E.scalar:
        raise DomainError(f"scalar mismatch: {T.scalar} vs {E.scalar}")
    vals = np.array(T.values, copy=True)
    for j in range(T.p):
        pos = index_rank((j + 1,) * T.order, T.p)
        vals[pos] = vals[pos] + E.diag[j]
    return SymTensor(T.p, T.order, vals, T.scalar)
