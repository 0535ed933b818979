"""
Moment/cumulant tensor sequences and the partition-sum transforms between them.

Both directions sum over the set partitions of the positions of a multi-index:

    cum(j1..jr) = sum_pi (-1)^(L-1) (L-1)! prod_{B in pi} mom(j_B)
    mom(j1..jr) = sum_pi                   prod_{B in pi} cum(j_B)

where ``L`` is the number of blocks of ``pi``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from typing import Mapping, Sequence

from .exceptions import CapacityError, DomainError
from .symtensor import RATIONAL, SymTensor

__all__ = [
    "MAX_PARTITION_ORDER",
    "SetPartition",
    "partitions",
    "bell_number",
    "TensorSequence",
    "moments_to_cumulants",
    "cumulants_to_moments",
    "DISTRIBUTIONS",
    "analytic_cumulants",
    "bernoulli_number",
    "univariate_sequence",
]

MAX_PARTITION_ORDER = 10


@dataclass(frozen=True)
class SetPartition:
    """A set partition of ``{1, ..., r}``; blocks are sorted and ordered by minimum."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        flat = sorted(i for b in self.blocks for i in b)
        if flat != list(range(1, len(flat) + 1)) or any(not b for b in self.blocks):
            raise DomainError(f"{self.blocks} is not a partition of [1..{len(flat)}]")
        canon = tuple(sorted((tuple(sorted(b)) for b in self.blocks), key=lambda b: b[0]))
        object.__setattr__(self, "blocks", canon)

    @property
    def size(self) -> int:
        return sum(len(b) for b in self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)


@functools.lru_cache(maxsize=None)
def _partitions(r: int) -> tuple[SetPartition, ...]:
    # restricted growth strings a_1..a_r: a_1 = 0, a_i <= 1 + max(a_1..a_{i-1})
    out = []
    rgs = [0] * r

    def extend(i: int, top: int) -> None:
        if i == r:
            blocks: list[list[int]] = [[] for _ in range(top + 1)]
            for pos, b in enumerate(rgs):
                blocks[b].append(pos + 1)
            out.append(SetPartition(tuple(tuple(b) for b in blocks)))
            return
        for b in range(top + 2):
            rgs[i] = b
            extend(i + 1, max(top, b))

    extend(1, 0)
    return tuple(out)


def partitions(r: int) -> list[SetPartition]:
    """All set partitions of ``[r]`` (``Bell(r)`` of them)."""
    if r < 1:
        raise DomainError(f"r must be >= 1, got {r}")
    if r > MAX_PARTITION_ORDER:
        raise CapacityError(f"partitions are enumerated up to r={MAX_PARTITION_ORDER}, got {r}")
    return list(_partitions(r))


def bell_number(r: int) -> int:
    """Bell numbers by the recurrence ``B(n+1) = sum_k C(n, k) B(k)``."""
    bell = [1]
    for n in range(r):
        bell.append(sum(comb(n, k) * bell[k] for k in range(n + 1)))
    return bell[r]


@dataclass(frozen=True)
class TensorSequence:
    """Symmetric tensors of orders 1..k (order 1 omitted when ``zero_mean``).

    ``tensors`` maps order to tensor.  For a zero-mean sequence, order 1 is
    implicitly zero and must not be supplied.
    """

    p: int
    max_order: int
    tensors: Mapping[int, SymTensor] = field(repr=False)
    zero_mean: bool = True

    def __post_init__(self):
        if self.max_order < 2:
            raise DomainError(f"max_order must be >= 2, got {self.max_order}")
        first = 2 if self.zero_mean else 1
        expected = set(range(first, self.max_order + 1))
        got = set(self.tensors)
        if got != expected:
            missing = sorted(expected - got)
            extra = sorted(got - expected)
            raise DomainError(f"tensor orders mismatch: missing {missing}, unexpected {extra}")
        kinds = set()
        for r, t in self.tensors.items():
            if t.p != self.p or t.order != r:
                raise DomainError(f"tensor for order {r} has p={t.p}, order={t.order}")
            kinds.add(t.scalar)
        if len(kinds) > 1:
            raise DomainError("all tensors in a sequence must share one scalar kind")
        object.__setattr__(self, "tensors", dict(sorted(self.tensors.items())))

    @property
    def scalar(self) -> str:
        return next(iter(self.tensors.values())).scalar

    def __getitem__(self, order: int) -> SymTensor:
        if order == 1 and self.zero_mean:
            return SymTensor.zeros(self.p, 1, self.scalar)
        return self.tensors[order]

    def orders(self) -> list[int]:
        return list(self.tensors)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TensorSequence):
            return NotImplemented
        return (
            (self.p, self.max_order, self.zero_mean) == (other.p, other.max_order, other.zero_mean)
            and all(self.tensors[r] == other.tensors[r] for r in self.tensors)
        )

    __hash__ = None  # type: ignore[assignment]

    def to_float(self) -> "TensorSequence":
        return TensorSequence(self.p, self.max_order, {r: t.to_float() for r, t in self.tensors.items()}, self.zero_mean)

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "max_order": self.max_order,
            "zero_mean": self.zero_mean,
            "tensors": [t.to_json() for t in self.tensors.values()],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "TensorSequence":
        if not isinstance(obj, Mapping):
            raise DomainError("sequence: expected a JSON object")
        for key in ("p", "max_order", "zero_mean", "tensors"):
            if key not in obj:
                raise DomainError(f"sequence: missing field '{key}'")
        if not isinstance(obj["zero_mean"], bool):
            raise DomainError(f"zero_mean: expected boolean, got {obj['zero_mean']!r}")
        for key in ("p", "max_order"):
            if not isinstance(obj[key], int) or isinstance(obj[key], bool):
                raise DomainError(f"{key}: expected integer, got {obj[key]!r}")
        if not isinstance(obj["tensors"], list):
            raise DomainError("tensors: expected a list")
        tensors = {}
        for n, raw in enumerate(obj["tensors"]):
            if not isinstance(raw, Mapping):
                raise DomainError(f"tensors[{n}]: expected an object")
            t = SymTensor.from_json(raw, where=f"tensors[{n}]")
            if t.order in tensors:
                raise DomainError(f"tensors[{n}].order: duplicate order {t.order}")
            if t.p != obj["p"]:
                raise DomainError(f"tensors[{n}].p: {t.p} differs from sequence p={obj['p']}")
            tensors[t.order] = t
        return cls(obj["p"], obj["max_order"], tensors, obj["zero_mean"])


def _partition_plan(r: int, zero_mean: bool) -> list[tuple[tuple[tuple[int, ...], ...], int]]:
    """(0-based blocks, number of blocks) per partition; singletons dropped for zero mean."""
    plan = []
    for part in _partitions(r):
        if zero_mean and any(len(b) == 1 for b in part.blocks):
            continue
        plan.append((tuple(tuple(i - 1 for i in b) for b in part.blocks), len(part)))
    return plan


def _transform(seq: TensorSequence, signed: bool) -> TensorSequence:
    lookup = {r: dict(seq[r].items()) for r in range(1, seq.max_order + 1)}
    out = {}
    zero = Fraction(0) if seq.scalar == RATIONAL else 0.0
    for r in seq.orders():
        plan = _partition_plan(r, seq.zero_mean)
        vals = []
        for idx, _ in seq[r].items():
            total = zero
            for blocks, nblocks in plan:
                term = lookup[len(blocks[0])][tuple(idx[i] for i in blocks[0])]
                for b in blocks[1:]:
                    if not term:
                        break
                    term = term * lookup[len(b)][tuple(idx[i] for i in b)]
                if signed and nblocks > 1:
                    term = term * ((-1) ** (nblocks - 1) * factorial(nblocks - 1))
                total = total + term
            vals.append(total)
        out[r] = SymTensor(seq.p, r, vals, seq.scalar)
    return TensorSequence(seq.p, seq.max_order, out, seq.zero_mean)


def moments_to_cumulants(M: TensorSequence) -> TensorSequence:
    """Cumulant tensors of orders up to ``k`` from moment tensors of orders up to ``k``."""
    if not isinstance(M, TensorSequence):
        raise DomainError(f"expected a TensorSequence, got {type(M).__name__}")
    return _transform(M, signed=True)


def cumulants_to_moments(C: TensorSequence) -> TensorSequence:
    """Inverse of :func:`moments_to_cumulants`."""
    if not isinstance(C, TensorSequence):
        raise DomainError(f"expected a TensorSequence, got {type(C).__name__}")
    return _transform(C, signed=False)


# ---------------------------------------------------------------------------
# closed-form cumulants of the simulation laws


@functools.lru_cache(maxsize=None)
def bernoulli_number(n: int) -> Fraction:
    """Bernoulli number ``B_n`` (``B_1 = -1/2``) from ``sum_j C(n+1, j) B_j = 0``."""
    if n == 0:
        return Fraction(1)
    return -sum(comb(n + 1, j) * bernoulli_number(j) for j in range(n)) / (n + 1)


def _exponential(r: int) -> Fraction:
    # Exp(1) shifted to mean zero: log-MGF -t - log(1 - t)
    return Fraction(0) if r == 1 else Fraction(factorial(r - 1))


def _uniform(r: int) -> Fraction:
    # uniform(-1, 1): log-MGF log(sinh t / t)
    if r % 2:
        return Fraction(0)
    return Fraction(2**r) * bernoulli_number(r) / r


def _rademacher(r: int) -> Fraction:
    # +-1 with probability 1/2: log-MGF log cosh t
    if r % 2:
        return Fraction(0)
    return Fraction(2**r * (2**r - 1)) * bernoulli_number(r) / r


DISTRIBUTIONS = {
    "centered-exponential": _exponential,
    "uniform": _uniform,
    "rademacher": _rademacher,
}


def analytic_cumulants(dist: str, max_order: int) -> list[Fraction]:
    """Exact cumulants ``(k_1, ..., k_max_order)`` of a catalog distribution.

    ``dist`` is one of ``"centered-exponential"`` (rate 1, shifted to mean 0),
    ``"uniform"`` (on ``[-1, 1]``) or ``"rademacher"``.
    """
    try:
        fn = DISTRIBUTIONS[dist]
    except KeyError:
        raise DomainError(f"unknown distribution {dist!r}; choose from {sorted(DISTRIBUTIONS)}") from None
    if max_order < 1:
        raise DomainError(f"max_order must be >= 1, got {max_order}")
    return [fn(r) for r in range(1, max_order + 1)]


def univariate_sequence(values: Sequence, zero_mean: bool = False, scalar: str = RATIONAL) -> TensorSequence:
    """A ``p = 1`` sequence from scalars ``(x_1, ..., x_k)`` (or ``(x_2, ...)`` if zero-mean)."""
    first = 2 if zero_mean else 1
    tensors = {r: SymTensor(1, r, [v], scalar) for r, v in enumerate(values, start=first)}
    return TensorSequence(1, first + len(values) - 1, tensors, zero_mean)
