"""
Jacobian of the parametrization and three independent ways to take its rank.

* ``rank_svd``   -- floating point, singular values against a relative cutoff.
* ``rank_modp``  -- integer point, elimination in GF(q) for a word-size prime.
* ``rank_exact`` -- the integer witness point, fraction-free elimination over Z.

Rows are cumulant entries ``t^(r)_{i1..ir}``; columns are the flattened
parameters in :meth:`FactorParams.labels` order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exceptions import ConstructionError, DomainError, NumericError
from .famodel import FactorParams, ModelSpec, loading_coordinates, phi
from .symtensor import FLOAT, RATIONAL, enumerate_indices

__all__ = [
    "DEFAULT_PRIME",
    "SECOND_PRIME",
    "JacobianMatrix",
    "RankReport",
    "DimensionSummary",
    "row_labels",
    "assemble",
    "fd_check",
    "shell_point",
    "integer_point",
    "rank_svd",
    "rank_modp",
    "modp_rank",
    "bareiss_rank",
    "witness_point",
    "rank_exact",
    "verify_dimension",
    "scaling_direction",
]

DEFAULT_PRIME = 2147483647  # 2^31 - 1
SECOND_PRIME = 2147483629


# ---------------------------------------------------------------------------
# assembly


def row_labels(spec: ModelSpec, restricted: bool = False) -> list[tuple[int, tuple[int, ...]]]:
    """``(order, multi-index)`` for every row.

    Full mode lists all canonical entries, orders ascending, lexicographic
    within an order.  Restricted mode keeps, per order, the diagonal
    ``t_{j..j}`` for ``j = 1..p`` followed by ``t_{j..j,l}`` for
    ``j = 1..p-1`` and ``l = j+1..p``.
    """
    p, k = spec.p, spec.k
    rows = []
    for r in range(2, k + 1):
        if not restricted:
            rows.extend((r, idx) for idx in enumerate_indices(p, r))
            continue
        rows.extend((r, (j,) * r) for j in range(1, p + 1))
        for j in range(1, p):
            rows.extend((r, (j,) * (r - 1) + (l,)) for l in range(j + 1, p + 1))
    return rows


@dataclass(frozen=True)
class JacobianMatrix:
    spec: ModelSpec
    rows: tuple[tuple[int, tuple[int, ...]], ...]
    cols: tuple[str, ...]
    entries: np.ndarray = field(repr=False)
    scalar: str
    restricted: bool

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def column(self, label: str) -> np.ndarray:
        return self.entries[:, self.cols.index(label)]

    def block(self, row_sel: Sequence[tuple[int, tuple[int, ...]]], col_sel: Sequence[str]) -> np.ndarray:
        """Submatrix for the given row labels and column labels."""
        ri = {lab: n for n, lab in enumerate(self.rows)}
        ci = {lab: n for n, lab in enumerate(self.cols)}
        return self.entries[np.ix_([ri[r] for r in row_sel], [ci[c] for c in col_sel])]

    def to_float(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=np.float64)


def assemble(params: FactorParams, restricted: bool = False) -> JacobianMatrix:
    """Analytic Jacobian of :func:`phi` at ``params``.

    For every order ``r``:

    * ``d t_{i1..ir} / d eps^(r)_j = 1`` iff ``i1 = ... = ir = j``,
    * ``d t_{i1..ir} / d delta^(r)_l = prod_s lambda_{i_s l}``,
    * ``d t_{i1..ir} / d lambda_{uv} = delta^(r)_v sum_{s: i_s = u} prod_{s' != s} lambda_{i_s' v}``,

    and blocks coupling different orders vanish.
    """
    spec = params.spec
    p, m, k = spec.p, spec.m, spec.k
    labels = row_labels(spec, restricted)
    dtype = np.float64 if params.scalar == FLOAT else object
    J = np.zeros((len(labels), spec.M), dtype=dtype)
    if dtype is object:
        J[...] = 0
    L = params.loading.values

    lam_col = np.full((p, m), -1, dtype=np.intp)
    lam_off = (k - 1) * (p + m)
    for n, (i, j) in enumerate(loading_coordinates(p, m)):
        lam_col[i - 1, j - 1] = lam_off + n

    start = 0
    for r in range(2, k + 1):
        idx = np.array([lab[1] for lab in labels if lab[0] == r], dtype=np.intp) - 1
        rows = np.arange(start, start + len(idx))
        start += len(idx)
        eps_off = (r - 2) * p
        delta_off = (k - 1) * p + (r - 2) * m
        delta = params.delta[r - 2].diag

        diag = np.all(idx == idx[:, :1], axis=1)
        J[rows[diag], eps_off + idx[diag, 0]] = 1

        factors = [L[idx[:, s]] for s in range(r)]  # each (n_rows, m)
        prod = factors[0]
        for f in factors[1:]:
            prod = prod * f
        J[rows, delta_off:delta_off + m] = prod

        for s in range(r):
            others = None
            for t in range(r):
                if t != s:
                    others = factors[t] if others is None else others * factors[t]
            vals = others * delta  # (n_rows, m)
            u = idx[:, s]
            for v in range(m):
                ok = u >= v
                if np.any(ok):
                    np.add.at(J, (rows[ok], lam_col[u[ok], v]), vals[ok, v])

    return JacobianMatrix(
        spec=spec,
        rows=tuple(labels),
        cols=tuple(FactorParams.labels(spec)),
        entries=J,
        scalar=params.scalar,
        restricted=restricted,
    )


def _phi_vector(params: FactorParams) -> np.ndarray:
    seq = phi(params)
    return np.concatenate([np.asarray(seq[r].values, dtype=np.float64) for r in range(2, params.spec.k + 1)])


def fd_check(params: FactorParams, step: float = 1e-5) -> float:
    """Largest ``|analytic - central difference| / max(1, |analytic|)`` over all entries."""
    if params.scalar != FLOAT:
        params = params.to_float()
    J = assemble(params).to_float()
    x = np.array(params.flatten(), dtype=np.float64)
    fd = np.empty_like(J)
    for i in range(len(x)):
        xp, xm = x.copy(), x.copy()
        xp[i] += step
        xm[i] -= step
        fp = _phi_vector(FactorParams.from_vector(params.spec, xp, FLOAT))
        fm = _phi_vector(FactorParams.from_vector(params.spec, xm, FLOAT))
        fd[:, i] = (fp - fm) / (2 * step)
    return float(np.max(np.abs(J - fd) / np.maximum(1.0, np.abs(J))))


# ---------------------------------------------------------------------------
# sample points


def shell_point(spec: ModelSpec, rng: np.random.Generator) -> FactorParams:
    """Float point with every coordinate uniform on ``[-2, -1] U [1, 2]``."""
    mag = rng.uniform(1.0, 2.0, size=spec.M)
    sign = rng.choice((-1.0, 1.0), size=spec.M)
    return FactorParams.from_vector(spec, mag * sign, FLOAT)


def integer_point(spec: ModelSpec, rng: np.random.Generator, high: int = DEFAULT_PRIME) -> FactorParams:
    """Exact point with coordinates uniform on ``1..high-1``."""
    vals = [int(v) for v in rng.integers(1, high, size=spec.M, dtype=np.int64)]
    return FactorParams.from_vector(spec, vals, RATIONAL)


# ---------------------------------------------------------------------------
# rank


@dataclass
class RankReport:
    """Outcome of one rank computation.

    ``gap`` (svd only) is the smallest retained singular value over the
    largest discarded one (``inf`` when nothing is discarded).
    """

    method: str
    point: str
    computed_rank: int
    expected_rank: int
    rows: int
    cols: int
    gap: float | None = None
    prime: int | None = None

    def __post_init__(self):
        if self.computed_rank > min(self.rows, self.cols):
            raise AssertionError("rank exceeds matrix size")

    @property
    def matches(self) -> bool:
        return self.computed_rank == self.expected_rank

    def to_json(self) -> dict:
        gap = self.gap
        if gap is not None and not math.isfinite(gap):
            gap = "inf"
        return {
            "method": self.method,
            "point": self.point,
            "computed_rank": self.computed_rank,
            "expected_rank": self.expected_rank,
            "matches": self.matches,
            "rows": self.rows,
            "cols": self.cols,
            "gap": gap,
            "prime": self.prime,
        }


def _expected(J: JacobianMatrix) -> int:
    return min(J.spec.M, J.spec.N) if not J.restricted else J.spec.M


def rank_svd(J: JacobianMatrix, tol_factor: float | None = None, point: str = "random-float") -> RankReport:
    """Numerical rank: singular values above ``tol_factor * sigma_max``.

    Default ``tol_factor`` is ``max(rows, cols) * eps``.
    """
    A = J.to_float()
    if not np.all(np.isfinite(A)):
        raise NumericError("Jacobian has non-finite entries")
    rows, cols = A.shape
    if tol_factor is None:
        tol_factor = max(rows, cols) * np.finfo(np.float64).eps
    s = np.linalg.svd(A, compute_uv=False) if A.size else np.zeros(0)
    if s.size == 0 or s[0] == 0:
        return RankReport("svd", point, 0, _expected(J), rows, cols, gap=None)
    rank = int(np.sum(s > tol_factor * s[0]))
    if rank == 0:
        gap = None
    elif rank == s.size:
        gap = math.inf
    else:
        gap = float(s[rank - 1] / s[rank]) if s[rank] > 0 else math.inf
    return RankReport("svd", point, rank, _expected(J), rows, cols, gap=gap)


def modp_rank(A: np.ndarray, prime: int) -> int:
    """Rank of an integer matrix over GF(prime); ``prime < 2^31``."""
    if prime >= 2**31:
        raise DomainError("prime must fit in 31 bits for int64 elimination")
    M = np.array([[int(x) % prime for x in row] for row in A], dtype=np.int64).reshape(A.shape)
    if M.shape[0] < M.shape[1]:
        M = M.T.copy()
    n_rows, n_cols = M.shape
    rank = 0
    for col in range(n_cols):
        if rank == n_rows:
            break
        nz = np.nonzero(M[rank:, col])[0]
        if nz.size == 0:
            continue
        piv = rank + nz[0]
        if piv != rank:
            M[[rank, piv]] = M[[piv, rank]]
        inv = pow(int(M[rank, col]), -1, prime)
        M[rank, col:] = (M[rank, col:] * inv) % prime
        below = M[rank + 1:, col]
        hit = np.nonzero(below)[0] + rank + 1
        if hit.size:
            M[hit, col:] = (M[hit, col:] - (M[hit, col][:, None] * M[rank, col:][None, :]) % prime) % prime
        rank += 1
    return rank


def rank_modp(params: FactorParams, prime: int = DEFAULT_PRIME, restricted: bool = False, point: str = "random-modp") -> RankReport:
    """Rank of the Jacobian at an integer point, reduced modulo ``prime``.

    A random point gives the generic rank except with probability at most
    ``deg / prime`` (Schwartz-Zippel).
    """
    if params.scalar != RATIONAL or any(v.denominator != 1 for v in params.flatten()):
        raise DomainError("rank_modp needs an integer parameter point")
    if prime <= 2**30:
        raise DomainError(f"prime must exceed 2^30, got {prime}")
    J = assemble(params, restricted)
    rank = modp_rank(np.vectorize(int, otypes=[object])(J.entries), prime)
    return RankReport("modp", point, rank, _expected(J), *J.shape, prime=prime)


_divmod = np.frompyfunc(divmod, 2, 2)


def bareiss_rank(A) -> int:
    """Exact rank of an integer matrix by fraction-free elimination.

    Rational input is scaled row by row to integers first.  Pivots are the
    nonzero entry of smallest absolute value in the current column; every
    division by the previous pivot is exact and checked.
    """
    M = np.array(A, dtype=object)
    if M.ndim != 2:
        raise DomainError("expected a 2-D matrix")
    n_rows, n_cols = M.shape
    if n_rows < n_cols:
        M = M.T.copy()
        n_rows, n_cols = n_cols, n_rows
    if M.size:
        # clear denominators row by row; rank is unchanged
        rows = []
        for row in M:
            fr = [Fraction(x) for x in row]
            scale = math.lcm(*(f.denominator for f in fr))
            rows.append([int(f * scale) for f in fr])
        M = np.array(rows, dtype=object).reshape(n_rows, n_cols)
    prev = 1
    rank = 0
    for col in range(n_cols):
        if rank == n_rows:
            break
        column = M[rank:, col]
        nz = [i for i, x in enumerate(column) if x != 0]
        if not nz:
            continue
        piv = rank + min(nz, key=lambda i: abs(column[i]))
        if piv != rank:
            M[[rank, piv]] = M[[piv, rank]]
        p_val = M[rank, col]
        rest = M[rank + 1:, col:]
        num = p_val * rest - M[rank + 1:, col][:, None] * M[rank, col:][None, :]
        if prev != 1:
            q, r = _divmod(num, prev)
            if any(x != 0 for x in r.ravel()):
                raise AssertionError("fraction-free elimination produced an inexact division")
            num = q
        M[rank + 1:, col:] = num
        prev = p_val
        rank += 1
    return rank


def witness_point(spec: ModelSpec) -> FactorParams:
    """Integer point used to certify full rank exactly.

    ``eps = 0``, ``delta = 1``, the top ``m x m`` block of ``Lambda`` is the
    identity and column ``j`` gets one extra unit at row
    ``m + 1 + ((j - 1) mod (p - m))``.
    """
    p, m = spec.p, spec.m
    if p <= m:
        raise ConstructionError(f"witness needs p > m (rows below the diagonal), got p={p}, m={m}")
    L = np.full((p, m), Fraction(0), dtype=object)
    for j in range(m):
        L[j, j] = Fraction(1)
        L[m + (j % (p - m)), j] = Fraction(1)
    vals = [Fraction(0)] * ((spec.k - 1) * p) + [Fraction(1)] * ((spec.k - 1) * m)
    vals += [L[i - 1, j - 1] for i, j in loading_coordinates(p, m)]
    return FactorParams.from_vector(spec, vals, RATIONAL)


@dataclass
class ExactReport(RankReport):
    certified: bool = False

    def to_json(self) -> dict:
        out = super().to_json()
        out["certified"] = self.certified
        return out


def rank_exact(spec: ModelSpec) -> ExactReport:
    """Exact rank of the restricted Jacobian at :func:`witness_point`.

    ``certified`` is true when the rank equals ``M``; a shortfall is reported,
    not raised.
    """
    if spec.p < spec.m + 2:
        raise DomainError(f"exact certification needs p >= m + 2, got p={spec.p}, m={spec.m}")
    J = assemble(witness_point(spec), restricted=True)
    rank = bareiss_rank(J.entries)
    return ExactReport("exact", "witness", rank, spec.M, *J.shape, certified=rank == spec.M)


def scaling_direction(params: FactorParams) -> np.ndarray:
    """Tangent of the orbit ``Lambda[:, v] -> c Lambda[:, v]``, ``delta^(r)_v -> c^-r delta^(r)_v`` at ``c = 1``.

    One vector per factor column (shape ``(m, M)``).  ``phi`` is constant
    along these orbits, so each row lies in the kernel of the Jacobian.
    """
    spec = params.spec
    p, m, k = spec.p, spec.m, spec.k
    dtype = np.float64 if params.scalar == FLOAT else object
    out = np.zeros((m, spec.M), dtype=dtype)
    if dtype is object:
        out[...] = Fraction(0)
    L = params.loading.values
    for v in range(m):
        for r in range(2, k + 1):
            out[v, (k - 1) * p + (r - 2) * m + v] = -r * params.delta[r - 2].diag[v]
        for n, (i, j) in enumerate(loading_coordinates(p, m)):
            if j - 1 == v:
                out[v, (k - 1) * (p + m) + n] = L[i - 1, j - 1]
    return out


# ---------------------------------------------------------------------------
# verification driver


@dataclass
class DimensionSummary:
    """Ranks observed for one ``(p, m, k)`` against ``min(M, N)``.

    ``scaling_bound`` is ``min(M - m, N)``: the rank can never exceed it
    because :func:`scaling_direction` spans ``m`` kernel vectors wherever the
    loading columns are nonzero.
    """

    spec: ModelSpec
    seed: int
    expected_rank: int
    scaling_bound: int
    certifiable: bool
    reports: list[RankReport]

    @property
    def observed(self) -> list[int]:
        return [r.computed_rank for r in self.reports]

    @property
    def all_match(self) -> bool:
        return all(r.matches for r in self.reports)

    @property
    def methods_agree(self) -> bool:
        random = [r.computed_rank for r in self.reports if r.method in ("svd", "modp")]
        return len(set(random)) <= 1

    def to_json(self) -> dict:
        return {
            "p": self.spec.p,
            "m": self.spec.m,
            "k": self.spec.k,
            "seed": self.seed,
            "expected_rank": self.expected_rank,
            "scaling_bound": self.scaling_bound,
            "certifiable": self.certifiable,
            "all_match": self.all_match,
            "methods_agree": self.methods_agree,
            "observed": self.observed,
            "reports": [r.to_json() for r in self.reports],
        }


def _trial_rng(seed: int, trial: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, trial, stream]))


def verify_dimension(
    spec: ModelSpec,
    trials: int = 3,
    seed: int = 0,
    methods: Sequence[str] = ("svd", "modp", "exact"),
    primes: Sequence[int] = (DEFAULT_PRIME, SECOND_PRIME),
    tol_factor: float | None = None,
) -> DimensionSummary:
    """Compare Jacobian ranks at random points (and the witness) with ``min(M, N)``.

    Every trial draws its own points from ``(seed, trial)``, so results do
    not depend on evaluation order.  The witness is only used when
    ``p >= m + 2``; for smaller ``p`` the observed ranks are reported without
    any claim attached.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    unknown = set(methods) - {"svd", "modp", "exact"}
    if unknown:
        raise DomainError(f"unknown rank methods {sorted(unknown)}")
    certifiable = spec.p >= spec.m + 2
    reports: list[RankReport] = []
    for t in range(trials):
        if "svd" in methods:
            J = assemble(shell_point(spec, _trial_rng(seed, t, 0)))
            reports.append(rank_svd(J, tol_factor))
        if "modp" in methods:
            for n, q in enumerate(primes):
                pt = integer_point(spec, _trial_rng(seed, t, 1 + n), q)
                reports.append(rank_modp(pt, q))
    if "exact" in methods and certifiable:
        reports.append(rank_exact(spec))
    return DimensionSummary(
        spec=spec,
        seed=seed,
        expected_rank=min(spec.M, spec.N),
        scaling_bound=min(spec.M - spec.m, spec.N),
        certifiable=certifiable,
        reports=reports,
    )
