"""
Monte Carlo check that sample cumulants of ``X = Lambda Y + eps`` match the model.

Samples are generated in fixed-size chunks.  Chunk ``c`` draws from its own
generator seeded by ``(seed, stream, c)``, so the sample matrix does not
depend on how chunks are scheduled.  The bootstrap is a Poisson bootstrap:
each replicate weights every row by an independent Poisson(1) count, which
lets the replicates be accumulated chunk by chunk without storing the data.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .cumulants import DISTRIBUTIONS, TensorSequence, analytic_cumulants, moments_to_cumulants
from .exceptions import DomainError
from .famodel import ModelSpec
from .symtensor import FLOAT, RATIONAL, DiagTensor, LoadingMatrix, SymTensor, add_diag, index_array, index_rank, tucker_diag

__all__ = [
    "MAX_SIM_ORDER",
    "WARN_AT",
    "FAIL_AT",
    "SimConfig",
    "draw",
    "empirical_moments",
    "predicted_cumulants",
    "validate",
    "ValidationReport",
    "CumulantEstimator",
]

MAX_SIM_ORDER = 6
WARN_AT = 5.0
FAIL_AT = 8.0
N_BOOTSTRAP = 200

_DRAW_STREAM = 0
_BOOT_STREAM = 1


@dataclass(frozen=True)
class SimConfig:
    """Everything needed to draw a reproducible sample.

    ``factor_dist`` and ``noise_dist`` name entries of the closed-form
    catalog; ``None`` means the variable is identically zero.
    """

    spec: ModelSpec
    factor_dist: str | None
    noise_dist: str | None
    loading: LoadingMatrix
    samples: int
    seed: int = 0
    chunk_size: int = 1 << 17

    def __post_init__(self):
        if self.samples < 1:
            raise DomainError(f"samples must be >= 1, got {self.samples}")
        if self.chunk_size < 1:
            raise DomainError(f"chunk_size must be >= 1, got {self.chunk_size}")
        if self.spec.k > MAX_SIM_ORDER:
            raise DomainError(f"simulation supports k <= {MAX_SIM_ORDER}, got {self.spec.k}")
        for name in ("factor_dist", "noise_dist"):
            d = getattr(self, name)
            if d is not None and d not in DISTRIBUTIONS:
                raise DomainError(f"{name}: unknown distribution {d!r}; choose from {sorted(DISTRIBUTIONS)}")
        if (self.loading.p, self.loading.m) != (self.spec.p, self.spec.m):
            raise DomainError(
                f"loading is {self.loading.p} x {self.loading.m}, expected {self.spec.p} x {self.spec.m}"
            )

    @property
    def n_chunks(self) -> int:
        return -(-self.samples // self.chunk_size)

    def chunk_rows(self, c: int) -> int:
        return min(self.chunk_size, self.samples - c * self.chunk_size)


def _sample(dist: str | None, rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    if dist is None:
        return np.zeros(shape)
    if dist == "centered-exponential":
        return rng.standard_exponential(shape) - 1.0
    if dist == "uniform":
        return rng.uniform(-1.0, 1.0, shape)
    if dist == "rademacher":
        return 2.0 * rng.integers(0, 2, shape) - 1.0
    raise DomainError(f"unknown distribution {dist!r}")


def _rng(config: SimConfig, stream: int, c: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([config.seed, stream, c]))


def _draw_chunk(config: SimConfig, c: int) -> np.ndarray:
    rng = _rng(config, _DRAW_STREAM, c)
    n = config.chunk_rows(c)
    y = _sample(config.factor_dist, rng, (n, config.spec.m))
    e = _sample(config.noise_dist, rng, (n, config.spec.p))
    L = np.asarray(config.loading.values, dtype=np.float64)
    return y @ L.T + e


def draw(config: SimConfig) -> np.ndarray:
    """``samples x p`` matrix whose rows are ``Lambda y + e``."""
    return np.concatenate([_draw_chunk(config, c) for c in range(config.n_chunks)], axis=0)


# ---------------------------------------------------------------------------
# moments


def _monomial_plan(p: int, max_order: int) -> list[tuple[int, int]]:
    """For every canonical index of orders ``1..max_order`` (concatenated), the
    column of its prefix (``-1`` for order 1) and the last coordinate (0-based)."""
    plan = []
    offsets = {}
    pos = 0
    for r in range(1, max_order + 1):
        offsets[r] = pos
        for idx in index_array(p, r):
            if r == 1:
                plan.append((-1, int(idx[0])))
            else:
                prefix = tuple(int(i) + 1 for i in idx[:-1])
                plan.append((offsets[r - 1] + index_rank(prefix, p), int(idx[-1])))
            pos += 1
    return plan


def _monomials(X: np.ndarray, plan: list[tuple[int, int]]) -> np.ndarray:
    Z = np.empty((X.shape[0], len(plan)))
    for col, (prefix, last) in enumerate(plan):
        Z[:, col] = X[:, last] if prefix < 0 else Z[:, prefix] * X[:, last]
    return Z


def _as_sequence(flat: np.ndarray, p: int, max_order: int) -> TensorSequence:
    tensors = {}
    pos = 0
    for r in range(1, max_order + 1):
        n = len(index_array(p, r))
        tensors[r] = SymTensor(p, r, flat[pos:pos + n], FLOAT)
        pos += n
    return TensorSequence(p, max_order, tensors, zero_mean=False)


def _check_samples(samples) -> np.ndarray:
    X = np.asarray(samples)
    if X.ndim == 1:
        X = X[:, None]
    return check_array(X, dtype=np.float64)


def empirical_moments(samples, max_order: int) -> TensorSequence:
    """Sample averages of every canonical monomial of orders ``1..max_order`` (``max_order >= 2``).

    A 1-D input is treated as a single variable.
    """
    if not 2 <= max_order <= MAX_SIM_ORDER:
        raise DomainError(f"max_order must be in 2..{MAX_SIM_ORDER}, got {max_order}")
    X = _check_samples(samples)
    plan = _monomial_plan(X.shape[1], max_order)
    return _as_sequence(_monomials(X, plan).mean(axis=0), X.shape[1], max_order)


# ---------------------------------------------------------------------------
# prediction and validation


def predicted_cumulants(config: SimConfig) -> TensorSequence:
    """Exact cumulants of ``X`` of orders ``2..k`` implied by the configuration.

    Order ``r`` is ``D^(r) . Lambda^T + E^(r)`` with the closed-form cumulants
    of the factor and noise laws on the diagonals.
    """
    spec = config.spec
    L = config.loading
    scalar = L.scalar
    fac = analytic_cumulants(config.factor_dist, spec.k) if config.factor_dist else [Fraction(0)] * spec.k
    noi = analytic_cumulants(config.noise_dist, spec.k) if config.noise_dist else [Fraction(0)] * spec.k
    if scalar == FLOAT:
        fac = [float(x) for x in fac]
        noi = [float(x) for x in noi]
    tensors = {}
    for r in range(2, spec.k + 1):
        D = DiagTensor([fac[r - 1]] * spec.m, r, scalar)
        E = DiagTensor([noi[r - 1]] * spec.p, r, scalar)
        tensors[r] = add_diag(tucker_diag(D, L), E)
    return TensorSequence(spec.p, spec.k, tensors, zero_mean=True)


def _cumulant_vector(moments: np.ndarray, p: int, k: int) -> np.ndarray:
    cum = moments_to_cumulants(_as_sequence(moments, p, k))
    return np.concatenate([np.asarray(cum[r].values, dtype=np.float64) for r in range(2, k + 1)])


def _status(z: float) -> str:
    if z < WARN_AT:
        return "pass"
    return "warn" if z < FAIL_AT else "fail"


@dataclass
class ValidationReport:
    """Deviation of sample cumulants from the model prediction.

    ``normalized`` is ``|empirical - predicted| / bootstrap SE`` per entry; it
    is 0 where both the deviation and the SE vanish and ``inf`` where only
    the SE does.  Thresholds are probabilistic: under the model each
    normalized entry is roughly standard normal.
    """

    config: SimConfig
    rows: list[tuple[int, tuple[int, ...]]]
    empirical: np.ndarray = field(repr=False)
    predicted: np.ndarray = field(repr=False)
    std_error: np.ndarray = field(repr=False)
    seconds: float = 0.0

    @property
    def deviation(self) -> np.ndarray:
        return np.abs(self.empirical - self.predicted)

    @property
    def normalized(self) -> np.ndarray:
        dev = self.deviation
        with np.errstate(divide="ignore", invalid="ignore"):
            z = dev / self.std_error
        z[(dev == 0) & (self.std_error == 0)] = 0.0
        return z

    @property
    def max_normalized(self) -> float:
        return float(self.normalized.max())

    @property
    def status(self) -> str:
        return _status(self.max_normalized)

    def per_order(self) -> dict[int, dict]:
        z = self.normalized
        dev = self.deviation
        out = {}
        orders = np.array([r for r, _ in self.rows])
        for r in sorted(set(orders.tolist())):
            sel = orders == r
            zr = float(z[sel].max())
            out[r] = {"max_deviation": float(dev[sel].max()), "max_normalized": zr, "status": _status(zr)}
        return out

    def to_json(self) -> dict:
        def num(x: float):
            return x if np.isfinite(x) else "inf"

        c = self.config
        return {
            "p": c.spec.p,
            "m": c.spec.m,
            "k": c.spec.k,
            "factor_dist": c.factor_dist,
            "noise_dist": c.noise_dist,
            "samples": c.samples,
            "seed": c.seed,
            "bootstrap": N_BOOTSTRAP,
            "seconds": round(self.seconds, 3),
            "max_normalized": num(self.max_normalized),
            "status": self.status,
            "orders": {
                str(r): {k: (num(v) if isinstance(v, float) else v) for k, v in d.items()}
                for r, d in self.per_order().items()
            },
        }


def validate(config: SimConfig, n_bootstrap: int = N_BOOTSTRAP) -> ValidationReport:
    """Compare sample cumulants of orders ``2..k`` with :func:`predicted_cumulants`."""
    if n_bootstrap < 2:
        raise DomainError("n_bootstrap must be >= 2")
    start = time.perf_counter()
    p, k = config.spec.p, config.spec.k
    plan = _monomial_plan(p, k)
    total = np.zeros(len(plan))
    boot = np.zeros((n_bootstrap, len(plan)))
    weight = np.zeros(n_bootstrap)
    for c in range(config.n_chunks):
        Z = _monomials(_draw_chunk(config, c), plan)
        W = _rng(config, _BOOT_STREAM, c).poisson(1.0, size=(Z.shape[0], n_bootstrap)).astype(np.float64)
        total += Z.sum(axis=0)
        boot += W.T @ Z
        weight += W.sum(axis=0)

    empirical = _cumulant_vector(total / config.samples, p, k)
    weight[weight == 0] = 1.0
    reps = np.stack([_cumulant_vector(boot[b] / weight[b], p, k) for b in range(n_bootstrap)])
    se = reps.std(axis=0, ddof=1)

    pred_seq = predicted_cumulants(config)
    predicted = np.concatenate([np.asarray(pred_seq[r].values, dtype=np.float64) for r in range(2, k + 1)])
    rows = [(r, idx) for r in range(2, k + 1) for idx, _ in pred_seq[r].items()]
    return ValidationReport(config, rows, empirical, predicted, se, time.perf_counter() - start)


# ---------------------------------------------------------------------------
# estimator


class CumulantEstimator(BaseEstimator):
    """Plug-in estimator of the moment and cumulant tensors of a sample.

    Parameters
    ----------
    max_order : int, default=4
        Highest tensor order to estimate (at most 6).

    Attributes
    ----------
    moments_ : TensorSequence
        Raw sample moments of orders ``1..max_order``.
    cumulants_ : TensorSequence
        Cumulants obtained from ``moments_`` by the partition-sum transform.
    n_features_in_ : int
    n_samples_ : int
    """

    def __init__(self, max_order=4):
        self.max_order = max_order

    def fit(self, X, y=None):
        if not isinstance(self.max_order, (int, np.integer)) or not 2 <= self.max_order <= MAX_SIM_ORDER:
            raise ValueError(f"max_order must be an integer in 2..{MAX_SIM_ORDER}, got {self.max_order!r}")
        X = _check_samples(X)
        self.moments_ = empirical_moments(X, self.max_order)
        self.cumulants_ = moments_to_cumulants(self.moments_)
        self.n_features_in_ = X.shape[1]
        self.n_samples_ = X.shape[0]
        return self

    def cumulant(self, order: int) -> SymTensor:
        check_is_fitted(self, "cumulants_")
        return self.cumulants_[order]

    def deviation_from(self, params) -> float:
        """Largest absolute gap between the fitted cumulants (orders ``2..k``) and ``phi(params)``."""
        from .famodel import phi

        check_is_fitted(self, "cumulants_")
        model = phi(params).to_float()
        if model.p != self.n_features_in_ or model.max_order > self.max_order:
            raise DomainError("params do not match the fitted dimension or order")
        return max(
            float(np.max(np.abs(np.asarray(self.cumulants_[r].values, float) - np.asarray(model[r].values, float))))
            for r in range(2, model.max_order + 1)
        )
