"""Model parameters for the barrier-crossing problem.

The firm value is a Levy process: drift ``m`` per unit time, a standard
Brownian component, and compound Poisson jumps with intensity ``lam`` and
jump-size law ``jump``.  Default is the first time the process reaches the
barrier ``x > 0``.  The observation channel integrates a bounded function
``h`` of the state plus independent Brownian noise.

Everything here is immutable after validation and safe to share across
threads; samplers take an explicit RNG owned by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np


class ModelError(ValueError):
    """Base class for model validation failures."""


class NonPositiveBarrier(ModelError):
    pass


class NegativeIntensity(ModelError):
    pass


class MalformedJumpLaw(ModelError):
    pass


class InfiniteJumpMean(ModelError):
    pass


# ---------------------------------------------------------------------------
# Jump-size laws
# ---------------------------------------------------------------------------


class JumpLaw:
    """Distribution of a single jump size.

    Concrete laws provide a right-continuous ``cdf``, its left limit
    ``cdf_left`` (they differ exactly by the atom mass), a ``sample``
    method taking a ``numpy.random.Generator``, and a ``mean``.
    ``cdf`` and ``cdf_left`` accept scalars or arrays.
    """

    atomless = False

    def cdf(self, y):
        raise NotImplementedError

    def cdf_left(self, y):
        # Atomless laws share cdf and its left limit.
        if self.atomless:
            return self.cdf(y)
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    @property
    def mean(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class PointMass(JumpLaw):
    """All jumps equal ``a``."""

    a: float

    def cdf(self, y):
        return np.where(np.asarray(y, dtype=float) >= self.a, 1.0, 0.0)

    def cdf_left(self, y):
        return np.where(np.asarray(y, dtype=float) > self.a, 1.0, 0.0)

    def sample(self, rng, size=None):
        return np.full(size, self.a) if size is not None else self.a

    @property
    def mean(self):
        return self.a


@dataclass(frozen=True)
class Exponential(JumpLaw):
    """Positive jumps, Exp(rate)."""

    rate: float
    atomless = True

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y > 0, -np.expm1(-self.rate * np.maximum(y, 0.0)), 0.0)

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size)

    @property
    def mean(self):
        return 1.0 / self.rate


@dataclass(frozen=True)
class NegatedExponential(JumpLaw):
    """Negative jumps, -Exp(rate)."""

    rate: float
    atomless = True

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y < 0, np.exp(self.rate * np.minimum(y, 0.0)), 1.0)

    def sample(self, rng, size=None):
        return -rng.exponential(1.0 / self.rate, size)

    @property
    def mean(self):
        return -1.0 / self.rate


@dataclass(frozen=True)
class Gaussian(JumpLaw):
    mu: float
    sigma: float
    atomless = True

    def cdf(self, y):
        from scipy.special import ndtr

        return ndtr((np.asarray(y, dtype=float) - self.mu) / self.sigma)

    def sample(self, rng, size=None):
        return self.mu + self.sigma * rng.standard_normal(size)

    @property
    def mean(self):
        return self.mu


@dataclass(frozen=True)
class TwoPoint(JumpLaw):
    """Jump equals ``a`` with probability ``p``, else ``b``."""

    a: float
    p: float
    b: float

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        return self.p * (y >= self.a) + (1.0 - self.p) * (y >= self.b)

    def cdf_left(self, y):
        y = np.asarray(y, dtype=float)
        return self.p * (y > self.a) + (1.0 - self.p) * (y > self.b)

    def sample(self, rng, size=None):
        u = rng.random(size)
        return np.where(u < self.p, self.a, self.b)

    @property
    def mean(self):
        return self.p * self.a + (1.0 - self.p) * self.b


@dataclass(frozen=True)
class Empirical(JumpLaw):
    """Right-continuous step CDF of a fixed sample."""

    values: tuple[float, ...]
    _sorted: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_sorted", np.sort(np.asarray(self.values, dtype=float)))

    def cdf(self, y):
        return np.searchsorted(self._sorted, y, side="right") / len(self._sorted)

    def cdf_left(self, y):
        return np.searchsorted(self._sorted, y, side="left") / len(self._sorted)

    def sample(self, rng, size=None):
        return rng.choice(self._sorted, size=size)

    @property
    def mean(self):
        return float(self._sorted.mean())


_JUMP_KINDS = {
    "point-mass": lambda p: PointMass(p[0]),
    "exponential": lambda p: Exponential(p[0]),
    "negated-exponential": lambda p: NegatedExponential(p[0]),
    "gaussian": lambda p: Gaussian(p[0], p[1]),
    "two-point": lambda p: TwoPoint(p[0], p[1], p[2]),
    "empirical": lambda p: Empirical(tuple(p)),
}


def jump_law(kind: str, *params: float) -> JumpLaw:
    """Construct a jump law by name, e.g. ``jump_law("exponential", 1.0)``."""
    try:
        ctor = _JUMP_KINDS[kind]
    except KeyError:
        raise MalformedJumpLaw(f"unknown jump law kind {kind!r}") from None
    return ctor(list(params))


# ---------------------------------------------------------------------------
# Observation functions
# ---------------------------------------------------------------------------


class ObservationFn:
    """Bounded function of the state driving the observation drift.

    ``sup_norm`` is the declared bound on ``|h|``; it is a field, not
    inferred, so the exponential-martingale condition on the likelihood
    holds by construction.  Instances are callable and vectorized.
    """

    sup_norm: float

    def __call__(self, y):
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(ObservationFn):
    c: float

    def __call__(self, y):
        return np.full_like(np.asarray(y, dtype=float), self.c)

    @property
    def sup_norm(self):
        return abs(self.c)


@dataclass(frozen=True)
class ClippedLinear(ObservationFn):
    """``slope * y`` clipped to ``[-clip_at, clip_at]``."""

    slope: float
    clip_at: float

    def __call__(self, y):
        return np.clip(self.slope * np.asarray(y, dtype=float), -self.clip_at, self.clip_at)

    @property
    def sup_norm(self):
        return self.clip_at


@dataclass(frozen=True)
class IndicatorAbove(ObservationFn):
    """``level`` when the state exceeds ``threshold``, else 0."""

    threshold: float
    level: float

    def __call__(self, y):
        return np.where(np.asarray(y, dtype=float) > self.threshold, self.level, 0.0)

    @property
    def sup_norm(self):
        return abs(self.level)


@dataclass(frozen=True)
class BoundedLogistic(ObservationFn):
    """``bound * tanh(scale * y / 2)``, a smooth sigmoid in (-bound, bound)."""

    scale: float
    bound: float

    def __call__(self, y):
        return self.bound * np.tanh(0.5 * self.scale * np.asarray(y, dtype=float))

    @property
    def sup_norm(self):
        return abs(self.bound)


_H_KINDS = {
    "constant": lambda p1, bound: Constant(p1),
    "clipped-linear": lambda p1, bound: ClippedLinear(p1, bound),
    "indicator-above": lambda p1, bound: IndicatorAbove(p1, bound),
    "bounded-logistic": lambda p1, bound: BoundedLogistic(p1, bound),
}


def observation_fn(kind: str, param1: float, bound: float) -> ObservationFn:
    try:
        ctor = _H_KINDS[kind]
    except KeyError:
        raise ModelError(f"unknown observation function kind {kind!r}") from None
    return ctor(param1, bound)


# ---------------------------------------------------------------------------
# Model parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelParams:
    """Drift, jump intensity, jump law, and barrier level."""

    m: float
    lam: float
    jump: JumpLaw
    x: float


@dataclass(frozen=True)
class ValidatedParams(ModelParams):
    """A ``ModelParams`` that passed ``validate_params``.

    Downstream modules accept only this type, so a single validation

    gate covers every entry point.
    """


# Probe grid for the cdf monotonicity / range check.
_PROBE = np.concatenate([np.linspace(-50.0, 50.0, 401), [-1e9, 1e9]])


def validate_params(p: ModelParams) -> ValidatedParams:
    """Check the type invariants and return the validated record.

    Raises ``NonPositiveBarrier``, ``NegativeIntensity`` or
    ``MalformedJumpLaw``; on success the returned value is ``p`` with the
    validated marker type.
    """
    if not p.x > 0:
        raise NonPositiveBarrier(f"barrier must be positive, got {p.x}")
    if p.lam < 0:
        raise NegativeIntensity(f"jump intensity must be >= 0, got {p.lam}")
    probe = np.sort(_PROBE)
    c = np.asarray(p.jump.cdf(probe), dtype=float)
    cl = np.asarray(p.jump.cdf_left(probe), dtype=float)
    if np.any(np.diff(c) < -1e-12):
        raise MalformedJumpLaw("cdf is not nondecreasing on the probe grid")
    if c.min() < -1e-12 or c.max() > 1 + 1e-12:
        raise MalformedJumpLaw("cdf leaves [0, 1] on the probe grid")
    if np.any(cl > c + 1e-12):
        raise MalformedJumpLaw("cdf_left exceeds cdf on the probe grid")
    return ValidatedParams(m=p.m, lam=p.lam, jump=p.jump, x=p.x)


def is_default_certain(p: ModelParams) -> bool:
    """Whether the barrier is reached almost surely.

    Follows the finiteness criterion for the passage time: with jumps
    present the test is ``m + E[Y] >= 0``; with no jumps it is ``m >= 0``.
    Requires a finite jump mean.
    """
    if p.lam == 0:
        return p.m >= 0
    mu = p.jump.mean
    if not math.isfinite(mu):
        raise InfiniteJumpMean("jump law has non-finite mean")
    return p.m + mu >= 0


def levy_mean_rate(p: ModelParams) -> float:
    """Mean drift of the process per unit time, ``m + lam * E[Y]``."""
    if p.lam == 0:
        return p.m
    return p.m + p.lam * p.jump.mean


# ---------------------------------------------------------------------------
# Config files: flat "key = value" text
# ---------------------------------------------------------------------------

_JUMP_NPARAMS = {
    "point-mass": 1,
    "exponential": 1,
    "negated-exponential": 1,
    "gaussian": 2,
    "two-point": 3,
}


def parse_config(text: str) -> dict[str, str]:
    """Parse flat ``key = value`` lines; '#' starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ModelError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(path: str | Path) -> tuple[ValidatedParams, ObservationFn | None]:
    """Read model parameters (and the observation function, if given).

    Keys: ``m``, ``lambda``, ``jump.kind``, ``jump.param1`` [.., ``jump.param3``],
    ``barrier``, and optionally ``h.kind``, ``h.param1``, ``h.bound``.
    """
    kv = parse_config(Path(path).read_text())
    try:
        kind = kv["jump.kind"]
        nparams = _JUMP_NPARAMS.get(kind)
        if nparams is None:
            raise MalformedJumpLaw(f"unknown jump law kind {kind!r}")
        jparams = [float(kv[f"jump.param{i + 1}"]) for i in range(nparams)]
        params = ModelParams(
            m=float(kv["m"]),
            lam=float(kv["lambda"]),
            jump=jump_law(kind, *jparams),
            x=float(kv["barrier"]),
        )
    except KeyError as e:
        raise ModelError(f"config missing key {e.args[0]!r}") from None
    h = None
    if "h.kind" in kv:
        h = observation_fn(kv["h.kind"], float(kv["h.param1"]), float(kv["h.bound"]))
    return validate_params(params), h


def params_to_dict(p: ModelParams, h: ObservationFn | None = None) -> dict:
    """JSON-friendly description of params (for run manifests)."""
    jump = p.jump
    d = {
        "m": p.m,
        "lambda": p.lam,
        "jump": {"kind": type(jump).__name__, **{k: v for k, v in vars(jump).items() if not k.startswith("_")}},
        "barrier": p.x,
    }
    if h is not None:
        d["h"] = {"kind": type(h).__name__, **vars(h), "sup_norm": h.sup_norm}
    return d


def with_barrier(p: ValidatedParams, z: float) -> ValidatedParams:
    """Same dynamics, fresh barrier ``z`` (spatial homogeneity helper)."""
    return validate_params(replace(p, x=z))
