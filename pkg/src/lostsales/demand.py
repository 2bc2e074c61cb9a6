"""One-period demand distributions and lead-time convolutions.

Five demand families are supported: Poisson, geometric (on {0,1,2,...}),
exponential, Mixed Erlang (a random number K of i.i.d. exponential phases
with a common rate), and deterministic.  Mixed-Erlang models can be fitted
to a target mean and coefficient of variation with a two-moment fit; the
fit always produces a phase-count distribution on at most two points.

All models are immutable value objects.  Samplers take an explicit numpy
``Generator`` so that random streams are controlled by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import special, stats

from .errors import ParameterError

PMF_TAIL = 1e-12  # integer pmf supports are cut where the remaining tail is below this


@dataclass(frozen=True)
class MomentTarget:
    """Target mean and coefficient of variation for a two-moment fit."""

    mean: float
    cv: float

    def __post_init__(self):
        if self.mean <= 0:
            raise ParameterError(f"mean must be positive, got {self.mean}")
        if self.cv <= 0:
            raise ParameterError(f"cv must be positive, got {self.cv}")


class DemandModel:
    """Common interface of all one-period demand distributions.

    Subclasses provide ``mean``, ``var``, ``cdf``, ``quantile``, ``loss``
    (the partial expectation ``E[(D-x)^+]``) and ``sample``.  Integer-valued
    models additionally expose a truncated ``pmf_array``.
    """

    kind: str = "abstract"
    integer_valued: bool = False

    @property
    def mean(self) -> float:
        raise NotImplementedError

    @property
    def var(self) -> float:
        raise NotImplementedError

    @property
    def cv(self) -> float:
        return math.sqrt(self.var) / self.mean

    def cdf(self, x):
        raise NotImplementedError

    def loss(self, x):
        """Partial expectation E[(D - x)^+]."""
        raise NotImplementedError

    def quantile(self, u: float):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def pmf_array(self) -> np.ndarray:
        raise ParameterError(f"{self.kind} demand has no integer pmf")

    def lead_time_total(self, periods: int) -> "DemandModel":
        """Distribution of the sum of ``periods`` i.i.d. copies of this demand."""
        raise NotImplementedError

    def spec_string(self) -> str:
        raise NotImplementedError


def _truncated_pmf(pmf_fn, sf_fn, mean: float, var: float) -> np.ndarray:
    """Truncate an integer pmf where the remaining tail drops below PMF_TAIL."""
    hi = int(math.ceil(mean + 10.0 * math.sqrt(var) + 20.0))
    while sf_fn(hi) > PMF_TAIL:
        hi = int(hi * 1.5) + 10
    k = np.arange(hi + 1)
    pmf = pmf_fn(k)
    return pmf / pmf.sum()


class _IntegerDemand(DemandModel):
    """Shared machinery for integer-valued models backed by a truncated pmf."""

    integer_valued = True

    @cached_property
    def _pmf(self) -> np.ndarray:
        raise NotImplementedError

    @cached_property
    def tail_mass(self) -> float:
        raise NotImplementedError

    def pmf_array(self) -> np.ndarray:
        return self._pmf

    @cached_property
    def _cdf_arr(self) -> np.ndarray:
        return np.cumsum(self._pmf)

    @cached_property
    def _loss_tables(self):
        # suffix sums used by loss(): St[c] = sum_{d>=c} d*p_d, Sp[c] = sum_{d>=c} p_d
        p = self._pmf
        d = np.arange(p.size)
        st = np.concatenate([np.cumsum((d * p)[::-1])[::-1], [0.0]])
        sp = np.concatenate([np.cumsum(p[::-1])[::-1], [0.0]])
        return st, sp

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.floor(x).astype(int), -1, self._pmf.size - 1)
        out = np.where(idx < 0, 0.0, self._cdf_arr[np.maximum(idx, 0)])
        return out if out.ndim else float(out)

    def loss(self, x):
        st, sp = self._loss_tables
        x = np.asarray(x, dtype=float)
        c = np.clip(np.floor(x).astype(int) + 1, 0, self._pmf.size)
        out = st[c] - x * sp[c]
        return out if out.ndim else float(out)

    def quantile(self, u: float) -> float:
        if not 0.0 < u < 1.0:
            raise ParameterError(f"quantile level must be in (0,1), got {u}")
        return float(np.searchsorted(self._cdf_arr, u, side="left"))


@dataclass(frozen=True)
class Poisson(_IntegerDemand):
    rate: float
    kind = "poisson"

    def __post_init__(self):
        if self.rate <= 0:
            raise ParameterError(f"Poisson mean must be positive, got {self.rate}")

    @property
    def mean(self) -> float:
        return self.rate

    @property
    def var(self) -> float:
        return self.rate

    @cached_property
    def _pmf(self) -> np.ndarray:
        return _truncated_pmf(
            lambda k: stats.poisson.pmf(k, self.rate),
            lambda k: stats.poisson.sf(k, self.rate),
            self.rate,
            self.rate,
        )

    @cached_property
    def tail_mass(self) -> float:
        return float(stats.poisson.sf(self._pmf.size - 1, self.rate))

    def sample(self, rng, size):
        return rng.poisson(self.rate, size).astype(np.float64)

    def lead_time_total(self, periods: int) -> "Poisson":
        _check_periods(periods)
        return Poisson(self.rate * periods)

    def spec_string(self) -> str:
        return f"poisson:mean={_fmt(self.rate)}"


@dataclass(frozen=True)
class Geometric(_IntegerDemand):
    """Geometric demand on {0,1,2,...} with P(D=k) = (1-beta) * beta^k."""

    mean_: float
    kind = "geometric"

    def __post_init__(self):
        if self.mean_ <= 0:
            raise ParameterError(f"geometric mean must be positive, got {self.mean_}")

    @property
    def beta(self) -> float:
        return self.mean_ / (1.0 + self.mean_)

    @property
    def mean(self) -> float:
        return self.mean_

    @property
    def var(self) -> float:
        b = self.beta
        return b / (1.0 - b) ** 2

    @cached_property
    def _pmf(self) -> np.ndarray:
        b = self.beta
        return _truncated_pmf(
            lambda k: (1.0 - b) * b**k,
            lambda k: b ** (k + 1.0),
            self.mean_,
            self.var,
        )

    @cached_property
    def tail_mass(self) -> float:
        return float(self.beta**self._pmf.size)

    def sample(self, rng, size):
        # numpy counts trials until first success; shift to failures before success
        return (rng.geometric(1.0 - self.beta, size) - 1).astype(np.float64)

    def lead_time_total(self, periods: int) -> "DemandModel":
        _check_periods(periods)
        if periods == 1:
            return self
        return NegativeBinomial(periods, self.beta)

    def spec_string(self) -> str:
        return f"geometric:mean={_fmt(self.mean_)}"


@dataclass(frozen=True)
class NegativeBinomial(_IntegerDemand):
    """Sum of ``n`` i.i.d. geometric demands; produced by lead-time convolution."""

    n: int
    beta: float
    kind = "negative_binomial"

    @property
    def mean(self) -> float:
        return self.n * self.beta / (1.0 - self.beta)

    @property
    def var(self) -> float:
        return self.n * self.beta / (1.0 - self.beta) ** 2

    @cached_property
    def _pmf(self) -> np.ndarray:
        s = 1.0 - self.beta
        return _truncated_pmf(
            lambda k: stats.nbinom.pmf(k, self.n, s),
            lambda k: stats.nbinom.sf(k, self.n, s),
            self.mean,
            self.var,
        )

    @cached_property
    def tail_mass(self) -> float:
        return float(stats.nbinom.sf(self._pmf.size - 1, self.n, 1.0 - self.beta))

    def sample(self, rng, size):
        return rng.negative_binomial(self.n, 1.0 - self.beta, size).astype(np.float64)

    def lead_time_total(self, periods: int) -> "NegativeBinomial":
        _check_periods(periods)
        return NegativeBinomial(self.n * periods, self.beta)

    def spec_string(self) -> str:
        return f"nbinom:n={self.n},beta={_fmt(self.beta)}"


@dataclass(frozen=True)
class MixedErlang(DemandModel):
    """Sum of K i.i.d. exponential phases with rate ``lam``; K has pmf ``theta``.

    ``theta`` is indexed from 0; entry k is P(K = k).  The support must be
    finite and the entries must sum to one.
    """

    lam: float
    theta: tuple
    kind = "mixed_erlang"

    def __post_init__(self):
        if self.lam <= 0:
            raise ParameterError(f"phase rate must be positive, got {self.lam}")
        th = np.asarray(self.theta, dtype=float)
        if th.ndim != 1 or th.size == 0:
            raise ParameterError("theta must be a non-empty 1-d pmf")
        if np.any(th < 0):
            raise ParameterError("theta entries must be non-negative")
        if abs(th.sum() - 1.0) > 1e-12:
            raise ParameterError(f"theta must sum to 1, got {th.sum()!r}")

    @cached_property
    def theta_arr(self) -> np.ndarray:
        return np.asarray(self.theta, dtype=float)

    @property
    def k_max(self) -> int:
        return int(np.flatnonzero(self.theta_arr)[-1])

    @cached_property
    def mean_k(self) -> float:
        return float(np.arange(self.theta_arr.size) @ self.theta_arr)

    @cached_property
    def var_k(self) -> float:
        k = np.arange(self.theta_arr.size)
        return float((k * k) @ self.theta_arr - self.mean_k**2)

    @property
    def mean(self) -> float:
        return self.mean_k / self.lam

    @property
    def var(self) -> float:
        return (self.mean_k + self.var_k) / self.lam**2

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        ks = np.flatnonzero(self.theta_arr)
        out = np.zeros(x.shape)
        for k in ks:
            if k == 0:
                out += self.theta_arr[0]
            else:
                out += self.theta_arr[k] * special.gammainc(k, self.lam * np.maximum(x, 0.0))
        out = np.where(x < 0, 0.0, out)
        return out if out.ndim else float(out)

    def loss(self, x):
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        out = np.zeros(x.shape)
        for k in np.flatnonzero(self.theta_arr):
            if k == 0:
                continue
            tail_mean = special.gammaincc(k + 1, self.lam * xp) * (k / self.lam)
            tail_prob = special.gammaincc(k, self.lam * xp)
            out += self.theta_arr[k] * (tail_mean - xp * tail_prob)
        out = np.where(x < 0, out + (0.0 - x), out)
        return out if out.ndim else float(out)

    def quantile(self, u: float) -> float:
        if not 0.0 < u < 1.0:
            raise ParameterError(f"quantile level must be in (0,1), got {u}")
        if u <= self.theta_arr[0]:
            return 0.0
        hi = self.mean + 10.0 * math.sqrt(self.var) + 1.0
        while self.cdf(hi) < u:
            hi *= 2.0
        from scipy.optimize import brentq

        return float(brentq(lambda x: self.cdf(x) - u, 0.0, hi, xtol=1e-12))

    def sample(self, rng, size):
        ks = np.searchsorted(np.cumsum(self.theta_arr), rng.random(size), side="right")
        return rng.standard_gamma(ks.astype(np.float64)) / self.lam

    def lead_time_total(self, periods: int) -> "MixedErlang":
        _check_periods(periods)
        th = self.theta_arr
        out = th
        for _ in range(periods - 1):
            out = np.convolve(out, th)
        return MixedErlang(self.lam, tuple(out))

    def spec_string(self) -> str:
        return f"me:mean={_fmt(self.mean)},cv={_fmt(self.cv)}"


def Exponential(mean: float) -> MixedErlang:
    """Exponential demand, represented as a single-phase Mixed Erlang."""
    if mean <= 0:
        raise ParameterError(f"exponential mean must be positive, got {mean}")
    return MixedErlang(1.0 / mean, (0.0, 1.0))


@dataclass(frozen=True)
class Deterministic(DemandModel):
    value: float
    kind = "deterministic"

    def __post_init__(self):
        if self.value <= 0:
            raise ParameterError(f"deterministic demand must be positive, got {self.value}")

    @property
    def integer_valued(self) -> bool:  # type: ignore[override]
        return float(self.value).is_integer()

    @property
    def mean(self) -> float:
        return self.value

    @property
    def var(self) -> float:
        return 0.0

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x >= self.value, 1.0, 0.0)
        return out if out.ndim else float(out)

    def loss(self, x):
        x = np.asarray(x, dtype=float)
        out = np.maximum(self.value - x, 0.0)
        return out if out.ndim else float(out)

    def quantile(self, u: float) -> float:
        if not 0.0 < u < 1.0:
            raise ParameterError(f"quantile level must be in (0,1), got {u}")
        return self.value

    def pmf_array(self) -> np.ndarray:
        if not self.integer_valued:
            raise ParameterError("non-integer deterministic demand has no integer pmf")
        p = np.zeros(int(self.value) + 1)
        p[int(self.value)] = 1.0
        return p

    @property
    def tail_mass(self) -> float:
        return 0.0

    def sample(self, rng, size):
        return np.full(size, self.value, dtype=np.float64)

    def lead_time_total(self, periods: int) -> "Deterministic":
        _check_periods(periods)
        return Deterministic(self.value * periods)

    def spec_string(self) -> str:
        return f"det:value={_fmt(self.value)}"


def make_poisson(mean: float) -> Poisson:
    return Poisson(mean)


def make_geometric(mean: float) -> Geometric:
    return Geometric(mean)


def make_exponential(mean: float) -> MixedErlang:
    return Exponential(mean)


def fit_mixed_erlang(target: MomentTarget) -> MixedErlang:
    """Fit a Mixed Erlang to a target mean and cv by two-moment matching.

    For cv^2 <= 1 this is the classical mixture of Erlang(k-1) and Erlang(k)
    with a common rate.  For cv^2 > 1 the phase count is placed on {1, k}
    with k the smallest integer for which the two-moment equations have a
    weight in [0, 1].
    """
    mean, cv = target.mean, target.cv
    cv2 = cv * cv
    if cv2 <= 1.0:
        k = max(1, math.ceil(1.0 / cv2 - 1e-12))
        disc = k * (1.0 + cv2) - k * k * cv2
        q = (k * cv2 - math.sqrt(max(disc, 0.0))) / (1.0 + cv2)
        lam = (k - q) / mean
        theta = np.zeros(k + 1)
        theta[k] = 1.0 - q
        if k >= 1:
            theta[k - 1] = q
        return MixedErlang(lam, tuple(theta))
    # cv^2 > 1: two-point phase count on {1, k}
    k = 2
    while True:
        disc = (k + 2.0) ** 2 - 4.0 * k * (1.0 + cv2)
        if disc >= 0.0:
            ek = ((k + 2.0) + math.sqrt(disc)) / (2.0 * (1.0 + cv2))
            w = (k - ek) / (k - 1.0)
            if 1.0 <= ek <= k and 0.0 <= w <= 1.0:
                break
        k += 1
    lam = ek / mean
    theta = np.zeros(k + 1)
    theta[1] = w
    theta[k] = 1.0 - w
    return MixedErlang(lam, tuple(theta))


def convolve_lead_time(model: DemandModel, periods: int) -> DemandModel:
    """Distribution of total demand over ``periods`` i.i.d. periods.

    Exact for every shipped family: Poisson sums are Poisson, geometric sums
    are negative binomial, Mixed-Erlang sums convolve the phase-count pmf,
    and deterministic sums scale.  Other integer-valued models fall back to
    numeric pmf convolution.
    """
    _check_periods(periods)
    if hasattr(model, "lead_time_total"):
        try:
            return model.lead_time_total(periods)
        except NotImplementedError:
            pass
    if model.integer_valued:
        return _convolve_lattice(model, periods)
    raise ParameterError(f"no lead-time convolution available for {model.kind}")


@dataclass(frozen=True)
class LatticePMF(_IntegerDemand):
    """Generic integer distribution given by an explicit pmf array."""

    pmf: tuple
    kind = "lattice"

    @cached_property
    def _pmf(self) -> np.ndarray:
        return np.asarray(self.pmf, dtype=float)

    @cached_property
    def tail_mass(self) -> float:
        return 0.0

    @property
    def mean(self) -> float:
        p = self._pmf
        return float(np.arange(p.size) @ p)

    @property
    def var(self) -> float:
        p = self._pmf
        k = np.arange(p.size)
        return float((k * k) @ p - self.mean**2)

    def sample(self, rng, size):
        return np.searchsorted(self._cdf_arr, rng.random(size), side="right").astype(np.float64)

    def spec_string(self) -> str:
        return f"lattice:n={self._pmf.size}"


def _convolve_lattice(model: DemandModel, periods: int) -> LatticePMF:
    base = model.pmf_array()
    out = base
    for _ in range(periods - 1):
        out = np.convolve(out, base)
    return LatticePMF(tuple(out))


def _check_periods(periods: int):
    if periods < 1 or int(periods) != periods:
        raise ParameterError(f"periods must be a positive integer, got {periods}")


def _fmt(x: float) -> str:
    return f"{x:g}"


def parse_demand_spec(spec: str) -> DemandModel:
    """Parse a demand specification string.

    Examples: ``poisson:mean=5``, ``geometric:mean=5``, ``me:mean=100,cv=0.5``,
    ``exp:mean=100``, ``det:value=5``.
    """
    try:
        kind, _, rest = spec.partition(":")
        kv = dict(item.split("=") for item in rest.split(",")) if rest else {}
        args = {k.strip(): float(v) for k, v in kv.items()}
    except (ValueError, TypeError) as exc:
        raise ParameterError(f"malformed demand spec {spec!r}") from exc
    kind = kind.strip().lower()
    if kind == "poisson":
        return make_poisson(args["mean"])
    if kind == "geometric":
        return make_geometric(args["mean"])
    if kind == "exp":
        return make_exponential(args["mean"])
    if kind == "me":
        return fit_mixed_erlang(MomentTarget(args["mean"], args["cv"]))
    if kind == "det":
        return Deterministic(args.get("value", args.get("mean", 0.0)))
    raise ParameterError(f"unknown demand kind {kind!r}")
