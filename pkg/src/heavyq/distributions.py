"""Heavy-tailed and auxiliary distributions for workload models.

Four families are supported: Pareto (the concrete regularly-varying family,
with a hard lower cutoff so the tail is an exact power law), Exponential,
Deterministic, and finite Mixtures of these.  Each distribution exposes
moments, an exact complementary CDF, inverse-transform sampling from a
caller-owned ``numpy.random.Generator``, and its residual-lifetime (excess)
distribution in closed form.

Tail-constant convention
------------------------
``tail_constant()`` returns ``(C, nu)`` such that

    P(X > x) ~ -C / Gamma(1 - nu) * x**(-nu)    as x -> infinity,

i.e. ``C = -Gamma(1 - nu) * a`` when ``P(X > x) ~ a * x**(-nu)``.  With this
convention the small-argument expansion of the Laplace-Stieltjes transform of
a finite-mean variable reads ``E[exp(-w X)] - 1 + E[X] w = C w**nu + o(w**nu)``
for ``nu`` in (1, 2), which is the form all workload constants in
:mod:`heavyq.asymptotics` are built from.  Note that C changes sign with the
integer part of ``nu``; it is positive precisely for ``nu`` in (1, 2).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as _gamma

__all__ = [
    "Pareto",
    "Exponential",
    "Deterministic",
    "Mixture",
    "ParetoResidual",
    "UniformResidual",
    "QuadratureError",
    "lst_numeric",
    "positive_stable_sample",
    "parse_kv",
    "dist_from_dict",
]


class QuadratureError(RuntimeError):
    """Raised when the LST quadrature cannot certify the requested accuracy."""

    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


def _as_out(x, values):
    values = np.asarray(values, dtype=float)
    return values if np.ndim(x) else float(values)


def _uniforms(rng: np.random.Generator, size):
    # (0, 1] draws: avoids the u=0 singularity of inverse power transforms.
    return 1.0 - rng.random(size)


def _paper_tail_constant(raw: float, nu: float) -> tuple[float, float]:
    if abs(nu - round(nu)) < 1e-12:
        raise ValueError(f"tail index nu={nu} at an integer is outside the transform convention")
    return -_gamma(1.0 - nu) * raw, nu


# ---------------------------------------------------------------------------
# base families


@dataclass(frozen=True)
class Pareto:
    """Pareto with scale ``x_m`` and tail index ``nu``: P(X > x) = (x_m/x)**nu for x >= x_m."""

    x_m: float
    nu: float

    family = "pareto"

    def __post_init__(self):
        if not self.x_m > 0:
            raise ValueError(f"pareto scale must be positive, got {self.x_m}")
        if not self.nu > 1:
            raise ValueError(f"pareto tail index must exceed 1 for a finite mean, got {self.nu}")

    def mean(self) -> float:
        return self.nu * self.x_m / (self.nu - 1.0)

    def second_moment(self) -> float:
        if self.nu <= 2.0:
            return math.inf
        return self.nu * self.x_m**2 / (self.nu - 2.0)

    def third_moment(self) -> float:
        if self.nu <= 3.0:
            return math.inf
        return self.nu * self.x_m**3 / (self.nu - 3.0)

    def ccdf(self, x):
        xa = np.asarray(x, dtype=float)
        return _as_out(x, np.where(xa < self.x_m, 1.0, (self.x_m / np.maximum(xa, self.x_m)) ** self.nu))

    def cdf(self, x):
        return _as_out(x, 1.0 - np.asarray(self.ccdf(x)))

    def ppf_tail(self, u):
        """x such that P(X > x) = u, for u in (0, 1]."""
        ua = np.asarray(u, dtype=float)
        return _as_out(u, self.x_m * ua ** (-1.0 / self.nu))

    def sample(self, rng: np.random.Generator, size=None):
        return self.ppf_tail(_uniforms(rng, size))

    def tail_constant(self) -> tuple[float, float]:
        return _paper_tail_constant(self.x_m**self.nu, self.nu)

    def residual(self) -> "ParetoResidual":
        return ParetoResidual(self.x_m, self.nu)

    def scaled(self, c: float) -> "Pareto":
        if not c > 0:
            raise ValueError("scale factor must be positive")
        return Pareto(c * self.x_m, self.nu)

    def _lst_knots(self):
        return (self.x_m,)

    def as_dict(self) -> dict:
        return {"family": "pareto", "x_m": self.x_m, "nu": self.nu}


@dataclass(frozen=True)
class Exponential:
    rate: float

    family = "exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"exponential rate must be positive, got {self.rate}")

    def mean(self) -> float:
        return 1.0 / self.rate

    def second_moment(self) -> float:
        return 2.0 / self.rate**2

    def third_moment(self) -> float:
        return 6.0 / self.rate**3

    def ccdf(self, x):
        xa = np.asarray(x, dtype=float)
        return _as_out(x, np.exp(-self.rate * np.maximum(xa, 0.0)))

    def cdf(self, x):
        return _as_out(x, 1.0 - np.asarray(self.ccdf(x)))

    def ppf_tail(self, u):
        ua = np.asarray(u, dtype=float)
        return _as_out(u, -np.log(ua) / self.rate)

    def sample(self, rng: np.random.Generator, size=None):
        return self.ppf_tail(_uniforms(rng, size))

    def tail_constant(self) -> tuple[float, float]:
        raise ValueError("exponential distribution has no power tail")

    def residual(self) -> "Exponential":
        # memorylessness: the excess of an exponential is the same exponential
        return self

    def scaled(self, c: float) -> "Exponential":
        if not c > 0:
            raise ValueError("scale factor must be positive")
        return Exponential(self.rate / c)

    def _lst_knots(self):
        return ()

    def as_dict(self) -> dict:
        return {"family": "exponential", "rate": self.rate}


@dataclass(frozen=True)
class Deterministic:
    value: float

    family = "deterministic"

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError(f"deterministic value must be positive, got {self.value}")

    def mean(self) -> float:
        return self.value

    def second_moment(self) -> float:
        return self.value**2

    def third_moment(self) -> float:
        return self.value**3

    def ccdf(self, x):
        xa = np.asarray(x, dtype=float)
        return _as_out(x, np.where(xa < self.value, 1.0, 0.0))

    def cdf(self, x):
        return _as_out(x, 1.0 - np.asarray(self.ccdf(x)))

    def ppf_tail(self, u):
        return _as_out(u, np.full_like(np.asarray(u, dtype=float), self.value))

    def sample(self, rng: np.random.Generator, size=None):
        _uniforms(rng, size)  # consume one draw per sample to keep stream alignment
        if size is None:
            return self.value
        return np.full(int(size), self.value)

    def tail_constant(self) -> tuple[float, float]:
        raise ValueError("deterministic distribution has no power tail")

    def residual(self) -> "UniformResidual":
        return UniformResidual(self.value)

    def scaled(self, c: float) -> "Deterministic":
        if not c > 0:
            raise ValueError("scale factor must be positive")
        return Deterministic(c * self.value)

    def _lst_knots(self):
        return (self.value,)

    def as_dict(self) -> dict:
        return {"family": "deterministic", "value": self.value}


@dataclass(frozen=True)
class Mixture:
    """Finite mixture with explicit weights; ``components`` is ((w, dist), ...)."""

    components: tuple

    family = "mixture"

    def __post_init__(self):
        comps = tuple((float(w), d) for w, d in self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        total = sum(w for w, _ in comps)
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-9):
            raise ValueError(f"mixture weights must sum to 1, got {total}")
        if any(w <= 0 for w, _ in comps):
            raise ValueError("mixture weights must be positive")
        comps = tuple((w / total, d) for w, d in comps)
        object.__setattr__(self, "components", comps)

    def mean(self) -> float:
        return sum(w * d.mean() for w, d in self.components)

    def second_moment(self) -> float:
        return sum(w * d.second_moment() for w, d in self.components)

    def third_moment(self) -> float:
        return sum(w * d.third_moment() for w, d in self.components)

    def ccdf(self, x):
        xa = np.asarray(x, dtype=float)
        out = np.zeros_like(xa)
        for w, d in self.components:
            out = out + w * np.asarray(d.ccdf(xa))
        return _as_out(x, out)

    def cdf(self, x):
        return _as_out(x, 1.0 - np.asarray(self.ccdf(x)))

    def sample(self, rng: np.random.Generator, size=None):
        if size is None:
            return float(self.sample(rng, 1)[0])
        n = int(size)
        weights = np.array([w for w, _ in self.components])
        idx = rng.choice(len(self.components), size=n, p=weights)
        out = np.empty(n)
        for i, (_, d) in enumerate(self.components):
            mask = idx == i
            cnt = int(mask.sum())
            if cnt:
                out[mask] = d.sample(rng, cnt)
        return out

    def tail_constant(self) -> tuple[float, float]:
        """Weighted constant of the heaviest power-tailed component(s)."""
        tails = []
        for w, d in self.components:
            try:
                c, nu = d.tail_constant()
            except ValueError:
                continue
            tails.append((w, c, nu))
        if not tails:
            raise ValueError("mixture has no power-tailed component")
        nu_min = min(nu for _, _, nu in tails)
        c_total = sum(w * c for w, c, nu in tails if abs(nu - nu_min) < 1e-12)
        return c_total, nu_min

    def residual(self) -> "Mixture":
        # excess of a mixture: residual components reweighted by w_i * mean_i / mean
        beta = self.mean()
        comps = tuple((w * d.mean() / beta, d.residual()) for w, d in self.components)
        return Mixture(comps)

    def scaled(self, c: float) -> "Mixture":
        return Mixture(tuple((w, d.scaled(c)) for w, d in self.components))

    def _lst_knots(self):
        knots = set()
        for _, d in self.components:
            knots.update(d._lst_knots())
        return tuple(sorted(knots))

    def as_dict(self) -> dict:
        return {
            "family": "mixture",
            "components": [dict(weight=w, **d.as_dict()) for w, d in self.components],
        }


# ---------------------------------------------------------------------------
# residual-lifetime distributions


@dataclass(frozen=True)
class ParetoResidual:
    """Excess distribution of Pareto(x_m, nu); piecewise linear/power, finite mean iff nu > 2."""

    x_m: float
    nu: float

    family = "pareto-residual"

    @property
    def base(self) -> Pareto:
        return Pareto(self.x_m, self.nu)

    def mean(self) -> float:
        if self.nu <= 2.0:
            return math.inf
        # E[X^r] = E[X^2] / (2 E[X])
        return self.x_m * (self.nu - 1.0) / (2.0 * (self.nu - 2.0))

    def second_moment(self) -> float:
        if self.nu <= 3.0:
            return math.inf
        return self.x_m**2 * (self.nu - 1.0) / (3.0 * (self.nu - 3.0))

    def ccdf(self, x):
        xa = np.asarray(x, dtype=float)
        below = 1.0 - (self.nu - 1.0) * np.clip(xa, 0.0, self.x_m) / (self.nu * self.x_m)
        above = (self.x_m / np.maximum(xa, self.x_m)) ** (self.nu - 1.0) / self.nu
        return _as_out(x, np.where(xa <= self.x_m, below, above))

    def cdf(self, x):
        return _as_out(x, 1.0 - np.asarray(self.ccdf(x)))

    def ppf_tail(self, u):
        ua = np.asarray(u, dtype=float)
        linear = self.nu * self.x_m * (1.0 - ua) / (self.nu - 1.0)
        power = self.x_m * np.maximum(self.nu * ua, 1e-300) ** (-1.0 / (self.nu - 1.0))
        return _as_out(u, np.where(ua >= 1.0 / self.nu, linear, power))

    def sample(self, rng: np.random.Generator, size=None):
        return self.ppf_tail(_uniforms(rng, size))

    def tail_constant(self) -> tuple[float, float]:
        return _paper_tail_constant(self.x_m ** (self.nu - 1.0) / self.nu, self.nu - 1.0)

    def scaled(self, c: float) -> "ParetoResidual":
        if not c > 0:
            raise ValueError("scale factor must be positive")
        return ParetoResidual(c * self.x_m, self.nu)

    def _lst_knots(self):
        return (self.x_m,)

    def as_dict(self) -> dict:
        return {"family": "pareto-residual", "x_m": self.x_m, "nu": self.nu}


@dataclass(frozen=True)
class UniformResidual:
    """Excess distribution of Deterministic(high): uniform on [0, high]."""

    high: float

    family = "uniform-residual"

    def mean(self) -> float:
        return self.high / 2.0

    def second_moment(self) -> float:
        return self.high**2 / 3.0

    def ccdf(self, x):
        xa = np.asarray(x, dtype=float)
        return _as_out(x, np.clip(1.0 - xa / self.high, 0.0, 1.0))

    def cdf(self, x):
        return _as_out(x, 1.0 - np.asarray(self.ccdf(x)))

    def ppf_tail(self, u):
        ua = np.asarray(u, dtype=float)
        return _as_out(u, self.high * (1.0 - ua))

    def sample(self, rng: np.random.Generator, size=None):
        return self.ppf_tail(_uniforms(rng, size))

    def tail_constant(self) -> tuple[float, float]:
        raise ValueError("uniform residual has no power tail")

    def scaled(self, c: float) -> "UniformResidual":
        if not c > 0:
            raise ValueError("scale factor must be positive")
        return UniformResidual(c * self.high)

    def _lst_knots(self):
        return (self.high,)

    def as_dict(self) -> dict:
        return {"family": "uniform-residual", "high": self.high}


# ---------------------------------------------------------------------------
# numeric LST and stable sampling


def lst_numeric(rv, omega: float, tol: float = 1e-10) -> float:
    """E[exp(-omega X)] by adaptive quadrature on the ccdf.

    Uses integration by parts, ``LST = 1 - omega * int_0^inf exp(-omega x)
    ccdf(x) dx``, rescaled to ``1 - int_0^inf exp(-t) ccdf(t/omega) dt`` so the
    integrand is O(1)-scaled for any omega.  Working on the ccdf (not a
    density) keeps the Deterministic family, which has no density, on the same
    code path.  Raises :class:`QuadratureError` if the quadrature cannot
    certify absolute error ``tol``.
    """
    omega = float(omega)
    if omega < 0:
        raise ValueError("omega must be nonnegative")
    if omega == 0.0:
        return 1.0

    def integrand(t):
        return math.exp(-t) * float(rv.ccdf(t / omega))

    knots = sorted(k * omega for k in rv._lst_knots() if k > 0)
    points = [0.0] + [k for k in knots if k < 60.0] + [60.0]
    total = 0.0
    err = 0.0
    for a, b in zip(points[:-1], points[1:]):
        val, e = quad(integrand, a, b, epsabs=tol / 4, epsrel=1e-12, limit=200)
        total += val
        err += e
    val, e = quad(integrand, points[-1], np.inf, epsabs=tol / 4, epsrel=1e-12, limit=200)
    total += val
    err += e
    if err > tol:
        raise QuadratureError(
            f"LST quadrature achieved absolute error {err:.3e} > tol {tol:.3e}", achieved=err
        )
    return 1.0 - total


def positive_stable_sample(alpha: float, rng: np.random.Generator, size=None):
    """Sample the positive stable law with LST exp(-omega**alpha), alpha in (0, 1).

    Kanter's representation: S = (A(pi U) / E)**((1-alpha)/alpha) with U
    uniform, E unit exponential and A the Zolotarev function

        A(t) = [sin(alpha t)**alpha * sin((1-alpha) t)**(1-alpha) / sin(t)]**(1/(1-alpha)).

    Evaluated in log space; U is drawn in (0, 1] so sin never vanishes exactly.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    theta = np.pi * _uniforms(rng, size)
    e = np.maximum(-np.log(_uniforms(rng, size)), 1e-300)
    log_a_scaled = (
        alpha * np.log(np.sin(alpha * theta))
        + (1.0 - alpha) * np.log(np.sin((1.0 - alpha) * theta))
        - np.log(np.sin(theta))
    )
    # log_a_scaled = (1-alpha) * log A(theta)
    out = np.exp((log_a_scaled - (1.0 - alpha) * np.log(e)) / alpha)
    return out if size is not None else float(out)


# ---------------------------------------------------------------------------
# key-value text form (CLI / config)

_FAMILIES = {
    "pareto": Pareto,
    "exponential": Exponential,
    "deterministic": Deterministic,
    "pareto-residual": ParetoResidual,
    "uniform-residual": UniformResidual,
}

_MIX_TERM = re.compile(r"^\s*([0-9.eE+-]+)\s*\*\s*(\w[\w-]*)\(([^()]*)\)\s*$")


def dist_kv(d) -> str:
    """Serialize a distribution as key-value text, e.g. ``pareto:x_m=1,nu=1.5``."""
    spec = d.as_dict()
    family = spec.pop("family")
    if family == "mixture":
        terms = []
        for comp in spec["components"]:
            w = comp.pop("weight")
            fam = comp.pop("family")
            args = ",".join(f"{k}={v:g}" for k, v in comp.items())
            terms.append(f"{w:g}*{fam}({args})")
        return "mixture(" + "+".join(terms) + ")"
    return family + ":" + ",".join(f"{k}={v:g}" for k, v in spec.items())


def parse_kv(text: str):
    """Parse the key-value text form produced by :func:`dist_kv`."""
    text = text.strip()
    if text.startswith("mixture(") and text.endswith(")"):
        body = text[len("mixture(") : -1]
        comps = []
        for term in body.split("+"):
            m = _MIX_TERM.match(term)
            if m is None:
                raise ValueError(f"cannot parse mixture term {term!r}")
            weight, family, args = m.groups()
            comps.append((float(weight), _parse_flat(family, args)))
        return Mixture(tuple(comps))
    if ":" in text:
        family, args = text.split(":", 1)
        return _parse_flat(family.strip(), args)
    m = re.match(r"^(\w[\w-]*)\(([^()]*)\)$", text)
    if m is not None:
        return _parse_flat(m.group(1), m.group(2))
    raise ValueError(f"cannot parse distribution spec {text!r}")


def _parse_flat(family: str, args: str):
    cls = _FAMILIES.get(family)
    if cls is None:
        raise ValueError(f"unknown distribution family {family!r}")
    kwargs = {}
    for piece in args.split(","):
        piece = piece.strip()
        if not piece:
            continue
        key, _, value = piece.partition("=")
        kwargs[key.strip()] = float(value)
    return cls(**kwargs)


def dist_from_dict(spec: dict):
    """Build a distribution from its ``as_dict`` form (used by TOML configs)."""
    spec = dict(spec)
    family = spec.pop("family")
    if family == "mixture":
        comps = []
        for comp in spec["components"]:
            comp = dict(comp)
            w = comp.pop("weight")
            comps.append((float(w), dist_from_dict(comp)))
        return Mixture(tuple(comps))
    cls = _FAMILIES.get(family)
    if cls is None:
        raise ValueError(f"unknown distribution family {family!r}")
    return cls(**{k: float(v) for k, v in spec.items()})
