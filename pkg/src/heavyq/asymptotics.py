"""Closed-form tail asymptotes, heavy-traffic scalings, and equivalence maps.

Everything here is driven by one structural device: writing the workload LST as

    E[exp(-w V)] = F(w) + G(w) / (1 + H(w)),      F(0) + G(0) = 1,  H(0) = 0,

and reading off the small-w data ``F(0) - F(w) ~ theta w^a``,
``G(0) - G(w) ~ gamma w^a``, ``H(w) ~ kappa w^a``.  For ``a`` in (0, 1) the
workload tail is then power-law,

    P(V > x) ~ c_pref / Gamma(1-a) * x^(-a),   c_pref = theta + gamma + kappa G(0),

and the same ``kappa`` sets the heavy-traffic contraction ``S = kappa^(-1/a)``
under which the scaled workload converges to a Mittag-Leffler law with
parameter ``a`` (a unit-mean exponential when ``a = 1``).

The model constructors (single-server at arbitrary speed, multi-class,
alternating service speed, heterogeneous two-server, fluid on/off) populate
these small-w data from their published transform expansions, and the
``*_reduced``/``*_ht`` helpers expose the reduced-load systems whose tails and
heavy-traffic limits provably coincide with the original model's.

Units: arrival rates and service rates are per unit time; workloads carry the
same units as service requirements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as _gamma

from .distributions import Exponential, Pareto

__all__ = [
    "LstDecomposition",
    "PowerTailAsymptote",
    "HtLimitPlan",
    "Mg1Spec",
    "Mg1SpeedSpec",
    "MultiClassSpec",
    "FluidSpec",
    "AltSpeedSpec",
    "Mg2Spec",
    "Mg2Occupancy",
    "MulticlassConstants",
    "AltSpeedConstants",
    "Mg2Constants",
    "prop1_tail",
    "mg1_decomposition",
    "mg1_speed_decomposition",
    "mg1_speed_tail",
    "fluid_tail",
    "matching_speed",
    "matched_single_server",
    "multiclass_constants",
    "altspeed_constants",
    "altspeed_refsystems",
    "refb_single_server_image",
    "altspeed_ht",
    "multiclass_ht_plan",
    "ht_plan",
    "mg1_ht_plan",
    "mg2_constants",
    "mg2_cpref_collapsed",
    "mg2_fluid_heuristic",
]

MITTAG_LEFFLER = "mittag-leffler"
UNIT_EXPONENTIAL = "unit-exponential"


def _heavy_tail(dist, what: str) -> tuple[float, float]:
    """(C, nu) of a power-tailed distribution with nu in (1,2), or raise."""
    try:
        c, nu = dist.tail_constant()
    except ValueError as exc:
        raise ValueError(f"{what} must have a power tail: {exc}") from exc
    if not 1.0 < nu < 2.0:
        raise ValueError(f"{what} tail index must lie in (1, 2), got {nu}")
    return c, nu


def _require_light(dist, what: str) -> None:
    # "lighter tail" preconditions are enforced structurally: only families
    # with no power tail at all qualify
    try:
        dist.tail_constant()
    except ValueError:
        return
    raise ValueError(f"{what} must be lighter-tailed (exponential or deterministic)")


# ---------------------------------------------------------------------------
# core value types


@dataclass(frozen=True)
class LstDecomposition:
    """Small-w data (theta, gamma, kappa, G(0)) of the three-part LST form at index alpha.

    F(0) + G(0) = 1 always; G(0) = 1 in the single-server models.  The F part
    is not a probability, so G(0) may exceed 1 (it does in the two-server
    model when the arrival rate barely exceeds the exponential server's rate).
    """

    alpha: float
    theta: float
    gamma: float
    kappa: float
    g0: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not self.g0 > 0.0:
            raise ValueError(f"G(0) must be positive, got {self.g0}")

    @property
    def f0(self) -> float:
        return 1.0 - self.g0

    @property
    def c_pref(self) -> float:
        return self.theta + self.gamma + self.kappa * self.g0


@dataclass(frozen=True)
class PowerTailAsymptote:
    """P(V > x) ~ c_pref / Gamma(1 - alpha) * x**(-alpha), alpha in (0, 1)."""

    c_pref: float
    alpha: float

    def __post_init__(self):
        if not self.c_pref > 0:
            raise ValueError(f"prefactor must be positive, got {self.c_pref}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")

    def ccdf(self, x):
        xa = np.asarray(x, dtype=float)
        out = self.c_pref / _gamma(1.0 - self.alpha) * xa ** (-self.alpha)
        return out if np.ndim(x) else float(out)

    def inverse(self, p: float) -> float:
        """x at which the asymptote evaluates to probability p."""
        if not 0.0 < p < 1.0:
            raise ValueError(f"probability must be in (0, 1), got {p}")
        return (self.c_pref / (_gamma(1.0 - self.alpha) * p)) ** (1.0 / self.alpha)


@dataclass(frozen=True)
class HtLimitPlan:
    """Heavy-traffic program: contraction scaling, limit law, and coupled rate maps.

    ``scaling**(-alpha) == kappa`` by construction.  The coupling maps satisfy

        (hat_rate_star - hat_rate(eps)) / hat_rate_star
            = zeta * (rate_star - rate(eps)) / rate_star

    for every eps, i.e. the two systems approach criticality with relative
    slacks in the fixed ratio ``zeta``.
    """

    alpha: float
    kappa: float
    zeta: float
    lambda_star: float
    hat_service: object
    hat_speed: float
    law: str

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not self.zeta > 0:
            raise ValueError(f"zeta must be positive, got {self.zeta}")

    @property
    def scaling(self) -> float:
        return self.kappa ** (-1.0 / self.alpha)

    @property
    def hat_lambda_star(self) -> float:
        return self.hat_speed / self.hat_service.mean()

    @property
    def slack_slope(self) -> float:
        """Coefficient s in (hat_rate_star - hat_rate(eps))/hat_rate_star = s * eps**alpha."""
        if self.alpha < 1.0:
            c, _ = self.hat_service.tail_constant()
            return c / self.hat_service.mean()
        return self.hat_service.second_moment() / (2.0 * self.hat_service.mean())

    def lambda_eps(self, eps):
        ea = np.asarray(eps, dtype=float)
        out = self.lambda_star * (1.0 - self.slack_slope / self.zeta * ea**self.alpha)
        return out if np.ndim(eps) else float(out)

    def hat_lambda_eps(self, eps):
        ea = np.asarray(eps, dtype=float)
        out = self.hat_lambda_star * (1.0 - self.slack_slope * ea**self.alpha)
        return out if np.ndim(eps) else float(out)


# ---------------------------------------------------------------------------
# model specifications


@dataclass(frozen=True)
class Mg1Spec:
    """Single-server queue at unit speed: Poisson(lam) arrivals, generic service."""

    lam: float
    service: object

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"arrival rate must be nonnegative, got {self.lam}")
        if self.lam >= self.critical_rate:
            raise ValueError(
                f"unstable: arrival rate {self.lam} >= critical rate {self.critical_rate}"
            )

    @property
    def beta(self) -> float:
        return self.service.mean()

    @property
    def rho(self) -> float:
        return self.lam * self.beta

    @property
    def critical_rate(self) -> float:
        return 1.0 / self.beta


@dataclass(frozen=True)
class Mg1SpeedSpec:
    """Single-server queue drained at speed c, workload measured in work units."""

    lam_hat: float
    c: float
    service: object

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"service speed must be positive, got {self.c}")
        if not self.lam_hat >= 0:
            raise ValueError(f"arrival rate must be nonnegative, got {self.lam_hat}")
        if self.lam_hat >= self.critical_rate:
            raise ValueError(
                f"unstable: arrival rate {self.lam_hat} >= critical rate {self.critical_rate}"
            )

    @property
    def beta_hat(self) -> float:
        return self.service.mean()

    @property
    def rho(self) -> float:
        return self.lam_hat * self.beta_hat / self.c

    @property
    def critical_rate(self) -> float:
        return self.c / self.service.mean()


@dataclass(frozen=True)
class MultiClassSpec:
    """Multi-class single-server queue; classes is ((p_i, service_i), ...)."""

    lam: float
    classes: tuple
    i0: int

    def __post_init__(self):
        if not self.classes:
            raise ValueError("need at least one class")
        total = sum(p for p, _ in self.classes)
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-9):
            raise ValueError(f"class fractions must sum to 1, got {total}")
        if not 0 <= self.i0 < len(self.classes):
            raise ValueError(f"heavy-class index {self.i0} out of range")
        if self.lam >= self.critical_rate:
            raise ValueError(
                f"unstable: arrival rate {self.lam} >= critical rate {self.critical_rate}"
            )
        _heavy_tail(self.classes[self.i0][1], "heavy-class service")
        for i, (_, svc) in enumerate(self.classes):
            if i != self.i0:
                _require_light(svc, f"class {i} service")

    @property
    def beta(self) -> float:
        return sum(p * svc.mean() for p, svc in self.classes)

    @property
    def rho(self) -> float:
        return self.lam * self.beta

    def rho_i(self, i: int) -> float:
        p, svc = self.classes[i]
        return self.lam * p * svc.mean()

    @property
    def critical_rate(self) -> float:
        return 1.0 / self.beta


@dataclass(frozen=True)
class FluidSpec:
    """Fluid queue, drain rate d, fed by one on/off source producing at rate r when on.

    Construction allows the critical boundary rho == d (useful for degenerate
    deterministic-cycle checks); the tail asymptote requires strict slack.
    """

    r: float
    d: float
    on: object
    off: object

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError(f"drain rate must be positive, got {self.d}")
        if not self.r > self.d:
            raise ValueError(f"on-rate {self.r} must exceed drain rate {self.d}")
        if self.rho > self.d:
            raise ValueError(f"unstable: mean input rate {self.rho} > drain rate {self.d}")

    @property
    def p_on(self) -> float:
        ea, eu = self.on.mean(), self.off.mean()
        return ea / (ea + eu)

    @property
    def rho(self) -> float:
        return self.p_on * self.r


@dataclass(frozen=True)
class AltSpeedSpec:
    """Single-server queue whose drain speed alternates between s_l and s_h.

    High-speed periods are exponential with rate ``nu_rate`` (mean 1/nu_rate);
    low-speed periods follow ``low``.  The tail/heavy-traffic constants assume
    positive drift at low speed (lam * beta > s_l, the regime where high-speed
    periods are essential for stability); the simulator does not.
    """

    lam: float
    service: object
    s_l: float
    s_h: float
    nu_rate: float
    low: object

    def __post_init__(self):
        if not 0 <= self.s_l <= self.s_h or not self.s_h > 0:
            raise ValueError(f"need 0 <= s_l <= s_h with s_h > 0, got {self.s_l}, {self.s_h}")
        if not self.nu_rate > 0:
            raise ValueError(f"high-period rate must be positive, got {self.nu_rate}")
        if self.lam >= self.critical_rate:
            raise ValueError(
                f"unstable: arrival rate {self.lam} >= critical rate {self.critical_rate}"
            )

    @property
    def beta(self) -> float:
        return self.service.mean()

    @property
    def delta(self) -> float:
        return self.low.mean()

    @property
    def s_bar(self) -> float:
        nd = self.nu_rate * self.delta
        return (self.s_h + nd * self.s_l) / (1.0 + nd)

    @property
    def critical_rate(self) -> float:
        return self.s_bar / self.beta

    @property
    def p_high(self) -> float:
        return 1.0 / (1.0 + self.nu_rate * self.delta)

    @property
    def low_speed_drift_positive(self) -> bool:
        return self.lam * self.beta > self.s_l


@dataclass(frozen=True)
class Mg2Spec:
    """Two heterogeneous servers, FCFS: exponential(mu) at server 1, generic at server 2."""

    lam: float
    mu: float
    service2: object

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"server-1 rate must be positive, got {self.mu}")
        if self.lam >= self.critical_rate:
            raise ValueError(
                f"unstable: arrival rate {self.lam} >= critical rate {self.critical_rate}"
            )
        if not self.lam > self.mu:
            raise ValueError(
                f"arrival rate {self.lam} must exceed mu={self.mu}; otherwise server 2 is not needed"
            )

    @property
    def beta(self) -> float:
        return self.service2.mean()

    @property
    def critical_rate(self) -> float:
        return self.mu + 1.0 / self.beta


@dataclass(frozen=True)
class Mg2Occupancy:
    """Equilibrium probabilities of the empty and single-customer states."""

    pi0: float
    pi1: float
    pi2: float

    def __post_init__(self):
        for name, v in (("pi0", self.pi0), ("pi1", self.pi1), ("pi2", self.pi2)):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a probability, got {v}")

    def identity_residual(self, spec: Mg2Spec) -> float:
        """Work-conservation identity defect; zero for exact occupancies."""
        ib = 1.0 / spec.beta
        lhs = ib * self.pi0 + spec.mu * self.pi0 + ib * self.pi1 + spec.mu * self.pi2
        return lhs - (ib + spec.mu - spec.lam)


# ---------------------------------------------------------------------------
# generic operations


def prop1_tail(d: LstDecomposition) -> PowerTailAsymptote:
    """Tail asymptote read off a decomposition; requires alpha in (0, 1)."""
    if not d.alpha < 1.0:
        raise ValueError("power-tail asymptote requires alpha < 1")
    return PowerTailAsymptote(d.c_pref, d.alpha)


def ht_plan(d: LstDecomposition, zeta: float, hat, lambda_star: float) -> HtLimitPlan:
    """Heavy-traffic plan from a decomposition: scaling kappa**(-1/alpha).

    ``hat`` is the reference single-server system (an :class:`Mg1SpeedSpec`, or
    any (service, speed) carrier) sharing the limit up to slack factor
    ``zeta``; ``lambda_star`` is the original system's critical rate.
    """
    service, speed = _hat_parts(hat)
    law = MITTAG_LEFFLER if d.alpha < 1.0 else UNIT_EXPONENTIAL
    return HtLimitPlan(
        alpha=d.alpha,
        kappa=d.kappa,
        zeta=zeta,
        lambda_star=lambda_star,
        hat_service=service,
        hat_speed=speed,
        law=law,
    )


def _hat_parts(hat):
    if isinstance(hat, Mg1SpeedSpec):
        return hat.service, hat.c
    service, speed = hat
    return service, float(speed)


# ---------------------------------------------------------------------------
# single-server queue (arbitrary speed)


def mg1_decomposition(spec: Mg1Spec) -> LstDecomposition:
    """Decomposition of the workload LST behind the Pollaczek-Khinchine formula.

    Heavy branch (service tail index nu in (1, 2)):
        alpha = nu - 1,  kappa = lam / (lam* - lam) * C / beta.
    Finite-variance branch:
        alpha = 1,       kappa = lam / (lam* - lam) * beta2 / (2 beta).
    """
    return mg1_speed_decomposition(Mg1SpeedSpec(spec.lam, 1.0, spec.service))


def mg1_speed_decomposition(spec: Mg1SpeedSpec) -> LstDecomposition:
    lam, svc = spec.lam_hat, spec.service
    beta = svc.mean()
    slack = spec.critical_rate - lam
    try:
        c, nu = svc.tail_constant()
        has_power = True
    except ValueError:
        has_power = False
    if has_power and nu < 2.0:
        if nu <= 1.0:
            raise ValueError(f"service tail index must exceed 1, got {nu}")
        kappa = lam / slack * c / beta
        return LstDecomposition(alpha=nu - 1.0, theta=0.0, gamma=0.0, kappa=kappa, g0=1.0)
    beta2 = svc.second_moment()
    if not math.isfinite(beta2):
        raise ValueError(
            "service distribution sits on the unsupported boundary: "
            "no tail index in (1, 2) and infinite second moment"
        )
    kappa = lam / slack * beta2 / (2.0 * beta)
    return LstDecomposition(alpha=1.0, theta=0.0, gamma=0.0, kappa=kappa, g0=1.0)


def mg1_speed_tail(spec: Mg1SpeedSpec) -> PowerTailAsymptote:
    """P(V > x) ~ lam C / (c - lam beta) / Gamma(2 - nu) * x**(1 - nu)."""
    _heavy_tail(spec.service, "service")
    return prop1_tail(mg1_speed_decomposition(spec))


def mg1_ht_plan(spec: Mg1Spec) -> HtLimitPlan:
    d = mg1_decomposition(spec)
    hat = (spec.service, 1.0)
    return ht_plan(d, zeta=1.0, hat=hat, lambda_star=spec.critical_rate)


# ---------------------------------------------------------------------------
# fluid queue and the matched single-server system


def fluid_tail(spec: FluidSpec) -> PowerTailAsymptote:
    """Fluid workload tail: (1-p_on) rho/(d-rho) * P(on-residual > x/(r-d)) expanded."""
    if not spec.rho < spec.d:
        raise ValueError("tail asymptote requires strict stability rho < d")
    c_a, nu = _heavy_tail(spec.on, "on-period")
    growth = spec.r - spec.d
    c_pref = (
        (1.0 - spec.p_on)
        * spec.rho
        / (spec.d - spec.rho)
        * c_a
        * growth ** (nu - 1.0)
        / spec.on.mean()
    )
    return PowerTailAsymptote(c_pref, nu - 1.0)


def matching_speed(fluid: FluidSpec, lam_hat: float) -> float:
    """Drain speed c making the matched single-server queue share the fluid tail.

    The matched system has service requirement (r - d) * A.  Equality of the
    two asymptotes then reduces to
    (1 - p_on) rho / (d - rho) = lam_hat beta_hat / (c - lam_hat beta_hat).
    """
    p_on = fluid.p_on
    if not 0.0 < p_on < 1.0:
        raise ValueError(f"p_on must be strictly inside (0, 1), got {p_on}")
    beta_hat = (fluid.r - fluid.d) * fluid.on.mean()
    return (fluid.d - p_on * fluid.rho) / (fluid.rho - p_on * fluid.rho) * lam_hat * beta_hat


def matched_single_server(fluid: FluidSpec, lam_hat: float) -> Mg1SpeedSpec:
    c = matching_speed(fluid, lam_hat)
    service = fluid.on.scaled(fluid.r - fluid.d)
    return Mg1SpeedSpec(lam_hat, c, service)


# ---------------------------------------------------------------------------
# multi-class queue


@dataclass(frozen=True)
class MulticlassConstants:
    decomposition: LstDecomposition
    reduced: Mg1SpeedSpec
    reduced_ht: Mg1SpeedSpec
    zeta: float


def multiclass_constants(spec: MultiClassSpec) -> MulticlassConstants:
    """Reduced-load data: the heavy class sees the full rate minus the light load.

    Tail-reduced system: rate p0*lam, service B0, speed 1 - sum_{i != i0} rho_i.
    Heavy-traffic-reduced system: speed lam* p0 beta0, slack factor
    zeta = beta / (p0 beta0).
    """
    p0, svc0 = spec.classes[spec.i0]
    c0, nu = _heavy_tail(svc0, "heavy-class service")
    beta0 = svc0.mean()
    beta = spec.beta
    kappa = spec.rho_i(spec.i0) / (1.0 - spec.rho) * c0 / beta0
    d = LstDecomposition(alpha=nu - 1.0, theta=0.0, gamma=0.0, kappa=kappa, g0=1.0)
    light_load = sum(spec.rho_i(i) for i in range(len(spec.classes)) if i != spec.i0)
    reduced = Mg1SpeedSpec(p0 * spec.lam, 1.0 - light_load, svc0)
    c_star = spec.critical_rate * p0 * beta0
    reduced_ht = Mg1SpeedSpec(p0 * spec.lam, c_star, svc0)
    zeta = beta / (p0 * beta0)
    return MulticlassConstants(d, reduced, reduced_ht, zeta)


def multiclass_ht_plan(spec: MultiClassSpec) -> HtLimitPlan:
    consts = multiclass_constants(spec)
    hat = (spec.classes[spec.i0][1], consts.reduced_ht.c)
    return ht_plan(consts.decomposition, consts.zeta, hat, spec.critical_rate)


# ---------------------------------------------------------------------------
# alternating service speed


@dataclass(frozen=True)
class AltSpeedConstants:
    case: str
    eta: float
    decomposition: LstDecomposition
    asymptote: PowerTailAsymptote


def _altspeed_eta(spec: AltSpeedSpec, case: str, at_critical: bool = False) -> tuple[float, float]:
    """(eta, alpha) for the requested tail case; at_critical evaluates eta at lam*."""
    nd = 1.0 + spec.nu_rate * spec.delta
    load = spec.s_bar if at_critical else spec.lam * spec.beta
    lam = spec.critical_rate if at_critical else spec.lam
    if case == "a":
        c_b, nu_b = _heavy_tail(spec.service, "service")
        _require_light(spec.low, "low-speed period")
        return lam * nd * c_b, nu_b - 1.0
    if case == "b":
        c_d, nu_d = _heavy_tail(spec.low, "low-speed period")
        _require_light(spec.service, "service")
        return spec.nu_rate * (load - spec.s_l) ** nu_d * c_d, nu_d - 1.0
    if case == "c":
        c_b, nu_b = _heavy_tail(spec.service, "service")
        c_d, nu_d = _heavy_tail(spec.low, "low-speed period")
        if abs(nu_b - nu_d) > 1e-12:
            raise ValueError(
                f"case c requires equal tail indices, got {nu_b} and {nu_d}"
            )
        eta = lam * nd * c_b + spec.nu_rate * (load - spec.s_l) ** nu_b * c_d
        return eta, nu_b - 1.0
    raise ValueError(f"case must be one of 'a', 'b', 'c', got {case!r}")


def altspeed_constants(spec: AltSpeedSpec, case: str) -> AltSpeedConstants:
    """Tail constants of the workload conditioned on the speed being high.

    kappa = eta / ((1 + nu_rate * delta) * (s_bar - lam beta)) with the
    case-dependent eta; the decomposition has theta = gamma = 0 and G(0) = 1,
    so the asymptote prefactor equals kappa.
    """
    if not spec.low_speed_drift_positive:
        raise ValueError(
            f"tail constants need lam*beta > s_l (positive low-speed drift), "
            f"got lam*beta={spec.lam * spec.beta} and s_l={spec.s_l}"
        )
    eta, alpha = _altspeed_eta(spec, case)
    nd = 1.0 + spec.nu_rate * spec.delta
    kappa = eta / (nd * (spec.s_bar - spec.lam * spec.beta))
    d = LstDecomposition(alpha=alpha, theta=0.0, gamma=0.0, kappa=kappa, g0=1.0)
    return AltSpeedConstants(case, eta, d, prop1_tail(d))


def altspeed_refsystems(spec: AltSpeedSpec) -> tuple[Mg1SpeedSpec, FluidSpec]:
    """Reference systems: (A) constant speed s_bar, customers only; (B) fluid.

    System B drains at d = s_h - lam beta and is fed by an on/off source with
    rate r = s_h - s_l whose on-periods are the low-speed periods and whose
    off-periods are the exponential high-speed periods.
    """
    ref_a = Mg1SpeedSpec(spec.lam, spec.s_bar, spec.service)
    if spec.s_h == spec.s_l:
        raise ValueError("reference system B degenerates when s_h == s_l (source rate 0)")
    ref_b = FluidSpec(
        r=spec.s_h - spec.s_l,
        d=spec.s_h - spec.lam * spec.beta,
        on=spec.low,
        off=Exponential(spec.nu_rate),
    )
    return ref_a, ref_b


def refb_single_server_image(spec: AltSpeedSpec) -> Mg1SpeedSpec:
    """Single-server image of reference system B's workload at on-period starts.

    The embedded recursion at on-starts is exactly the waiting-time recursion
    of a unit-speed queue with arrival rate nu_rate / d and service
    requirement (lam beta - s_l) * D.
    """
    if not spec.low_speed_drift_positive:
        raise ValueError("image needs lam*beta > s_l")
    d_rate = spec.s_h - spec.lam * spec.beta
    service = spec.low.scaled(spec.lam * spec.beta - spec.s_l)
    return Mg1SpeedSpec(spec.nu_rate / d_rate, 1.0, service)


def altspeed_ht(spec: AltSpeedSpec, case: str) -> HtLimitPlan:
    """Heavy-traffic plan; in case "a" it coincides with reference system A's plan.

    In case "b" the contraction uses eta evaluated at criticality,
    kappa = nu_rate (s_bar - s_l)^nu_d C_D / ((1 + nu_rate delta)(s_bar - lam beta)),
    and zeta = (1 + nu_rate delta) s_bar / (nu_rate delta (s_bar - s_l)).
    """
    consts = altspeed_constants(spec, case)
    nd = 1.0 + spec.nu_rate * spec.delta
    if case == "a":
        hat = (spec.service, spec.s_bar)
        return ht_plan(consts.decomposition, 1.0, hat, spec.critical_rate)
    if case == "b":
        eta_star, alpha = _altspeed_eta(spec, case, at_critical=True)
        kappa = eta_star / (nd * (spec.s_bar - spec.lam * spec.beta))
        d = LstDecomposition(alpha=alpha, theta=0.0, gamma=0.0, kappa=kappa, g0=1.0)
        zeta = nd * spec.s_bar / (spec.nu_rate * spec.delta * (spec.s_bar - spec.s_l))
        hat = (spec.low.scaled(spec.s_bar - spec.s_l), 1.0)
        return ht_plan(d, zeta, hat, spec.critical_rate)
    raise ValueError(f"heavy-traffic plan is defined for cases 'a' and 'b', got {case!r}")


# ---------------------------------------------------------------------------
# heterogeneous two-server queue


@dataclass(frozen=True)
class Mg2Constants:
    decomposition: LstDecomposition
    asymptote: PowerTailAsymptote
    plan: HtLimitPlan
    fluid: FluidSpec


def mg2_constants(
    spec: Mg2Spec, occ: Mg2Occupancy, identity_tol: float = 1e-2
) -> Mg2Constants:
    """Waiting-time constants of the two-server queue from simulated occupancies.

    gamma = (lam pi0 + lam pi1 - mu pi1) C / (1 - (lam-mu) beta) * ((lam-mu)/lam)^(nu-1)
    kappa = (lam - mu) C / (1 - (lam-mu) beta) * ((lam-mu)/lam)^(nu-1)
    G(0)  = ((lam-mu)(lam pi0 + lam pi1 - mu pi1) beta + mu pi2)
            / ((lam-mu)(1 - (lam-mu) beta))

    The occupancies must satisfy the work-conservation identity to within
    ``identity_tol`` (relative to the critical-rate scale); F(0) + G(0) = 1
    holds exactly when the identity does.
    """
    c_b, nu = _heavy_tail(spec.service2, "server-2 service")
    resid = occ.identity_residual(spec)
    scale = 1.0 / spec.beta + spec.mu
    if abs(resid) > identity_tol * scale:
        raise ValueError(
            f"occupancies violate the work-conservation identity: residual {resid:.3e} "
            f"(tolerance {identity_tol * scale:.3e}); re-estimate them"
        )
    lam, mu, beta = spec.lam, spec.mu, spec.beta
    q = lam - mu
    slack = 1.0 - q * beta  # equals (lam* - lam) * beta
    ratio = (q / lam) ** (nu - 1.0)
    mix = lam * occ.pi0 + lam * occ.pi1 - mu * occ.pi1
    gamma = mix * c_b / slack * ratio
    kappa = q * c_b / slack * ratio
    g0 = (q * mix * beta + mu * occ.pi2) / (q * slack)
    d = LstDecomposition(alpha=nu - 1.0, theta=0.0, gamma=gamma, kappa=kappa, g0=g0)
    zeta = 1.0 + mu * beta
    hat = (spec.service2.scaled(1.0 / zeta), 1.0)
    plan = ht_plan(d, zeta, hat, spec.critical_rate)
    fluid = mg2_fluid_heuristic(spec, occ)
    return Mg2Constants(d, prop1_tail(d), plan, fluid)


def mg2_cpref_collapsed(spec: Mg2Spec, occ: Mg2Occupancy) -> float:
    """Simplified tail prefactor; equals gamma + kappa G(0) when the identity holds."""
    c_b, nu = _heavy_tail(spec.service2, "server-2 service")
    q = spec.lam - spec.mu
    return (
        (1.0 - occ.pi0 - occ.pi1)
        / (1.0 - q * spec.beta)
        * (c_b / spec.beta)
        * (q / spec.lam) ** (nu - 1.0)
    )


def mg2_fluid_heuristic(spec: Mg2Spec, occ: Mg2Occupancy) -> FluidSpec:
    """Fluid model the waiting time mimics: on-periods are scaled server-2 services.

    On-period A = (mu/lam) B, on-rate minus drain r - d = lam/mu - 1, drift
    margin d - rho = 1 - lam beta / (1 + beta mu); the off-period mean follows
    from the rate (1 - pi0 - pi1) / beta of on-period starts.
    """
    lam, mu, beta = spec.lam, spec.mu, spec.beta
    on = spec.service2.scaled(mu / lam)
    e_on = on.mean()
    busy2 = 1.0 - occ.pi0 - occ.pi1
    if not busy2 > 0:
        raise ValueError("occupancies give server 2 zero utilization")
    cycle_mean = beta / busy2
    e_off = cycle_mean - e_on
    if not e_off > 0:
        raise ValueError("occupancies are inconsistent: nonpositive off-period mean")
    growth = lam / mu - 1.0
    margin = 1.0 - lam * beta / (1.0 + beta * mu)
    p_on = e_on / cycle_mean
    r = (growth + margin) / (1.0 - p_on)
    return FluidSpec(r=r, d=r - growth, on=on, off=Exponential(1.0 / e_off))
