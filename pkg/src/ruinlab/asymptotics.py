"""Asymptotic constants and ruin predictions for the three tail regimes.

Heavy regime: with a subexponential integrated tail and the mixing endpoint
below the net-profit boundary, modified and classical ruin are equivalent and
both behave like E[a(L)] * FbarI(u) with a(l) = l*mean/(c - l*mean).

Light fixed-intensity regime: ruin decays like cramer * exp(-R*u) where R
solves the Lundberg equation l*(M(r) - 1) = c*r, and the conditional deficit
converges to an explicit limiting overshoot law; the modified/classical
ratio converges to the weight's integral against that law.

Light mixed regimes: an atom of mass p1 at the endpoint intensity gives
p1 * C * cramer1 * exp(-R1*u); a regular endpoint density with local shape
amplitude * z**(order-1) gives the sharper
amplitude * cramer1 * Gamma(order) / (slope*u)**order * exp(-R1*u), where
slope is the decay rate of the adjustment coefficient at the endpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import TailClass
from .errors import (DegenerateDenominator, DerivativeUnstable, DomainError,
                     HypothesisViolation, NoRoot, QuadratureFailure)
from .quadrature import gk15, gk15_panels, integrate
from .rules import Regime, check_hypotheses


# ---------------------------------------------------------------------------
# Lundberg root and Cramér prefactor
# ---------------------------------------------------------------------------

def lundberg_residual(model, ell, r):
    """l*(M(r) - 1) - c*r; the adjustment coefficient is its positive zero."""
    try:
        m = model.claim.mgf(r)
    except OverflowError:
        return math.inf
    val = ell * (m - 1.0) - model.premium_rate * r
    return val if math.isfinite(val) else math.inf


def adjustment_coefficient(model, ell, residual_tol=1e-12):
    """Positive Lundberg root, by bracketing plus safeguarded Newton.

    The residual is driven below residual_tol * c * R; the bracket expands
    toward the mgf blow-up point, where the Lundberg function is eventually
    positive whenever ell*mean < c.
    """
    claim = model.claim
    if claim.tail_class is not TailClass.LIGHT:
        raise DomainError("adjustment coefficient needs a light-tailed claim law")
    if ell <= 0:
        raise DomainError("intensity must be positive")
    if model.safety_loading(ell) >= 1.0:
        raise NoRoot(f"no positive root: ell*mean >= premium rate at ell={ell}")
    c = model.premium_rate
    f = lambda r: lundberg_residual(model, ell, r)

    r_max = claim.r_max
    lo = r_max * 1e-12
    hi = None
    prev = lo
    for j in range(1, 64):
        cand = r_max * (1.0 - 0.5 ** j)
        val = f(cand)
        if val > 0.0:
            hi = cand
            lo = prev
            break
        prev = cand
    if hi is None:
        raise NoRoot(f"Lundberg function never positive below r_max={r_max}")
    # make the upper end finite for the bisection that follows
    fhi = f(hi)
    while not math.isfinite(fhi):
        hi = 0.5 * (lo + hi)
        fhi = f(hi)
        if fhi <= 0.0:
            lo, fhi = hi, math.inf
            hi = 0.5 * (hi + r_max)

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    root = 0.5 * (lo + hi)

    # Newton polish with the bracket as a safeguard
    for _ in range(8):
        res = f(root)
        if abs(res) < residual_tol * c * root:
            break
        slope = ell * claim.mgf_derivative(root) - c
        if slope <= 0:
            break
        step = root - res / slope
        root = step if lo < step < hi else 0.5 * (lo + hi)
    res = f(root)
    if abs(res) >= residual_tol * c * root:
        raise NoRoot(f"Lundberg root residual {res} above tolerance at ell={ell}")
    return root


def cramer_constant(model, ell, adjustment=None):
    """Prefactor (c - l*mean)/(l*M'(R) - c) of the exponential ruin decay."""
    r = adjustment_coefficient(model, ell) if adjustment is None else adjustment
    c = model.premium_rate
    denom = ell * model.claim.mgf_derivative(r) - c
    if denom <= 0:
        raise DegenerateDenominator(
            "l*M'(R) <= c at the Lundberg root; the root must be wrong")
    return (c - ell * model.claim.mean) / denom


# ---------------------------------------------------------------------------
# heavy-tail regime
# ---------------------------------------------------------------------------

def heavy_prefactor(model, tol=1e-10):
    """E[a(L)] with a(l) = l*mean/(c - l*mean); an atom at 0 contributes 0."""
    model.require_net_profit()
    mu, c = model.claim.mean, model.premium_rate

    def a(x):
        x = np.asarray(x, dtype=float)
        return x * mu / (c - x * mu)

    val = model.mixing.integrate(a, tol=tol)
    if not math.isfinite(val):
        raise QuadratureFailure("heavy prefactor integral is not finite")
    return val


def heavy_prediction(model, rule, u):
    """Asymptotic ruin value E[a(L)] * FbarI(u), valid for modified and
    classical alike once the weight tends to 1 deep in deficit."""
    if model.claim.tail_class is not TailClass.SUBEXPONENTIAL_INTEGRATED_TAIL:
        raise HypothesisViolation(
            "heavy regime needs a claim law declared subexponential",
            failed=("claim_tail_class",))
    model.require_net_profit()
    check_hypotheses(rule, Regime.HEAVY_TAIL).raise_if_failed()
    return heavy_prefactor(model) * float(model.claim.integrated_tail(u))


# ---------------------------------------------------------------------------
# limiting overshoot law
# ---------------------------------------------------------------------------

def overshoot_limit_tail(model, ell, x, adjustment=None):
    """Tail of the limiting conditional deficit law at level x >= 0:

        ( c*exp(-R*x) - l * int_0^x exp(-R*(x-z)) Fbar(z) dz
                      - l * mean * FbarI(x) ) / (c - l*mean).

    The result is clamped into [0, 1] only when within 1e-9 of the bounds.
    """
    if x < 0:
        raise DomainError("overshoot tail evaluated at negative level")
    r = adjustment_coefficient(model, ell) if adjustment is None else adjustment
    claim, c = model.claim, model.premium_rate
    conv = 0.0
    if x > 0:
        conv = integrate(
            lambda z: math.exp(-r * (x - z)) * float(claim.tail(z)),
            0.0, x, abs_tol=1e-12)
    val = (c * math.exp(-r * x) - ell * conv
           - ell * claim.mean * float(claim.integrated_tail(x)))
    val /= (c - ell * claim.mean)
    if -1e-9 <= val < 0.0:
        return 0.0
    if 1.0 < val <= 1.0 + 1e-9:
        return 1.0
    return val


class _OvershootGrid:
    """Overshoot tail values on refinable grids.

    Maintains the damped convolution H(x) = int_0^x exp(-R*(x-z)) Fbar(z) dz
    incrementally: H(x') = exp(-R*(x'-x)) H(x) + local panel, which avoids
    the exponentially large intermediates a naive cumulative form would hit.
    """

    def __init__(self, model, ell, adjustment):
        self.claim = model.claim
        self.c = model.premium_rate
        self.ell = ell
        self.r = adjustment
        self.denom = self.c - ell * model.claim.mean

    def tail_from_h(self, x, h):
        val = (self.c * math.exp(-self.r * x) - self.ell * h
               - self.ell * self.claim.mean * float(self.claim.integrated_tail(x)))
        return val / self.denom

    def advance(self, x_from, h_from, x_to):
        f = lambda z: np.exp(-self.r * (x_to - z)) * self.claim.tail(z)
        panel, _ = gk15(f, x_from, x_to)
        return math.exp(-self.r * (x_to - x_from)) * h_from + panel

    def initial(self, xs):
        """H and tails on an increasing grid starting at 0."""
        f = lambda z: self.claim.tail(z)  # panel damping applied per cell below
        half = 0.5 * np.diff(xs)
        mid = 0.5 * (xs[1:] + xs[:-1])
        from .quadrature import _GK_NODES, _GK_WK
        nodes = mid[:, None] + half[:, None] * _GK_NODES[None, :]
        vals = np.exp(-self.r * (xs[1:, None] - nodes)) * self.claim.tail(nodes)
        panels = half * (vals @ _GK_WK)
        damp = np.exp(-self.r * np.diff(xs))
        h = np.empty(len(xs))
        h[0] = 0.0
        for i in range(1, len(xs)):
            h[i] = damp[i - 1] * h[i - 1] + panels[i - 1]
        tails = np.array([self.tail_from_h(x, hv) for x, hv in zip(xs, h)])
        tails[0] = 1.0
        return h, tails


def limiting_ratio_constant(model, ell, rule, *, tol=1e-6, initial_points=4096):
    """Integral of the severity weight against the limiting overshoot law.

    Stieltjes sum over a geometric deficit grid, midpoint weight evaluation,
    with cells split adaptively until the refinement changes the total by
    less than tol; the grid extends until the overshoot tail drops below
    1e-8 and the remaining tail mass is assigned the weight at the cutoff.
    """
    check_hypotheses(rule, Regime.LIGHT_FIXED).raise_if_failed()
    model.check_intensity(ell)
    r = adjustment_coefficient(model, ell)
    grid = _OvershootGrid(model, ell, r)

    x_max = 20.0 * model.claim.mean
    for _ in range(60):
        if overshoot_limit_tail(model, ell, x_max, adjustment=r) < 1e-8:
            break
        x_max *= 2.0
    else:
        raise QuadratureFailure("overshoot tail does not reach 1e-8")

    xs = np.concatenate([[0.0], np.geomspace(x_max * 1e-9, x_max, initial_points)])
    h, tails = grid.initial(xs)

    cell_tol = tol / (16.0 * len(xs))
    stack = [(xs[i], xs[i + 1], h[i], h[i + 1], tails[i], tails[i + 1])
             for i in range(len(xs) - 1)]
    total = 0.0
    splits = 0
    while stack:
        xl, xr, hl, hr, tl, tr = stack.pop()
        mid = 0.5 * (xl + xr)
        hm = grid.advance(xl, hl, mid)
        tm = grid.tail_from_h(mid, hm)
        parent = float(rule.weight(-mid)) * (tl - tr)
        left = float(rule.weight(-0.5 * (xl + mid))) * (tl - tm)
        right = float(rule.weight(-0.5 * (mid + xr))) * (tm - tr)
        if abs(parent - (left + right)) <= cell_tol:
            total += left + right
            continue
        splits += 1
        if splits > 200_000:
            raise QuadratureFailure("overshoot-law refinement did not converge")
        stack.append((xl, mid, hl, hm, tl, tm))
        stack.append((mid, xr, hm, hr, tm, tr))
    # deficits beyond the grid carry the boundary weight; the tail there is
    # below 1e-8 so the assignment error is negligible at tol >= 1e-6
    total += tails[-1] * float(rule.weight(-x_max))
    return total


# ---------------------------------------------------------------------------
# light mixed-intensity predictions
# ---------------------------------------------------------------------------

def _require_light(model):
    if model.claim.tail_class is not TailClass.LIGHT:
        raise HypothesisViolation(
            "light-tail regime requested for a heavy-tailed claim law",
            failed=("claim_tail_class",))


def _sub_endpoint_grid(model):
    l1 = model.mixing.upper_endpoint
    pts = [l for l, _ in model.mixing.atoms if l < l1 and l > 0]
    dens = model.mixing.density
    if dens is not None:
        span_hi = min(dens.hi, l1 - 1e-9 * max(l1, 1.0))
        if span_hi > dens.lo:
            inner = dens.lo + (span_hi - dens.lo) * np.linspace(0.02, 0.98, 9)
            pts.extend(float(p) for p in inner if p > 0)
    return pts


def atom_prediction(model, rule, u):
    """Prediction p1 * C * cramer1 * exp(-R1*u) for an endpoint atom.

    Returns (value, ratio_constant); ratio_constant is the limiting
    modified/classical ratio C at the endpoint intensity.
    """
    _require_light(model)
    model.require_net_profit()
    check_hypotheses(rule, Regime.LIGHT_ENDPOINT_ATOM).raise_if_failed()
    l1 = model.mixing.upper_endpoint
    p1 = model.mixing.endpoint_atom_mass
    if p1 <= 0.0:
        raise HypothesisViolation(
            "endpoint-atom prediction needs positive mass at the endpoint",
            failed=("endpoint_atom_mass",))
    r1 = adjustment_coefficient(model, l1)
    for pt in _sub_endpoint_grid(model):
        if adjustment_coefficient(model, pt) <= r1:
            raise HypothesisViolation(
                f"adjustment coefficient at ell={pt} does not exceed the "
                "endpoint value; sub-endpoint intensities are not negligible",
                failed=(f"adjustment_gap@ell={pt}",))
    ratio_constant = limiting_ratio_constant(model, l1, rule)
    value = p1 * ratio_constant * cramer_constant(model, l1, adjustment=r1) \
        * math.exp(-r1 * u)
    return value, ratio_constant


@dataclass(frozen=True)
class EndpointRegularity:
    """Constants governing the endpoint-density asymptotics.

    adjustment/cramer are the endpoint values R1, cramer1; slope is the decay
    rate -R'(l1); amplitude/order/window describe the declared density shape
    near the endpoint; gap is the verified Lundberg-rate margin for
    intensities at least `window` below the endpoint.
    """

    endpoint: float
    adjustment: float
    cramer: float
    slope: float
    amplitude: float
    order: float
    window: float
    gap: float


def endpoint_slope(model, adjustment_fn=adjustment_coefficient):
    """-R'(l1) by central differences with one Richardson step.

    Steps h in {1e-4, 5e-5}; the two difference quotients must agree to a
    relative 1e-6, otherwise DerivativeUnstable.
    """
    l1 = model.mixing.upper_endpoint
    boundary = model.premium_rate / model.claim.mean
    h1, h2 = 1e-4, 5e-5
    if l1 + h1 >= boundary or l1 - h1 <= 0:
        raise DomainError(
            "endpoint too close to the net-profit boundary for the fixed "
            "differentiation steps")

    def diff(h):
        return (adjustment_fn(model, l1 - h) - adjustment_fn(model, l1 + h)) \
            / (2.0 * h)

    d1, d2 = diff(h1), diff(h2)
    slope = (4.0 * d2 - d1) / 3.0
    if abs(d2 - d1) > 1e-6 * max(abs(slope), 1e-300):
        raise DerivativeUnstable(
            f"central differences disagree: {d1} vs {d2}")
    if slope <= 0:
        raise DerivativeUnstable("adjustment coefficient not decreasing at "
                                 "the endpoint")
    return slope


def endpoint_regularity(model):
    """Assemble the endpoint constants; raises HypothesisViolation when the
    mixing law lacks a declared endpoint density expansion or the Lundberg
    gap fails."""
    _require_light(model)
    model.require_net_profit()
    mixing = model.mixing
    l1 = mixing.upper_endpoint
    if mixing.endpoint_atom_mass > 0:
        raise HypothesisViolation(
            "endpoint-density regime requires no atom at the endpoint",
            failed=("endpoint_atom_mass",))
    dens = mixing.density
    if dens is None or dens.expansion is None:
        raise HypothesisViolation(
            "endpoint-density regime needs a density with a declared "
            "endpoint expansion", failed=("endpoint_expansion",))
    exp_ = dens.expansion
    r1 = adjustment_coefficient(model, l1)
    c1 = cramer_constant(model, l1, adjustment=r1)
    slope = endpoint_slope(model)
    gap = adjustment_coefficient(model, l1 - exp_.window) - r1
    if gap <= 0:
        raise HypothesisViolation(
            "no Lundberg gap below the endpoint window",
            failed=("adjustment_gap",))
    return EndpointRegularity(
        endpoint=l1, adjustment=r1, cramer=c1, slope=slope,
        amplitude=exp_.amplitude, order=exp_.order, window=exp_.window,
        gap=gap)


def sharp_prediction(model, rule, u):
    """Sharp endpoint-density prediction.

    Returns (value_modified, value_classical, ratio_constant) with
    value_classical = amplitude * cramer1 * Gamma(order) / (slope*u)**order
                      * exp(-R1*u).
    """
    check_hypotheses(rule, Regime.LIGHT_ENDPOINT_DENSITY).raise_if_failed()
    reg = endpoint_regularity(model)
    value_classical = (reg.amplitude * reg.cramer * gamma_function(reg.order)
                       / (reg.slope * u) ** reg.order
                       * math.exp(-reg.adjustment * u))
    ratio_constant = limiting_ratio_constant(model, reg.endpoint, rule)
    return ratio_constant * value_classical, value_classical, ratio_constant


# ---------------------------------------------------------------------------
# constants bundle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticConstants:
    """Per-intensity bundle: adjustment coefficient, Cramér prefactor, heavy
    prefactor a(l), and (when a rule is supplied) the limiting
    modified/classical ratio."""

    intensity: float
    adjustment: float
    cramer: float
    heavy_coefficient: float
    ratio_constant: float | None = None


def constants(model, ell, rule=None):
    model.check_intensity(ell)
    r = adjustment_coefficient(model, ell)
    rho = model.safety_loading(ell)
    ratio = None if rule is None else limiting_ratio_constant(model, ell, rule)
    return AsymptoticConstants(
        intensity=ell,
        adjustment=r,
        cramer=cramer_constant(model, ell, adjustment=r),
        heavy_coefficient=rho / (1.0 - rho),
        ratio_constant=ratio)


# ---------------------------------------------------------------------------
# gamma function
# ---------------------------------------------------------------------------

_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma_function(b):
    """Gamma(b) for b > 0 via the Lanczos series, with the recurrence
    Gamma(b) = Gamma(b+1)/b applied below 0.5; relative error < 1e-12 on
    (0, 50]."""
    if b <= 0:
        raise DomainError("gamma function evaluated at a nonpositive argument")
    if b < 0.5:
        return gamma_function(b + 1.0) / b
    z = b - 1.0
    series = _LANCZOS[0]
    for i, coeff in enumerate(_LANCZOS[1:], start=1):
        series += coeff / (z + i)
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * series
