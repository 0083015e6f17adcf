"""Claim-size and intensity-mixing distributions.

Claim laws expose the functionals every estimator and predictor consumes:
tail, integrated tail (the ladder-height law), moment generating function and
its derivative, plus samplers for both the claim law and its integrated-tail
law.  Mixing laws are atoms plus an optional absolutely continuous part and
provide exact integration against the law and sampling.

All objects are immutable after construction and safe to share across
workers; sampling always takes an externally supplied generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import special

from .errors import DomainError
from .quadrature import integrate, gk15_panels


class TailClass(Enum):
    """Declared tail regime of a claim law.

    LIGHT promises a finite mgf on [0, r_max) with r_max > 0.
    SUBEXPONENTIAL_INTEGRATED_TAIL declares that the integrated-tail law
    belongs to the subexponential class; this is a modelling assertion, not
    something inferable from samples, so it is carried as a flag.
    """

    LIGHT = "light"
    SUBEXPONENTIAL_INTEGRATED_TAIL = "subexponential_integrated_tail"


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise DomainError("claim functionals are defined for x >= 0")
    return arr


def _match(x, value):
    # return a scalar when the caller passed a scalar
    return float(value) if np.isscalar(x) or np.ndim(x) == 0 else value


class ClaimDistribution:
    """Interface shared by the claim-size laws in the catalog."""

    mean: float
    tail_class: TailClass
    r_max: float

    def cdf(self, x):
        raise NotImplementedError

    def tail(self, x):
        """Survival function of the claim law."""
        raise NotImplementedError

    def integrated_tail(self, x):
        """Survival function of the integrated-tail (equilibrium) law."""
        raise NotImplementedError

    def integrated_cdf(self, x):
        return 1.0 - self.integrated_tail(x)

    def mgf(self, r):
        raise NotImplementedError

    def mgf_derivative(self, r):
        raise NotImplementedError

    def sample(self, rng, size=None):
        raise NotImplementedError

    def sample_integrated_tail(self, rng, size=None):
        raise NotImplementedError

    def _check_mgf_arg(self, r):
        if self.tail_class is not TailClass.LIGHT:
            raise DomainError("mgf requested for a heavy-tailed claim law")
        if r < 0:
            raise DomainError("mgf evaluated at negative argument")
        if r >= self.r_max:
            raise DomainError(
                f"mgf argument {r} outside [0, {self.r_max})")


@dataclass(frozen=True)
class Exponential(ClaimDistribution):
    """Exponential claims; the integrated-tail law coincides with the claim law."""

    mean: float

    def __post_init__(self):
        if not self.mean > 0:
            raise DomainError("exponential mean must be positive")

    tail_class = TailClass.LIGHT

    @property
    def r_max(self):
        return 1.0 / self.mean

    def cdf(self, x):
        xa = _as_array(x)
        return _match(x, 1.0 - np.exp(-xa / self.mean))

    def tail(self, x):
        xa = _as_array(x)
        return _match(x, np.exp(-xa / self.mean))

    def integrated_tail(self, x):
        return self.tail(x)

    def mgf(self, r):
        self._check_mgf_arg(r)
        return 1.0 / (1.0 - self.mean * r)

    def mgf_derivative(self, r):
        self._check_mgf_arg(r)
        return self.mean / (1.0 - self.mean * r) ** 2

    def sample(self, rng, size=None):
        return rng.exponential(self.mean, size)

    def sample_integrated_tail(self, rng, size=None):
        return rng.exponential(self.mean, size)


@dataclass(frozen=True)
class Pareto(ClaimDistribution):
    """Pareto (Lomax) claims with tail (1 + x/scale)^(-shape), shape > 1.

    Heavy tailed: the integrated-tail law is again Pareto with shape - 1,
    and it is subexponential, which is what the declared flag records.
    """

    shape: float
    scale: float

    def __post_init__(self):
        if not self.shape > 1:
            raise DomainError("pareto shape must exceed 1 for a finite mean")
        if not self.scale > 0:
            raise DomainError("pareto scale must be positive")

    tail_class = TailClass.SUBEXPONENTIAL_INTEGRATED_TAIL
    r_max = 0.0

    @property
    def mean(self):
        return self.scale / (self.shape - 1.0)

    def cdf(self, x):
        xa = _as_array(x)
        return _match(x, 1.0 - (1.0 + xa / self.scale) ** (-self.shape))

    def tail(self, x):
        xa = _as_array(x)
        return _match(x, (1.0 + xa / self.scale) ** (-self.shape))

    def integrated_tail(self, x):
        xa = _as_array(x)
        return _match(x, (1.0 + xa / self.scale) ** (-(self.shape - 1.0)))

    def mgf(self, r):
        raise DomainError("pareto claims have no finite mgf for r > 0")

    mgf_derivative = mgf

    def sample(self, rng, size=None):
        u = 1.0 - rng.random(size)  # in (0, 1]
        return self.scale * (u ** (-1.0 / self.shape) - 1.0)

    def sample_integrated_tail(self, rng, size=None):
        u = 1.0 - rng.random(size)
        return self.scale * (u ** (-1.0 / (self.shape - 1.0)) - 1.0)


@dataclass(frozen=True)
class Gamma(ClaimDistribution):
    """Gamma claims (shape k, scale s).

    The integrated tail has the closed form
        FbarI(x) = Q(k+1, x/s) - (x/(k s)) Q(k, x/s)
    with Q the regularized upper incomplete gamma; sampling the integrated
    tail uses a cached numeric inverse of its cdf.
    """

    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise DomainError("gamma shape and scale must be positive")

    tail_class = TailClass.LIGHT

    @property
    def mean(self):
        return self.shape * self.scale

    @property
    def r_max(self):
        return 1.0 / self.scale

    def cdf(self, x):
        xa = _as_array(x)
        return _match(x, special.gammainc(self.shape, xa / self.scale))

    def tail(self, x):
        xa = _as_array(x)
        return _match(x, special.gammaincc(self.shape, xa / self.scale))

    def integrated_tail(self, x):
        xa = _as_array(x)
        t = xa / self.scale
        val = special.gammaincc(self.shape + 1.0, t) \
            - (xa / self.mean) * special.gammaincc(self.shape, t)
        return _match(x, val)

    def mgf(self, r):
        self._check_mgf_arg(r)
        return (1.0 - self.scale * r) ** (-self.shape)

    def mgf_derivative(self, r):
        self._check_mgf_arg(r)
        return self.mean * (1.0 - self.scale * r) ** (-self.shape - 1.0)

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, self.scale, size)

    def _inverse_table(self):
        cached = getattr(self, "_fi_inverse", None)
        if cached is None:
            # find a right endpoint far enough into the integrated tail
            hi = 10.0 * self.mean
            while self.integrated_tail(hi) > 1e-13:
                hi *= 2.0
            xs = np.concatenate([[0.0], np.geomspace(hi * 1e-8, hi, 8192)])
            cached = (self.integrated_cdf(xs), xs)
            object.__setattr__(self, "_fi_inverse", cached)
        return cached

    def sample_integrated_tail(self, rng, size=None):
        probs, xs = self._inverse_table()
        u = rng.random(size)
        return np.interp(u, probs, xs)


@dataclass(frozen=True)
class Mixture(ClaimDistribution):
    """Finite mixture of claim laws.

    tail_class defaults to LIGHT when every component is light and to the
    declared subexponential flag otherwise; pass it explicitly to override.
    """

    weights: tuple
    components: tuple
    tail_class: TailClass = None  # type: ignore[assignment]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or len(w) != len(self.components) or len(w) == 0:
            raise DomainError("weights and components must align and be nonempty")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DomainError("mixture weights must be positive and sum to 1")
        object.__setattr__(self, "weights", tuple(float(x) for x in w))
        object.__setattr__(self, "components", tuple(self.components))
        if self.tail_class is None:
            light = all(c.tail_class is TailClass.LIGHT for c in self.components)
            object.__setattr__(
                self, "tail_class",
                TailClass.LIGHT if light
                else TailClass.SUBEXPONENTIAL_INTEGRATED_TAIL)

    @property
    def mean(self):
        return sum(w * c.mean for w, c in zip(self.weights, self.components))

    @property
    def r_max(self):
        if self.tail_class is not TailClass.LIGHT:
            return 0.0
        return min(c.r_max for c in self.components)

    def cdf(self, x):
        xa = _as_array(x)
        val = sum(w * c.cdf(xa) for w, c in zip(self.weights, self.components))
        return _match(x, val)

    def tail(self, x):
        xa = _as_array(x)
        val = sum(w * c.tail(xa) for w, c in zip(self.weights, self.components))
        return _match(x, val)

    def integrated_tail(self, x):
        # integrating the mixture tail reweights components by w_i * mean_i
        xa = _as_array(x)
        mu = self.mean
        val = sum(w * c.mean * c.integrated_tail(xa)
                  for w, c in zip(self.weights, self.components)) / mu
        return _match(x, val)

    def mgf(self, r):
        self._check_mgf_arg(r)
        return sum(w * c.mgf(r) for w, c in zip(self.weights, self.components))

    def mgf_derivative(self, r):
        self._check_mgf_arg(r)
        return sum(w * c.mgf_derivative(r)
                   for w, c in zip(self.weights, self.components))

    def _component_draw(self, rng, size, probs, sampler):
        n = 1 if size is None else int(size)
        u = rng.random(n)
        edges = np.cumsum(probs)
        idx = np.searchsorted(edges, u, side="right")
        idx = np.minimum(idx, len(probs) - 1)
        out = np.empty(n)
        for j, comp in enumerate(self.components):
            rows = np.flatnonzero(idx == j)
            if rows.size:
                out[rows] = sampler(comp, rng, rows.size)
        return float(out[0]) if size is None else out

    def sample(self, rng, size=None):
        return self._component_draw(
            rng, size, np.asarray(self.weights),
            lambda c, g, m: c.sample(g, m))

    def sample_integrated_tail(self, rng, size=None):
        mu = self.mean
        probs = np.array([w * c.mean / mu
                          for w, c in zip(self.weights, self.components)])
        return self._component_draw(
            rng, size, probs, lambda c, g, m: c.sample_integrated_tail(g, m))


# ---------------------------------------------------------------------------
# mixing distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EndpointExpansion:
    """Declared behavior of a mixing density at its upper endpoint.

    The density of the distance z from the endpoint behaves like
    amplitude * z**(order-1) for z in (0, window].
    """

    amplitude: float
    order: float
    window: float

    def __post_init__(self):
        if not (self.amplitude > 0 and self.order > 0 and self.window > 0):
            raise DomainError("endpoint expansion parameters must be positive")


@dataclass(frozen=True)
class _UniformPdf:
    lo: float
    hi: float
    weight: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > self.lo) & (x < self.hi)
        return np.where(inside, self.weight / (self.hi - self.lo), 0.0)


@dataclass(frozen=True)
class _EndpointPowerPdf:
    upper: float
    width: float
    order: float
    weight: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        z = self.upper - x
        inside = (z > 0) & (z < self.width)
        coeff = self.weight * self.order / self.width ** self.order
        with np.errstate(invalid="ignore", divide="ignore"):
            vals = coeff * np.where(inside, z, 1.0) ** (self.order - 1.0)
        return np.where(inside, vals, 0.0)


@dataclass(frozen=True)
class _UniformInverse:
    lo: float
    hi: float

    def __call__(self, v):
        return self.lo + (self.hi - self.lo) * np.asarray(v, dtype=float)


@dataclass(frozen=True)
class _UniformCdf:
    lo: float
    hi: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((x - self.lo) / (self.hi - self.lo), 0.0, 1.0)


@dataclass(frozen=True)
class _EndpointPowerInverse:
    upper: float
    width: float
    order: float

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        return self.upper - self.width * (1.0 - v) ** (1.0 / self.order)


@dataclass(frozen=True)
class _EndpointPowerCdf:
    upper: float
    width: float
    order: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        z = np.clip((self.upper - x) / self.width, 0.0, 1.0)
        return 1.0 - z ** self.order


@dataclass(frozen=True)
class MixingDensity:
    """Absolutely continuous part of a mixing law on (lo, hi).

    pdf carries its own weight: it integrates to the density part's total
    mass, not necessarily to 1.  inverse_cdf, when supplied, maps v in (0, 1)
    to the v-quantile of the normalized density and is used for exact
    sampling; otherwise a cached numeric inverse is built on first use.
    """

    lo: float
    hi: float
    pdf: object
    expansion: EndpointExpansion | None = None
    inverse_cdf: object | None = None
    cdf: object | None = None

    def __post_init__(self):
        if not (0 <= self.lo < self.hi):
            raise DomainError("density support must satisfy 0 <= lo < hi")
        if self.expansion is not None and self.expansion.window \
                > (self.hi - self.lo) * (1.0 + 1e-12):
            raise DomainError("endpoint expansion window exceeds the support")

    def mass(self, tol=1e-10):
        return self._integral(lambda x: np.ones_like(x), tol)

    def _integral(self, f, tol=1e-10):
        """Integral of f * pdf over the support.

        When an endpoint expansion with order < 1 is declared the variable
        t = (hi - x)**order removes the integrable singularity at hi.
        """
        exp_ = self.expansion
        if exp_ is not None and exp_.order < 1.0:
            b = exp_.order

            def g(t):
                if t <= 0.0:
                    return 0.0
                z = t ** (1.0 / b)
                x = self.hi - z
                jac = (1.0 / b) * t ** (1.0 / b - 1.0)
                return float(f(np.asarray(x)) * self.pdf(np.asarray(x)) * jac)

            upper = (self.hi - self.lo) ** b
            return integrate(g, 0.0, upper, abs_tol=tol)
        return integrate(
            lambda x: float(f(np.asarray(x)) * self.pdf(np.asarray(x))),
            self.lo, self.hi, abs_tol=tol)

    def _sampling_table(self):
        cached = getattr(self, "_inv_table", None)
        if cached is None:
            xs = np.linspace(self.lo, self.hi, 8193)
            masses = gk15_panels(self.pdf, xs)
            cdf = np.concatenate([[0.0], np.cumsum(masses)])
            cdf /= cdf[-1]
            cached = (cdf, xs)
            object.__setattr__(self, "_inv_table", cached)
        return cached

    def quantile(self, v):
        if self.inverse_cdf is not None:
            return self.inverse_cdf(v)
        cdf, xs = self._sampling_table()
        return np.interp(v, cdf, xs)

    def interval_mass(self, a, b):
        """Mass the density part assigns to (a, b) within its support."""
        a = max(a, self.lo)
        b = min(b, self.hi)
        if b <= a:
            return 0.0
        if self.cdf is not None:
            mass_total = getattr(self, "_mass_cache", None)
            if mass_total is None:
                mass_total = self.mass()
                object.__setattr__(self, "_mass_cache", mass_total)
            return mass_total * float(self.cdf(b) - self.cdf(a))
        cdf, xs = self._sampling_table()
        mass_total = getattr(self, "_mass_cache", None)
        if mass_total is None:
            mass_total = self.mass()
            object.__setattr__(self, "_mass_cache", mass_total)
        frac = np.interp([a, b], xs, cdf)
        return mass_total * float(frac[1] - frac[0])


@dataclass(frozen=True)
class MixingDistribution:
    """Mixing law for the random Poisson intensity: atoms plus a density.

    atoms: tuple of (location, mass) with locations >= 0.
    Total mass (atoms plus density integral) must be 1 within 1e-8.
    """

    atoms: tuple = ()
    density: MixingDensity | None = None

    def __post_init__(self):
        atoms = tuple((float(l), float(p)) for l, p in self.atoms)
        if any(l < 0 or p <= 0 for l, p in atoms):
            raise DomainError("atom locations must be >= 0 with positive mass")
        if len({l for l, _ in atoms}) != len(atoms):
            raise DomainError("duplicate atom locations")
        object.__setattr__(self, "atoms", atoms)
        if not atoms and self.density is None:
            raise DomainError("mixing law needs at least one atom or a density")
        dens_mass = self.density.mass() if self.density is not None else 0.0
        object.__setattr__(self, "_density_mass", dens_mass)
        total = sum(p for _, p in atoms) + dens_mass
        if abs(total - 1.0) > 1e-8:
            raise DomainError(f"mixing masses sum to {total}, not 1")
        if self.density is not None and self.density.hi > self.upper_endpoint + 1e-15:
            raise DomainError("density support exceeds the upper endpoint")
        self._check_expansion()

    def _check_expansion(self):
        dens = self.density
        if dens is None or dens.expansion is None:
            return
        if abs(dens.hi - self.upper_endpoint) > 1e-12:
            raise DomainError(
                "endpoint expansion declared but the density does not reach "
                "the upper endpoint")
        exp_ = dens.expansion
        zs = np.geomspace(exp_.window / 1e4, exp_.window / 10.0, 25)
        ratio = dens.pdf(dens.hi - zs) / (exp_.amplitude * zs ** (exp_.order - 1.0))
        if np.any(ratio < 0.9) or np.any(ratio > 1.1):
            raise DomainError(
                "declared endpoint expansion disagrees with the density "
                f"(ratio range [{ratio.min():.3f}, {ratio.max():.3f}])")

    @property
    def upper_endpoint(self):
        sup = max((l for l, _ in self.atoms), default=0.0)
        if self.density is not None:
            sup = max(sup, self.density.hi)
        return sup

    @property
    def endpoint_atom_mass(self):
        l1 = self.upper_endpoint
        for l, p in self.atoms:
            if l == l1:
                return p
        return 0.0

    @property
    def density_mass(self):
        return self._density_mass

    def integrate(self, f, tol=1e-10):
        """Integral of f against the mixing law: atom sum plus density part."""
        total = sum(p * float(f(np.asarray(l))) for l, p in self.atoms)
        if self.density is not None:
            total += self.density._integral(f, tol)
        return total

    def sample(self, rng, size=None):
        """Draw intensities; a single uniform drives both the component
        choice and, rescaled, the within-density quantile."""
        n = 1 if size is None else int(size)
        u = rng.random(n)
        out = np.empty(n)
        edges = []
        acc = 0.0
        for l, p in self.atoms:
            acc += p
            edges.append(acc)
        idx = np.searchsorted(np.asarray(edges), u, side="right") if edges else \
            np.full(n, 0)
        if edges:
            for j, (l, _) in enumerate(self.atoms):
                out[idx == j] = l
            in_density = idx == len(self.atoms)
        else:
            in_density = np.ones(n, dtype=bool)
        if np.any(in_density):
            if self.density is None:
                raise DomainError("mass beyond the atoms with no density part")
            v = (u[in_density] - acc) / self._density_mass
            v = np.clip(v, 0.0, 1.0)
            out[in_density] = self.density.quantile(v)
        return float(out[0]) if size is None else out


def point_mass(location):
    """Mixing law concentrated at one intensity."""
    return MixingDistribution(atoms=((location, 1.0),))


def atom_mixing(atoms):
    """Purely discrete mixing law from (location, mass) pairs."""
    return MixingDistribution(atoms=tuple(atoms))


def uniform_mixing(lo, hi, weight=1.0, atoms=(), declare_endpoint=False):
    """Uniform density on (lo, hi) with total density mass `weight`.

    declare_endpoint attaches the (flat) endpoint expansion, order 1, for use
    with the endpoint-density asymptotics.
    """
    expansion = None
    if declare_endpoint:
        expansion = EndpointExpansion(
            amplitude=weight / (hi - lo), order=1.0, window=hi - lo)
    dens = MixingDensity(lo=lo, hi=hi, pdf=_UniformPdf(lo, hi, weight),
                         expansion=expansion,
                         inverse_cdf=_UniformInverse(lo, hi),
                         cdf=_UniformCdf(lo, hi))
    return MixingDistribution(atoms=tuple(atoms), density=dens)


def endpoint_power_mixing(upper, width, order, weight=1.0, atoms=()):
    """Power-law density ~ (upper - x)**(order-1) on (upper - width, upper).

    Normalized so the density part carries mass `weight`; the endpoint
    expansion (amplitude = weight*order/width**order) is declared
    automatically.
    """
    amplitude = weight * order / width ** order
    dens = MixingDensity(
        lo=upper - width, hi=upper,
        pdf=_EndpointPowerPdf(upper, width, order, weight),
        expansion=EndpointExpansion(amplitude=amplitude, order=order,
                                    window=width),
        inverse_cdf=_EndpointPowerInverse(upper, width, order),
        cdf=_EndpointPowerCdf(upper, width, order))
    return MixingDistribution(atoms=tuple(atoms), density=dens)
