"""Exponentially tilted importance sampling for deep-tail ruin.

Tilting the ladder-height walk by the adjustment coefficient R makes first
passage over u certain, and the likelihood ratio at the stopping time is
exp(-R * S_N) = exp(-R*u) * exp(-R*deficit), so the weighted score
w(-deficit) * exp(-R*S_N) is an unbiased estimate of the modified ruin
probability with pathwise scores in [0, exp(-R*u)].  This is what makes
probabilities around exp(-25) measurable at desk-scale replication counts.

The tilted step law has density (l/c) * exp(R*x) * Fbar(x): exponential with
mean c/l for exponential claims (sampled in closed form), otherwise sampled
by acceptance-rejection against an exponential envelope whose acceptance
rate is maximized over the envelope rate and must stay above 0.1.

The stratified mixed-intensity estimator splits the mixing law into atoms
plus geometric cells concentrating at the upper endpoint (where the deep
tail localizes), runs the tilted estimator at each cell midpoint, combines
with exact cell masses, and reports a refinement proxy against twice the
cell count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .asymptotics import adjustment_coefficient
from .distributions import Exponential, TailClass
from .errors import (AcceptanceRateError, DomainError, StratificationError)
from .ladder import Estimate, PairedEstimate
from .rules import Classical
from .streams import BLOCK_SIZE, block_plan, make_stream, stream_index

_MAX_ROUNDS = 100_000
ACCEPTANCE_FLOOR = 0.1


@dataclass(frozen=True)
class TiltedStepSampler:
    """Sampler for one tilted ladder step at a fixed intensity."""

    claim: object
    ell: float
    premium_rate: float
    adjustment: float
    envelope_rate: float | None = None  # None: closed-form exponential case
    log_mgf_at_envelope: float = 0.0
    acceptance: float = 1.0

    def sample(self, rng, size):
        if self.envelope_rate is None:
            return rng.exponential(self.premium_rate / self.ell, size)
        out = np.empty(size)
        filled = 0
        rate = self.envelope_rate
        rstar = self.adjustment + rate
        while filled < size:
            need = size - filled
            batch = max(16, int(need / max(self.acceptance, 0.05) * 1.2))
            x = rng.exponential(1.0 / rate, batch)
            logu = np.log(1.0 - rng.random(batch))
            with np.errstate(divide="ignore"):
                keep = logu <= rstar * x + np.log(self.claim.tail(x)) \
                    - self.log_mgf_at_envelope
            accepted = x[keep]
            take = min(need, accepted.size)
            out[filled:filled + take] = accepted[:take]
            filled += take
        return out


def tilted_sampler(model, ell):
    """Build the tilted step sampler; raises AcceptanceRateError when no
    exponential envelope reaches the documented acceptance floor."""
    model.check_intensity(ell)
    if model.claim.tail_class is not TailClass.LIGHT:
        raise DomainError("tilted sampling needs a light-tailed claim law")
    r = adjustment_coefficient(model, ell)
    c = model.premium_rate
    if isinstance(model.claim, Exponential):
        return TiltedStepSampler(model.claim, ell, c, r)
    gap = model.claim.r_max - r
    best = (0.0, None)
    for frac in np.linspace(0.05, 0.95, 64):
        rate = gap * frac
        acc = c * rate / (ell * model.claim.mgf(r + rate))
        if acc > best[0]:
            best = (acc, rate)
    acc, rate = best
    if acc < ACCEPTANCE_FLOOR:
        raise AcceptanceRateError(
            f"best envelope acceptance rate {acc:.3f} below {ACCEPTANCE_FLOOR}")
    return TiltedStepSampler(
        model.claim, ell, c, r, envelope_rate=rate,
        log_mgf_at_envelope=math.log(model.claim.mgf(r + rate)),
        acceptance=acc)


# ---------------------------------------------------------------------------
# tilted walk
# ---------------------------------------------------------------------------

def _tilted_overshoots(sampler, u, rng, count):
    """Deficits of the tilted walk over level u, one per replication."""
    s = np.zeros(count)
    alive = np.arange(count)
    xi = np.empty(count)
    for _ in range(_MAX_ROUNDS):
        s[alive] += sampler.sample(rng, alive.size)
        crossed = s[alive] > u
        rows = alive[crossed]
        xi[rows] = s[rows] - u
        alive = alive[~crossed]
        if alive.size == 0:
            return xi
    raise RuntimeError("tilted walk failed to cross the level; drift error?")


def is_sample(model, ell, u, rule, rng):
    """One weighted replication: w(-deficit) * exp(-R * (u + deficit))."""
    sampler = tilted_sampler(model, ell)
    xi = float(_tilted_overshoots(sampler, u, rng, 1)[0])
    return float(rule.weight(-xi)) * math.exp(-sampler.adjustment * (u + xi))


def _is_block(model, rule, u, ell, seed, index, count, stratum, level):
    sampler = tilted_sampler(model, ell)
    rng = make_stream(seed, stream_index(index, stratum, level))
    xi = _tilted_overshoots(sampler, u, rng, count)
    lr = np.exp(-sampler.adjustment * (u + xi))
    w = np.asarray(rule.weight(-xi))
    a = w * lr
    return (float(a.sum()), float(np.dot(a, a)),
            float(lr.sum()), float(np.dot(lr, lr)),
            float(np.dot(a, lr)), count)


def is_estimate_paired(model, rule, u, n, seed, *, ell, block_size=BLOCK_SIZE,
                       _stratum=0, _level=0):
    """Tilted modified and classical estimates from the same walks."""
    if u < 0:
        raise DomainError("initial capital must be nonnegative")
    out = None
    for b, cnt in block_plan(n, block_size):
        part = _is_block(model, rule, u, ell, seed, b, cnt, _stratum, _level)
        piece = PairedEstimate(
            *part, ((seed, stream_index(b, _stratum, _level), cnt),))
        out = piece if out is None else out.merge(piece)
    return out


def is_estimate(model, rule, u, n, seed, *, ell, block_size=BLOCK_SIZE):
    """Tilted importance-sampling estimate of the modified ruin probability."""
    return is_estimate_paired(model, rule, u, n, seed, ell=ell,
                              block_size=block_size).modified


def is_deficit_sample(model, ell, u, n, seed, block_size=BLOCK_SIZE):
    """(deficit, weight) pairs for the conditional deficit law at level u.

    Every tilted replication is a ruined path; reweighting by exp(-R*deficit)
    (the exp(-R*u) factor cancels in normalization) turns the tilted deficit
    sample into a weighted sample of the conditional law given ruin.
    """
    sampler = tilted_sampler(model, ell)
    xs, ws = [], []
    for b, cnt in block_plan(n, block_size):
        rng = make_stream(seed, stream_index(b))
        xi = _tilted_overshoots(sampler, u, rng, cnt)
        xs.append(xi)
        ws.append(np.exp(-sampler.adjustment * xi))
    return np.concatenate(xs), np.concatenate(ws)


# ---------------------------------------------------------------------------
# stratified mixed-intensity estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StratifiedEstimate:
    """Mass-weighted combination of per-stratum tilted estimates."""

    mean: float
    std_error: float
    n: int
    streams: tuple
    refinement_proxy: float
    cells: int

    def ci(self, z=1.959963984540054):
        half = z * self.std_error
        return (self.mean - half, self.mean + half)


def _density_cells(density, cells):
    """Geometric cell edges concentrating at the upper end of the support."""
    if cells < 2:
        return np.array([density.lo, density.hi])
    width = density.hi - density.lo
    k = np.arange(1, cells)
    dist = width * (1e-6) ** (k / (cells - 1))
    return np.concatenate([[density.lo], density.hi - dist, [density.hi]])


def _density_part_estimate(model, rule, u, n_per_stratum, seed, cells, level,
                           stratum_offset):
    dens = model.mixing.density
    edges = _density_cells(dens, cells)
    total = 0.0
    var = 0.0
    n = 0
    streams = ()
    for k in range(len(edges) - 1):
        mass = dens.interval_mass(edges[k], edges[k + 1])
        if mass <= 0.0:
            continue
        mid = 0.5 * (edges[k] + edges[k + 1])
        est = is_estimate_paired(model, rule, u, n_per_stratum, seed,
                                 ell=mid, _stratum=stratum_offset + k,
                                 _level=level).modified
        total += mass * est.mean
        var += (mass * est.std_error) ** 2
        n += est.n
        streams += est.streams
    return total, var, n, streams


def is_estimate_mixed(model, rule, u, n_per_stratum, seed, *, cells=256,
                      tolerance=None, block_size=BLOCK_SIZE):
    """Stratified tilted estimate of the mixed modified ruin probability.

    Atoms are exact strata; the density part is split into `cells` geometric
    cells toward the upper endpoint, each estimated at its midpoint intensity
    and combined with its exact mass.  refinement_proxy is the change in the
    density contribution when the cell count doubles; StratificationError is
    raised when a tolerance is given and the proxy exceeds it.
    """
    model.require_net_profit()
    total = 0.0
    var = 0.0
    n = 0
    streams = ()
    for j, (loc, mass) in enumerate(model.mixing.atoms):
        if loc == 0.0:
            continue  # zero intensity never ruins
        est = is_estimate_paired(model, rule, u, n_per_stratum, seed,
                                 ell=loc, _stratum=j,
                                 block_size=block_size).modified
        total += mass * est.mean
        var += (mass * est.std_error) ** 2
        n += est.n
        streams += est.streams
    proxy = 0.0
    if model.mixing.density is not None:
        offset = len(model.mixing.atoms)
        base = _density_part_estimate(model, rule, u, n_per_stratum, seed,
                                      cells, 0, offset)
        fine = _density_part_estimate(model, rule, u, n_per_stratum, seed,
                                      2 * cells, 1, offset)
        proxy = abs(fine[0] - base[0])
        total += base[0]
        var += base[1]
        n += base[2]
        streams += base[3]
    if tolerance is not None and proxy > tolerance:
        raise StratificationError(
            f"refinement proxy {proxy} exceeds tolerance {tolerance}")
    return StratifiedEstimate(mean=total, std_error=math.sqrt(var), n=n,
                              streams=streams, refinement_proxy=proxy,
                              cells=cells)
