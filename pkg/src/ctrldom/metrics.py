"""Quantitative control scores.

``qc`` is the log-count ratio of a domain.  ``wqc_exact`` sums a weight
over every represented value, ``wqc_interval`` integrates the weight's
antiderivative over each interval, and ``wqc_constrained`` scales each
interval's integral by its feasible density.  Sums and integrals are
carried out with mpmath so 64-bit domains do not lose precision.

Scores can be taken after an offset shift (``value + offset`` mod
2**width), e.g. to measure a write size relative to a buffer bound.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import mpmath

from .bits import count_fixed_bits, fixed_bits_runs
from .control import ControlDomain

PRECISION = 60  # decimal digits
CFH_VALID_LIMIT = 1 << 48
EXACT_RUN_LIMIT = 1 << 20


def _mp(x) -> mpmath.mpf:
    return mpmath.mpf(x)


# --------------------------------------------------------------------------
# weight functions


class WeightFunction:
    """A non-negative weight over integers with a closed-form antiderivative.

    ``mass(lo, hi, exact)`` is the weight of the integer range [lo, hi]:
    the sum of omega over it when ``exact``, otherwise the integral of
    omega from lo to hi + 1.  Values below ``support_lo`` weigh nothing.
    """

    name = "weight"
    support_lo = 1

    def omega(self, x) -> mpmath.mpf:
        raise NotImplementedError

    def antiderivative(self, x) -> mpmath.mpf:
        raise NotImplementedError

    def _sum(self, lo: int, hi: int) -> mpmath.mpf:
        raise NotImplementedError

    def mass(self, lo: int, hi: int, exact: bool = False) -> mpmath.mpf:
        lo = max(lo, self.support_lo)
        if lo > hi:
            return _mp(0)
        with mpmath.workdps(PRECISION):
            if exact:
                return self._sum(lo, hi)
            return self.antiderivative(_mp(hi) + 1) - self.antiderivative(_mp(lo))

    def describe(self) -> dict:
        return {"name": self.name}


class LogWeight(WeightFunction):
    """omega(x) = 1 / (ln 2 * x); antiderivative log2 x."""

    name = "log"

    def omega(self, x):
        return 1 / (mpmath.log(2) * x)

    def antiderivative(self, x):
        return mpmath.log(x, 2)

    def _sum(self, lo, hi):
        return (mpmath.digamma(hi + 1) - mpmath.digamma(lo)) / mpmath.log(2)


class InverseSquareWeight(WeightFunction):
    """omega(x) = 1 / x**2; antiderivative -1/x."""

    name = "inv-square"

    def omega(self, x):
        return 1 / _mp(x) ** 2

    def antiderivative(self, x):
        return -1 / _mp(x)

    def _sum(self, lo, hi):
        return mpmath.zeta(2, lo) - mpmath.zeta(2, hi + 1)


class InverseSqrtWeight(WeightFunction):
    """omega(x) = 1 / sqrt(x); antiderivative 2 sqrt(x)."""

    name = "inv-sqrt"

    def omega(self, x):
        return 1 / mpmath.sqrt(x)

    def antiderivative(self, x):
        return 2 * mpmath.sqrt(x)

    def _sum(self, lo, hi):
        return mpmath.zeta(0.5, lo) - mpmath.zeta(0.5, hi + 1)


class ConstantWeight(WeightFunction):
    name = "constant"
    support_lo = 0

    def omega(self, x):
        return _mp(1)

    def antiderivative(self, x):
        return _mp(x)

    def _sum(self, lo, hi):
        return _mp(hi - lo + 1)


class StepWeight(WeightFunction):
    """Weight 1 below ``limit`` and 0 from ``limit`` on."""

    support_lo = 0

    def __init__(self, limit: int = CFH_VALID_LIMIT, name: str = "cfh-valid"):
        self.limit = limit
        self.name = name

    def omega(self, x):
        return _mp(1 if x < self.limit else 0)

    def antiderivative(self, x):
        return mpmath.mpf(min(x, self.limit))

    def _sum(self, lo, hi):
        return _mp(max(0, min(hi, self.limit - 1) - lo + 1))

    def describe(self):
        return {"name": self.name, "limit": str(self.limit)}


class DistanceWeight(WeightFunction):
    """A base weight applied to the distance |x - bound|."""

    support_lo = 0

    def __init__(self, base: WeightFunction, bound: int, name: str | None = None):
        self.base = base
        self.bound = bound
        self.name = name or f"distance({base.name},{bound})"

    def distance(self, x: int) -> int:
        return abs(x - self.bound)

    def omega(self, x):
        d = self.distance(int(x))
        return self.base.omega(d) if d >= self.base.support_lo else _mp(0)

    def antiderivative(self, x):
        raise NotImplementedError("distance weights are integrated piecewise")

    def mass(self, lo, hi, exact=False):
        total = _mp(0)
        b = self.bound
        if lo < b:  # below the bound distances run b-top .. b-lo
            top = min(hi, b - 1)
            if lo <= top:
                total += self.base.mass(b - top, b - lo, exact)
        if hi > b:
            bottom = max(lo, b + 1)
            total += self.base.mass(bottom - b, hi - b, exact)
        if lo <= b <= hi:
            total += self.base.mass(0, 0, exact)
        return total

    def describe(self):
        return {"name": self.name, "base": self.base.describe(), "bound": str(self.bound)}


@dataclass(frozen=True)
class Segment:
    start: int
    stop: int | None  # exclusive; None means unbounded
    weight: WeightFunction
    scale: float = 1.0


class PiecewiseWeight(WeightFunction):
    """Scaled base weights on consecutive half-open segments."""

    support_lo = 0

    def __init__(self, segments: Sequence[Segment], name: str = "piecewise"):
        segs = sorted(segments, key=lambda s: s.start)
        for a, b in zip(segs, segs[1:]):
            if a.stop is None or a.stop > b.start:
                raise ValueError("piecewise segments overlap")
        for s in segs:
            if s.scale < 0:
                raise ValueError("segment scale must be non-negative")
            if s.stop is not None and s.stop <= s.start:
                raise ValueError("empty segment")
        self.segments = tuple(segs)
        self.name = name

    def _segment(self, x):
        for s in self.segments:
            if s.start <= x and (s.stop is None or x < s.stop):
                return s
        return None

    def omega(self, x):
        s = self._segment(x)
        if s is None or x < s.weight.support_lo:
            return _mp(0)
        return s.scale * s.weight.omega(x)

    def antiderivative(self, x):
        raise NotImplementedError("piecewise weights are integrated per segment")

    def mass(self, lo, hi, exact=False):
        total = _mp(0)
        for s in self.segments:
            a = max(lo, s.start)
            b = hi if s.stop is None else min(hi, s.stop - 1)
            if a <= b and s.scale:
                total += s.scale * s.weight.mass(a, b, exact)
        return total

    def describe(self):
        return {"name": self.name, "segments": [
            {"from": str(s.start), "to": None if s.stop is None else str(s.stop),
             "weight": s.weight.describe(), "scale": s.scale} for s in self.segments]}


def builtin_weights() -> dict[str, WeightFunction]:
    return {w.name: w for w in (LogWeight(), InverseSquareWeight(), InverseSqrtWeight(),
                                ConstantWeight(), StepWeight())}


def _weight_from_spec(spec) -> WeightFunction:
    if isinstance(spec, str):
        return get_weight(spec)
    if "segments" in spec:
        segs = [Segment(int(s["from"]), None if s.get("to") is None else int(s["to"]),
                        _weight_from_spec(s.get("weight", "constant")), float(s.get("scale", 1.0)))
                for s in spec["segments"]]
        return PiecewiseWeight(segs, spec.get("name", "piecewise"))
    if "bound" in spec:
        return DistanceWeight(_weight_from_spec(spec.get("base", "log")), int(spec["bound"]),
                              spec.get("name"))
    return get_weight(spec["name"])


def load_weight(path) -> WeightFunction:
    """Read a weight from JSON (piecewise segments or a distance wrapper)."""
    return _weight_from_spec(json.loads(Path(path).read_text()))


def get_weight(name: str) -> WeightFunction:
    lib = builtin_weights()
    if name in lib:
        return lib[name]
    if name.startswith("distance:"):
        # distance:<base>:<bound>
        _, base, bound = name.split(":")
        return DistanceWeight(get_weight(base), int(bound, 0))
    if Path(name).suffix == ".json":
        return load_weight(name)
    raise KeyError(f"unknown weight {name!r}; known: {', '.join(sorted(lib))}")


# --------------------------------------------------------------------------
# domains in score space


@dataclass(frozen=True)
class DensityInfo:
    """Feasible count rho of each domain interval (same order)."""

    counts: tuple[int, ...]

    @classmethod
    def from_domain(cls, domain: ControlDomain) -> "DensityInfo":
        fb = domain.fixed_bits
        if fb is None:
            return cls(tuple(iv.size for iv in domain.intervals))
        return cls(tuple(count_fixed_bits(iv.lo, iv.hi, fb.mask, fb.bits)
                         for iv in domain.intervals))


def _shift(lo: int, hi: int, offset: int, width: int) -> list[tuple[int, int]]:
    """Image of [lo, hi] under x -> x + offset mod 2**width, as ranges."""
    if offset % (1 << width) == 0:
        return [(lo, hi)]
    m = 1 << width
    a, b = (lo + offset) % m, (hi + offset) % m
    if a <= b:
        return [(a, b)]
    return [(a, m - 1), (0, b)]


def _intervals(domain: ControlDomain, strong_only: bool):
    return [iv for iv in domain.intervals if iv.strong or not strong_only]


def _full_mass(weight: WeightFunction, width: int, exact: bool) -> mpmath.mpf:
    return weight.mass(0, (1 << width) - 1, exact)


def _ratio(num, den) -> float:
    if den == 0:
        return 0.0
    r = float(num / den)
    return min(max(r, 0.0), 1.0)


def wqc_exact(domain: ControlDomain, weight: WeightFunction, offset: int = 0,
              strong_only: bool = False) -> float:
    """Sum of the weight over represented values over the sum over the domain."""
    num = _mp(0)
    fb = domain.fixed_bits
    runs = 0
    for iv in _intervals(domain, strong_only):
        pieces = [(iv.lo, iv.hi)] if fb is None else fixed_bits_runs(iv.lo, iv.hi, fb.mask, fb.bits)
        for lo, hi in pieces:
            runs += 1
            if runs > EXACT_RUN_LIMIT:
                raise ValueError("domain too fragmented for exact summation")
            for a, b in _shift(lo, hi, offset, domain.width):
                num += weight.mass(a, b, exact=True)
    return _ratio(num, _full_mass(weight, domain.width, True))


def wqc_interval(domain: ControlDomain, weight: WeightFunction, offset: int = 0,
                 strong_only: bool = False) -> float:
    """Integral approximation: each interval contributes its antiderivative span."""
    num = _mp(0)
    for iv in _intervals(domain, strong_only):
        for a, b in _shift(iv.lo, iv.hi, offset, domain.width):
            num += weight.mass(a, b)
    return _ratio(num, _full_mass(weight, domain.width, False))


def wqc_constrained(domain: ControlDomain, weight: WeightFunction,
                    density: DensityInfo | None = None, offset: int = 0) -> float:
    """Integral approximation with each interval scaled by rho / (hi - lo + 1)."""
    density = density or DensityInfo.from_domain(domain)
    if len(density.counts) != len(domain.intervals):
        raise ValueError("density does not match the domain intervals")
    num = _mp(0)
    for iv, rho in zip(domain.intervals, density.counts):
        if not 0 <= rho <= iv.size:
            raise ValueError(f"density {rho} outside [0, {iv.size}] for [{iv.lo}, {iv.hi}]")
        if rho == 0:
            continue
        part = sum((weight.mass(a, b) for a, b in _shift(iv.lo, iv.hi, offset, domain.width)),
                   _mp(0))
        num += part * rho / _mp(iv.size)
    return _ratio(num, _full_mass(weight, domain.width, False))


def wqc(domain: ControlDomain, weight: WeightFunction, method: str = "constrained",
        offset: int = 0) -> float:
    if method == "exact":
        return wqc_exact(domain, weight, offset)
    if method == "interval":
        return wqc_interval(domain, weight, offset)
    if method == "constrained":
        return wqc_constrained(domain, weight, offset=offset)
    raise ValueError(f"unknown wQC method {method!r}")


def qc(domain: ControlDomain, strong_only: bool = False) -> float:
    """log |DoC| / log |Dom|; 0 for empty and singleton domains."""
    n = domain.count(strong_only)
    if n <= 1:
        return 0.0
    return math.log2(n) / domain.width


def qc_bits(domain: ControlDomain) -> float:
    n = domain.count()
    return math.log2(n) if n > 1 else 0.0


# --------------------------------------------------------------------------
# recipes and bands


@dataclass(frozen=True)
class Bands:
    """Upper cutoffs of the low and medium bands."""

    low: float
    medium: float

    def label(self, score: float | None) -> str | None:
        if score is None:
            return None
        if score < self.low:
            return "low"
        if score < self.medium:
            return "medium"
        return "high"


OOB_BANDS = Bands(1.0, 10.0)
CFH_BANDS = Bands(0.01, 0.1)
RECIPES = ("oob-write", "oob-read", "cfh", "data")


@dataclass(frozen=True)
class ScoredDomain:
    """A domain plus the offset that moves it into score space."""

    domain: ControlDomain
    offset: int = 0
    label: str = "target"


def score_oob(offset: ScoredDomain | None, size: ScoredDomain | None,
              weight: WeightFunction | None = None, width: int | None = None,
              method: str = "constrained") -> float:
    """(wQC(offset) + wQC(size)) times the variable width.

    A missing (fixed) component contributes 0.
    """
    if offset is None and size is None:
        raise ValueError("score_oob needs an offset or a size domain")
    weight = weight or LogWeight()
    parts = [p for p in (offset, size) if p is not None]
    widths = {p.domain.width for p in parts}
    if width is None:
        if len(widths) > 1:
            raise ValueError("offset and size widths differ; pass width explicitly")
        width = widths.pop()
    return sum(wqc(p.domain, weight, method, p.offset) for p in parts) * width


def score_cfh(pointer: ScoredDomain, method: str = "constrained") -> float:
    if pointer.domain.width != 64:
        raise ValueError("control-flow hijack scoring expects a 64-bit pointer")
    return wqc(pointer.domain, StepWeight(), method, pointer.offset)


def score_data(byte_domains: Sequence[ControlDomain]) -> float:
    if not byte_domains:
        raise ValueError("score_data needs at least one byte domain")
    if len(byte_domains) > 8:
        raise ValueError("score_data takes at most eight bytes")
    if any(d.width != 8 for d in byte_domains):
        raise ValueError("score_data expects 8-bit domains")
    return sum(qc(d) for d in byte_domains) / len(byte_domains)


def band_for(recipe: str, score: float, bands: Mapping[str, Bands] | None = None) -> str | None:
    table = {"oob-write": OOB_BANDS, "oob-read": OOB_BANDS, "cfh": CFH_BANDS}
    if bands:
        table.update(bands)
    b = table.get(recipe)
    return None if b is None else b.label(score)


@dataclass
class ScoreReport:
    qc: float
    qc_bits: float
    wqc: dict[str, float] = field(default_factory=dict)
    recipe_scores: dict[str, float] = field(default_factory=dict)
    bands: dict[str, str | None] = field(default_factory=dict)
    provenance: dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"qc": self.qc, "qc_bits": self.qc_bits, "wqc": dict(self.wqc),
                "recipe_scores": dict(self.recipe_scores), "bands": dict(self.bands),
                "provenance": dict(self.provenance)}


def score_domain(domain: ControlDomain, weights: Iterable[WeightFunction] | None = None,
                 offset: int = 0, method: str = "constrained") -> ScoreReport:
    weights = list(weights) if weights is not None else [LogWeight(), InverseSquareWeight(),
                                                           InverseSqrtWeight()]
    return ScoreReport(
        qc=qc(domain), qc_bits=qc_bits(domain),
        wqc={w.name: wqc(domain, w, method, offset) for w in weights},
        provenance={"offset": str(offset), "method": method,
                    "count": str(domain.count()), "exact": domain.exact},
    )
