"""Distances between coverage spectra and the quality of a passing-program set."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .harness.coverage import CoverageSpectrum

DEFAULT_ALPHA = 0.5


class EmptyPassingSet(ValueError):
    pass


def jaccard_dist(a: CoverageSpectrum, b: CoverageSpectrum) -> float:
    """1 - |a & b| / |a | b| over (file, line) pairs; two empty spectra are at distance 0."""
    pa, pb = a.pairs(), b.pairs()
    union = len(pa | pb)
    if union == 0:
        return 0.0
    return 1.0 - len(pa & pb) / union


@dataclass(frozen=True)
class SpectrumSet:
    failing: CoverageSpectrum
    passing: tuple[CoverageSpectrum, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if len(self.failing) == 0:
            raise ValueError("the failing spectrum is empty")
        object.__setattr__(self, "passing", tuple(self.passing))

    def with_passing(self, spectrum: CoverageSpectrum) -> "SpectrumSet":
        return SpectrumSet(self.failing, self.passing + (spectrum,))


def similarity(spectra: SpectrumSet) -> float:
    if not spectra.passing:
        raise EmptyPassingSet("similarity needs at least one passing spectrum")
    return math.fsum(1.0 - jaccard_dist(p, spectra.failing) for p in spectra.passing) / len(spectra.passing)


def diversity(spectra: SpectrumSet) -> float:
    """Mean pairwise distance among passing spectra; 0 for a single one."""
    n = len(spectra.passing)
    if n == 0:
        raise EmptyPassingSet("diversity needs at least one passing spectrum")
    if n == 1:
        return 0.0
    dists = [jaccard_dist(p, q) for p, q in itertools.combinations(spectra.passing, 2)]
    return math.fsum(dists) / len(dists)


@dataclass(frozen=True)
class QualityState:
    q: float
    sim: float
    div: float
    n: int
    alpha: float

    def to_dict(self) -> dict:
        return {"q": self.q, "sim": self.sim, "div": self.div, "n": self.n, "alpha": self.alpha}


def combine(n: int, sim: float, div: float, alpha: float = DEFAULT_ALPHA) -> QualityState:
    return QualityState(n * (alpha * div + (1 - alpha) * sim), sim, div, n, alpha)


INITIAL = QualityState(0.0, 0.0, 0.0, 0, DEFAULT_ALPHA)


def quality(spectra: SpectrumSet, alpha: float = DEFAULT_ALPHA) -> QualityState:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    n = len(spectra.passing)
    if n == 0:
        return QualityState(0.0, 0.0, 0.0, 0, alpha)
    return combine(n, similarity(spectra), diversity(spectra), alpha)


def delta_quality(curr: QualityState, prev: QualityState | None = None) -> float:
    return curr.q - (prev.q if prev is not None else 0.0)


__all__ = [
    "DEFAULT_ALPHA",
    "EmptyPassingSet",
    "INITIAL",
    "QualityState",
    "SpectrumSet",
    "combine",
    "delta_quality",
    "diversity",
    "jaccard_dist",
    "quality",
    "similarity",
]
