"""Suspiciousness of compiler files from failing and passing coverage."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .harness.coverage import CoverageSpectrum

SCORE_DIGITS = 12
TOP_N = (1, 5, 10, 20)


class UncoveredFile(ValueError):
    pass


class MissingGroundTruth(ValueError):
    pass


@dataclass(frozen=True)
class StatementStat:
    file: str
    line: int
    ep: int


def statement_score(ep: int) -> float:
    if ep < 0:
        raise ValueError("ep must be non-negative")
    return 1.0 / math.sqrt(1 + ep)


def statement_stats(failing: CoverageSpectrum, passing: Sequence[CoverageSpectrum]) -> list[StatementStat]:
    """One entry per statement the failing program covers, with its passing-cover count."""
    ep: Counter = Counter()
    for p in passing:
        for f, lines in p.files.items():
            for n in lines & failing.files.get(f, frozenset()):
                ep[f, n] += 1
    return [StatementStat(f, n, ep[f, n]) for f, lines in failing.files.items() for n in sorted(lines)]


def file_score(stats: Sequence[StatementStat]) -> float:
    """Mean statement score, rounded so that summation order cannot split ties."""
    if not stats:
        raise UncoveredFile("file has no statement covered by the failing program")
    return round(math.fsum(statement_score(s.ep) for s in stats) / len(stats), SCORE_DIGITS)


def file_scores(failing: CoverageSpectrum, passing: Sequence[CoverageSpectrum]) -> dict[str, float]:
    by_file: dict[str, list[StatementStat]] = {}
    for s in statement_stats(failing, passing):
        by_file.setdefault(s.file, []).append(s)
    return {f: file_score(stats) for f, stats in by_file.items()}


@dataclass(frozen=True)
class RankedFile:
    file: str
    score: float
    rank: int


@dataclass(frozen=True)
class FileRanking:
    entries: tuple[RankedFile, ...]

    def rank_of(self, file: str) -> int | None:
        for e in self.entries:
            if e.file == file:
                return e.rank
        return None

    def __len__(self) -> int:
        return len(self.entries)

    def to_json(self) -> list[dict]:
        return [{"file": e.file, "score": e.score, "rank": e.rank} for e in self.entries]

    def format_text(self, limit: int | None = None) -> str:
        rows = self.entries if limit is None else self.entries[:limit]
        width = max([len(e.file) for e in rows] + [4])
        lines = [f"{'rank':>4}  {'file':<{width}}  score"]
        lines += [f"{e.rank:>4}  {e.file:<{width}}  {e.score:.6f}" for e in rows]
        return "\n".join(lines)


def rank_files(scores: Mapping[str, float]) -> FileRanking:
    """Descending by score; every member of a tie group gets the group's last position."""
    if not scores:
        raise ValueError("nothing to rank")
    keyed = {f: round(s, SCORE_DIGITS) for f, s in scores.items()}
    order = sorted(keyed, key=lambda f: (-keyed[f], f))
    worst: Counter = Counter()
    for pos, f in enumerate(order, 1):
        worst[keyed[f]] = pos
    return FileRanking(tuple(RankedFile(f, keyed[f], worst[keyed[f]]) for f in order))


def isolate(failing: CoverageSpectrum, passing: Sequence[CoverageSpectrum]) -> FileRanking:
    return rank_files(file_scores(failing, passing))


@dataclass(frozen=True)
class EvalMetrics:
    top_n: dict[int, int]
    mfr: float
    mar: float
    bugs: int

    def to_dict(self) -> dict:
        return {"top_n": {str(k): v for k, v in self.top_n.items()}, "mfr": self.mfr, "mar": self.mar, "bugs": self.bugs}


def eval_metrics(rankings: Mapping[str, FileRanking], truth: Mapping[str, Iterable[str]]) -> EvalMetrics:
    """Top-N counts, mean first rank and mean average rank over bugs."""
    if not rankings:
        raise ValueError("no bugs to evaluate")
    firsts, avgs = [], []
    for bug, ranking in rankings.items():
        ranks = [r for r in (ranking.rank_of(f) for f in truth.get(bug, ())) if r is not None]
        if not ranks:
            raise MissingGroundTruth(f"no faulty file of bug {bug!r} appears in its ranking")
        firsts.append(min(ranks))
        avgs.append(sum(ranks) / len(ranks))
    top = {n: sum(1 for r in firsts if r <= n) for n in TOP_N}
    return EvalMetrics(top, sum(firsts) / len(firsts), sum(avgs) / len(avgs), len(firsts))


def load_ground_truth(path: str | Path) -> list[str]:
    """Faulty file paths, one per line; blank lines and ``#`` comments are skipped."""
    lines = Path(path).read_text().splitlines()
    return [ln.strip() for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]


def report_json(ranking: FileRanking) -> str:
    return json.dumps(ranking.to_json(), indent=2)


__all__ = [
    "EvalMetrics",
    "FileRanking",
    "MissingGroundTruth",
    "RankedFile",
    "StatementStat",
    "UncoveredFile",
    "eval_metrics",
    "file_score",
    "file_scores",
    "isolate",
    "load_ground_truth",
    "rank_files",
    "report_json",
    "statement_score",
    "statement_stats",
]
