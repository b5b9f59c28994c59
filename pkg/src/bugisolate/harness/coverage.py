"""Line-coverage spectra and the gcov text report format."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping


class CoverageUnavailable(RuntimeError):
    pass


@dataclass(frozen=True)
class CoverageSpectrum:
    """Covered statement lines per compiler source file."""

    files: Mapping[str, frozenset[int]]

    @classmethod
    def of(cls, data: Mapping[str, Iterable[int]]) -> "CoverageSpectrum":
        files = {}
        for path, lines in data.items():
            lines = frozenset(int(n) for n in lines)
            if any(n <= 0 for n in lines):
                raise ValueError(f"non-positive line number in {path}")
            if lines:
                files[path] = lines
        return cls(dict(sorted(files.items())))

    @classmethod
    def empty(cls) -> "CoverageSpectrum":
        return cls({})

    def pairs(self) -> frozenset[tuple[str, int]]:
        return frozenset((f, n) for f, lines in self.files.items() for n in lines)

    def union(self, other: "CoverageSpectrum") -> "CoverageSpectrum":
        keys = set(self.files) | set(other.files)
        return CoverageSpectrum.of({k: self.files.get(k, frozenset()) | other.files.get(k, frozenset()) for k in keys})

    def __len__(self) -> int:
        return sum(len(v) for v in self.files.values())

    def __eq__(self, other) -> bool:
        return isinstance(other, CoverageSpectrum) and dict(self.files) == dict(other.files)

    def __hash__(self) -> int:
        return hash(self.pairs())

    def to_json(self) -> dict:
        return {f: sorted(lines) for f, lines in self.files.items()}

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_json(), sort_keys=True).encode()).hexdigest()


def parse_gcov_lines(text: str) -> tuple[str | None, set[int]]:
    """Covered lines of one ``.gcov`` report, plus the ``Source:`` path if present.

    Each line is ``hits:line_no:text``; ``-`` marks non-executable lines and
    ``#####``/``=====`` unexecuted ones.
    """
    source = None
    covered: set[int] = set()
    for raw in text.splitlines():
        parts = raw.split(":", 2)
        if len(parts) < 2:
            continue
        hits, line_no = parts[0].strip(), parts[1].strip()
        if not line_no.isdigit():
            continue
        n = int(line_no)
        if n == 0:
            rest = parts[2] if len(parts) > 2 else ""
            if rest.startswith("Source:"):
                source = rest[len("Source:"):].strip()
            continue
        if hits in ("-", "#####", "=====") or not hits:
            continue
        count = hits.rstrip("*")
        if count.isdigit() and int(count) > 0:
            covered.add(n)
    return source, covered


def spectrum_from_reports(reports: Iterator[tuple[str, str]]) -> CoverageSpectrum:
    """Merge ``(default_path, report_text)`` pairs; a ``Source:`` header wins over the default."""
    merged: dict[str, set[int]] = {}
    for default_path, text in reports:
        source, lines = parse_gcov_lines(text)
        merged.setdefault(source or default_path, set()).update(lines)
    return CoverageSpectrum.of(merged)
