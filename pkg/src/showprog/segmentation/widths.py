"""Per-year reference widths and the width rules built on them."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from ..errors import InvalidInputError, MissingDataError

DEFAULT_TOLERANCE = 0.93


@dataclass(frozen=True)
class ReferenceWidthTable:
    """Median subpage widths keyed by ``(period, year)``."""

    entries: Mapping[tuple[str, int], int] = field(default_factory=dict)
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        if not 0 < self.tolerance <= 1:
            raise InvalidInputError(f"tolerance must lie in (0, 1], got {self.tolerance}")
        for key, width in self.entries.items():
            if width <= 0:
                raise InvalidInputError(f"non-positive reference width for {key}")
        object.__setattr__(self, "entries", dict(sorted(self.entries.items())))

    def median_for(self, year: int) -> int:
        matches = [w for (_, y), w in self.entries.items() if y == year]
        if not matches:
            raise MissingDataError(f"no reference width for year {year}")
        if len(set(matches)) > 1:
            raise MissingDataError(f"year {year} has conflicting reference widths {matches}")
        return matches[0]

    def threshold(self, year: int) -> float:
        """Narrowest acceptable subpage width for ``year`` (tolerance x median)."""
        return self.tolerance * self.median_for(year)

    def years(self) -> list[int]:
        return sorted({y for _, y in self.entries})

    def dumps(self) -> str:
        buf = io.StringIO()
        buf.write(f"# tolerance={self.tolerance!r}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["period", "year", "median_width"])
        for (period, year), width in self.entries.items():
            writer.writerow([period, year, width])
        return buf.getvalue()

    def dump(self, path: Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str, tolerance: float | None = None) -> "ReferenceWidthTable":
        file_tolerance = DEFAULT_TOLERANCE
        rows = []
        for line in text.splitlines():
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                key, _, value = stripped.lstrip("# ").partition("=")
                if key.strip() == "tolerance":
                    file_tolerance = float(value)
                continue
            rows.append(line)
        entries = {}
        for row in csv.DictReader(rows):
            try:
                key = (row["period"], int(row["year"]))
                entries[key] = int(row["median_width"])
            except (KeyError, TypeError, ValueError) as exc:
                raise InvalidInputError(f"bad reference width row {row!r}") from exc
        return cls(entries, file_tolerance if tolerance is None else tolerance)

    @classmethod
    def load(cls, path: Path, tolerance: float | None = None) -> "ReferenceWidthTable":
        return cls.loads(Path(path).read_text(encoding="utf-8"), tolerance)

    @classmethod
    def avignon(cls) -> "ReferenceWidthTable":
        """Widths measured on the pre-segmented Avignon corpus (1971-2022)."""
        text = resources.files(__package__).joinpath("data/avignon_reference_widths.csv")
        return cls.loads(text.read_text(encoding="utf-8"))


def lower_median(values: Iterable[int]) -> int:
    ordered = sorted(values)
    if not ordered:
        raise MissingDataError("cannot take the median of an empty list")
    return ordered[(len(ordered) - 1) // 2]


def compute_reference_widths(
    subpage_widths_by_year: Mapping[int, Iterable[int]],
    period: str = "",
    tolerance: float = DEFAULT_TOLERANCE,
) -> ReferenceWidthTable:
    entries = {}
    for year, widths in subpage_widths_by_year.items():
        widths = list(widths)
        if not widths:
            raise MissingDataError(f"no widths recorded for year {year}")
        entries[(period, int(year))] = lower_median(widths)
    return ReferenceWidthTable(entries, tolerance)


def width_out_of_range(width: float, threshold: float) -> bool:
    return width < threshold or width > 2 * threshold


def select_candidates(doc_pages, refs: ReferenceWidthTable, year: int) -> bool:
    """True when some page is narrower than the threshold or wider than twice it.

    ``doc_pages`` holds :class:`~showprog.imaging.PageImage` objects or plain widths.
    """
    t = refs.threshold(year)
    return any(width_out_of_range(getattr(p, "width_px", p), t) for p in doc_pages)
