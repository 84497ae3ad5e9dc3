"""CSV tables written into run directories (rankings, gap groups, ensemble comparisons)."""
from __future__ import annotations

import csv
import io
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from sce_segmentation.domain.ensemble import ComparisonRow
from sce_segmentation.domain.errors import RasterFormatError
from sce_segmentation.domain.metrics import GsumResult

RANKINGS_HEADER = ("run", "cluster", "g_sum", "comparisons", "rank", "selected")
GROUPS_HEADER = ("group", "rank", "run", "cluster", "g_sum", "representative")
COMPARISON_HEADER = (
    "a_run",
    "a_cluster",
    "b_run",
    "b_cluster",
    "s_i",
    "q_u",
    "dice",
    "kind",
    "tau",
)


@dataclass(frozen=True)
class RankingRow:
    run: int
    cluster: int
    g_sum: float
    comparisons: int
    rank: int
    selected: bool


def _write(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _real(value: float) -> str:
    # repr round-trips float64 exactly
    return repr(float(value))


def format_rankings(
    results: Sequence[GsumResult], ranking: Sequence[int], cutoff_rank: int
) -> str:
    """One row per mask in ranking order; `rank` is 1-based, `selected` is rank <= cutoff."""
    rows = []
    for position, index in enumerate(ranking, start=1):
        result = results[index]
        rows.append(
            (
                result.base_id.run,
                result.base_id.cluster,
                _real(result.g_scalar),
                result.comparisons,
                position,
                int(position <= cutoff_rank),
            )
        )
    return _write(RANKINGS_HEADER, rows)


def parse_rankings(text: str, *, where: object = "<text>") -> list[RankingRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != RANKINGS_HEADER:
        raise RasterFormatError(f"{where}: unexpected header {reader.fieldnames}")
    try:
        return [
            RankingRow(
                run=int(row["run"]),
                cluster=int(row["cluster"]),
                g_sum=float(row["g_sum"]),
                comparisons=int(row["comparisons"]),
                rank=int(row["rank"]),
                selected=row["selected"] == "1",
            )
            for row in reader
        ]
    except (TypeError, ValueError) as exc:
        raise RasterFormatError(f"{where}: malformed row ({exc})") from exc


def format_groups(
    results: Sequence[GsumResult],
    ranking: Sequence[int],
    groups: Sequence[Sequence[int]],
) -> str:
    rows = []
    for group_index, positions in enumerate(groups):
        for offset, position in enumerate(positions):
            result = results[ranking[position]]
            rows.append(
                (
                    group_index,
                    position + 1,
                    result.base_id.run,
                    result.base_id.cluster,
                    _real(result.g_scalar),
                    int(offset == 0),
                )
            )
    return _write(GROUPS_HEADER, rows)


def format_comparison(rows: Iterable[ComparisonRow]) -> str:
    return _write(
        COMPARISON_HEADER,
        (
            (
                row.a_id.run,
                row.a_id.cluster,
                row.b_id.run,
                row.b_id.cluster,
                _real(row.s_i),
                _real(row.q_u),
                _real(row.dice),
                row.kind,
                "" if row.tau is None else f"{row.tau:g}",
            )
            for row in rows
        ),
    )
