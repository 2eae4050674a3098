"""Dataset file format and ingestion of ranking / expression data.

On-disk format: a header line ``m n collision_flag``, any number of comment
lines starting with '#', then one record per line as a space-free digit
string.  Records must have length m and weight n; digits above 1 are only
accepted when the collision flag is set.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .rng import substream


@dataclass
class Dataset:
    m: int
    n: int
    records: list[tuple[int, ...]]
    collision_flag: bool = False
    provenance: list[str] = field(default_factory=list)

    def __post_init__(self):
        for i, rec in enumerate(self.records):
            rec = tuple(int(c) for c in rec)
            self.records[i] = rec
            if len(rec) != self.m:
                raise ValueError(f"record {i} has length {len(rec)}, expected {self.m}")
            if sum(rec) != self.n:
                raise ValueError(f"record {i} has weight {sum(rec)}, expected {self.n}")
            if any(c < 0 for c in rec):
                raise ValueError(f"record {i} has negative counts")
            if not self.collision_flag and any(c > 1 for c in rec):
                raise ValueError(
                    f"record {i} has multi-photon counts without the collision flag"
                )

    def as_array(self) -> np.ndarray:
        return np.asarray(self.records, dtype=np.int64)


def write_dataset(ds: Dataset, path) -> None:
    lines = [f"{ds.m} {ds.n} {int(ds.collision_flag)}"]
    lines += [f"# {p}" for p in ds.provenance]
    lines += ["".join(str(c) for c in rec) for rec in ds.records]
    Path(path).write_text("\n".join(lines) + "\n")


def read_dataset(path) -> Dataset:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty dataset file")
    try:
        m_s, n_s, flag_s = lines[0].split()
        m, n, flag = int(m_s), int(n_s), bool(int(flag_s))
    except ValueError as exc:
        raise ValueError(f"{path}:1: malformed header {lines[0]!r}") from exc
    provenance: list[str] = []
    records: list[tuple[int, ...]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            provenance.append(line[1:].strip())
            continue
        if not line.isdigit():
            raise ValueError(f"{path}:{lineno}: malformed record {line!r}")
        rec = tuple(int(c) for c in line)
        if len(rec) != m:
            raise ValueError(f"{path}:{lineno}: length {len(rec)} != m = {m}")
        if sum(rec) != n:
            raise ValueError(f"{path}:{lineno}: weight {sum(rec)} != n = {n}")
        if not flag and any(c > 1 for c in rec):
            raise ValueError(f"{path}:{lineno}: collision digits without flag")
        records.append(rec)
    return Dataset(m=m, n=n, records=records, collision_flag=flag, provenance=provenance)


# --- ingestion ----------------------------------------------------------------

def ingest_rankings(rows: Sequence[Sequence[int]], m: int, n: int) -> Dataset:
    """Bitstrings from ranked item lists: the top-n items of each row get 1s.
    Items are 1-based ids in 1..m."""
    records = []
    for rownum, row in enumerate(rows):
        top = [int(i) for i in row[:n]]
        if len(top) < n:
            raise ValueError(f"row {rownum}: only {len(row)} items, need {n}")
        if len(set(top)) != n:
            raise ValueError(f"row {rownum}: duplicate item in top-{n}")
        rec = [0] * m
        for item in top:
            if not 1 <= item <= m:
                raise ValueError(f"row {rownum}: unknown item id {item}")
            rec[item - 1] = 1
        records.append(tuple(rec))
    return Dataset(m=m, n=n, records=records, provenance=[f"ingest rankings top-{n}"])


def ingest_expression_table(
    rows: Sequence[dict], universe: Sequence, n: int, signed: bool = False
) -> Dataset:
    """Bitstrings from per-item score rows: 1s at the n strongest scores
    within the universe.

    Scores are ranked by magnitude by default (`signed=True` ranks by signed
    value instead); ties break toward the smaller item index so re-ingestion
    is byte-identical.
    """
    universe = list(universe)
    m = len(universe)
    records = []
    for rownum, row in enumerate(rows):
        missing = [item for item in universe if item not in row]
        if missing:
            raise ValueError(f"row {rownum}: missing scores for {missing[:3]}")
        scores = np.array([float(row[item]) for item in universe])
        key = scores if signed else np.abs(scores)
        # stable sort on (-key, index): ties go to the smaller index
        order = np.lexsort((np.arange(m), -key))
        rec = [0] * m
        for idx in order[:n]:
            rec[idx] = 1
        records.append(tuple(rec))
    order_name = "signed" if signed else "magnitude"
    return Dataset(
        m=m, n=n, records=records,
        provenance=[f"ingest expression top-{n} by {order_name}"],
    )


def read_preflib_rankings(path) -> list[list[int]]:
    """Strict-order PrefLib lines 'count: item,item,...' expanded to one row
    per counted voter; '#'-prefixed metadata lines are skipped."""
    rows: list[list[int]] = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        count_s, _, items_s = line.partition(":")
        try:
            count = int(count_s)
            items = [int(tok) for tok in items_s.replace(",", " ").split()]
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: malformed line {line!r}") from exc
        rows.extend([items] * count)
    return rows


def read_ranking_csv(path) -> list[list[int]]:
    """Generic CSV of rankings, one row per user, ranked item ids as cells."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            cells = [c.strip() for c in row if c.strip()]
            if cells:
                rows.append([int(c) for c in cells])
    return rows


def read_expression_csv(path) -> tuple[list[str], list[dict]]:
    """CSV with a header row of item ids; returns (universe, score rows)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        universe = [h.strip() for h in header]
        rows = []
        for row in reader:
            if not any(c.strip() for c in row):
                continue
            rows.append({item: float(v) for item, v in zip(universe, row)})
    return universe, rows


def shuffle_split(
    ds: Dataset, seed: int, train_fraction: float = 0.8
) -> tuple[Dataset, Dataset]:
    """Seeded shuffle of the records followed by a train/test split."""
    idx = substream(seed, "split").permutation(len(ds.records))
    cut = int(round(train_fraction * len(ds.records)))
    note = f"shuffle-split seed={seed} fraction={train_fraction}"
    train = Dataset(
        m=ds.m, n=ds.n, records=[ds.records[i] for i in idx[:cut]],
        collision_flag=ds.collision_flag, provenance=ds.provenance + [note, "part train"],
    )
    test = Dataset(
        m=ds.m, n=ds.n, records=[ds.records[i] for i in idx[cut:]],
        collision_flag=ds.collision_flag, provenance=ds.provenance + [note, "part test"],
    )
    return train, test
