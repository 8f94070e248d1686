"""Matrix-backed data containers, column utilities, and CSV/JSON input-output.

Matrices follow the column-as-sample convention: an output block with m rows
and N columns is paired with a regressor block with n rows and the same N
columns.  Column indices are 1-based in files, JSON and error messages, and
0-based everywhere in code; conversion happens at the I/O boundary only.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float array with finite entries.

    1-D input becomes a single-row matrix.
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DataError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise DataError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite entries")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.setflags(write=False)
    return out


def column_norms(x) -> np.ndarray:
    """Euclidean norm of every column."""
    m = as_matrix(x, "x")
    return np.sqrt((m * m).sum(axis=0))


def unit_columns(x) -> np.ndarray:
    """Rescale every column to unit Euclidean norm.

    Raises
    ------
    DataError
        If some column is exactly zero (reported 1-based).
    """
    m = as_matrix(x, "x")
    norms = np.sqrt((m * m).sum(axis=0))
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise DataError(f"cannot normalize zero column k={zero[0] + 1}")
    return m / norms


@dataclass(frozen=True)
class IndexSet:
    """Immutable set of column indices inside a universe of size ``universe``.

    Indices are stored 0-based; ``one_based`` gives the I/O view.
    """

    indices: tuple[int, ...]
    universe: int

    def __post_init__(self) -> None:
        if self.universe < 0:
            raise DataError("universe size must be non-negative")
        idx = tuple(sorted(set(int(i) for i in self.indices)))
        if len(idx) != len(self.indices):
            raise DataError("index set contains duplicates")
        if idx and (idx[0] < 0 or idx[-1] >= self.universe):
            raise DataError(
                f"indices must lie in [0, {self.universe}), got {idx[0]}..{idx[-1]}"
            )
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_zero_based(cls, indices: Iterable[int], universe: int) -> "IndexSet":
        return cls(tuple(int(i) for i in indices), universe)

    @classmethod
    def from_one_based(cls, indices: Iterable[int], universe: int) -> "IndexSet":
        return cls(tuple(int(i) - 1 for i in indices), universe)

    @classmethod
    def from_mask(cls, mask) -> "IndexSet":
        m = np.asarray(mask, dtype=bool).ravel()
        return cls(tuple(int(i) for i in np.flatnonzero(m)), int(m.size))

    @property
    def one_based(self) -> tuple[int, ...]:
        return tuple(i + 1 for i in self.indices)

    def complement(self) -> "IndexSet":
        inside = set(self.indices)
        return IndexSet(
            tuple(i for i in range(self.universe) if i not in inside), self.universe
        )

    def to_mask(self) -> np.ndarray:
        mask = np.zeros(self.universe, dtype=bool)
        mask[list(self.indices)] = True
        return mask

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, i) -> bool:
        return int(i) in set(self.indices)


@dataclass(frozen=True)
class Dataset:
    """Paired output block ``y`` (m x N) and regressor block ``x`` (n x N)."""

    y: np.ndarray
    x: np.ndarray
    name: str | None = None

    def __post_init__(self) -> None:
        y = as_matrix(self.y, "y")
        x = as_matrix(self.x, "x")
        if y.shape[1] != x.shape[1]:
            raise DataError(
                f"column mismatch: y has {y.shape[1]} columns, x has {x.shape[1]}"
            )
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "x", _frozen(x))

    @property
    def m(self) -> int:
        return self.y.shape[0]

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def n_samples(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class GroundTruth:
    """Planted coefficients and noise blocks behind a synthetic dataset."""

    a0: np.ndarray
    e: np.ndarray
    f: np.ndarray

    def __post_init__(self) -> None:
        a0 = as_matrix(self.a0, "a0")
        e = as_matrix(self.e, "e")
        f = as_matrix(self.f, "f")
        if e.shape != f.shape:
            raise DataError(f"e/f shape mismatch: {e.shape} vs {f.shape}")
        if a0.shape[0] != e.shape[0]:
            raise DataError(
                f"a0 has {a0.shape[0]} output rows but noise blocks have {e.shape[0]}"
            )
        object.__setattr__(self, "a0", _frozen(a0))
        object.__setattr__(self, "e", _frozen(e))
        object.__setattr__(self, "f", _frozen(f))

    def validate(self, d: Dataset, tol: float = 1e-9) -> None:
        """Check y == a0 x + e + f entrywise within ``tol``."""
        if self.a0.shape[1] != d.n or self.e.shape[1] != d.n_samples:
            raise DataError("ground truth shapes do not match the dataset")
        gap = np.abs(d.y - (self.a0 @ d.x + self.e + self.f)).max()
        if gap > tol:
            raise DataError(f"dataset is inconsistent with ground truth: gap={gap:g}")


def hankel_regressors(u, y, n_f: int) -> Dataset:
    """Stack lagged input samples into regressor columns.

    Column t of ``x`` holds the ``n_f`` most recent input samples
    ``u[t], u[t-1], ..., u[t-n_f+1]`` (most recent first), so the number of
    usable columns is ``len(u) - n_f + 1``.

    Parameters
    ----------
    u : sequence of floats
        Input samples, oldest first.
    y : sequence of floats, or matrix with samples as columns
        Output samples.  Either aligned 1:1 with ``u`` (the leading
        ``n_f - 1`` entries are dropped) or already of length
        ``len(u) - n_f + 1``.
    n_f : int
        Number of lags per column, at least 1.
    """
    u1 = np.asarray(u, dtype=float).ravel()
    if not np.all(np.isfinite(u1)):
        raise DataError("u contains non-finite entries")
    if n_f < 1:
        raise DataError(f"n_f must be >= 1, got {n_f}")
    n_cols = u1.size - n_f + 1
    if n_cols < 1:
        raise DataError(
            f"not enough samples: need at least n_f={n_f} inputs, got {u1.size}"
        )
    x = np.empty((n_f, n_cols))
    for lag in range(n_f):
        x[lag] = u1[n_f - 1 - lag : n_f - 1 - lag + n_cols]
    ymat = as_matrix(y, "y")
    if ymat.shape[1] == u1.size:
        ymat = ymat[:, n_f - 1 :]
    elif ymat.shape[1] != n_cols:
        raise DataError(
            f"y must have {u1.size} or {n_cols} samples, got {ymat.shape[1]}"
        )
    return Dataset(y=ymat, x=x)


def normalize_columns(d: Dataset) -> Dataset:
    """Divide every (y, x) column pair by the Euclidean norm of the x column."""
    norms = column_norms(d.x)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise DataError(f"cannot normalize zero column k={zero[0] + 1}")
    return Dataset(y=d.y / norms, x=d.x / norms, name=d.name)


def partition_outliers(f, tol: float = 1e-9) -> tuple[IndexSet, IndexSet]:
    """Split columns of a gross-error block into clean and corrupted sets.

    Returns ``(s0, sc)`` where ``sc`` collects the columns whose Euclidean
    norm exceeds ``tol`` and ``s0`` is its complement.
    """
    if tol < 0:
        raise DataError("tol must be non-negative")
    norms = column_norms(f)
    sc = IndexSet.from_mask(norms > tol)
    return sc.complement(), sc


# ---------------------------------------------------------------------------
# CSV / JSON I/O
# ---------------------------------------------------------------------------


def save_matrix_csv(x, path, comments: Sequence[str] = ()) -> Path:
    """Write a matrix as comma-separated rows; ``repr`` floats round-trip."""
    m = as_matrix(x, "matrix")
    path = Path(path)
    lines = [f"# {c}" for c in comments]
    lines += [",".join(repr(float(v)) for v in row) for row in m]
    path.write_text("\n".join(lines) + "\n")
    return path


def _parse_block(rows: list[tuple[int, str]], path: Path) -> np.ndarray:
    data: list[list[float]] = []
    width = None
    for lineno, text in rows:
        cells = [c.strip() for c in text.split(",")]
        try:
            row = [float(c) for c in cells]
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: could not parse numeric row: {exc}")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise DataError(
                f"{path}:{lineno}: ragged row, expected {width} cells, got {len(row)}"
            )
        data.append(row)
    if not data:
        raise DataError(f"{path}: empty matrix block")
    return as_matrix(np.array(data), str(path))


def load_matrix_csv(path) -> np.ndarray:
    """Read one numeric matrix from a CSV file (``#`` lines are comments)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    rows = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        rows.append((lineno, text))
    return _parse_block(rows, path)


def load_dataset(path) -> Dataset:
    """Load a dataset from a descriptor or a two-block CSV file.

    A ``.json`` path must hold ``{"y": <csv path>, "x": <csv path>}`` with
    paths resolved relative to the descriptor.  Any other path is read as a
    single CSV containing the y block, one blank line, then the x block.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    if path.suffix.lower() == ".json":
        try:
            desc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON descriptor: {exc}")
        if not isinstance(desc, dict) or "y" not in desc or "x" not in desc:
            raise DataError(f'{path}: descriptor must provide "y" and "x" paths')
        base = path.parent
        y = load_matrix_csv(base / desc["y"])
        x = load_matrix_csv(base / desc["x"])
        return Dataset(y=y, x=x, name=path.stem)
    blocks: list[list[tuple[int, str]]] = [[]]
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        text = raw.strip()
        if text.startswith("#"):
            continue
        if not text:
            if blocks[-1]:
                blocks.append([])
            continue
        blocks[-1].append((lineno, text))
    blocks = [b for b in blocks if b]
    if len(blocks) != 2:
        raise DataError(
            f"{path}: expected two blank-line separated blocks (y then x), "
            f"found {len(blocks)}"
        )
    y = _parse_block(blocks[0], path)
    x = _parse_block(blocks[1], path)
    return Dataset(y=y, x=x, name=path.stem)


def save_dataset(d: Dataset, path) -> Path:
    """Write a dataset as a single two-block CSV (y block, blank line, x block)."""
    path = Path(path)
    lines = [",".join(repr(float(v)) for v in row) for row in d.y]
    lines.append("")
    lines += [",".join(repr(float(v)) for v in row) for row in d.x]
    path.write_text("\n".join(lines) + "\n")
    return path
