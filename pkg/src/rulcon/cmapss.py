"""Reading, validating and persisting the CMAPSS turbofan files.

Raw files are whitespace-delimited text with 26 columns per row::

    engine_id cycle op1 op2 op3 s1 ... s21

Persistence layout (``save_split`` / ``load_saved_split``): one ``.npz``
archive per subset holding, for each of ``train`` and ``test``, the flat
columns ``{part}_engine_id`` (int64), ``{part}_cycle`` (int64),
``{part}_op_settings`` (rows x 3, float64) and ``{part}_sensors``
(rows x 21, float64), plus ``test_rul_truth`` (int64) and ``subset_name``.
Rows are stored engine by engine in the original order, so the split is
rebuilt exactly.
"""
from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

N_OP_SETTINGS = 3
N_SENSORS = 21
N_COLUMNS = 2 + N_OP_SETTINGS + N_SENSORS
N_CHANNELS = N_OP_SETTINGS + N_SENSORS

# (train engines, test engines) per subset
ENGINE_COUNTS = {
    "FD001": (100, 100),
    "FD002": (260, 259),
    "FD003": (100, 100),
    "FD004": (260, 248),
}
SUBSETS = tuple(ENGINE_COUNTS)


class CMAPSSParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class CMAPSSValidationError(ValueError):
    pass


@dataclass
class RawTrajectory:
    engine_id: int
    cycles: np.ndarray
    op_settings: np.ndarray
    sensors: np.ndarray

    def __post_init__(self):
        self.cycles = np.asarray(self.cycles, dtype=np.int64)
        self.op_settings = np.asarray(self.op_settings, dtype=np.float64).reshape(-1, N_OP_SETTINGS)
        self.sensors = np.asarray(self.sensors, dtype=np.float64).reshape(-1, N_SENSORS)
        T = len(self.cycles)
        if T < 1:
            raise CMAPSSValidationError(f"engine {self.engine_id}: empty trajectory")
        if self.op_settings.shape[0] != T or self.sensors.shape[0] != T:
            raise CMAPSSValidationError(f"engine {self.engine_id}: row count mismatch")
        if not np.array_equal(self.cycles, np.arange(1, T + 1)):
            raise CMAPSSValidationError(
                f"engine {self.engine_id}: cycles are not consecutive from 1")

    @property
    def length(self) -> int:
        return len(self.cycles)

    @property
    def channels(self) -> np.ndarray:
        """T x 24 matrix: op settings followed by sensors."""
        return np.hstack([self.op_settings, self.sensors])

    def equals(self, other: "RawTrajectory") -> bool:
        return (self.engine_id == other.engine_id
                and np.array_equal(self.cycles, other.cycles)
                and np.array_equal(self.op_settings, other.op_settings)
                and np.array_equal(self.sensors, other.sensors))


@dataclass
class DatasetSplit:
    subset_name: str
    train: list[RawTrajectory]
    test: list[RawTrajectory]
    test_rul_truth: list[int] = field(default_factory=list)

    def __post_init__(self):
        if len(self.test_rul_truth) != len(self.test):
            raise CMAPSSValidationError(
                f"{self.subset_name}: {len(self.test_rul_truth)} RUL truths for "
                f"{len(self.test)} test engines")
        if any(r < 0 for r in self.test_rul_truth):
            raise CMAPSSValidationError(f"{self.subset_name}: negative RUL truth")

    def equals(self, other: "DatasetSplit") -> bool:
        return (self.subset_name == other.subset_name
                and len(self.train) == len(other.train)
                and len(self.test) == len(other.test)
                and all(a.equals(b) for a, b in zip(self.train, other.train))
                and all(a.equals(b) for a, b in zip(self.test, other.test))
                and list(self.test_rul_truth) == list(other.test_rul_truth))


def _iter_rows(stream: TextIO) -> Iterable[tuple[int, list[float]]]:
    for line_no, line in enumerate(stream, start=1):
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) != N_COLUMNS:
            raise CMAPSSParseError(line_no, f"expected {N_COLUMNS} columns, got {len(tokens)}")
        try:
            values = [float(t) for t in tokens]
        except ValueError as exc:
            raise CMAPSSParseError(line_no, f"non-numeric token ({exc})") from None
        yield line_no, values


def parse_cmapss_file(source: TextIO | str | os.PathLike) -> list[RawTrajectory]:
    """Parse a train_/test_ file into one trajectory per engine.

    Engines come out in order of first appearance; each engine's rows are
    sorted by cycle before the consecutive-cycle check.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source) as fh:
            return parse_cmapss_file(fh)

    rows: dict[int, list[list[float]]] = {}
    for line_no, values in _iter_rows(source):
        engine, cycle = values[0], values[1]
        if engine != int(engine) or cycle != int(cycle):
            raise CMAPSSParseError(line_no, "engine id and cycle must be integers")
        rows.setdefault(int(engine), []).append(values)

    trajectories = []
    for engine_id, engine_rows in rows.items():
        arr = np.array(engine_rows, dtype=np.float64)
        arr = arr[np.argsort(arr[:, 1], kind="stable")]
        trajectories.append(RawTrajectory(
            engine_id=engine_id,
            cycles=arr[:, 1].astype(np.int64),
            op_settings=arr[:, 2:2 + N_OP_SETTINGS],
            sensors=arr[:, 2 + N_OP_SETTINGS:],
        ))
    return trajectories


def parse_rul_file(source: TextIO | str | os.PathLike) -> list[int]:
    if isinstance(source, (str, os.PathLike)):
        with open(source) as fh:
            return parse_rul_file(fh)
    truths = []
    for line_no, line in enumerate(source, start=1):
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) != 1:
            raise CMAPSSParseError(line_no, f"expected one RUL value, got {len(tokens)}")
        try:
            value = float(tokens[0])
        except ValueError:
            raise CMAPSSParseError(line_no, f"non-numeric RUL {tokens[0]!r}") from None
        if value != int(value) or value < 0:
            raise CMAPSSParseError(line_no, f"RUL must be a non-negative integer, got {tokens[0]}")
        truths.append(int(value))
    return truths


def subset_files(name: str, root: str | os.PathLike) -> dict[str, Path]:
    check_subset_name(name)
    root = Path(root)
    return {
        "train": root / f"train_{name}.txt",
        "test": root / f"test_{name}.txt",
        "rul": root / f"RUL_{name}.txt",
    }


def check_subset_name(name: str) -> None:
    if name not in ENGINE_COUNTS:
        raise ValueError(f"unknown CMAPSS subset {name!r}; expected one of {', '.join(SUBSETS)}")


def validate_counts(split: DatasetSplit) -> None:
    n_train, n_test = ENGINE_COUNTS[split.subset_name]
    if len(split.train) != n_train or len(split.test) != n_test:
        raise CMAPSSValidationError(
            f"{split.subset_name}: expected {n_train}/{n_test} train/test engines, "
            f"found {len(split.train)}/{len(split.test)}")


def load_subset(name: str, root: str | os.PathLike, check_counts: bool = True) -> DatasetSplit:
    """Load and validate one subset from a directory of raw CMAPSS files."""
    files = subset_files(name, root)
    for path in files.values():
        if not path.is_file():
            raise FileNotFoundError(f"missing CMAPSS file: {path}")
    split = DatasetSplit(
        subset_name=name,
        train=parse_cmapss_file(files["train"]),
        test=parse_cmapss_file(files["test"]),
        test_rul_truth=parse_rul_file(files["rul"]),
    )
    if check_counts:
        validate_counts(split)
    return split


def _flatten(trajs: list[RawTrajectory], prefix: str) -> dict[str, np.ndarray]:
    if not trajs:
        return {
            f"{prefix}_engine_id": np.zeros(0, np.int64),
            f"{prefix}_cycle": np.zeros(0, np.int64),
            f"{prefix}_op_settings": np.zeros((0, N_OP_SETTINGS)),
            f"{prefix}_sensors": np.zeros((0, N_SENSORS)),
        }
    return {
        f"{prefix}_engine_id": np.concatenate([np.full(t.length, t.engine_id, np.int64) for t in trajs]),
        f"{prefix}_cycle": np.concatenate([t.cycles for t in trajs]),
        f"{prefix}_op_settings": np.vstack([t.op_settings for t in trajs]),
        f"{prefix}_sensors": np.vstack([t.sensors for t in trajs]),
    }


def _unflatten(data, prefix: str) -> list[RawTrajectory]:
    engine_ids = data[f"{prefix}_engine_id"]
    if len(engine_ids) == 0:
        return []
    # rows are contiguous per engine
    boundaries = np.flatnonzero(np.diff(engine_ids)) + 1
    starts = np.concatenate([[0], boundaries])
    stops = np.concatenate([boundaries, [len(engine_ids)]])
    return [
        RawTrajectory(
            engine_id=int(engine_ids[a]),
            cycles=data[f"{prefix}_cycle"][a:b],
            op_settings=data[f"{prefix}_op_settings"][a:b],
            sensors=data[f"{prefix}_sensors"][a:b],
        )
        for a, b in zip(starts, stops)
    ]


def save_split(split: DatasetSplit, path: str | os.PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {**_flatten(split.train, "train"), **_flatten(split.test, "test")}
    with open(path, "wb") as fh:
        np.savez_compressed(
            fh,
            subset_name=np.array(split.subset_name),
            test_rul_truth=np.asarray(split.test_rul_truth, dtype=np.int64),
            **arrays,
        )
    return path


def load_saved_split(path: str | os.PathLike) -> DatasetSplit:
    with np.load(path, allow_pickle=False) as data:
        return DatasetSplit(
            subset_name=str(data["subset_name"]),
            train=_unflatten(data, "train"),
            test=_unflatten(data, "test"),
            test_rul_truth=[int(x) for x in data["test_rul_truth"]],
        )


def format_cmapss_rows(trajs: list[RawTrajectory]) -> str:
    """Render trajectories back into the raw text layout."""
    out = io.StringIO()
    for t in trajs:
        for k in range(t.length):
            values = [str(t.engine_id), str(int(t.cycles[k]))]
            values += [repr(float(v)) for v in t.op_settings[k]]
            values += [repr(float(v)) for v in t.sensors[k]]
            out.write(" ".join(values) + " \n")
    return out.getvalue()
