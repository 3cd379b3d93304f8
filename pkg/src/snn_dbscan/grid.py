"""Event frames, label grids and the classical DBSCAN reference classifier.

Frames are dense boolean grids.  The text format accepted by :func:`parse_frame`
is either a sparse event list::

    R C
    r c
    r c
    ...

or a dense block::

    R C dense
    010110
    ...
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable

import numpy as np


class FormatError(ValueError):
    """Malformed frame or label document."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class DbscanParams:
    rows: int
    cols: int
    epsilon: int
    min_pts: int

    def __post_init__(self):
        for name in ("rows", "cols", "epsilon"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if not 1 <= self.min_pts <= self.n:
            raise ValueError(f"min_pts must lie in [1, {self.n}], got {self.min_pts}")

    @property
    def n(self) -> int:
        """Largest possible neighborhood size, (2*epsilon+1)**2."""
        return (2 * self.epsilon + 1) ** 2

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def transposed(self) -> "DbscanParams":
        return DbscanParams(self.cols, self.rows, self.epsilon, self.min_pts)


class EventFrame:
    """Read-only R x C grid of event bits."""

    __slots__ = ("_bits",)

    def __init__(self, bits):
        arr = np.array(bits, dtype=bool)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"frame must be a non-empty 2-d grid, got shape {arr.shape}")
        arr.flags.writeable = False
        self._bits = arr

    @classmethod
    def empty(cls, rows: int, cols: int) -> "EventFrame":
        return cls(np.zeros((rows, cols), dtype=bool))

    @classmethod
    def from_events(cls, rows: int, cols: int, events: Iterable[tuple[int, int]]) -> "EventFrame":
        bits = np.zeros((rows, cols), dtype=bool)
        for r, c in events:
            if not (0 <= r < rows and 0 <= c < cols):
                raise IndexError(f"event ({r}, {c}) outside {rows}x{cols} grid")
            bits[r, c] = True
        return cls(bits)

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def shape(self) -> tuple[int, int]:
        return self._bits.shape

    @property
    def rows(self) -> int:
        return self._bits.shape[0]

    @property
    def cols(self) -> int:
        return self._bits.shape[1]

    def __getitem__(self, rc: tuple[int, int]) -> bool:
        r, c = rc
        _check_index(self.shape, r, c)
        return bool(self._bits[r, c])

    def events(self) -> list[tuple[int, int]]:
        return [(int(r), int(c)) for r, c in zip(*np.nonzero(self._bits))]

    def count(self) -> int:
        return int(self._bits.sum())

    def transpose(self) -> "EventFrame":
        return EventFrame(self._bits.T)

    def crop(self, r0: int, nrows: int, c0: int, ncols: int) -> "EventFrame":
        """Window of the frame; cells outside the grid read as empty."""
        out = np.zeros((nrows, ncols), dtype=bool)
        rs, re = max(r0, 0), min(r0 + nrows, self.rows)
        cs, ce = max(c0, 0), min(c0 + ncols, self.cols)
        if rs < re and cs < ce:
            out[rs - r0:re - r0, cs - c0:ce - c0] = self._bits[rs:re, cs:ce]
        return EventFrame(out)

    def __eq__(self, other):
        if not isinstance(other, EventFrame):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._bits, other._bits))

    def __hash__(self):
        return hash((self.shape, self._bits.tobytes()))

    def __repr__(self):
        return f"EventFrame({self.rows}x{self.cols}, {self.count()} events)"

    def to_text(self, dense: bool = False) -> str:
        if dense:
            lines = [f"{self.rows} {self.cols} dense"]
            lines += ["".join("1" if b else "0" for b in row) for row in self._bits]
        else:
            lines = [f"{self.rows} {self.cols}"] + [f"{r} {c}" for r, c in self.events()]
        return "\n".join(lines) + "\n"


class Label(IntEnum):
    NO_EVENT = 0
    NOISE = 1
    BORDER = 2
    CORE = 3

    @property
    def char(self) -> str:
        return _LABEL_CHARS[self]


_LABEL_CHARS = {Label.NO_EVENT: ".", Label.NOISE: "N", Label.BORDER: "B", Label.CORE: "C"}
_CHAR_LABELS = {v: k for k, v in _LABEL_CHARS.items()}


class LabelGrid:
    """Read-only R x C grid of :class:`Label` codes."""

    __slots__ = ("_codes",)

    def __init__(self, codes):
        arr = np.array(codes, dtype=np.int8)
        if arr.ndim != 2:
            raise ValueError("label grid must be 2-d")
        if arr.size and (arr.min() < 0 or arr.max() > 3):
            raise ValueError("label codes must lie in 0..3")
        arr.flags.writeable = False
        self._codes = arr

    @property
    def codes(self) -> np.ndarray:
        return self._codes

    @property
    def shape(self) -> tuple[int, int]:
        return self._codes.shape

    def __getitem__(self, rc: tuple[int, int]) -> Label:
        r, c = rc
        _check_index(self.shape, r, c)
        return Label(int(self._codes[r, c]))

    def transpose(self) -> "LabelGrid":
        return LabelGrid(self._codes.T)

    def counts(self) -> dict[Label, int]:
        return {lab: int((self._codes == lab).sum()) for lab in Label}

    def __eq__(self, other):
        if not isinstance(other, LabelGrid):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._codes, other._codes))

    def __hash__(self):
        return hash((self.shape, self._codes.tobytes()))

    def __repr__(self):
        return f"LabelGrid({self.shape[0]}x{self.shape[1]})\n" + self.render()

    def rows_text(self) -> list[str]:
        table = np.array([".", "N", "B", "C"])
        return ["".join(table[row]) for row in self._codes]

    def render(self) -> str:
        """Human-readable ASCII: one space-separated character per cell."""
        return "\n".join(" ".join(line) for line in self.rows_text()) + "\n"

    def to_text(self) -> str:
        r, c = self.shape
        return f"{r} {c} labels\n" + "\n".join(self.rows_text()) + "\n"


def parse_labels(text: str) -> LabelGrid:
    """Parse the machine label format or a rendered ASCII grid."""
    lines = [ln for ln in (_strip_comment(x) for x in text.splitlines()) if ln]
    if not lines:
        raise FormatError("empty label document")
    head = lines[0].split()
    body = lines
    shape = None
    if len(head) == 3 and head[2] == "labels":
        shape = (int(head[0]), int(head[1]))
        body = lines[1:]
    rows = []
    for i, ln in enumerate(body):
        cells = ln.replace(" ", "")
        try:
            rows.append([_CHAR_LABELS[ch] for ch in cells])
        except KeyError as exc:
            raise FormatError(f"unknown label character {exc.args[0]!r}", i + 1) from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise FormatError("label rows must be non-empty and of equal length")
    grid = LabelGrid(rows)
    if shape is not None and grid.shape != shape:
        raise FormatError(f"header says {shape}, body is {grid.shape}")
    return grid


def parse_frame(text: str) -> EventFrame:
    raw = text.splitlines()
    numbered = [(i + 1, _strip_comment(ln)) for i, ln in enumerate(raw)]
    numbered = [(i, ln) for i, ln in numbered if ln]
    if not numbered:
        raise FormatError("empty frame document")
    lineno, header = numbered[0]
    fields = header.split()
    try:
        rows, cols = int(fields[0]), int(fields[1])
    except (IndexError, ValueError):
        raise FormatError("header must be 'R C' or 'R C dense'", lineno) from None
    if rows < 1 or cols < 1:
        raise FormatError("grid dimensions must be positive", lineno)
    if len(fields) == 3 and fields[2] == "dense":
        body = numbered[1:]
        if len(body) != rows:
            raise FormatError(f"dense frame needs {rows} rows, found {len(body)}", lineno)
        bits = np.zeros((rows, cols), dtype=bool)
        for r, (ln_no, ln) in enumerate(body):
            ln = ln.replace(" ", "")
            if len(ln) != cols or set(ln) - {"0", "1"}:
                raise FormatError(f"expected {cols} characters from {{0,1}}", ln_no)
            bits[r] = [ch == "1" for ch in ln]
        return EventFrame(bits)
    if len(fields) != 2:
        raise FormatError("header must be 'R C' or 'R C dense'", lineno)
    bits = np.zeros((rows, cols), dtype=bool)
    for ln_no, ln in numbered[1:]:
        parts = ln.split()
        try:
            r, c = int(parts[0]), int(parts[1])
        except (IndexError, ValueError):
            raise FormatError("event line must be 'r c'", ln_no) from None
        if len(parts) != 2:
            raise FormatError("event line must be 'r c'", ln_no)
        if not (0 <= r < rows and 0 <= c < cols):
            raise FormatError(f"event ({r}, {c}) outside {rows}x{cols} grid", ln_no)
        bits[r, c] = True
    return EventFrame(bits)


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _check_index(shape, r, c):
    if not (0 <= r < shape[0] and 0 <= c < shape[1]):
        raise IndexError(f"cell ({r}, {c}) outside {shape[0]}x{shape[1]} grid")


def neighborhood_count(frame: EventFrame, r: int, c: int, epsilon: int) -> int:
    """Events within Chebyshev distance ``epsilon`` of (r, c), self included."""
    _check_index(frame.shape, r, c)
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    bits = frame.bits
    return int(bits[max(r - epsilon, 0):r + epsilon + 1, max(c - epsilon, 0):c + epsilon + 1].sum())


def window_sums(bits: np.ndarray, epsilon: int) -> np.ndarray:
    """Clipped (2*epsilon+1)-square box sums of a 2-d array, via a summed-area table."""
    rows, cols = bits.shape
    sat = np.zeros((rows + 1, cols + 1), dtype=np.int64)
    np.cumsum(np.cumsum(bits, axis=0, dtype=np.int64), axis=1, out=sat[1:, 1:])
    r = np.arange(rows)
    c = np.arange(cols)
    r_lo = np.clip(r - epsilon, 0, rows)[:, None]
    r_hi = np.clip(r + epsilon + 1, 0, rows)[:, None]
    c_lo = np.clip(c - epsilon, 0, cols)[None, :]
    c_hi = np.clip(c + epsilon + 1, 0, cols)[None, :]
    return sat[r_hi, c_hi] - sat[r_lo, c_hi] - sat[r_hi, c_lo] + sat[r_lo, c_lo]


def _check_dims(frame: EventFrame, params: DbscanParams):
    if frame.shape != params.shape:
        raise ValueError(f"frame is {frame.shape[0]}x{frame.shape[1]}, params expect "
                         f"{params.rows}x{params.cols}")


def dbscan_classify(frame: EventFrame, params: DbscanParams) -> LabelGrid:
    _check_dims(frame, params)
    bits = frame.bits
    core = bits & (window_sums(bits, params.epsilon) >= params.min_pts)
    near_core = window_sums(core, params.epsilon) > 0
    border = bits & ~core & near_core
    codes = np.full(bits.shape, Label.NO_EVENT, dtype=np.int8)
    codes[bits] = Label.NOISE
    codes[border] = Label.BORDER
    codes[core] = Label.CORE
    return LabelGrid(codes)


def dbscan_classify_naive(frame: EventFrame, params: DbscanParams) -> LabelGrid:
    """Direct double loop over cells and neighborhoods; the reference oracle."""
    _check_dims(frame, params)
    R, C, eps = params.rows, params.cols, params.epsilon
    bits = frame.bits.tolist()

    def neighbors(r, c):
        for i in range(r - eps, r + eps + 1):
            for j in range(c - eps, c + eps + 1):
                if 0 <= i < R and 0 <= j < C:
                    yield i, j

    is_core = [[bits[r][c] and sum(bits[i][j] for i, j in neighbors(r, c)) >= params.min_pts
                for c in range(C)] for r in range(R)]
    codes = [[0] * C for _ in range(R)]
    for r in range(R):
        for c in range(C):
            if not bits[r][c]:
                codes[r][c] = Label.NO_EVENT
            elif is_core[r][c]:
                codes[r][c] = Label.CORE
            elif any(is_core[i][j] for i, j in neighbors(r, c) if (i, j) != (r, c)):
                codes[r][c] = Label.BORDER
            else:
                codes[r][c] = Label.NOISE
    return LabelGrid(codes)


def random_frame(rows: int, cols: int, rng: np.random.Generator, density: float = 0.3) -> EventFrame:
    return EventFrame(rng.random((rows, cols)) < density)
