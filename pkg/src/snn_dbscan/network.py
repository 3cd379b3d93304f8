"""LIF network model: array-backed neurons and delayed synapses, validation,
and the line-oriented ``snn-dbscan v1`` text format.

Text format::

    snn-dbscan v1
    params R C epsilon minpts builder orientation     # C is '-' for systolic
    region policy out_r0 out_rows out_c0 out_cols       # partial networks only
    N id threshold in|hid|out collection r [c|e]
    S from to weight delay
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, NamedTuple

import numpy as np

from .grid import DbscanParams, FormatError

COLLECTIONS = ("I", "C", "Core", "B", "Border")
I, C, CORE, B, BORDER = range(5)

HIDDEN, INPUT, OUTPUT = 0, 1, 2
_KIND_NAMES = ("hid", "in", "out")

# position field for collections that have one neuron per row
NO_POS = np.iinfo(np.int32).min

MAX_DELAY = 4
BUILDERS = ("flat", "systolic", "partial-flat", "partial-systolic")
POLICIES = ("delete", "retain")


class RoleTag(NamedTuple):
    collection: str
    r: int
    pos: int | None


class Neuron(NamedTuple):
    id: int
    threshold: int
    is_input: bool
    is_output: bool
    role: RoleTag
    leak_mode: str = "full"


class Synapse(NamedTuple):
    src: int
    dst: int
    weight: int
    delay: int


@dataclass(frozen=True)
class Region:
    """Where a partial network's output block sits, in the network's local coordinates."""

    policy: str
    out_r0: int
    out_rows: int
    out_c0: int
    out_cols: int


@dataclass(frozen=True)
class NetworkMeta:
    builder: str
    rows: int
    cols: int | None
    epsilon: int
    min_pts: int
    orientation: str = "columns"
    region: Region | None = None

    @property
    def systolic(self) -> bool:
        return self.builder.endswith("systolic")

    @property
    def params(self) -> DbscanParams:
        if self.cols is None:
            raise ValueError("systolic networks carry no column count")
        return DbscanParams(self.rows, self.cols, self.epsilon, self.min_pts)


def _frozen(a, dtype):
    # takes ownership of arrays already in the right layout
    arr = np.ascontiguousarray(a, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Network:
    """Immutable network.  Neuron ids are the indices 0..n-1."""

    meta: NetworkMeta
    threshold: np.ndarray
    kind: np.ndarray
    collection: np.ndarray
    row: np.ndarray
    pos: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    delay: np.ndarray

    def __post_init__(self):
        for name, dt in (("threshold", np.int32), ("kind", np.int8), ("collection", np.int8),
                         ("row", np.int32), ("pos", np.int32), ("src", np.int32),
                         ("dst", np.int32), ("weight", np.int8), ("delay", np.int8)):
            object.__setattr__(self, name, _frozen(getattr(self, name), dt))
        n = len(self.threshold)
        if not all(len(getattr(self, a)) == n for a in ("kind", "collection", "row", "pos")):
            raise ValueError("neuron arrays differ in length")
        m = len(self.src)
        if not all(len(getattr(self, a)) == m for a in ("dst", "weight", "delay")):
            raise ValueError("synapse arrays differ in length")

    @property
    def n_neurons(self) -> int:
        return len(self.threshold)

    @property
    def n_synapses(self) -> int:
        return len(self.src)

    def neuron(self, i: int) -> Neuron:
        if not 0 <= i < self.n_neurons:
            raise IndexError(f"no neuron {i}")
        p = int(self.pos[i])
        role = RoleTag(COLLECTIONS[self.collection[i]], int(self.row[i]), None if p == NO_POS else p)
        k = int(self.kind[i])
        return Neuron(i, int(self.threshold[i]), k == INPUT, k == OUTPUT, role)

    def neurons(self) -> Iterator[Neuron]:
        return (self.neuron(i) for i in range(self.n_neurons))

    def synapses(self) -> Iterator[Synapse]:
        for s, d, w, dl in zip(self.src.tolist(), self.dst.tolist(),
                               self.weight.tolist(), self.delay.tolist()):
            yield Synapse(s, d, w, dl)

    def find(self, collection: str, r: int, pos: int | None = None) -> int:
        """Id of the neuron with the given role; KeyError if absent."""
        key = (COLLECTIONS.index(collection), r, NO_POS if pos is None else pos)
        try:
            return self._role_index[key]
        except KeyError:
            raise KeyError(f"no neuron {collection}[{r}{'' if pos is None else f', {pos}'}]") from None

    @cached_property
    def _role_index(self) -> dict:
        keys = zip(self.collection.tolist(), self.row.tolist(), self.pos.tolist())
        return {k: i for i, k in enumerate(keys)}

    def ids_of(self, collection: int) -> np.ndarray:
        return np.flatnonzero(self.collection == collection)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Outgoing synapses grouped by source: (indptr, dst, weight, delay)."""
        order = np.argsort(self.src, kind="stable")
        indptr = np.zeros(self.n_neurons + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.src, minlength=self.n_neurons), out=indptr[1:])
        return (indptr, np.ascontiguousarray(self.dst[order]),
                np.ascontiguousarray(self.weight[order]), np.ascontiguousarray(self.delay[order]))

    def fan_in(self) -> np.ndarray:
        return np.bincount(self.dst, minlength=self.n_neurons)

    def fan_out(self) -> np.ndarray:
        return np.bincount(self.src, minlength=self.n_neurons)

    def without_synapse(self, index: int) -> "Network":
        keep = np.ones(self.n_synapses, dtype=bool)
        keep[index] = False
        return Network(self.meta, self.threshold, self.kind, self.collection, self.row, self.pos,
                       self.src[keep], self.dst[keep], self.weight[keep], self.delay[keep])

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return self.meta == other.meta and self.same_structure(other)

    def same_structure(self, other: "Network") -> bool:
        """Equal neurons and synapses, ignoring metadata."""
        names = ("threshold", "kind", "collection", "row", "pos", "src", "dst", "weight", "delay")
        return all(np.array_equal(getattr(self, a), getattr(other, a)) for a in names)

    __hash__ = None

    def __repr__(self):
        return (f"Network({self.meta.builder}, {self.n_neurons} neurons, "
                f"{self.n_synapses} synapses)")


@dataclass
class ValidationReport:
    errors: list[str]
    neurons: int
    synapses: int
    max_fan_in: int
    max_fan_out: int
    max_delay: int
    max_threshold: int

    @property
    def ok(self) -> bool:
        return not self.errors

    def summary(self) -> str:
        status = "valid" if self.ok else f"INVALID ({len(self.errors)} errors)"
        return (f"{status}: {self.neurons} neurons, {self.synapses} synapses, "
                f"max fan-in {self.max_fan_in}, max fan-out {self.max_fan_out}, "
                f"max delay {self.max_delay}, max threshold {self.max_threshold}")


def validate(net: Network, max_errors: int = 20) -> ValidationReport:
    errors: list[str] = []
    n, m = net.n_neurons, net.n_synapses

    def report(mask, fmt):
        for i in np.flatnonzero(mask)[:max_errors]:
            errors.append(fmt(int(i)))

    report(net.threshold < 1, lambda i: f"neuron {i}: threshold {net.threshold[i]} < 1")
    limit = max(2, net.meta.min_pts - 1)
    report(net.threshold > limit, lambda i: f"neuron {i}: threshold {net.threshold[i]} > {limit}")
    report((net.kind < 0) | (net.kind > 2), lambda i: f"neuron {i}: bad kind {net.kind[i]}")
    report((net.collection < 0) | (net.collection > 4),
           lambda i: f"neuron {i}: bad collection {net.collection[i]}")
    report((net.kind == INPUT) & (net.collection != I),
           lambda i: f"neuron {i}: input flag on a {COLLECTIONS[net.collection[i]]} neuron")
    report((net.kind == OUTPUT) & (net.collection != CORE) & (net.collection != BORDER),
           lambda i: f"neuron {i}: output flag on a {COLLECTIONS[net.collection[i]]} neuron")
    report((net.collection == BORDER) & (net.kind != OUTPUT),
           lambda i: f"neuron {i}: Border neuron is not an output")

    bad_end = (net.src < 0) | (net.src >= n) | (net.dst < 0) | (net.dst >= n)
    report(bad_end, lambda s: f"synapse {s}: endpoint {net.src[s]}->{net.dst[s]} does not exist")
    report((net.weight != 1) & (net.weight != -1),
           lambda s: f"synapse {s}: weight {net.weight[s]} not in {{-1, 1}}")
    report((net.delay < 1) | (net.delay > MAX_DELAY),
           lambda s: f"synapse {s}: delay {net.delay[s]} not in [1, {MAX_DELAY}]")

    if len(set(zip(net.collection.tolist(), net.row.tolist(), net.pos.tolist()))) != n:
        errors.append("duplicate role tags")

    ok_end = ~bad_end
    fan_in = np.bincount(net.dst[ok_end], minlength=n) if m else np.zeros(n, dtype=np.int64)
    fan_out = np.bincount(net.src[ok_end], minlength=n) if m else np.zeros(n, dtype=np.int64)
    return ValidationReport(
        errors=errors, neurons=n, synapses=m,
        max_fan_in=int(fan_in.max(initial=0)), max_fan_out=int(fan_out.max(initial=0)),
        max_delay=int(net.delay.max(initial=0)), max_threshold=int(net.threshold.max(initial=0)),
    )


# --- text format -----------------------------------------------------------

def serialize(net: Network) -> str:
    buf = io.StringIO()
    write_network(net, buf)
    return buf.getvalue()


def write_network(net: Network, out) -> None:
    meta = net.meta
    out.write("snn-dbscan v1\n")
    cols = "-" if meta.cols is None else str(meta.cols)
    out.write(f"params {meta.rows} {cols} {meta.epsilon} {meta.min_pts} "
              f"{meta.builder} {meta.orientation}\n")
    if meta.region is not None:
        g = meta.region
        out.write(f"region {g.policy} {g.out_r0} {g.out_rows} {g.out_c0} {g.out_cols}\n")
    kinds = np.array(_KIND_NAMES)[net.kind]
    colls = np.array(COLLECTIONS)[net.collection]
    for i, (t, k, cl, r, p) in enumerate(zip(net.threshold.tolist(), kinds.tolist(),
                                             colls.tolist(), net.row.tolist(), net.pos.tolist())):
        tail = "" if p == NO_POS else f" {p}"
        out.write(f"N {i} {t} {k} {cl} {r}{tail}\n")
    chunk = 1 << 16
    for s in range(0, net.n_synapses, chunk):
        sl = slice(s, s + chunk)
        rows = zip(net.src[sl].tolist(), net.dst[sl].tolist(),
                   net.weight[sl].tolist(), net.delay[sl].tolist())
        out.write("".join(f"S {a} {b} {w} {d}\n" for a, b, w, d in rows))


def deserialize(text: str) -> Network:
    return read_network(io.StringIO(text))


def read_network(stream) -> Network:
    meta_fields = None
    region = None
    neurons: dict[int, tuple] = {}
    neuron_line: dict[int, int] = {}
    syn: list[tuple[int, int, int, int]] = []
    syn_lines: list[int] = []
    saw_header = False

    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not saw_header:
            if line.split() != ["snn-dbscan", "v1"]:
                raise FormatError("expected header 'snn-dbscan v1'", lineno)
            saw_header = True
            continue
        f = line.split()
        tag = f[0]
        try:
            if tag == "S":
                if len(f) != 5:
                    raise ValueError("synapse line needs 'S from to weight delay'")
                syn.append((int(f[1]), int(f[2]), int(f[3]), int(f[4])))
                syn_lines.append(lineno)
            elif tag == "N":
                if len(f) not in (6, 7):
                    raise ValueError("neuron line needs 'N id threshold kind collection r [pos]'")
                nid = int(f[1])
                if nid in neurons:
                    raise ValueError(f"duplicate neuron id {nid}")
                if f[3] not in _KIND_NAMES:
                    raise ValueError(f"unknown neuron kind {f[3]!r}")
                if f[4] not in COLLECTIONS:
                    raise ValueError(f"unknown collection {f[4]!r}")
                pos = int(f[6]) if len(f) == 7 else NO_POS
                neurons[nid] = (int(f[2]), _KIND_NAMES.index(f[3]), COLLECTIONS.index(f[4]),
                                int(f[5]), pos)
                neuron_line[nid] = lineno
            elif tag == "params":
                if meta_fields is not None:
                    raise ValueError("duplicate params line")
                if len(f) != 7:
                    raise ValueError("params line needs 'params R C epsilon minpts builder orientation'")
                if f[5] not in BUILDERS:
                    raise ValueError(f"unknown builder {f[5]!r}")
                if f[6] not in ("columns", "rows", "none"):
                    raise ValueError(f"unknown orientation {f[6]!r}")
                cols = None if f[2] == "-" else int(f[2])
                meta_fields = (int(f[1]), cols, int(f[3]), int(f[4]), f[5], f[6])
            elif tag == "region":
                if len(f) != 6 or f[1] not in POLICIES:
                    raise ValueError("region line needs 'region delete|retain r0 rows c0 cols'")
                region = Region(f[1], int(f[2]), int(f[3]), int(f[4]), int(f[5]))
            else:
                raise ValueError(f"unknown line type {tag!r}")
        except ValueError as exc:
            raise FormatError(str(exc), lineno) from None

    if not saw_header:
        raise FormatError("empty network document")
    if meta_fields is None:
        raise FormatError("missing params line")
    n = len(neurons)
    if set(neurons) != set(range(n)):
        bad = min(set(neurons) - set(range(n)))
        raise FormatError(f"neuron ids must be 0..{n - 1}; found id {bad}", neuron_line[bad])
    for k, (a, b, _, _) in enumerate(syn):
        for end in (a, b):
            if end not in neurons:
                raise FormatError(f"synapse references undefined neuron {end}", syn_lines[k])

    rows, cols, eps, mp, builder, orient = meta_fields
    meta = NetworkMeta(builder, rows, cols, eps, mp, orient, region)
    cols_arr = np.array([neurons[i] for i in range(n)], dtype=np.int64).reshape(n, 5)
    syn_arr = np.array(syn, dtype=np.int64).reshape(len(syn), 4)
    if syn_arr.size and np.abs(syn_arr[:, 2:]).max() > 127:
        k = int(np.flatnonzero(np.abs(syn_arr[:, 2:]).max(axis=1) > 127)[0])
        raise FormatError("weight/delay out of range", syn_lines[k])
    return Network(meta, cols_arr[:, 0], cols_arr[:, 1], cols_arr[:, 2], cols_arr[:, 3],
                   cols_arr[:, 4], syn_arr[:, 0], syn_arr[:, 1], syn_arr[:, 2], syn_arr[:, 3])
