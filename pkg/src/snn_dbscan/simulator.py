"""Discrete-timestep simulation of full-leak LIF networks.

Each timestep: deliver charges due now, fire every neuron that is forced or
whose summed charge reaches threshold, schedule each fire's outgoing weights
at ``t + delay``, then zero every potential.

The timestep loop runs in the compiled ``_simkernel`` extension when it is
importable, otherwise in the numpy fallback.  Set ``SNN_DBSCAN_BACKEND=python``
to force the fallback.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _simkernel_py
from .network import INPUT, MAX_DELAY, Network

try:
    from . import _simkernel as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _simkernel_py}
if _compiled is not None:
    _BACKENDS["cython"] = _compiled


def _default_backend() -> str:
    forced = os.environ.get("SNN_DBSCAN_BACKEND")
    if forced:
        if forced not in _BACKENDS:
            raise ImportError(f"simulation backend {forced!r} unavailable; have {sorted(_BACKENDS)}")
        return forced
    return "cython" if "cython" in _BACKENDS else "python"


BACKEND = _default_backend()


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SpikeSchedule:
    """Forced input fires, kept sorted by (timestep, neuron id)."""

    times: np.ndarray
    ids: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.int64).ravel()
        i = np.asarray(self.ids, dtype=np.int32).ravel()
        if t.shape != i.shape:
            raise ValueError("times and ids differ in length")
        order = np.lexsort((i, t))
        t, i = t[order], i[order]
        t.flags.writeable = False
        i.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "ids", i)

    @classmethod
    def from_entries(cls, entries: Iterable[tuple[int, int]]) -> "SpikeSchedule":
        entries = list(entries)
        if not entries:
            return cls.empty()
        t, i = zip(*entries)
        return cls(np.array(t), np.array(i))

    @classmethod
    def empty(cls) -> "SpikeSchedule":
        return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int32))

    @classmethod
    def concat(cls, schedules: Iterable["SpikeSchedule"]) -> "SpikeSchedule":
        schedules = list(schedules)
        if not schedules:
            return cls.empty()
        return cls(np.concatenate([s.times for s in schedules]),
                   np.concatenate([s.ids for s in schedules]))

    @property
    def entries(self) -> list[tuple[int, int]]:
        return list(zip(self.times.tolist(), self.ids.tolist()))

    def __len__(self):
        return len(self.times)

    def __eq__(self, other):
        if not isinstance(other, SpikeSchedule):
            return NotImplemented
        return np.array_equal(self.times, other.times) and np.array_equal(self.ids, other.ids)


@dataclass(frozen=True, eq=False)
class SpikeRaster:
    """Observed fires sorted by (timestep, neuron id), plus run statistics."""

    times: np.ndarray
    ids: np.ndarray
    horizon: int = 0
    delivered: int = 0
    fires: int = 0

    @property
    def entries(self) -> list[tuple[int, int]]:
        return list(zip(self.times.tolist(), self.ids.tolist()))

    def __len__(self):
        return len(self.times)

    def __eq__(self, other):
        if not isinstance(other, SpikeRaster):
            return NotImplemented
        return np.array_equal(self.times, other.times) and np.array_equal(self.ids, other.ids)

    def select(self, ids: np.ndarray) -> "SpikeRaster":
        keep = np.isin(self.ids, ids)
        return SpikeRaster(self.times[keep], self.ids[keep], self.horizon, self.delivered, self.fires)


def _check_network(net: Network):
    if getattr(net, "_sim_checked", False):
        return
    n = net.n_neurons
    if net.n_synapses:
        if net.src.min() < 0 or net.src.max() >= n or net.dst.min() < 0 or net.dst.max() >= n:
            raise ValueError("network has synapses with undefined endpoints")
        if net.delay.min() < 1 or net.delay.max() > MAX_DELAY:
            raise ValueError(f"synapse delays must lie in [1, {MAX_DELAY}]")
    object.__setattr__(net, "_sim_checked", True)


def simulate(net: Network, schedule: SpikeSchedule, horizon: int, *,
             record: str = "outputs", backend: str | None = None) -> SpikeRaster:
    """Run timesteps ``0..horizon-1``; return the fires of output neurons
    (or of every neuron with ``record="all"``)."""
    if horizon < 0:
        raise ScheduleError("horizon must be non-negative")
    if record not in ("outputs", "all"):
        raise ValueError("record must be 'outputs' or 'all'")
    if len(schedule):
        if horizon == 0:
            raise ScheduleError("horizon 0 with a non-empty schedule")
        if schedule.times[0] < 0 or schedule.times[-1] >= horizon:
            raise ScheduleError(f"schedule entries must lie in [0, {horizon})")
        if schedule.ids.min() < 0 or schedule.ids.max() >= net.n_neurons:
            raise ScheduleError("schedule references an undefined neuron")
        bad = net.kind[schedule.ids] != INPUT
        if bad.any():
            raise ScheduleError(f"schedule forces non-input neuron {int(schedule.ids[bad][0])}")
    _check_network(net)
    kernel = _BACKENDS[backend or BACKEND]
    indptr, dst, weight, delay = net.csr
    t, ids, delivered, fires = kernel.run(net.threshold, net.kind, indptr, dst, weight, delay,
                                          schedule.times, schedule.ids, int(horizon),
                                          record == "all")
    order = np.lexsort((ids, t))
    return SpikeRaster(t[order], ids[order], int(horizon), int(delivered), int(fires))
