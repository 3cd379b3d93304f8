"""Tiny hand-made networks for simulator and format tests."""
import numpy as np

from snn_dbscan.network import BORDER, CORE, HIDDEN, INPUT, NO_POS, OUTPUT, I, Network, NetworkMeta

META = NetworkMeta("flat", 1, 1, 1, 4, "none")


def tiny(neurons, synapses, meta=META):
    """``neurons``: (threshold, kind, collection) per id; ``synapses``: (src, dst, w, d)."""
    thr, kind, coll = zip(*neurons)
    n = len(neurons)
    s = np.array(synapses, dtype=np.int64).reshape(-1, 4)
    return Network(meta, np.array(thr), np.array(kind), np.array(coll),
                   np.zeros(n, np.int32), np.arange(n, dtype=np.int32),
                   s[:, 0], s[:, 1], s[:, 2], s[:, 3])


def random_network(rng, n=12, m=40):
    """A random valid-format network: neurons 0..2 are inputs, the rest hidden or output."""
    neurons = []
    for i in range(n):
        if i < 3:
            neurons.append((1, INPUT, I))
        else:
            neurons.append((int(rng.integers(1, 4)), int(rng.choice([HIDDEN, OUTPUT])),
                            int(rng.choice([CORE, BORDER]))))
    syn = [(int(rng.integers(n)), int(rng.integers(n)), int(rng.choice([-1, 1])),
            int(rng.integers(1, 5))) for _ in range(m)]
    return tiny(neurons, syn, NetworkMeta("flat", 1, 1, 1, 4, "none"))


__all__ = ["tiny", "random_network", "NO_POS"]
