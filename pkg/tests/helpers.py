"""Classical oracles shared by the test modules."""
from math import gcd

import numpy as np

from shorlab.simstate import RegisterLayout, SparseState


def odd_moduli(limit, start=3):
    return range(start, limit + 1, 2)


def units(N):
    return [a for a in range(1, N) if gcd(a, N) == 1]


def basis_keys(layout: RegisterLayout, **values):
    """Keys of the product grid of the given register values (others 0)."""
    names = list(values)
    grids = np.meshgrid(*[np.asarray(values[k], dtype=np.int64) for k in names], indexing="ij")
    keys = np.zeros(grids[0].size, dtype=np.int64)
    for name, g in zip(names, grids):
        keys += g.ravel() * layout.stride(name)
    return keys, {name: g.ravel() for name, g in zip(names, grids)}


def register_values(layout: RegisterLayout, keys, name):
    return (np.asarray(keys) // layout.stride(name)) % layout[name].size


def as_permutation(circuit, layout, **values):
    """Run ``circuit`` on every basis input of the grid; returns (inputs, outputs)."""
    keys, inputs = basis_keys(layout, **values)
    dest = circuit.trace_keys(layout, keys)
    outputs = {name: register_values(layout, dest, name) for name in layout.names}
    return inputs, outputs


def uniform(layout, keys):
    keys = np.sort(np.asarray(keys, dtype=np.int64))
    return SparseState(layout, keys, np.full(keys.size, keys.size ** -0.5, dtype=complex))
