"""Reversible circuits as sequences of basis permutations.

Every classical-reversible construction in :mod:`shorlab.arith` is built
as a :class:`Circuit`: an ordered list of :class:`PermStep` objects, each
a bijection on a few registers with an explicit inverse.  Running the
steps on a :class:`SparseState` moves amplitudes label by label, so a
circuit can be run forwards, backwards, or under extra controls.

:class:`CompiledCircuit` memoizes the composite key -> key map of a circuit
on one layout.  Repeated Shor trials revisit the same labels, so after the
first trial most labels are answered by one table lookup.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import _kernels
from .simstate import SparseState, apply_key_map, apply_permutation


def identity(v):
    return v


@dataclass(frozen=True)
class PermStep:
    registers: tuple
    forward: Callable
    inverse: Callable
    controls: tuple = ()
    label: str = ""
    check: Callable | None = None  # optional precondition hook, gets the state

    def inverted(self) -> "PermStep":
        # A precondition on the input of an involution (or identity guard)
        # is also a precondition on its output; any other check is dropped.
        check = self.check if self.forward is self.inverse else None
        return replace(self, forward=self.inverse, inverse=self.forward, check=check)


@dataclass
class Circuit:
    steps: list = field(default_factory=list)
    name: str = ""

    def __iter__(self):
        return iter(self.steps)

    def __len__(self):
        return len(self.steps)

    def __add__(self, other: "Circuit") -> "Circuit":
        return Circuit(self.steps + other.steps, self.name or other.name)

    def step(self, registers, forward, inverse, controls=(), label="", check=None):
        self.steps.append(PermStep(tuple(registers), forward, inverse, tuple(controls),
                                   label, check))
        return self

    def extend(self, other: "Circuit"):
        self.steps.extend(other.steps)
        return self

    def controlled(self, controls) -> "Circuit":
        controls = tuple(controls)
        if not controls:
            return self
        return Circuit([replace(s, controls=controls + s.controls) for s in self.steps],
                       self.name)

    def inverse(self) -> "Circuit":
        return Circuit([s.inverted() for s in reversed(self.steps)], self.name + "^-1")

    def trace_keys(self, layout, keys: np.ndarray, monitor: Callable | None = None) -> np.ndarray:
        """Destination key of each input key (the circuit as a basis permutation)."""
        keys = np.asarray(keys, dtype=np.int64)
        order = np.argsort(keys, kind="stable")
        # Tag each label by its input index so the output can be traced back.
        tags = (order + 1).astype(np.complex128)
        probe = SparseState(layout, keys[order], tags)
        out = self.run(probe, monitor=monitor)
        src = np.rint(out.amps.real).astype(np.int64) - 1
        dest = np.empty(keys.size, dtype=np.int64)
        dest[src] = out.keys
        return dest

    def run(self, state: SparseState, monitor: Callable | None = None) -> SparseState:
        for s in self.steps:
            if s.check is not None:
                s.check(state, s)
            state = apply_permutation(state, s.forward, s.registers, s.controls)
            if monitor is not None:
                monitor(state, s)
        return state


class CompiledCircuit:
    """A circuit plus a growing lookup table of its action on keys."""

    def __init__(self, circuit: Circuit, layout):
        self.circuit = circuit
        self.layout = layout
        self._in = np.empty(0, dtype=np.int64)
        self._out = np.empty(0, dtype=np.int64)

    @property
    def table_size(self) -> int:
        return self._in.size

    def run(self, state: SparseState) -> SparseState:
        if state.layout != self.layout:
            raise ValueError("compiled circuit used on a different layout")
        dest = _kernels.lookup(self._in, self._out, state.keys)
        miss = dest < 0
        if miss.any():
            probe_keys = state.keys[miss]
            mapped = self.circuit.trace_keys(self.layout, probe_keys)
            dest[miss] = mapped
            keys_in = np.concatenate([self._in, probe_keys])
            keys_out = np.concatenate([self._out, mapped])
            order = np.argsort(keys_in, kind="stable")
            self._in, self._out = keys_in[order], keys_out[order]
        return apply_key_map(state, dest)
