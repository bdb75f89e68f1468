"""Sparse mixed-radix statevector.

A basis label holds one integer per register.  Labels are packed into a
single int64 key (first register most significant), and a state is a pair
of parallel arrays: sorted unique ``keys`` and complex ``amps``.  Gates
return new states; the input state is never modified.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import (
    LayoutMismatch,
    MixedRadix,
    NotInjective,
    NotUnitary,
    NotZeroed,
    TooLarge,
    ValueOutOfRange,
)

MAX_KEY = 1 << 62
UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class Register:
    name: str
    radices: tuple  # per dit, least significant first

    def __post_init__(self):
        if not self.radices:
            raise ValueError(f"register {self.name!r} has no dits")
        if any(p < 2 for p in self.radices):
            raise ValueError(f"register {self.name!r}: radices must be >= 2")
        strides = [1]
        for p in self.radices:
            strides.append(strides[-1] * p)
        object.__setattr__(self, "_strides", tuple(strides))

    @property
    def width(self) -> int:
        return len(self.radices)

    @property
    def size(self) -> int:
        return self._strides[-1]

    @property
    def radix(self) -> int:
        if len(set(self.radices)) != 1:
            raise MixedRadix(f"register {self.name!r} mixes radices {self.radices}")
        return self.radices[0]

    def dit_stride(self, pos: int) -> int:
        return self._strides[pos]


def qubits(name: str, width: int) -> Register:
    return Register(name, (2,) * width)


def qudits(name: str, radix: int, width: int) -> Register:
    return Register(name, (radix,) * width)


class RegisterLayout:
    """Ordered named registers and the label <-> key packing."""

    def __init__(self, registers: Iterable[Register]):
        self.registers = tuple(registers)
        names = [r.name for r in self.registers]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate register names in {names}")
        strides = {}
        stride = 1
        for reg in reversed(self.registers):
            strides[reg.name] = stride
            stride *= reg.size
        if stride > MAX_KEY:
            raise TooLarge(f"layout has {stride} basis labels; limit is 2^62")
        self.total_size = stride
        self._strides = strides
        self._by_name = {r.name: r for r in self.registers}

    def __eq__(self, other):
        return isinstance(other, RegisterLayout) and self.registers == other.registers

    def __hash__(self):
        return hash(self.registers)

    def __repr__(self):
        regs = ", ".join(f"{r.name}:{'x'.join(map(str, r.radices))}" for r in self.registers)
        return f"RegisterLayout({regs})"

    def __getitem__(self, name: str) -> Register:
        return self._by_name[name]

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    @property
    def names(self):
        return tuple(r.name for r in self.registers)

    def stride(self, name: str) -> int:
        return self._strides[name]

    def encode(self, values: Mapping[str, int] | Sequence[int]) -> int:
        if isinstance(values, Mapping):
            unknown = set(values) - set(self.names)
            if unknown:
                raise KeyError(f"unknown registers {sorted(unknown)}")
            values = [values.get(r.name, 0) for r in self.registers]
        if len(values) != len(self.registers):
            raise ValueError("need one value per register")
        key = 0
        for reg, v in zip(self.registers, values):
            v = int(v)
            if not 0 <= v < reg.size:
                raise ValueOutOfRange(f"{reg.name}={v} outside [0, {reg.size})")
            key += v * self._strides[reg.name]
        return key

    def decode(self, key: int) -> tuple:
        return tuple((int(key) // self._strides[r.name]) % r.size for r in self.registers)


class SparseState:
    """Normalized amplitudes over a sparse set of basis labels."""

    __slots__ = ("layout", "keys", "amps", "wraps")

    def __init__(self, layout: RegisterLayout, keys, amps, wraps: int = 0):
        self.layout = layout
        self.keys = np.asarray(keys, dtype=np.int64)
        self.amps = np.asarray(amps, dtype=np.complex128)
        self.wraps = wraps

    def replace(self, keys, amps) -> "SparseState":
        return SparseState(self.layout, keys, amps, self.wraps)

    def __len__(self):
        return self.keys.size

    def __repr__(self):
        return f"SparseState({self.layout!r}, support={len(self)})"

    def values(self, name: str) -> np.ndarray:
        size = self.layout[name].size
        stride = self.layout.stride(name)
        if stride == 1:
            return self.keys % size
        v = self.keys // stride
        return v if stride * size == self.layout.total_size else v % size

    def digit(self, name: str, pos: int) -> np.ndarray:
        reg = self.layout[name]
        return (self.values(name) // reg.dit_stride(pos)) % reg.radices[pos]

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def to_dict(self) -> dict:
        return {self.layout.decode(k): complex(a) for k, a in zip(self.keys, self.amps)}

    def amplitude(self, values) -> complex:
        key = self.layout.encode(values)
        i = np.searchsorted(self.keys, key)
        if i < self.keys.size and self.keys[i] == key:
            return complex(self.amps[i])
        return 0j

    def dump(self) -> str:
        """One ``v1,v2,...: re,im`` line per label, sorted by label."""
        lines = []
        for k, a in zip(self.keys, self.amps):
            label = ",".join(str(v) for v in self.layout.decode(k))
            lines.append(f"{label}: {a.real:.17g},{a.imag:.17g}")
        return "\n".join(lines) + ("\n" if lines else "")


def load_dump(layout: RegisterLayout, text: str) -> SparseState:
    entries = {}
    for line in text.strip().splitlines():
        label, amp = line.split(":")
        re_, im = amp.split(",")
        entries[tuple(int(v) for v in label.split(","))] = complex(float(re_), float(im))
    return from_dict(layout, entries)


def from_dict(layout: RegisterLayout, entries: Mapping, normalize: bool = False) -> SparseState:
    keys = np.array([layout.encode(v) for v in entries], dtype=np.int64)
    amps = np.array(list(entries.values()), dtype=np.complex128)
    keys, amps = _kernels.merge(keys, amps)
    if normalize:
        amps = amps / np.sqrt(np.sum(np.abs(amps) ** 2))
    return SparseState(layout, keys, amps)


def new_basis_state(layout: RegisterLayout, values) -> SparseState:
    return SparseState(layout, [layout.encode(values)], [1.0 + 0j])


# ------------------------------------------------------------- controls ----

def control_mask(state: SparseState, controls) -> np.ndarray | None:
    """Boolean mask of labels satisfying every (register, position, value(s))."""
    mask = None
    for reg, pos, want in controls:
        d = state.digit(reg, pos)
        m = np.isin(d, want) if isinstance(want, (tuple, list, frozenset, set)) else d == want
        mask = m if mask is None else mask & m
    return mask


# ----------------------------------------------------------- permutations ----

def _finish_permutation(state: SparseState, new_keys: np.ndarray) -> SparseState:
    order = np.argsort(new_keys, kind="stable")
    sk = new_keys[order]
    if _kernels.has_adjacent_duplicates(sk):
        raise NotInjective("permutation maps two support labels to the same label")
    return state.replace(sk, state.amps[order])


def apply_permutation(state: SparseState, fn, registers: Sequence[str],
                      controls=()) -> SparseState:
    """Relabel the support: register values ``v`` become ``fn(*v)``.

    ``fn`` receives one int64 array per register in ``registers`` and returns
    the new arrays (a bare array when there is a single register).  Only
    labels passing ``controls`` are touched.  Collisions raise NotInjective.
    """
    mask = control_mask(state, controls)
    if mask is not None and not mask.any():
        return state
    old = [state.values(r) for r in registers]
    if mask is not None:
        old = [v[mask] for v in old]
    new = fn(*old)
    if len(registers) == 1 and isinstance(new, np.ndarray):
        new = (new,)
    delta = np.zeros(old[0].shape, dtype=np.int64)
    for name, o, v in zip(registers, old, new):
        v = np.asarray(v, dtype=np.int64)
        size = state.layout[name].size
        if v.size and (v.min() < 0 or v.max() >= size):
            raise ValueOutOfRange(f"permutation sends register {name!r} outside [0, {size})")
        delta += (v - o) * state.layout.stride(name)
    new_keys = state.keys.copy()
    if mask is None:
        new_keys += delta
    else:
        new_keys[mask] += delta
    return _finish_permutation(state, new_keys)


def apply_key_map(state: SparseState, new_keys: np.ndarray) -> SparseState:
    """Relabel with precomputed destination keys (same order as state.keys)."""
    return _finish_permutation(state, np.asarray(new_keys, dtype=np.int64))


# ------------------------------------------------------------------ gates ----

def _check_unitary(U: np.ndarray):
    U = np.asarray(U, dtype=np.complex128)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise NotUnitary(f"matrix of shape {U.shape} is not square")
    if not np.allclose(U.conj().T @ U, np.eye(U.shape[0]), atol=UNITARY_TOL, rtol=0):
        raise NotUnitary("matrix is not unitary within 1e-10")
    return U


def apply_single_dit(state: SparseState, register: str, position: int, U) -> SparseState:
    reg = state.layout[register]
    p = reg.radices[position]
    U = _check_unitary(U)
    if U.shape != (p, p):
        raise NotUnitary(f"dit has radix {p} but matrix is {U.shape}")
    stride = state.layout.stride(register) * reg.dit_stride(position)
    keys, amps = _kernels.expand_dit(state.keys, state.amps, stride, p, U)
    keys, amps = _kernels.merge(keys, amps)
    return state.replace(keys, amps)


def dft_matrix(p: int, inverse: bool = False) -> np.ndarray:
    """Generalized Hadamard: entry [x, b] = w^(b x) / sqrt(p), w = e^(2 pi i / p)."""
    b = np.arange(p)
    sign = -1 if inverse else 1
    return np.exp(sign * 2j * np.pi * np.outer(b, b) / p) / np.sqrt(p)


def apply_dit_phases(state: SparseState, register: str, position: int, phases) -> SparseState:
    """Diagonal single-dit gate: multiply by ``phases[digit]``."""
    d = state.digit(register, position)
    return state.replace(state.keys, state.amps * np.asarray(phases)[d])


def controlled_phase(state: SparseState, control, target, theta: float) -> SparseState:
    """Multiply each label by e^(2 pi i c t theta) for control digit c, target digit t."""
    c = state.digit(*control)
    t = state.digit(*target)
    return state.replace(state.keys, state.amps * np.exp(2j * np.pi * theta * (c * t)))


def _swap_dits(state: SparseState, register: str, i: int, j: int) -> SparseState:
    reg = state.layout[register]
    si, sj = reg.dit_stride(i), reg.dit_stride(j)
    p = reg.radices[i]

    def fn(v):
        di = (v // si) % p
        dj = (v // sj) % p
        return v + (dj - di) * si + (di - dj) * sj

    return apply_permutation(state, fn, [register])


def qft(state: SparseState, register: str, direction: str = "forward") -> SparseState:
    """Order-p^w transform |b> -> p^(-w/2) sum_x e^(+-2 pi i b x / p^w) |x>.

    Gate-wise: for each dit from the most significant down, a generalized
    Hadamard followed by phases controlled by the lower dits; the output
    comes out dit-reversed and is swapped back at the end.
    """
    reg = state.layout[register]
    p = reg.radix
    w = reg.width
    if direction not in ("forward", "inverse"):
        raise ValueError(f"unknown direction {direction!r}")
    if direction == "forward":
        H = dft_matrix(p)
        for j in range(w - 1, -1, -1):
            state = apply_single_dit(state, register, j, H)
            for k in range(j - 1, -1, -1):
                state = controlled_phase(state, (register, k), (register, j),
                                         1.0 / p ** (j - k + 1))
        for j in range(w // 2):
            state = _swap_dits(state, register, j, w - 1 - j)
        return state
    Hd = dft_matrix(p, inverse=True)
    for j in range(w // 2):
        state = _swap_dits(state, register, j, w - 1 - j)
    for j in range(w):
        for k in range(j):
            state = controlled_phase(state, (register, k), (register, j),
                                     -1.0 / p ** (j - k + 1))
        state = apply_single_dit(state, register, j, Hd)
    return state


def prepare_uniform(state: SparseState, register: str, x_max: int) -> SparseState:
    """Zeroed register -> x_max^(-1/2) sum_{x < x_max} |x>, exact amplitudes."""
    reg = state.layout[register]
    if x_max < 1 or x_max > reg.size:
        raise TooLarge(f"x_max={x_max} outside [1, {reg.size}]")
    if np.any(state.values(register) != 0):
        raise NotZeroed(f"register {register!r} is not |0> on the support")
    stride = state.layout.stride(register)
    xs = np.arange(x_max, dtype=np.int64) * stride
    keys = (state.keys[:, None] + xs[None, :]).reshape(-1)
    amps = np.repeat(state.amps / np.sqrt(x_max), x_max)
    order = np.argsort(keys, kind="stable")
    return state.replace(keys[order], amps[order])


def project_uniform(state: SparseState, register: str, x_max: int):
    """Inverse of prepare_uniform restricted to its image.

    Returns ``(state, residual)`` where the returned state is the (unnormalized)
    component with the register in the uniform superposition, mapped back to
    |0>, and ``residual`` is the weight that was outside that subspace.
    """
    vals = state.values(register)
    stride = state.layout.stride(register)
    inside = vals < x_max
    rest = state.keys[inside] - vals[inside] * stride
    keys, amps = _kernels.merge(rest, state.amps[inside] / np.sqrt(x_max), threshold=0.0)
    kept = float(np.sum(np.abs(amps) ** 2))
    residual = max(0.0, float(np.sum(np.abs(state.amps) ** 2)) - kept)
    keep = np.abs(amps) >= _kernels.PRUNE
    return state.replace(keys[keep], amps[keep]), residual


# ------------------------------------------------------------ measurement ----

@dataclass(frozen=True)
class MeasurementRecord:
    register: str
    position: int
    outcome: int
    probabilities: tuple


def measure(state: SparseState, register: str, position: int, rng):
    reg = state.layout[register]
    p = reg.radices[position]
    d = state.digit(register, position)
    probs = np.bincount(d, weights=np.abs(state.amps) ** 2, minlength=p)
    probs = probs / probs.sum()
    outcome = int(rng.choice(p, p=probs))
    keep = d == outcome
    amps = state.amps[keep]
    amps = amps / np.sqrt(np.sum(np.abs(amps) ** 2))
    record = MeasurementRecord(register, position, outcome, tuple(float(x) for x in probs))
    return record, state.replace(state.keys[keep], amps)


def reset_dit(state: SparseState, register: str, position: int) -> SparseState:
    """Set a dit with a definite value (e.g. just measured) back to 0."""
    reg = state.layout[register]
    s = reg.dit_stride(position)
    p = reg.radices[position]
    return apply_permutation(state, lambda v: v - ((v // s) % p) * s, [register])


def overlap(s1: SparseState, s2: SparseState) -> complex:
    """<s1|s2> by intersecting the sorted supports."""
    if s1.layout != s2.layout:
        raise LayoutMismatch("states live on different layouts")
    _, i1, i2 = np.intersect1d(s1.keys, s2.keys, assume_unique=True, return_indices=True)
    return complex(np.sum(np.conj(s1.amps[i1]) * s2.amps[i2]))
