"""Reversible and approximate modular arithmetic on sparse states.

Exact constructions are built as :class:`~shorlab.circuit.Circuit` objects
(``*_circuit`` functions) and wrapped by state-level functions with the same
name minus the suffix.  Comparators and adders act at the permutation level;
their gate cost lives in :mod:`shorlab.resources`.

Controls are ``(register, position, value)`` triples; ``value`` may be a
tuple of accepted digits.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np

from .circuit import Circuit, identity
from .errors import (
    AncillaNotZero,
    EvenMultiplier,
    FootprintExceeded,
    InputOutOfRange,
    NotCoprime,
    NotCosetState,
    Underflow,
)
from .modnum import ModCtx, MidpointSplit, bit_length, mod_inv
from .simstate import (
    SparseState,
    apply_dit_phases,
    apply_permutation,
    control_mask,
    new_basis_state,
    prepare_uniform,
    project_uniform,
)

# ------------------------------------------------------------ utilities ----


def _masked_values(state: SparseState, register: str, controls) -> np.ndarray:
    v = state.values(register)
    mask = control_mask(state, controls)
    return v if mask is None else v[mask]


def _require_below(register: str, bound: int, what: str = "value"):
    def check(state, step):
        v = _masked_values(state, register, step.controls)
        if v.size and v.max() >= bound:
            raise InputOutOfRange(f"{register!r} holds {what} {int(v.max())} >= {bound}")
    return check


def _require_zero(register: str):
    def check(state, step):
        v = _masked_values(state, register, step.controls)
        if v.size and v.any():
            raise AncillaNotZero(f"register {register!r} is not |0> on the support")
    return check


def _require_coprime(a: int, N: int):
    g = gcd(a, N)
    if g != 1:
        raise NotCoprime(a, N, g)


def run(state: SparseState, circuit: Circuit, controls=()) -> SparseState:
    return circuit.controlled(controls).run(state)


def swap_circuit(r1: str, r2: str) -> Circuit:
    def sw(x, y):
        return y, x
    return Circuit(name="swap").step((r1, r2), sw, sw, label="swap")


def negate_circuit(register: str, N: int) -> Circuit:
    """v -> (N - v) mod N; multiplication by -1 on Z_N, an involution."""
    def neg(v):
        return (N - v) % N
    return Circuit(name="negate").step((register,), neg, neg, label="negate",
                                       check=_require_below(register, N))


def flip_circuit(register: str) -> Circuit:
    def x(v):
        return v ^ 1
    return Circuit(name="x").step((register,), x, x, label="x")


# ----------------------------------------------------------- plain adds ----


def add_const_circuit(register: str, c: int, size: int) -> Circuit:
    c = int(c) % size
    return Circuit(name="add").step(
        (register,), lambda v: (v + c) % size, lambda v: (v - c) % size, label=f"+{c}")


def add_const(state: SparseState, register: str, c: int, controls=()) -> SparseState:
    """v -> (v + c) mod register size."""
    size = state.layout[register].size
    return run(state, add_const_circuit(register, c, size), controls)


def fourier_add_const(state: SparseState, register: str, c: int, controls=()) -> SparseState:
    """Draper addition on a register that is already in the Fourier basis.

    |x> picks up e^(2 pi i c x / p^w), applied one dit at a time, so that
    qft^-1 . fourier_add_const(c) . qft == add_const(c).
    """
    reg = state.layout[register]
    p, w = reg.radix, reg.width
    order = p ** w
    mask = control_mask(state, controls)
    for j in range(w):
        frac = (c * p ** j) % order / order
        phases = np.exp(2j * np.pi * frac * np.arange(p))
        if mask is None:
            state = apply_dit_phases(state, register, j, phases)
        else:
            d = state.digit(register, j)
            amps = np.where(mask, state.amps * phases[d], state.amps)
            state = state.replace(state.keys, amps)
    return state


def compare_ge_circuit(register: str, c: int, flag: str) -> Circuit:
    def cmp(v, f):
        return v, f ^ (v >= c).astype(np.int64)
    return Circuit(name="cmp").step((register, flag), cmp, cmp, label=f">={c}")


def compare_ge_flag(state: SparseState, register: str, c: int, flag: str,
                    controls=()) -> SparseState:
    """Toggle ``flag`` on every label whose register value is >= c."""
    return run(state, compare_ge_circuit(register, c, flag), controls)


# --------------------------------------------------- exact modular adds ----


def mod_add_circuit(register: str, c: int, N: int, anc: str, size: int) -> Circuit:
    """v -> (v + c) mod N with one ancilla qubit returned to |0>.

    compare (v >= N - c) -> conditional -N -> +c -> uncompute via (v < c).
    """
    c = int(c) % N
    circ = Circuit(name=f"modadd{c}")
    if c == 0:
        return circ

    def cmp_in(v, f):
        return v, f ^ (v >= N - c).astype(np.int64)

    def cmp_out(v, f):
        return v, f ^ (v < c).astype(np.int64)

    circ.step((register, anc), cmp_in, cmp_in, label="cmp",
              check=_require_below(register, N))
    circ.step((register,), lambda v: (v - N) % size, lambda v: (v + N) % size,
              controls=((anc, 0, 1),), label="-N")
    circ.step((register,), lambda v: (v + c) % size, lambda v: (v - c) % size, label=f"+{c}")
    circ.step((register, anc), cmp_out, cmp_out, label="uncmp")
    return circ


def mod_add_const_exact(state: SparseState, register: str, c: int, N: int, anc: str,
                        controls=()) -> SparseState:
    if not 0 <= c < N:
        raise ValueError(f"constant {c} outside [0, {N})")
    size = state.layout[register].size
    return run(state, mod_add_circuit(register, c, N, anc, size), controls)


def cross_add_circuit(src: str, dst: str, mult: int, N: int, anc: str, src_bits: int,
                      dst_size: int) -> Circuit:
    """dst += mult * src (mod N) as src_bits controlled modular additions."""
    circ = Circuit(name=f"cross{mult}")
    for j in range(src_bits):
        add = mod_add_circuit(dst, (mult << j) % N, N, anc, dst_size)
        circ.extend(add.controlled(((src, j, 1),)))
    return circ


# ----------------------------------------------------- multiplications ----


def mul_two_step_circuit(reg_a: str, reg_b: str, anc: str, a: int, N: int, n: int,
                         size: int) -> Circuit:
    """|alpha, 0> -> |alpha, a alpha> -> |0, a alpha> -> swap -> |a alpha, 0>."""
    _require_coprime(a, N)
    inv = mod_inv(a, N)
    circ = Circuit(name=f"mul2[{a}]")
    guard = Circuit().step((reg_b,), identity, identity, label="guard",
                           check=_require_zero(reg_b))
    circ.extend(guard)
    circ.extend(cross_add_circuit(reg_a, reg_b, a, N, anc, n, size))
    circ.extend(cross_add_circuit(reg_b, reg_a, (N - inv) % N, N, anc, n, size))
    circ.extend(swap_circuit(reg_a, reg_b))
    return circ


def mul_two_step(state: SparseState, reg_a: str, reg_b: str, anc: str, a: int,
                 ctx: ModCtx, controls=()) -> SparseState:
    size = state.layout[reg_a].size
    return run(state, mul_two_step_circuit(reg_a, reg_b, anc, a, ctx.N, ctx.n, size), controls)


def mul_three_step_circuit(reg_a: str, reg_b: str, anc: str, a: int, N: int, n: int,
                           size: int) -> Circuit:
    """|alpha, beta> -> |a alpha, a^-1 beta> with no zeroed work register.

    B += aA;  A -= a^-1 B;  B += aA;  swap;  negate B.
    """
    _require_coprime(a, N)
    inv = mod_inv(a, N)
    circ = Circuit(name=f"mul3[{a}]")
    circ.extend(cross_add_circuit(reg_a, reg_b, a, N, anc, n, size))
    circ.extend(cross_add_circuit(reg_b, reg_a, (N - inv) % N, N, anc, n, size))
    circ.extend(cross_add_circuit(reg_a, reg_b, a, N, anc, n, size))
    circ.extend(swap_circuit(reg_a, reg_b))
    circ.extend(negate_circuit(reg_b, N))
    return circ


def mul_three_step_uninit(state: SparseState, reg_a: str, reg_b: str, anc: str, a: int,
                          ctx: ModCtx, controls=()) -> SparseState:
    size = state.layout[reg_a].size
    circ = mul_three_step_circuit(reg_a, reg_b, anc, a, ctx.N, ctx.n, size)
    return run(state, circ, controls)


def ctrl_mul_trinary_circuit(control, reg_a: str, reg_b: str, anc: str, a: int, N: int,
                             n: int, size: int) -> Circuit:
    """Multiply A by a^(d - 1) and B by a^(1 - d) for control digit d in {0, 1, 2}.

    d = 0 reuses the a-multiplier between two controlled swaps.
    """
    creg, cpos = control
    circ = Circuit(name=f"tri[{a}]")
    circ.extend(swap_circuit(reg_a, reg_b).controlled(((creg, cpos, 0),)))
    circ.extend(mul_three_step_circuit(reg_a, reg_b, anc, a, N, n, size)
                .controlled(((creg, cpos, (0, 2)),)))
    circ.extend(swap_circuit(reg_a, reg_b).controlled(((creg, cpos, 0),)))
    return circ


def ctrl_mul_trinary(state: SparseState, control, reg_a: str, reg_b: str, anc: str, a: int,
                     ctx: ModCtx, controls=()) -> SparseState:
    size = state.layout[reg_a].size
    circ = ctrl_mul_trinary_circuit(control, reg_a, reg_b, anc, a, ctx.N, ctx.n, size)
    return run(state, circ, controls)


# ---------------------------------------------------- coset superposition ----


@dataclass(frozen=True)
class CosetParams:
    """Number of coset rungs and register padding.

    The value register is ``n + pad_bits`` wide; ``work_bits`` qubits hold
    the rung index during conversion.
    """

    x_max: int
    headroom: int = 2

    def __post_init__(self):
        if self.x_max < 1:
            raise ValueError("x_max must be >= 1")
        if self.headroom < 0:
            raise ValueError("headroom must be >= 0")

    @property
    def work_bits(self) -> int:
        return max(1, (self.x_max - 1).bit_length())

    @property
    def pad_bits(self) -> int:
        return (self.x_max - 1).bit_length() + self.headroom

    def register_width(self, n: int) -> int:
        return n + self.pad_bits

    @classmethod
    def for_budget(cls, n: int, headroom: int = 2) -> "CosetParams":
        """x_max = 1000 n^2, enough for 4 n^2 additions at < 1% loss."""
        return cls(1000 * n * n, headroom)


def coset_conversion_circuit(value_reg: str, work_reg: str, N: int, bits: int) -> Circuit:
    """|b>|x> -> |b + xN>|0> for b < N, one rung bit at a time (LSB first)."""
    circ = Circuit(name="coset")
    for i in range(bits):
        step = N << i

        def uncompute(v, w, i=i, step=step):
            return v, w ^ ((v >= step).astype(np.int64) << i)

        circ.step((value_reg,), lambda v, s=step: v + s, lambda v, s=step: v - s,
                  controls=((work_reg, i, 1),), label=f"+2^{i}N")
        circ.step((value_reg, work_reg), uncompute, uncompute, label=f"uncompute x{i}")
    return circ


def coset_encode(state: SparseState, value_reg: str, work_reg: str, N: int,
                 params: CosetParams) -> SparseState:
    """|b> -> x_max^(-1/2) sum_{x < x_max} |b + xN>, work register returned clean."""
    v = state.values(value_reg)
    if v.size and v.max() >= N:
        raise InputOutOfRange(f"{value_reg!r} holds {int(v.max())} >= N = {N}")
    if params.x_max == 1:
        return state
    state = prepare_uniform(state, work_reg, params.x_max)
    return coset_conversion_circuit(value_reg, work_reg, N, params.work_bits).run(state)


def coset_decode(state: SparseState, value_reg: str, work_reg: str, N: int,
                 params: CosetParams, tol: float = 1e-10) -> SparseState:
    """Inverse of :func:`coset_encode`; raises NotCosetState on a malformed ladder."""
    if params.x_max == 1:
        return state
    state = coset_conversion_circuit(value_reg, work_reg, N, params.work_bits).inverse().run(state)
    v = state.values(value_reg)
    bad = v >= N
    if bad.any():
        residual = float(np.sum(np.abs(state.amps[bad]) ** 2))
        raise NotCosetState(f"{residual:.3g} of the weight decodes to values >= N",
                            residual=residual)
    state, residual = project_uniform(state, work_reg, params.x_max)
    if residual > tol:
        raise NotCosetState(f"work register left with weight {residual:.3g} off the "
                            f"uniform superposition", residual=residual)
    return state


def ideal_coset_state(layout, register: str, residue: int, N: int, x_max: int,
                      others=None, offset: int = 0) -> SparseState:
    """x_max^(-1/2) sum_{x=offset}^{offset+x_max-1} |residue + xN> (other registers fixed)."""
    base = new_basis_state(layout, dict(others or {}))
    stride = layout.stride(register)
    xs = residue + (offset + np.arange(x_max, dtype=np.int64)) * N
    keys = base.keys[0] + xs * stride
    amps = np.full(x_max, 1 / np.sqrt(x_max), dtype=np.complex128)
    return SparseState(layout, keys, amps)


def _coset_add_step(circ: Circuit, register: str, c: int, size: int, controls=()):
    def count_wraps(state, step):
        v = _masked_values(state, register, step.controls)
        if v.size and ((v + c >= size) | (v + c < 0)).any():
            state.wraps += 1

    circ.step((register,), lambda v: (v + c) % size, lambda v: (v - c) % size,
              controls=controls, label=f"+{c}", check=count_wraps)


def coset_add_const(state: SparseState, register: str, c: int, controls=()) -> SparseState:
    """Plain (non-modular) addition on a coset-represented register.

    Additions wrap at the register size; each wrapping call increments
    ``state.wraps``.
    """
    size = state.layout[register].size
    circ = Circuit(name="coset+")
    _coset_add_step(circ, register, int(c), size)
    return circ.controlled(controls).run(state)


def coset_recenter(state: SparseState, register: str, N: int, m: int) -> SparseState:
    """Subtract m*N from a coset register (relabels the ladder downwards)."""
    if m == 0:
        return state
    v = state.values(register)
    if v.size and v.min() < m * N:
        raise Underflow(f"subtracting {m}*{N} from minimum support value {int(v.min())}")
    return apply_permutation(state, lambda x: x - m * N, [register])


def recenter_if_high(state: SparseState, register: str, N: int, params: CosetParams):
    """Recenter when the lowest rung has drifted above (x_max / 2) * N."""
    v = state.values(register)
    if v.size and v.min() > (params.x_max // 2) * N:
        return coset_recenter(state, register, N, int(v.min()) // N)
    return state


def coset_mul_accumulate_circuit(ctrl_reg: str, acc_reg: str, mult: int, N: int,
                                 ctrl_bits: int, size: int) -> Circuit:
    circ = Circuit(name=f"cosetmul[{mult}]")
    for j in range(ctrl_bits):
        _coset_add_step(circ, acc_reg, (mult << j) % N, size, controls=((ctrl_reg, j, 1),))
    return circ


def coset_mod_mul_accumulate(state: SparseState, ctrl_reg: str, acc_reg: str, a: int,
                             ctx: ModCtx, params: CosetParams, ctrl_bits: int | None = None,
                             controls=(), recenter: bool = True) -> SparseState:
    """acc (coset rep of beta) -> approximately coset rep of beta + a*alpha mod N.

    ``ctrl_bits`` defaults to the full control width, which is what a control
    register in coset representation needs; pass ``ctx.n`` for a control in
    the usual representation.
    """
    if ctrl_bits is None:
        ctrl_bits = state.layout[ctrl_reg].width
    size = state.layout[acc_reg].size
    circ = coset_mul_accumulate_circuit(ctrl_reg, acc_reg, a % ctx.N, ctx.N, ctrl_bits, size)
    state = circ.controlled(controls).run(state)
    if recenter:
        state = recenter_if_high(state, acc_reg, ctx.N, params)
    return state


# ------------------------------------------------- short multiplication ----


@dataclass(frozen=True)
class ShortMulParams:
    a_short: int
    N: int
    n: int
    n_prime: int
    uncompute_consts: tuple

    @classmethod
    def build(cls, a_short: int, N: int) -> "ShortMulParams":
        if a_short < 1:
            raise ValueError("multiplier must be positive")
        if a_short % 2 == 0:
            raise EvenMultiplier(f"multiplier {a_short} is even")
        _require_coprime(a_short, N)
        n = (N - 1).bit_length()
        n_prime = bit_length(a_short)
        if n_prime >= n:
            raise ValueError(f"multiplier {a_short} is not shorter than the modulus")
        neg_n_inv = pow(-N, -1, a_short) if a_short > 1 else 0
        consts = tuple((neg_n_inv << i) % a_short if a_short > 1 else 0 for i in range(n))
        return cls(a_short, N, n, n_prime, consts)

    @property
    def width(self) -> int:
        return self.n + self.n_prime


class Footprint:
    """Peak number of live qubits seen while a short multiplication runs."""

    def __init__(self, limit: int | None = None):
        self.limit = limit
        self.peak = 0

    def __call__(self, register: str, work: str):
        def monitor(state, step):
            v = state.values(register)
            used = int(v.max()).bit_length() if v.size else 0
            live = used + state.layout[work].width
            self.peak = max(self.peak, live)
            if self.limit is not None and live > self.limit:
                raise FootprintExceeded(f"{live} live qubits after {step.label!r}, "
                                        f"limit {self.limit}")
        return monitor


def _field_mod_add(circ: Circuit, register: str, work: str, lo: int, bits: int, c: int,
                   mod: int, controls):
    """(field + c) mod ``mod`` on bits [lo, lo + bits) of a register, via one work qubit."""
    c %= mod
    if c == 0:
        return
    fmask = (1 << bits) - 1

    def get(v):
        return (v >> lo) & fmask

    def put(v, q):
        return (v & ~(fmask << lo)) | ((q & fmask) << lo)

    def cmp_in(v, w):
        return v, w ^ (get(v) >= mod - c).astype(np.int64)

    def cmp_out(v, w):
        return v, w ^ (get(v) < c).astype(np.int64)

    controls = tuple(controls)
    circ.step((register, work), cmp_in, cmp_in, controls=controls, label="q cmp")
    circ.step((register,), lambda v: put(v, get(v) - mod), lambda v: put(v, get(v) + mod),
              controls=controls + ((work, 0, 1),), label=f"q -{mod}")
    circ.step((register,), lambda v: put(v, get(v) + c), lambda v: put(v, get(v) - c),
              controls=controls, label=f"q +{c}")
    circ.step((register, work), cmp_out, cmp_out, controls=controls, label="q uncmp")


def short_mul_circuit(register: str, work: str, params: ShortMulParams) -> Circuit:
    """alpha -> a alpha mod N in place on n + n' qubits plus one work qubit.

    1. non-modular multiply, MSB first; bit j of the running sum equals the
       source bit because a is odd, so each step is a single controlled add
       of (a - 1) 2^j;
    2. restoring division by N; quotient bit i lands in bit n + i, which the
       division has just cleared;
    3. quotient uncompute: q = r * (-N)^-1 mod a, subtracted bit by bit of
       the remainder r with precomputed 2^i (-N)^-1 mod a.
    """
    a, N, n, n_p = params.a_short, params.N, params.n, params.n_prime
    circ = Circuit(name=f"short[{a}]")
    circ.step((register,), identity, identity, label="guard",
              check=_require_below(register, N))
    # stage 1
    for j in range(n - 1, -1, -1):
        add = (a - 1) << j
        if add:
            circ.step((register,), lambda v, d=add: v + d, lambda v, d=add: v - d,
                      controls=((register, j, 1),), label=f"mul bit {j}")
    # stage 2
    for i in range(n_p - 1, -1, -1):
        low = (1 << (i + n + 1)) - 1
        sub = N << i
        qbit = n + i

        def cmp(v, w, low=low, sub=sub):
            return v, w ^ ((v & low) >= sub).astype(np.int64)

        def park(v, w, qbit=qbit):
            b = (v >> qbit) & 1
            return v ^ ((b ^ w) << qbit), b

        circ.step((register, work), cmp, cmp, label=f"div cmp {i}")
        circ.step((register,), lambda v, s=sub: v - s, lambda v, s=sub: v + s,
                  controls=((work, 0, 1),), label=f"div sub {i}")
        circ.step((register, work), park, park, label=f"div park {i}")
    # stage 3
    if a > 1:
        for i in range(n):
            _field_mod_add(circ, register, work, n, n_p, -params.uncompute_consts[i], a,
                           controls=((register, i, 1),))
    return circ


def short_mul(state: SparseState, register: str, work: str, params: ShortMulParams,
              controls=(), strict: bool = False, footprint: Footprint | None = None,
              inverse: bool = False) -> SparseState:
    circ = short_mul_circuit(register, work, params)
    if inverse:
        circ = circ.inverse()
    monitor = None
    if strict or footprint is not None:
        fp = footprint or Footprint()
        if strict and fp.limit is None:
            fp.limit = params.n + params.n_prime + 1
        monitor = fp(register, work)
    return circ.controlled(controls).run(state, monitor=monitor)


def double_mod_circuit(register: str, work: str, N: int, width: int) -> Circuit:
    """v -> 2v mod N for v < N; needs width > bits(N) and one work qubit.

    The flag for the conditional -N equals the low bit of the result, which
    uncomputes it.
    """
    top = width - 1
    full = (1 << width) - 1

    def rotl(v):
        return ((v << 1) & full) | (v >> top)

    def rotr(v):
        return (v >> 1) | ((v & 1) << top)

    def cmp(v, w):
        return v, w ^ (v >= N).astype(np.int64)

    def low(v, w):
        return v, w ^ (v & 1)

    circ = Circuit(name="double")
    circ.step((register,), rotl, rotr, label="x2", check=_require_below(register, N))
    circ.step((register, work), cmp, cmp, label="x2 cmp")
    circ.step((register,), lambda v: v - N, lambda v: v + N, controls=((work, 0, 1),),
              label="x2 -N")
    circ.step((register, work), low, low, label="x2 uncmp")
    return circ


def _odd_part(x: int):
    t = 0
    while x % 2 == 0:
        x //= 2
        t += 1
    return x, t


def pair_extra_bits(split: MidpointSplit) -> int:
    """Register bits beyond n needed by :func:`short_mul_pair_circuit`.

    Only the odd parts of r and r' are multiplied; powers of two are modular
    doublings that need a single spare bit.
    """
    num, _ = _odd_part(split.r_prime)
    den, _ = _odd_part(abs(split.r))
    return max(1, bit_length(num), bit_length(den))


def short_mul_pair_circuit(register: str, work: str, split: MidpointSplit, N: int) -> Circuit:
    """alpha -> (r' / r) alpha mod N with half-length multipliers.

    Even parts are handled by modular doublings so the odd-multiplier
    scheme never needs more than n + n' + 1 qubits.
    """
    n = (N - 1).bit_length()
    width = n + pair_extra_bits(split)
    num, t_num = _odd_part(split.r_prime)
    den, t_den = _odd_part(abs(split.r))
    circ = Circuit(name=f"pair[{split.r_prime}/{split.r}]")
    if num > 1:
        circ.extend(short_mul_circuit(register, work, ShortMulParams.build(num, N)))
    for _ in range(t_num):
        circ.extend(double_mod_circuit(register, work, N, width))
    divide = Circuit()
    if den > 1:
        divide.extend(short_mul_circuit(register, work, ShortMulParams.build(den, N)))
    for _ in range(t_den):
        divide.extend(double_mod_circuit(register, work, N, width))
    circ.extend(divide.inverse())
    if split.r < 0:
        circ.extend(negate_circuit(register, N))
    return circ


def short_mul_pair(state: SparseState, register: str, work: str, split: MidpointSplit,
                   ctx: ModCtx, controls=(), footprint: Footprint | None = None) -> SparseState:
    circ = short_mul_pair_circuit(register, work, split, ctx.N)
    monitor = footprint(register, work) if footprint is not None else None
    return circ.controlled(controls).run(state, monitor=monitor)
