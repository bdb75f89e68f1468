"""Semiclassical order finding for every circuit variant.

A single control dit is reused for all exponent digits.  The multiplications
by a^(p^i) run from the highest digit down; after each one the control gets
the phase correction fixed by the digits measured so far, an inverse DFT_p,
and is measured and reset.  The measured digits y_0, y_1, ... are the digits
of the outcome y of a full inverse QFT, least significant first.

Variants
--------
standard        two-step multiply on a zeroed work register (binary control)
uninit          three-step multiply, both registers start at random values
trinary_uninit  qutrit control, balanced digits, three-step multiply
coset           both registers in coset representation, plain additions
short_factor    one register, multiply by r' and divide by r (midpoint split)
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.stats import binomtest, norm

from . import arith
from .arith import CosetParams
from .circuit import Circuit, CompiledCircuit
from .errors import UnknownVariant
from .modnum import ModCtx, continued_fraction_order, midpoint_split, totient
from .simstate import (
    RegisterLayout,
    SparseState,
    apply_single_dit,
    dft_matrix,
    measure,
    new_basis_state,
    overlap,
    qft,
    qubits,
    qudits,
    reset_dit,
)

VARIANTS = ("standard", "uninit", "trinary_uninit", "coset", "short_factor")
UNINIT_VARIANTS = ("uninit", "trinary_uninit")
DEFAULT_SAMPLER_XMAX = 16


def trinary_digit_count(n: int) -> int:
    """2 n' with n' = ceil(n / log2 3), computed without floating point."""
    # smallest n' with 3^n' >= 2^n
    n_prime = 0
    while 3 ** n_prime < 2 ** n:
        n_prime += 1
    return 2 * n_prime


@dataclass(frozen=True)
class OrderFindConfig:
    ctx: ModCtx
    variant: str = "standard"
    radix: int = 2
    digit_count: int = 0
    coset: Optional[CosetParams] = None
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise UnknownVariant(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if self.radix not in (2, 3):
            raise ValueError("radix must be 2 or 3")
        if self.radix ** self.digit_count < 2 ** (2 * self.ctx.n - 1):
            raise ValueError(f"{self.digit_count} digits of radix {self.radix} are too few "
                             f"for n = {self.ctx.n}")

    @classmethod
    def build(cls, N: int, a: int, variant: str = "standard", x_max: int | None = None,
              seed: int = 0) -> "OrderFindConfig":
        ctx = ModCtx(N, a)
        if variant not in VARIANTS:
            raise UnknownVariant(f"unknown variant {variant!r}; choose from {VARIANTS}")
        if variant == "trinary_uninit":
            radix, count = 3, trinary_digit_count(ctx.n)
        else:
            radix, count = 2, 2 * ctx.n
        coset = None
        if variant == "coset":
            coset = CosetParams(x_max or DEFAULT_SAMPLER_XMAX)
        return cls(ctx, variant, radix, count, coset, seed)

    @property
    def Q(self) -> int:
        return self.radix ** self.digit_count

    def to_dict(self) -> dict:
        return {
            "N": self.ctx.N,
            "a": self.ctx.a,
            "n": self.ctx.n,
            "variant": self.variant,
            "radix": self.radix,
            "digit_count": self.digit_count,
            "x_max": self.coset.x_max if self.coset else None,
            "seed": self.seed,
        }


@dataclass
class TrialResult:
    index: int
    digits: list  # most significant first
    y: int
    candidate: Optional[int]
    success: bool
    alpha: Optional[int] = None
    beta: Optional[int] = None
    wraps: int = 0


@dataclass
class ExperimentResult:
    config: dict
    trials: list
    successes: int
    success_rate: float
    ci_low: float
    ci_high: float
    order: int
    fidelity_trace: Optional[list] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["fidelity_trace"] is None:
            del d["fidelity_trace"]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def wilson_interval(successes: int, trials: int, confidence: float = 0.95):
    ci = binomtest(successes, trials).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


# ------------------------------------------------------------- samplers ----


def _balanced_offset(radix: int, count: int) -> int:
    """sum_i 3^i: balanced digits d - 1 shift the exponent by this much."""
    return sum(radix ** i for i in range(count)) if radix == 3 else 0


def _coset_sampler_params(ctx: ModCtx, x_max: int) -> CosetParams:
    """Pad enough headroom that 2n cross-adds never wrap the register."""
    headroom = 2
    while True:
        params = CosetParams(x_max, headroom)
        width = params.register_width(ctx.n)
        rungs = x_max + 2 * ctx.n * width + 1
        if rungs * ctx.N < 2 ** width:
            return params
        headroom += 1


class _Sampler:
    """Layout, initial-state recipe and one controlled multiplication per digit."""

    def __init__(self, config: OrderFindConfig):
        self.config = config
        ctx = config.ctx
        N, n = ctx.N, ctx.n
        p, m = config.radix, config.digit_count
        self.p, self.m = p, m
        self.H = dft_matrix(p)
        self.Hd = dft_matrix(p, inverse=True)
        mults = ctx.power_table(p, m)
        control = (("c", 0, 1),)
        v = config.variant
        self.coset = None
        if v in ("standard", "uninit"):
            self.layout = RegisterLayout([qubits("c", 1), qubits("A", n), qubits("B", n),
                                          qubits("anc", 1)])
            size = self.layout["A"].size
            build = arith.mul_two_step_circuit if v == "standard" else arith.mul_three_step_circuit
            circuits = [build("A", "B", "anc", mult, N, n, size).controlled(control)
                        for mult in mults]
        elif v == "trinary_uninit":
            self.layout = RegisterLayout([qudits("c", 3, 1), qubits("A", n), qubits("B", n),
                                          qubits("anc", 1)])
            size = self.layout["A"].size
            circuits = [arith.ctrl_mul_trinary_circuit(("c", 0), "A", "B", "anc", mult, N, n, size)
                        for mult in mults]
        elif v == "short_factor":
            splits = [midpoint_split(mult, N, require_invertible=True) if mult != 1 else None
                      for mult in mults]
            extra = max([arith.pair_extra_bits(s) for s in splits if s is not None], default=1)
            self.layout = RegisterLayout([qubits("c", 1), qubits("R", n + extra),
                                          qubits("w", 1)])
            circuits = [arith.short_mul_pair_circuit("R", "w", s, N).controlled(control)
                        if s is not None else Circuit() for s in splits]
        else:  # coset
            self.coset = _coset_sampler_params(ctx, config.coset.x_max)
            width = self.coset.register_width(n)
            self.layout = RegisterLayout([qubits("c", 1), qubits("A", width),
                                          qubits("B", width), qubits("w", self.coset.work_bits)])
            size = 2 ** width
            circuits = []
            for mult in mults:
                circ = arith.coset_mul_accumulate_circuit("A", "B", mult, N, width, size)
                circ.extend(arith.coset_mul_accumulate_circuit(
                    "B", "A", (N - pow(mult, -1, N)) % N, N, width, size))
                circ.extend(arith.swap_circuit("A", "B"))
                circuits.append(circ.controlled(control))
        if v == "coset":
            self.steps = circuits
        else:
            self.steps = [CompiledCircuit(c, self.layout) for c in circuits]

    def initial_state(self, rng):
        v = self.config.variant
        N = self.config.ctx.N
        alpha = beta = None
        if v in UNINIT_VARIANTS:
            alpha, beta = int(rng.integers(N)), int(rng.integers(N))
            state = new_basis_state(self.layout, {"A": alpha, "B": beta})
        elif v == "short_factor":
            state = new_basis_state(self.layout, {"R": 1})
        elif v == "coset":
            state = new_basis_state(self.layout, {"A": 1})
            state = arith.coset_encode(state, "A", "w", N, self.coset)
            state = arith.coset_encode(state, "B", "w", N, self.coset)
        else:
            state = new_basis_state(self.layout, {"A": 1})
        return state, alpha, beta

    def multiply(self, i: int, state: SparseState) -> SparseState:
        if self.coset is None:
            return self.steps[i].run(state)
        state = self.steps[i].run(state)
        N = self.config.ctx.N
        state = arith.recenter_if_high(state, "A", N, self.coset)
        return arith.recenter_if_high(state, "B", N, self.coset)

    def sample_digits(self, state: SparseState, rng):
        """Measured digits y_0, y_1, ... (least significant first) and the final state."""
        p, m = self.p, self.m
        zs = []
        prefix = 0  # sum_k z_k p^k over measured digits
        for j in range(m):
            state = apply_single_dit(state, "c", 0, self.H)
            state = self.multiply(m - 1 - j, state)
            # feedback phase e^(-2 pi i c sum_{k<j} z_k / p^(j-k+1))
            frac = prefix / p ** (j + 1)
            U = self.Hd * np.exp(-2j * np.pi * frac * np.arange(p))[None, :]
            state = apply_single_dit(state, "c", 0, U)
            record, state = measure(state, "c", 0, rng)
            zs.append(record.outcome)
            prefix += record.outcome * p ** j
            state = reset_dit(state, "c", 0)
        return zs, state


@lru_cache(maxsize=16)
def _sampler(config: OrderFindConfig) -> _Sampler:
    return _Sampler(config)


def _sampler_for(config: OrderFindConfig) -> _Sampler:
    # The seed does not change the circuits, so samplers are shared across seeds.
    return _sampler(OrderFindConfig(config.ctx, config.variant, config.radix,
                                    config.digit_count, config.coset, 0))


def semiclassical_sample(config: OrderFindConfig, rng, index: int = 0) -> TrialResult:
    """One run of the one-control-dit order-finding circuit."""
    sampler = _sampler_for(config)
    state, alpha, beta = sampler.initial_state(rng)
    zs, state = sampler.sample_digits(state, rng)
    y = sum(z * config.radix ** j for j, z in enumerate(zs))
    candidate = continued_fraction_order(y, config.Q, config.ctx)
    order = _order(config.ctx.a, config.ctx.N)
    return TrialResult(index, zs[::-1], y, candidate, candidate == order, alpha, beta,
                       state.wraps)


@lru_cache(maxsize=256)
def _order(a: int, N: int) -> int:
    return ModCtx(N, a).order


def _run_chunk(config: OrderFindConfig, jobs: Sequence):
    return [semiclassical_sample(config, np.random.default_rng(seed), index)
            for index, seed in jobs]


def run_trials(config: OrderFindConfig, trials: int, jobs: int = 1) -> ExperimentResult:
    """Independent trials with one spawned RNG stream each.

    The result depends only on ``config.seed`` and ``trials``, not on ``jobs``.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    seeds = list(enumerate(np.random.SeedSequence(config.seed).spawn(trials)))
    if jobs <= 1:
        results = _run_chunk(config, seeds)
    else:
        chunks = [seeds[k::jobs] for k in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(_run_chunk, [config] * len(chunks), chunks)
            results = [r for part in parts for r in part]
    results.sort(key=lambda r: r.index)
    k = sum(r.success for r in results)
    low, high = wilson_interval(k, trials)
    return ExperimentResult(config.to_dict(), [asdict(r) for r in results], k, k / trials,
                            low, high, _order(config.ctx.a, config.ctx.N))


# -------------------------------------------------- monolithic reference ----


def _function_values(config: OrderFindConfig, alpha=None, beta=None) -> np.ndarray:
    """f(x) for every exponent x < Q, as one integer label per x."""
    ctx = config.ctx
    N, a = ctx.N, ctx.a
    shift = _balanced_offset(config.radix, config.digit_count)
    inv = pow(a, -1, N)
    out = np.empty(config.Q, dtype=np.int64)
    fwd = pow(a, -shift, N) if shift else 1  # a^(x - shift) at x = 0
    bwd = pow(inv, -shift, N) if shift else 1
    for x in range(config.Q):
        if config.variant in UNINIT_VARIANTS:
            out[x] = (fwd * alpha % N) * N + bwd * beta % N
        else:
            out[x] = fwd
        fwd = fwd * a % N
        bwd = bwd * inv % N
    return out


def monolithic_distribution(config: OrderFindConfig, alpha: int | None = None,
                            beta: int | None = None) -> np.ndarray:
    """Outcome probabilities of the textbook circuit: full exponent register,
    sum_x |x>|f(x)>, gate-built inverse QFT, measure the exponent register.

    For uninitialized variants ``alpha`` and ``beta`` fix the start values.
    """
    if config.variant in UNINIT_VARIANTS and (alpha is None or beta is None):
        raise ValueError("uninitialized variants need alpha and beta")
    p, m, Q = config.radix, config.digit_count, config.Q
    f = _function_values(config, alpha, beta)
    labels, f_idx = np.unique(f, return_inverse=True)
    layout = RegisterLayout([qudits("x", p, m), qubits("f", max(1, (labels.size - 1).bit_length()))])
    keys = np.arange(Q, dtype=np.int64) * layout.stride("x") + f_idx.astype(np.int64)
    order = np.argsort(keys)
    state = SparseState(layout, keys[order], np.full(Q, 1 / math.sqrt(Q), dtype=np.complex128))
    state = qft(state, "x", "inverse")
    return np.bincount(state.values("x"), weights=state.probabilities(), minlength=Q)


def uninit_mixture_distribution(config: OrderFindConfig) -> np.ndarray:
    """Reference outcome distribution averaged over all start pairs (alpha, beta)."""
    N = config.ctx.N
    total = np.zeros(config.Q)
    for alpha in range(N):
        for beta in range(N):
            total += monolithic_distribution(config, alpha, beta)
    return total / N ** 2


def success_probability(config: OrderFindConfig, dist: np.ndarray) -> float:
    """Probability that continued fractions recover the true order from ``dist``."""
    order = _order(config.ctx.a, config.ctx.N)
    return float(sum(pr for y, pr in enumerate(dist)
                     if pr > 0 and continued_fraction_order(y, config.Q, config.ctx) == order))


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def empirical_distribution(result: ExperimentResult, Q: int) -> np.ndarray:
    ys = np.array([t["y"] for t in result.trials], dtype=np.int64)
    return np.bincount(ys, minlength=Q) / ys.size


# ------------------------------------------------- uninitialized registers ----


def start_value_periods(a: int, N: int) -> np.ndarray:
    """Period of x -> a^x alpha mod N for every start value alpha in [0, N)."""
    periods = np.empty(N, dtype=np.int64)
    for alpha in range(N):
        v, d = a * alpha % N, 1
        while v != alpha:
            v = v * a % N
            d += 1
        periods[alpha] = d
    return periods


def retained_fraction(a: int, N: int) -> float:
    """Fraction of start pairs (alpha, beta) whose joint sequence
    (a^x alpha, a^-x beta) still has the full order of a as its period."""
    periods = start_value_periods(a, N)
    order = _order(a, N)
    joint = np.lcm.outer(periods, periods)
    return float(np.mean(joint == order))


def coprime_penalty(N: int) -> float:
    """1 - phi(N)/N: chance that one random start value shares a factor with N."""
    return 1 - totient(N) / N


def variant_comparison(ctxs: Sequence[ModCtx], variants: Sequence[str], trials: int,
                       seed: int = 0, jobs: int = 1, alpha: float = 1e-3) -> list:
    """Success rates per (modulus, variant) against the standard baseline.

    Uninitialized variants are expected to succeed at the standard rate times
    the exact retained fraction; a row is flagged when its rate is below that
    expectation by more than a one-sided z-test at level ``alpha`` allows.
    """
    rows = []
    for ctx in ctxs:
        base = run_trials(OrderFindConfig.build(ctx.N, ctx.a, "standard", seed=seed),
                          trials, jobs)
        for variant in variants:
            res = base if variant == "standard" else run_trials(
                OrderFindConfig.build(ctx.N, ctx.a, variant, seed=seed), trials, jobs)
            keep = retained_fraction(ctx.a, ctx.N) if variant in UNINIT_VARIANTS else 1.0
            expected = base.success_rate * keep
            p = res.success_rate
            var = (p * (1 - p) + keep ** 2 * base.success_rate * (1 - base.success_rate)) / trials
            z = (p - expected) / math.sqrt(var) if var > 0 else 0.0
            rows.append({
                "N": ctx.N,
                "a": ctx.a,
                "variant": variant,
                "successes": res.successes,
                "trials": trials,
                "success_rate": p,
                "ci_low": res.ci_low,
                "ci_high": res.ci_high,
                "coprime_penalty": coprime_penalty(ctx.N),
                "retained_fraction": keep,
                "expected_rate": expected,
                "z": z,
                "flagged": bool(z < norm.ppf(alpha)),
            })
    return rows


# ---------------------------------------------------------- coset fidelity ----


@dataclass
class FidelityTrace:
    x_max: int
    N: int
    steps: list = field(default_factory=list)  # (step, per_step, cumulative)
    shifts: int = 0
    wraps: int = 0

    @property
    def cumulative(self) -> float:
        return self.steps[-1][2] if self.steps else 1.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "per_step_fidelity", "cumulative_fidelity"])
        for step, per, cum in self.steps:
            w.writerow([step, repr(per), repr(cum)])
        return buf.getvalue()


def fidelity_experiment(ctx: ModCtx, params: CosetParams, adds: int, rng,
                        constants: Sequence[int] | None = None,
                        start: int | None = None) -> FidelityTrace:
    """Random constant additions on one coset register, tracked exactly.

    After every addition the state is compared with the ideal ladder of the
    running residue: ``per_step`` against the window the state occupied
    before the step, ``cumulative`` against the starting window [0, x_max).
    """
    if adds < 1:
        raise ValueError("need at least one addition")
    N, X = ctx.N, params.x_max
    b = int(rng.integers(N)) if start is None else int(start)
    if constants is None:
        constants = [int(c) for c in rng.integers(0, N, size=adds)]
    layout = RegisterLayout([qubits("v", params.register_width(ctx.n)),
                             qubits("w", params.work_bits)])
    state = arith.coset_encode(new_basis_state(layout, {"v": b}), "v", "w", N, params)
    trace = FidelityTrace(X, N)
    offset = 0
    for step, c in enumerate(constants[:adds], start=1):
        state = arith.coset_add_const(state, "v", c)
        b = (b + c) % N
        per = abs(overlap(arith.ideal_coset_state(layout, "v", b, N, X, offset=offset), state))
        cum = abs(overlap(arith.ideal_coset_state(layout, "v", b, N, X), state))
        trace.steps.append((step, per, cum))
        offset = int(state.values("v").min()) // N
    trace.shifts = offset
    trace.wraps = state.wraps
    return trace


# ---------------------------------------------------- short-factor footprint ----


def short_factor_footprint(ctx: ModCtx, limit: int | None = None) -> int:
    """Peak live qubits (register plus work) over every multiplier of a run
    and every input alpha < N; raises FootprintExceeded above ``limit``."""
    fp = arith.Footprint(limit)
    for mult in ctx.pow_table:
        if mult == 1:
            continue
        split = midpoint_split(mult, ctx.N, require_invertible=True)
        width = ctx.n + arith.pair_extra_bits(split)
        layout = RegisterLayout([qubits("R", width), qubits("w", 1)])
        circ = arith.short_mul_pair_circuit("R", "w", split, ctx.N)
        keys = np.arange(ctx.N, dtype=np.int64) * layout.stride("R")
        circ.trace_keys(layout, keys, monitor=fp("R", "w"))
    return fp.peak
