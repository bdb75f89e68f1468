"""Qubit, step and depth counts per circuit variant, without simulation.

Counts are in "addition units": one controlled modular addition of n-bit
numbers.  ``add_unit`` scales the depth of a single addition for callers
who want to plug in a concrete adder.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

from .errors import UnknownVariant

VARIANTS = ("standard", "uninit", "trinary_uninit", "coset", "short_factor")
LOG2_3 = math.log2(3)


def _check(variant: str, n: int):
    if variant not in VARIANTS:
        raise UnknownVariant(f"unknown variant {variant!r}; choose from {VARIANTS}")
    if n < 2:
        raise ValueError("n must be >= 2")


def ceil_log2(x: int) -> int:
    return (x - 1).bit_length()


def coset_pad_bits(n: int) -> int:
    """ceil(2 log2 n) + 10 extra qubits per coset register."""
    # ceil(2 log2 n) = ceil(log2 n^2)
    return ceil_log2(n * n) + 10


def trinary_digits(n: int) -> int:
    """n' = ceil(n / log2 3): qutrit digits carrying n bits of exponent."""
    k = 0
    while 3 ** k < 2 ** n:
        k += 1
    return k


def half_bits(n: int) -> int:
    return (n + 1) // 2


def qubit_count(variant: str, n: int, work_qubits: int = 1) -> int:
    """Total qubits, counting the single reused control dit.

    A qutrit control is counted as two qubits.  ``work_qubits`` is the
    number of ancillas of the short-factor multiplier.
    """
    _check(variant, n)
    if variant in ("standard", "uninit"):
        return 2 * n + 3
    if variant == "trinary_uninit":
        return 2 * n + 4
    if variant == "coset":
        return 2 * (n + coset_pad_bits(n)) + 1
    return n + half_bits(n) + work_qubits + 1


def short_mul_width(n: int, n_prime: int) -> int:
    """Register qubits of the in-place short multiplication (work qubit excluded)."""
    return n + n_prime


def step_counts(variant: str, n: int) -> tuple:
    """(controlled multiplications, modular additions) for one order-finding run."""
    _check(variant, n)
    if variant == "trinary_uninit":
        mults = 2 * trinary_digits(n)
        return mults, mults * 3 * n
    mults = 2 * n
    if variant == "uninit":
        return mults, mults * 3 * n
    if variant == "coset":
        # control register back in the usual representation during each cross-add
        return mults, mults * 2 * n
    return mults, mults * 2 * n


# Relative time in the large-n limit, versus the binary standard circuit.
ASYMPTOTIC_TIME = {
    "standard": 1.0,
    "uninit": 1.5,
    "trinary_uninit": 1.5 / LOG2_3,
    "coset": 1.0,
    "short_factor": 1.0,
}


def time_factor(variant: str, n: int | None = None) -> float:
    """Run time relative to the binary standard circuit.

    Without ``n`` the large-n limit is returned; with ``n`` the ratio of the
    exact addition counts at that size.
    """
    if variant not in VARIANTS:
        raise UnknownVariant(f"unknown variant {variant!r}; choose from {VARIANTS}")
    if n is None:
        return ASYMPTOTIC_TIME[variant]
    return step_counts(variant, n)[1] / step_counts("standard", n)[1]


def qft_depth(width: int) -> int:
    """Depth of a width-qubit QFT with commuting phases packed in parallel."""
    return 2 * width - 1


def depth_estimate(variant: str, n: int, parallel_fourier: bool = True,
                   add_unit: int = 1) -> int:
    """Circuit depth in gate layers.

    With ``parallel_fourier`` the target register stays Fourier transformed
    for a whole multiplication: every addition is one layer and a QFT pair
    bounds each cross-add.  Otherwise each addition pays its own QFT pair.
    Target registers carry coset padding when the variant uses it.
    """
    _check(variant, n)
    mults, adds = step_counts(variant, n)
    width = n + coset_pad_bits(n) if variant == "coset" else n + 1
    cross_adds = 3 if variant in ("uninit", "trinary_uninit") else 2
    qft_pair = 2 * qft_depth(width)
    if parallel_fourier:
        return adds * add_unit + mults * cross_adds * qft_pair
    return adds * (add_unit + qft_pair)


@dataclass(frozen=True)
class ResourceReport:
    variant: str
    n: int
    qubits: int
    multiplications: int
    modular_additions: int
    time_factor: float
    time_factor_at_n: float
    depth_parallel: int
    depth_serial: int

    def to_dict(self) -> dict:
        return asdict(self)


def report(variant: str, n: int) -> ResourceReport:
    mults, adds = step_counts(variant, n)
    return ResourceReport(
        variant=variant,
        n=n,
        qubits=qubit_count(variant, n),
        multiplications=mults,
        modular_additions=adds,
        time_factor=round(time_factor(variant), 4),
        time_factor_at_n=round(time_factor(variant, n), 4),
        depth_parallel=depth_estimate(variant, n, True),
        depth_serial=depth_estimate(variant, n, False),
    )


def report_all(n: int, variants=VARIANTS) -> list:
    return [report(v, n) for v in variants]


def to_json(reports) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True)


def render_table(reports) -> str:
    head = ("variant", "n", "qubits", "mults", "adds", "time", "depth_par", "depth_ser")
    rows = [(r.variant, r.n, r.qubits, r.multiplications, r.modular_additions,
             f"{r.time_factor:.4f}", r.depth_parallel, r.depth_serial) for r in reports]
    cols = list(zip(head, *rows))
    widths = [max(len(str(x)) for x in col) for col in cols]
    lines = ["  ".join(str(x).ljust(w) for x, w in zip(head, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(str(x).ljust(w) for x, w in zip(row, widths)) for row in rows]
    return "\n".join(lines)
