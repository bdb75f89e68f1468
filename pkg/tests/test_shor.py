import json
import math

import numpy as np
import pytest
from scipy.stats import binomtest, chi2_contingency

from shorlab import resources
from shorlab.arith import CosetParams
from shorlab.errors import UnknownVariant
from shorlab.modnum import ModCtx
from shorlab.shor import (
    OrderFindConfig,
    coprime_penalty,
    empirical_distribution,
    fidelity_experiment,
    monolithic_distribution,
    retained_fraction,
    run_trials,
    semiclassical_sample,
    short_factor_footprint,
    start_value_periods,
    success_probability,
    total_variation,
    trinary_digit_count,
    variant_comparison,
)


def fft_reference(f_values, Q):
    """|inverse DFT of the indicator of each function value|^2, summed."""
    probs = np.zeros(Q)
    for v in np.unique(f_values):
        ind = (f_values == v).astype(float) / math.sqrt(Q)
        amp = np.fft.fft(ind) / math.sqrt(Q)  # e^(-2 pi i x y / Q)
        probs += np.abs(amp) ** 2
    return probs


def test_config_build():
    c = OrderFindConfig.build(15, 7)
    assert (c.radix, c.digit_count, c.Q) == (2, 8, 256)
    t = OrderFindConfig.build(21, 2, "trinary_uninit")
    assert t.radix == 3 and t.digit_count == 2 * 4 and 3 ** 4 >= 2 ** 5
    assert OrderFindConfig.build(15, 7, "coset").coset.x_max == 16
    assert OrderFindConfig.build(15, 7, "coset", x_max=8).coset.x_max == 8
    with pytest.raises(UnknownVariant):
        OrderFindConfig.build(15, 7, "quantum_magic")
    with pytest.raises(ValueError):
        OrderFindConfig(ModCtx(15, 7), "standard", 2, 6)


def test_trinary_digit_count_matches_resources():
    for n in range(2, 40):
        assert trinary_digit_count(n) == 2 * resources.trinary_digits(n)
        k = trinary_digit_count(n) // 2
        assert k == math.ceil(n / math.log2(3))


def test_order_one_base_measures_zero(rng):
    r = semiclassical_sample(OrderFindConfig.build(15, 1), rng)
    assert r.digits == [0] * 8 and r.y == 0


def test_standard_outcomes_are_multiples_of_quarter():
    res = run_trials(OrderFindConfig.build(15, 7, seed=4), 100)
    assert all(t["y"] % 64 == 0 for t in res.trials)
    assert all(len(t["digits"]) == 8 for t in res.trials)


@pytest.mark.parametrize("variant", ["standard", "short_factor", "coset"])
def test_monolithic_reference_matches_fft(variant):
    cfg = OrderFindConfig.build(21, 2, variant)
    f = np.array([pow(2, x, 21) for x in range(cfg.Q)])
    assert np.allclose(monolithic_distribution(cfg), fft_reference(f, cfg.Q), atol=1e-12)


def test_trinary_shift_leaves_distribution_unchanged():
    cfg = OrderFindConfig.build(15, 7, "trinary_uninit")
    alpha, beta = 4, 11
    f = np.array([pow(7, x, 15) * alpha % 15 * 15 + pow(13, x, 15) * beta % 15
                  for x in range(cfg.Q)])
    assert np.allclose(monolithic_distribution(cfg, alpha, beta), fft_reference(f, cfg.Q),
                       atol=1e-12)


def test_semiclassical_matches_monolithic_small_run():
    cfg = OrderFindConfig.build(15, 7, seed=11)
    res = run_trials(cfg, 2000)
    tv = total_variation(monolithic_distribution(cfg), empirical_distribution(res, cfg.Q))
    assert tv < 0.05


def test_uninit_with_unit_start_has_standard_distribution():
    std = OrderFindConfig.build(21, 2)
    uni = OrderFindConfig.build(21, 2, "uninit")
    ref = monolithic_distribution(std)
    for alpha, beta in [(1, 1), (5, 17), (20, 0)]:
        assert np.allclose(monolithic_distribution(uni, alpha, beta), ref, atol=1e-12)
    # sampled: uninit trials with coprime alpha against standard trials
    s = run_trials(OrderFindConfig.build(15, 7, seed=1), 600)
    u = run_trials(OrderFindConfig.build(15, 7, "uninit", seed=2), 600)
    ys_u = [t["y"] for t in u.trials if math.gcd(t["alpha"], 15) == 1]
    table = np.array([[sum(t["y"] == y for t in s.trials) for y in (0, 64, 128, 192)],
                      [ys_u.count(y) for y in (0, 64, 128, 192)]])
    assert chi2_contingency(table).pvalue > 0.001


def test_run_trials_determinism_and_parallelism():
    cfg = OrderFindConfig.build(15, 7, "uninit", seed=99)
    a = run_trials(cfg, 12)
    b = run_trials(cfg, 12)
    c = run_trials(cfg, 12, jobs=2)
    assert a.to_json() == b.to_json() == c.to_json()
    assert [t["index"] for t in a.trials] == list(range(12))
    one = run_trials(cfg, 1)
    assert len(one.trials) == 1
    with pytest.raises(ValueError):
        run_trials(cfg, 0)
    other = run_trials(OrderFindConfig.build(15, 7, "uninit", seed=100), 12)
    assert other.to_json() != a.to_json()


@pytest.mark.parametrize("variant", ["standard", "uninit", "trinary_uninit", "short_factor"])
def test_trial_invariants(variant):
    cfg = OrderFindConfig.build(21, 2, variant, seed=5)
    res = run_trials(cfg, 40)
    assert res.success_rate == res.successes / 40
    assert res.ci_low <= res.success_rate <= res.ci_high
    for t in res.trials:
        assert 0 <= t["y"] < cfg.Q
        assert t["y"] == sum(d * cfg.radix ** i for i, d in enumerate(reversed(t["digits"])))
        if t["candidate"] is not None:
            assert pow(2, t["candidate"], 21) == 1
        assert t["success"] == (t["candidate"] == 6)
        if variant in ("uninit", "trinary_uninit"):
            assert 0 <= t["alpha"] < 21 and 0 <= t["beta"] < 21
    json.loads(res.to_json())


def test_success_rate_agrees_with_reference():
    cfg = OrderFindConfig.build(15, 7, seed=21)
    res = run_trials(cfg, 200)
    p_ref = success_probability(cfg, monolithic_distribution(cfg))
    assert p_ref == pytest.approx(0.5)
    assert binomtest(res.successes, 200, p_ref).pvalue > 0.001


def test_coset_variant_runs_without_wraps():
    res = run_trials(OrderFindConfig.build(15, 7, "coset", x_max=8, seed=2), 5)
    assert all(t["wraps"] == 0 for t in res.trials)


def test_start_value_periods_and_retained_fraction():
    periods = start_value_periods(7, 15)
    assert periods[0] == 1 and periods[1] == 4
    assert all(pow(7, int(d), 15) * al % 15 == al for al, d in enumerate(periods))
    # brute force over pairs
    hits = 0
    for al in range(15):
        for be in range(15):
            seq = [(pow(7, x, 15) * al % 15, pow(13, x, 15) * be % 15) for x in range(8)]
            period = next(d for d in range(1, 9) if seq[d % 8] == seq[0] and seq[d:] == seq[:8 - d])
            hits += period == 4
    assert retained_fraction(7, 15) == pytest.approx(hits / 225)
    assert coprime_penalty(15) == pytest.approx(7 / 15)


def test_uninit_mixture_success_is_standard_times_retained():
    from shorlab.shor import uninit_mixture_distribution
    std = OrderFindConfig.build(15, 7)
    uni = OrderFindConfig.build(15, 7, "uninit")
    p_std = success_probability(std, monolithic_distribution(std))
    p_uni = success_probability(uni, uninit_mixture_distribution(uni))
    assert p_uni == pytest.approx(p_std * retained_fraction(7, 15), abs=1e-9)


def test_variant_comparison_self_and_flags():
    rows = variant_comparison([ModCtx(15, 7)], ["standard", "uninit"], trials=60, seed=3)
    std = rows[0]
    assert std["variant"] == "standard" and std["z"] == 0 and not std["flagged"]
    assert std["expected_rate"] == std["success_rate"]
    uni = rows[1]
    assert uni["retained_fraction"] == pytest.approx(0.96)
    assert uni["coprime_penalty"] == pytest.approx(7 / 15)


def test_fidelity_trace_without_rung_shifts(rng):
    ctx = ModCtx(21, 2)
    trace = fidelity_experiment(ctx, CosetParams(50), 5, rng, constants=[1, 2, 3, 4, 5], start=0)
    assert [round(p, 12) for _, p, _ in trace.steps] == [1.0] * 5
    assert trace.cumulative == pytest.approx(1.0)


def test_fidelity_per_step_loss_bounded(rng):
    ctx = ModCtx(21, 2)
    X = 40
    trace = fidelity_experiment(ctx, CosetParams(X), 30, rng)
    shifts = 0
    for step, per, cum in trace.steps:
        assert per >= 1 - 1 / X - 1e-10
        assert per == pytest.approx(1) or per == pytest.approx(1 - 1 / X)
        shifts += per < 1 - 1e-12
        assert cum == pytest.approx((X - shifts) / X, abs=1e-10)
    assert trace.shifts == shifts and trace.wraps == 0
    lines = trace.to_csv().splitlines()
    assert lines[0] == "step,per_step_fidelity,cumulative_fidelity" and len(lines) == 31


def test_fidelity_single_rung_is_all_or_nothing(rng):
    trace = fidelity_experiment(ModCtx(15, 2), CosetParams(1), 20, rng)
    assert all(p in (pytest.approx(0), pytest.approx(1)) for _, p, _ in trace.steps)


def test_fidelity_deterministic():
    a = fidelity_experiment(ModCtx(21, 2), CosetParams(100), 10, np.random.default_rng(7))
    b = fidelity_experiment(ModCtx(21, 2), CosetParams(100), 10, np.random.default_rng(7))
    assert a.to_csv() == b.to_csv()
    with pytest.raises(ValueError):
        fidelity_experiment(ModCtx(21, 2), CosetParams(100), 0, np.random.default_rng(7))


def test_short_factor_footprint_within_model():
    for N, a in [(15, 7), (21, 2), (33, 5), (55, 2)]:
        ctx = ModCtx(N, a)
        peak = short_factor_footprint(ctx, resources.qubit_count("short_factor", ctx.n) - 1)
        assert peak <= resources.qubit_count("short_factor", ctx.n) - 1
