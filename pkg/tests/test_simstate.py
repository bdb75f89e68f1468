import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import chisquare

from shorlab.errors import (
    LayoutMismatch,
    MixedRadix,
    NotInjective,
    NotUnitary,
    NotZeroed,
    TooLarge,
    ValueOutOfRange,
)
from shorlab.simstate import (
    Register,
    RegisterLayout,
    SparseState,
    apply_permutation,
    apply_single_dit,
    controlled_phase,
    dft_matrix,
    from_dict,
    load_dump,
    measure,
    new_basis_state,
    overlap,
    prepare_uniform,
    project_uniform,
    qft,
    qubits,
    qudits,
    reset_dit,
)


def dense(state, register="x"):
    """Amplitude vector over one register (other registers must be 0)."""
    out = np.zeros(state.layout[register].size, dtype=complex)
    out[state.values(register)] = state.amps
    return out


def random_state(layout, rng, register="x", support=None):
    size = layout[register].size
    vals = np.arange(size) if support is None else rng.choice(size, support, replace=False)
    amps = rng.normal(size=vals.size) + 1j * rng.normal(size=vals.size)
    amps /= np.linalg.norm(amps)
    keys = np.sort(vals * layout.stride(register))
    return SparseState(layout, keys, amps[np.argsort(vals)])


def test_register_geometry():
    r = Register("x", (3, 2, 5))
    assert r.width == 3 and r.size == 30
    assert [r.dit_stride(i) for i in range(3)] == [1, 3, 6]
    with pytest.raises(MixedRadix):
        r.radix
    assert qudits("t", 3, 4).radix == 3
    with pytest.raises(ValueError):
        Register("bad", ())
    with pytest.raises(ValueError):
        Register("bad", (1,))


def test_layout_encode_decode():
    lay = RegisterLayout([qubits("a", 2), qudits("b", 3, 2)])
    assert lay.total_size == 36
    assert lay.stride("b") == 1 and lay.stride("a") == 9
    key = lay.encode({"a": 3, "b": 5})
    assert key == 3 * 9 + 5
    assert lay.decode(key) == (3, 5)
    assert lay.encode([3, 5]) == key
    with pytest.raises(ValueOutOfRange):
        lay.encode({"b": 9})
    with pytest.raises(KeyError):
        lay.encode({"zz": 1})
    with pytest.raises(ValueError):
        RegisterLayout([qubits("a", 1), qubits("a", 1)])
    with pytest.raises(TooLarge):
        RegisterLayout([qubits("a", 40), qubits("b", 30)])


def test_new_basis_state():
    lay = RegisterLayout([qudits("x", 3, 2)])
    s = new_basis_state(lay, [5])
    assert s.to_dict() == {(5,): 1}
    assert list(s.digit("x", 0)) == [2] and list(s.digit("x", 1)) == [1]
    assert new_basis_state(lay, [0]).norm() == 1
    with pytest.raises(ValueOutOfRange):
        new_basis_state(lay, [9])


def test_apply_permutation_examples():
    lay = RegisterLayout([qubits("x", 3)])
    s = new_basis_state(lay, [5])
    assert apply_permutation(s, lambda v: v, ["x"]).to_dict() == s.to_dict()
    t = apply_permutation(s, lambda v: (v + 1) % 8, ["x"])
    assert t.to_dict() == {(6,): 1}
    u = apply_permutation(new_basis_state(lay, [7]), lambda v: (v + 1) % 8, ["x"])
    assert u.to_dict() == {(0,): 1}
    sup = prepare_uniform(new_basis_state(lay, [0]), "x", 4)
    with pytest.raises(NotInjective):
        apply_permutation(sup, lambda v: v * 0, ["x"])
    with pytest.raises(ValueOutOfRange):
        apply_permutation(s, lambda v: v + 10, ["x"])


def test_apply_permutation_controls_and_two_registers():
    lay = RegisterLayout([qubits("c", 1), qubits("x", 3), qubits("y", 3)])
    s = from_dict(lay, {(0, 1, 2): 0.6, (1, 1, 2): 0.8})
    t = apply_permutation(s, lambda x, y: (y, x), ["x", "y"], controls=[("c", 0, 1)])
    assert t.to_dict() == pytest.approx({(0, 1, 2): 0.6, (1, 2, 1): 0.8})


@given(st.permutations(range(16)), st.integers(0, 2 ** 32 - 1))
def test_permutation_then_inverse_is_identity(perm, seed):
    rng = np.random.default_rng(seed)
    lay = RegisterLayout([qubits("x", 4)])
    s = random_state(lay, rng, support=7)
    fwd = np.array(perm)
    inv = np.argsort(fwd)
    t = apply_permutation(s, lambda v: fwd[v], ["x"])
    assert abs(t.norm() - 1) < 1e-12
    back = apply_permutation(t, lambda v: inv[v], ["x"])
    assert np.array_equal(back.keys, s.keys) and np.array_equal(back.amps, s.amps)


def test_apply_single_dit_examples():
    lay = RegisterLayout([qubits("x", 1)])
    s = new_basis_state(lay, [0])
    assert apply_single_dit(s, "x", 0, np.eye(2)).to_dict() == s.to_dict()
    H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    h = apply_single_dit(s, "x", 0, H)
    assert h.to_dict() == pytest.approx({(0,): 2 ** -0.5, (1,): 2 ** -0.5})
    lay3 = RegisterLayout([qudits("t", 3, 1)])
    w = np.exp(2j * np.pi / 3)
    out = apply_single_dit(new_basis_state(lay3, [1]), "t", 0, dft_matrix(3))
    assert dense(out, "t") == pytest.approx(np.array([1, w, w ** 2]) / np.sqrt(3))
    with pytest.raises(NotUnitary):
        apply_single_dit(s, "x", 0, np.array([[1, 1], [0, 1]]))
    with pytest.raises(NotUnitary):
        apply_single_dit(s, "x", 0, np.eye(3))


def test_controlled_phase_examples():
    lay = RegisterLayout([qubits("a", 1), qubits("b", 1)])
    s = from_dict(lay, {(0, 0): 0.5, (0, 1): 0.5, (1, 0): 0.5, (1, 1): 0.5})
    assert controlled_phase(s, ("a", 0), ("b", 0), 0.0).to_dict() == s.to_dict()
    t = controlled_phase(s, ("a", 0), ("b", 0), 0.25)
    assert t.amplitude([1, 1]) == pytest.approx(0.5j)
    for label in [(0, 0), (0, 1), (1, 0)]:
        assert t.amplitude(label) == pytest.approx(0.5)


@pytest.mark.parametrize("p,w", [(2, 1), (2, 2), (2, 3), (2, 4), (3, 1), (3, 2), (3, 3), (5, 2)])
def test_qft_matches_dense_dft(p, w):
    Q = p ** w
    lay = RegisterLayout([qudits("x", p, w)])
    F = np.exp(2j * np.pi * np.outer(np.arange(Q), np.arange(Q)) / Q) / np.sqrt(Q)
    for b in range(Q):
        col = dense(qft(new_basis_state(lay, [b]), "x", "forward"))
        assert np.max(np.abs(col - F[:, b])) < 1e-10
        icol = dense(qft(new_basis_state(lay, [b]), "x", "inverse"))
        assert np.max(np.abs(icol - F.conj()[:, b])) < 1e-10


def test_qft_of_zero_is_uniform():
    lay = RegisterLayout([qudits("x", 3, 3)])
    out = qft(new_basis_state(lay, [0]), "x")
    assert np.allclose(dense(out), np.full(27, 27 ** -0.5))


@given(st.sampled_from([(2, 3), (2, 5), (3, 2), (3, 3)]), st.integers(0, 2 ** 32 - 1))
def test_qft_roundtrip_on_random_states(pw, seed):
    p, w = pw
    lay = RegisterLayout([qudits("x", p, w)])
    s = random_state(lay, np.random.default_rng(seed))
    back = qft(qft(s, "x", "forward"), "x", "inverse")
    assert np.max(np.abs(dense(back) - dense(s))) < 1e-10
    assert abs(back.norm() - 1) < 1e-10


def test_qft_rejects_mixed_radix():
    lay = RegisterLayout([Register("x", (2, 3))])
    with pytest.raises(MixedRadix):
        qft(new_basis_state(lay, [0]), "x")
    with pytest.raises(ValueError):
        qft(new_basis_state(RegisterLayout([qubits("x", 2)]), [0]), "x", "sideways")


def test_prepare_uniform_examples():
    lay = RegisterLayout([qubits("x", 2)])
    z = new_basis_state(lay, [0])
    assert prepare_uniform(z, "x", 1).to_dict() == z.to_dict()
    assert np.allclose(dense(prepare_uniform(z, "x", 4)), 0.5)
    three = dense(prepare_uniform(z, "x", 3))
    assert np.allclose(three, [3 ** -0.5] * 3 + [0])
    with pytest.raises(NotZeroed):
        prepare_uniform(new_basis_state(lay, [1]), "x", 2)
    with pytest.raises(TooLarge):
        prepare_uniform(z, "x", 5)


def test_project_uniform_inverts_prepare():
    lay = RegisterLayout([qubits("x", 3), qubits("y", 2)])
    s = from_dict(lay, {(0, 1): 0.6, (0, 2): 0.8})
    up = prepare_uniform(s, "x", 5)
    back, residual = project_uniform(up, "x", 5)
    assert residual < 1e-12
    assert back.to_dict() == pytest.approx(s.to_dict())


def test_measure_basis_state_is_deterministic(rng):
    lay = RegisterLayout([qudits("x", 3, 2)])
    rec, post = measure(new_basis_state(lay, [7]), "x", 1, rng)
    assert rec.outcome == 2 and rec.probabilities[2] == pytest.approx(1)
    assert post.norm() == pytest.approx(1)


def test_measure_statistics_follow_born_rule(rng):
    lay = RegisterLayout([qubits("x", 1)])
    plus = from_dict(lay, {(0,): 1, (1,): 1}, normalize=True)
    counts = np.zeros(2)
    for _ in range(10_000):
        rec, post = measure(plus, "x", 0, rng)
        counts[rec.outcome] += 1
        assert abs(post.norm() - 1) < 1e-10
    assert abs(counts[0] - 5000) < 3 * 50


def test_measure_chi_square(rng):
    lay = RegisterLayout([qudits("x", 3, 1), qubits("y", 1)])
    s = from_dict(lay, {(0, 0): 0.2, (1, 1): 0.5, (2, 0): 0.3, (2, 1): 0.4}, normalize=True)
    counts = np.zeros(3)
    probs = None
    for _ in range(10_000):
        rec, _ = measure(s, "x", 0, rng)
        counts[rec.outcome] += 1
        probs = rec.probabilities
    assert sum(probs) == pytest.approx(1, abs=1e-10)
    assert chisquare(counts, np.array(probs) * 10_000).pvalue > 0.001


def test_reset_dit():
    lay = RegisterLayout([qudits("x", 3, 2)])
    s = reset_dit(new_basis_state(lay, [7]), "x", 1)
    assert s.to_dict() == {(1,): 1}


def test_overlap_examples():
    lay = RegisterLayout([qubits("x", 5)])
    s = prepare_uniform(new_basis_state(lay, [0]), "x", 8)
    assert overlap(s, s) == pytest.approx(1, abs=1e-10)
    assert overlap(new_basis_state(lay, [1]), new_basis_state(lay, [2])) == 0
    # window shifted by one rung of N = 3 on x_max = 8 terms
    N, X = 3, 8
    keys = np.arange(X) * N + 1
    a = SparseState(lay, keys, np.full(X, X ** -0.5))
    b = SparseState(lay, keys + N, np.full(X, X ** -0.5))
    assert overlap(a, b) == pytest.approx((X - 1) / X)
    with pytest.raises(LayoutMismatch):
        overlap(a, new_basis_state(RegisterLayout([qubits("x", 4)]), [0]))


def test_norm_preserved_over_many_gates(rng):
    lay = RegisterLayout([qudits("x", 3, 2), qubits("y", 2)])
    s = new_basis_state(lay, [0, 0])
    H3 = dft_matrix(3)
    for k in range(2000):
        s = apply_single_dit(s, "x", k % 2, H3)
        s = controlled_phase(s, ("x", 0), ("y", 0), 0.1 * (k % 7))
        s = apply_permutation(s, lambda v: (v + 1) % 4, ["y"], controls=[("x", 1, 2)])
    assert abs(s.norm() - 1) < 1e-10


def test_dump_roundtrip():
    lay = RegisterLayout([qubits("a", 2), qudits("b", 3, 1)])
    s = from_dict(lay, {(3, 2): 0.6j, (0, 1): -0.8})
    text = s.dump()
    assert text.splitlines()[0].startswith("0,1: -0.8")
    back = load_dump(lay, text)
    assert np.array_equal(back.keys, s.keys) and np.allclose(back.amps, s.amps)
