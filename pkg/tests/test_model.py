import numpy as np
import numpy.testing as nptest
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stratbal.model import FrameError, PopulationFrame, balance_residual, build_system, load_population, write_population


def frame_of(strata, pi, aux=None, interest=None):
    n = len(pi)
    return PopulationFrame(
        unit_ids=[str(k) for k in range(n)],
        strata=list(strata),
        pi=np.asarray(pi, dtype=float),
        aux=np.zeros((n, 0)) if aux is None else aux,
        interest=np.zeros((n, 0)) if interest is None else interest,
    )


def write_csv(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_load_example_strata(tmp_path):
    h = [1, 1, 2, 2, 3, 3, 3, 4, 4]
    lines = ["id,stratum,pi,x1,x2,y1"] + [f"u{k},{s},0.5,{k},{k * k},{2 * k}" for k, s in enumerate(h)]
    frame = load_population(write_csv(tmp_path / "p.csv", "\n".join(lines) + "\n"))
    assert frame.N == 9 and frame.H == 4 and frame.q == 2 and frame.p == 1
    nptest.assert_array_equal(frame.strata_index, [0, 0, 1, 1, 2, 2, 2, 3, 3])
    assert frame.unit_ids[0] == "u0"


def test_load_single_unit(tmp_path):
    frame = load_population(write_csv(tmp_path / "p.csv", "stratum,pi\nA,0.5\n"))
    assert frame.N == 1 and frame.H == 1 and frame.q == 0


def test_load_pi_out_of_bounds_names_row(tmp_path):
    path = write_csv(tmp_path / "p.csv", "stratum,pi\nA,0.5\nA,1.2\n")
    with pytest.raises(FrameError, match="row 2"):
        load_population(path)


def test_load_non_numeric_names_row(tmp_path):
    path = write_csv(tmp_path / "p.csv", "stratum,pi,x1\nA,0.5,1\nA,0.5,abc\nB,0.5,2\n")
    with pytest.raises(FrameError, match="row 2.*x1"):
        load_population(path)


def test_load_missing_column(tmp_path):
    with pytest.raises(FrameError, match="pi"):
        load_population(write_csv(tmp_path / "p.csv", "stratum,x1\nA,1\n"))


def test_load_empty_file(tmp_path):
    with pytest.raises(FrameError, match="empty"):
        load_population(write_csv(tmp_path / "p.csv", ""))


def test_load_custom_schema(tmp_path):
    path = write_csv(tmp_path / "p.csv", "h,prob,emp\nA,0.5,3\nB,0.25,4\n")
    frame = load_population(path, {"stratum": "h", "pi": "prob", "aux": ["emp"]})
    nptest.assert_allclose(frame.aux[:, 0], [3, 4])
    assert frame.stratum_labels == ["A", "B"]


def test_write_load_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    frame = frame_of(["b", "a", "b"], [0.1, 1 / 3, 0.7], rng.random((3, 2)), rng.random((3, 1)))
    write_population(frame, tmp_path / "p.csv")
    back = load_population(tmp_path / "p.csv")
    nptest.assert_array_equal(back.pi, frame.pi)
    nptest.assert_array_equal(back.aux, frame.aux)
    assert back.stratum_labels == ["b", "a"]


def test_all_certainty_units():
    system = build_system(frame_of([1, 1, 2], [1, 1, 1]))
    assert system.active.size == 0
    nptest.assert_array_equal(system.pi_t, [1, 1, 1])


def test_fixed_size_column():
    pi = np.full(4, 0.5)
    system = build_system(frame_of([1] * 4, pi, aux=pi[:, None]))
    nptest.assert_array_equal(system.A[:, 0], np.ones(4))


def test_disjunctive_matrix():
    system = build_system(frame_of([1, 1, 2], [0.5, 0.5, 0.5]))
    nptest.assert_array_equal(system.Hd, [[1, 0], [1, 0], [0, 1]])


def test_active_excludes_resolved_units():
    system = build_system(frame_of(["a", "b", "a", "b"], [0, 0.5, 1, 0.2]))
    nptest.assert_array_equal(system.active, [1, 3])
    nptest.assert_array_equal(system.A, np.zeros((4, 0)))


def test_residual_zero_for_integer_pi():
    pi = np.array([1.0, 0, 1, 0])
    system = build_system(frame_of([1, 1, 2, 2], pi, aux=np.arange(4.0)[:, None]))
    nptest.assert_array_equal(balance_residual(system, pi), np.zeros(3))


def test_residual_fixed_size_single_draw():
    pi = np.array([0.5, 0.5])
    system = build_system(frame_of([1, 1], pi, aux=pi[:, None]))
    nptest.assert_allclose(balance_residual(system, [1, 0]), [0, 0])


def test_residual_all_selected():
    strata = [1, 1, 1, 2, 2]
    system = build_system(frame_of(strata, np.full(5, 0.5)))
    nptest.assert_allclose(balance_residual(system, np.ones(5)), [3 - 1.5, 2 - 1])


def test_invalid_frames():
    with pytest.raises(FrameError):
        frame_of([1, 2], [0.5])
    with pytest.raises(FrameError):
        frame_of([1], [-0.1])
    with pytest.raises(FrameError):
        frame_of([], [])


labels = st.lists(st.sampled_from("abcdef"), min_size=1, max_size=25)


@settings(max_examples=60, deadline=None)
@given(labels, st.randoms(use_true_random=False))
def test_relabel_commutes_with_build(strata, rnd):
    names = sorted(set(strata))
    perm = dict(zip(names, rnd.sample(names, len(names))))
    pi = np.linspace(0.1, 0.9, len(strata))
    s1 = build_system(frame_of(strata, pi))
    s2 = build_system(frame_of([perm[s] for s in strata], pi))
    # same first-appearance re-index, hence identical matrices
    nptest.assert_array_equal(s1.Hd, s2.Hd)
    nptest.assert_array_equal(s1.active, s2.active)


@settings(max_examples=60, deadline=None)
@given(labels)
def test_disjunctive_sums(strata):
    frame = frame_of(strata, np.full(len(strata), 0.5))
    Hd = build_system(frame).Hd
    nptest.assert_array_equal(Hd.sum(axis=1), 1)
    sizes = [strata.count(lab) for lab in frame.stratum_labels]
    nptest.assert_array_equal(Hd.sum(axis=0), sizes)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_residual_is_affine_in_a(n, seed):
    rng = np.random.default_rng(seed)
    frame = frame_of(rng.integers(0, 3, n), rng.uniform(0.05, 1, n), rng.random((n, 2)))
    system = build_system(frame)
    a, b = rng.integers(0, 2, n), rng.integers(0, 2, n)
    lhs = balance_residual(system, a + b) + balance_residual(system, np.zeros(n))
    rhs = balance_residual(system, a) + balance_residual(system, b)
    nptest.assert_allclose(lhs, rhs, atol=1e-9)
    nptest.assert_allclose(balance_residual(system, system.pi), 0, atol=1e-9)
