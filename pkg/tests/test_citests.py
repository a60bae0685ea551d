import itertools

import numpy as np
import pytest

from pagaudit.citests import (
    CiOracle,
    chi_square_test,
    fisher_z_test,
    oracle_test,
)
from pagaudit.data import Column, Dataset
from pagaudit.errors import DegenerateInputError, InputError
from pagaudit.simgen import sample_dataset, truth_dag


def dataset_from_table(table):
    """Two categorical columns whose cross-tab equals ``table``."""
    xs, ys = [], []
    for i, row in enumerate(table):
        for j, count in enumerate(row):
            xs.extend([i] * count)
            ys.extend([j] * count)
    return Dataset(
        [
            Column("x", "cat", np.array(xs), len(table)),
            Column("y", "cat", np.array(ys), len(table[0])),
        ]
    )


def test_chi2_uniform_table_is_independent():
    d = dataset_from_table([[25, 25], [25, 25]])
    r = chi_square_test(d, "x", "y", (), 0.05)
    assert r.statistic == pytest.approx(0.0, abs=1e-12)
    assert r.dof == 1
    assert r.p_value == pytest.approx(1.0)
    assert r.independent


def test_chi2_diagonal_table_value():
    # all expected counts are 20, so the statistic is 4 * (10^2 / 20) = 20
    d = dataset_from_table([[30, 10], [10, 30]])
    r = chi_square_test(d, "x", "y", (), 0.05)
    assert r.statistic == pytest.approx(20.0, rel=1e-12)
    assert r.dof == 1
    assert not r.independent


def test_chi2_symmetry_in_arguments():
    rng = np.random.default_rng(0)
    d = Dataset(
        [
            Column("x", "cat", rng.integers(0, 3, 400), 3),
            Column("y", "cat", rng.integers(0, 2, 400), 2),
            Column("s", "cat", rng.integers(0, 2, 400), 2),
        ]
    )
    a = chi_square_test(d, "x", "y", ("s",), 0.05)
    b = chi_square_test(d, "y", "x", ("s",), 0.05)
    assert a.statistic == pytest.approx(b.statistic, rel=1e-12)
    assert a.dof == b.dof
    assert a.p_value == pytest.approx(b.p_value, rel=1e-12)


def test_chi2_degenerate_strata_contribute_nothing():
    # stratum s=1 has a single observed y level: zero dof from that cell block
    d = Dataset(
        [
            Column("x", "cat", np.array([0, 0, 1, 1, 0, 1]), 2),
            Column("y", "cat", np.array([0, 1, 0, 1, 0, 0]), 2),
            Column("s", "cat", np.array([0, 0, 0, 0, 1, 1]), 2),
        ]
    )
    r = chi_square_test(d, "x", "y", ("s",), 0.05)
    assert r.dof == 1  # only stratum 0 is informative


def test_chi2_all_degenerate_reports_independent_with_zero_dof():
    d = Dataset(
        [
            Column("x", "cat", np.array([0, 1, 0, 1]), 2),
            Column("y", "cat", np.array([0, 0, 0, 0]), 2),  # constant
        ]
    )
    r = chi_square_test(d, "x", "y", (), 0.05)
    assert (r.statistic, r.dof, r.p_value, r.independent) == (0.0, 0, 1.0, True)


def test_chi2_unused_level_dropped_from_dof():
    # y has arity 3 but level 2 never occurs: effective table is 2x2
    d = Dataset(
        [
            Column("x", "cat", np.array([0, 0, 1, 1] * 10), 2),
            Column("y", "cat", np.array([0, 1, 0, 1] * 10), 3),
        ]
    )
    assert chi_square_test(d, "x", "y", (), 0.05).dof == 1


def test_chi2_gsquared_variant_close_to_pearson_under_null():
    rng = np.random.default_rng(1)
    d = Dataset(
        [
            Column("x", "cat", rng.integers(0, 2, 2000), 2),
            Column("y", "cat", rng.integers(0, 2, 2000), 2),
        ]
    )
    p = chi_square_test(d, "x", "y", (), 0.05, variant="pearson")
    g = chi_square_test(d, "x", "y", (), 0.05, variant="gsquared")
    assert g.dof == p.dof
    assert g.statistic == pytest.approx(p.statistic, abs=1.0)


def test_chi2_input_errors():
    d = dataset_from_table([[5, 5], [5, 5]])
    with pytest.raises(InputError):
        chi_square_test(d, "x", "x", (), 0.05)
    with pytest.raises(InputError):
        chi_square_test(d, "x", "y", ("x",), 0.05)
    cont = Dataset(
        [
            Column("x", "cat", np.array([0, 1]), 2),
            Column("y", "cont", np.array([0.5, 1.5])),
        ]
    )
    with pytest.raises(InputError):
        chi_square_test(cont, "x", "y", (), 0.05)


def test_chi2_separates_generated_pair_given_blocker():
    # population independence given the blocking variable holds for most seeds
    hits = 0
    for seed in range(20):
        d = sample_dataset(5000, seed, include_c=True)
        r = chi_square_test(d, "H", "Y", ("V",), 0.05)
        hits += r.independent
    assert hits >= 16


def test_chi2_calibration_quick():
    rng = np.random.default_rng(7)
    rejects = 0
    trials = 400
    for _ in range(trials):
        d = Dataset(
            [
                Column("x", "cat", rng.integers(0, 2, 500), 2),
                Column("y", "cat", rng.integers(0, 2, 500), 2),
            ]
        )
        rejects += not chi_square_test(d, "x", "y", (), 0.05).independent
    rate = rejects / trials
    assert 0.02 <= rate <= 0.09  # 3-sigma-ish band for 400 trials


# -- fisher-z ------------------------------------------------------------------


def _cont(name, values):
    return Column(name, "cont", np.asarray(values, dtype=float))


def test_fisherz_near_copy_is_dependent():
    rng = np.random.default_rng(2)
    x = rng.normal(size=500)
    d = Dataset([_cont("x", x), _cont("y", x + 1e-6 * rng.normal(size=500))])
    r = fisher_z_test(d, "x", "y", (), 0.05)
    assert not r.independent
    assert r.p_value < 1e-10


def test_fisherz_chain_blocked_by_middle():
    hits = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=2000)
        z = 0.9 * x + rng.normal(size=2000)
        y = 0.9 * z + rng.normal(size=2000)
        d = Dataset([_cont("x", x), _cont("y", y), _cont("z", z)])
        assert not fisher_z_test(d, "x", "y", (), 0.05).independent
        hits += fisher_z_test(d, "x", "y", ("z",), 0.05).independent
    assert hits >= 16


def test_fisherz_calibration_quick():
    rng = np.random.default_rng(3)
    rejects = 0
    trials = 400
    for _ in range(trials):
        d = Dataset(
            [_cont("x", rng.normal(size=300)), _cont("y", rng.normal(size=300))]
        )
        rejects += not fisher_z_test(d, "x", "y", (), 0.05).independent
    assert 0.02 <= rejects / trials <= 0.09


def test_fisherz_errors():
    rng = np.random.default_rng(4)
    small = Dataset([_cont("x", [1.0, 2.0, 3.0]), _cont("y", [2.0, 1.0, 0.5])])
    with pytest.raises(InputError):
        fisher_z_test(small, "x", "y", (), 0.05)  # n <= |s| + 3
    const = Dataset(
        [_cont("x", np.ones(50)), _cont("y", rng.normal(size=50))]
    )
    with pytest.raises(DegenerateInputError):
        fisher_z_test(const, "x", "y", (), 0.05)
    x = rng.normal(size=50)
    dup = Dataset([_cont("x", x), _cont("y", rng.normal(size=50)), _cont("z", x)])
    with pytest.raises(DegenerateInputError):
        fisher_z_test(dup, "x", "y", ("z",), 0.05)  # x and z perfectly collinear
    cat = Dataset(
        [
            Column("x", "cat", np.zeros(50, dtype=int), 2),
            _cont("y", rng.normal(size=50)),
        ]
    )
    with pytest.raises(InputError):
        fisher_z_test(cat, "x", "y", (), 0.05)


def test_fisherz_statistic_nonnegative_and_dof_recorded():
    rng = np.random.default_rng(5)
    d = Dataset(
        [
            _cont("x", rng.normal(size=100)),
            _cont("y", rng.normal(size=100)),
            _cont("z", rng.normal(size=100)),
        ]
    )
    r = fisher_z_test(d, "x", "y", ("z",), 0.05)
    assert r.statistic >= 0
    assert r.dof == 100 - 1 - 3


# -- oracle ---------------------------------------------------------------------


def test_oracle_on_generating_dag():
    o = CiOracle(truth_dag(), ("H", "V", "R", "Y"))
    assert oracle_test(o, "V", "R", ("H",)) is True
    for s in [(), ("H",), ("V",), ("H", "V")]:
        assert oracle_test(o, "R", "Y", s) is False
    assert oracle_test(o, "H", "V", ()) is False


def test_oracle_rejects_latent_queries():
    o = CiOracle(truth_dag(), ("H", "V", "R", "Y"))
    with pytest.raises(InputError):
        oracle_test(o, "H", "C", ())
    with pytest.raises(InputError):
        oracle_test(o, "H", "Y", ("U1",))


def test_oracle_requires_dag():
    from pagaudit.graph import GraphKind, MixedGraph

    g = MixedGraph(["A", "B"], GraphKind.PAG)
    g.add_circle_edge("A", "B")
    with pytest.raises(InputError):
        CiOracle(g, ("A", "B"))


def test_oracle_agrees_with_exact_joint_independence():
    import helpers

    rng = np.random.default_rng(12)
    for _ in range(10):
        g = helpers.random_dag(rng, 4)
        cpts = helpers.random_binary_cpts(g, rng)
        joint = helpers.joint_distribution(g, cpts)
        o = CiOracle(g, tuple(g.names))
        names = list(g.names)
        for xi, yi in itertools.combinations(range(4), 2):
            rest = [v for v in range(4) if v not in (xi, yi)]
            for k in range(len(rest) + 1):
                for zz in itertools.combinations(rest, k):
                    if oracle_test(o, names[xi], names[yi], [names[v] for v in zz]):
                        assert helpers.exactly_independent(joint, 4, xi, yi, zz)


def test_results_deterministic():
    d = sample_dataset(1000, 9, include_c=True)
    a = chi_square_test(d, "H", "R", ("C",), 0.05)
    b = chi_square_test(d, "H", "R", ("C",), 0.05)
    assert a == b
