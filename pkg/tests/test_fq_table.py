"""Tests for the F_q quadrature engine and its table format."""

import math

import numpy as np
import pytest

from mnngp.errors import DomainError, FormatError, UsageError
from mnngp.fq_table import (
    FORMAT_VERSION,
    FqTable,
    QuadratureGrid,
    build_table,
    closed_form_f2,
    fq_at_minus_one,
    fq_at_plus_one,
    fq_interior,
    interpolate,
    load_table,
    mc_oracle_fq,
    term_diff_argmax,
    term_same_argmax,
    _term_masses,
)

# E[(max of q standard normals)^2] from adaptive quadrature of
# q * x^2 phi(x) Phi(x)^(q-1); q = 3, 4 also equal 1 + sqrt(3)/(2 pi)
# and 1 + sqrt(3)/pi.
MAX_SQ = {1: 1.0, 2: 1.0, 3: 1.2756644477108985, 4: 1.5513288954217984}


@pytest.fixture(scope="module")
def fast_grid():
    return QuadratureGrid(8.0, 501)


@pytest.fixture(scope="module")
def table_q2(fast_grid):
    return build_table(2, 201, fast_grid)


@pytest.fixture(scope="module")
def table_q3(fast_grid):
    return build_table(3, 41, fast_grid)


def test_grid_validation():
    with pytest.raises(UsageError):
        QuadratureGrid(8.0, 2)
    with pytest.raises(UsageError):
        QuadratureGrid(0.0, 501)
    with pytest.raises(UsageError):
        QuadratureGrid(-3.0, 501)
    with pytest.raises(UsageError):
        QuadratureGrid(math.inf, 501)


def test_grid_nodes_antisymmetric(fast_grid):
    g = fast_grid.nodes
    assert g.size == 501
    assert g[0] == -8.0 and g[-1] == 8.0
    assert np.all(g + g[::-1] == 0.0)
    np.testing.assert_allclose(np.diff(g), fast_grid.spacing, atol=1e-12, rtol=0.0)


def test_q1_reduces_to_identity(fast_grid):
    assert fq_interior(1, 0.37, fast_grid) == 0.37
    assert fq_at_plus_one(1, fast_grid) == pytest.approx(1.0, abs=1e-12)
    assert fq_at_minus_one(1, fast_grid) == -1.0


def test_closed_form_f2_reference_points():
    assert closed_form_f2(1.0) == pytest.approx(1.0, abs=1e-15)
    assert closed_form_f2(-1.0) == pytest.approx(0.0, abs=1e-15)
    assert closed_form_f2(0.0) == pytest.approx(1.0 / math.pi, abs=1e-15)
    # (sin(pi/3) + (2 pi/3) * 0.5) / pi
    assert closed_form_f2(0.5) == pytest.approx(0.6089977810442295, abs=1e-14)
    arr = closed_form_f2(np.array([-1.0, 0.0, 1.0]))
    np.testing.assert_allclose(arr, [0.0, 1.0 / math.pi, 1.0], atol=1e-15)
    with pytest.raises(DomainError):
        closed_form_f2(1.5)


def test_q2_interior_matches_closed_form(fast_grid, table_q2):
    err = np.abs(table_q2.values - closed_form_f2(table_q2.rhos))
    assert err.max() <= 1e-3
    assert abs(fq_interior(2, 0.0, fast_grid) - 1.0 / math.pi) <= 1e-4
    assert abs(fq_interior(2, -0.7, fast_grid) - closed_form_f2(-0.7)) <= 1e-4


def test_plus_one_endpoint_matches_max_moments(fast_grid):
    for q in (1, 2, 3, 4):
        assert fq_at_plus_one(q, fast_grid) == pytest.approx(MAX_SQ[q], abs=1e-9)


def test_minus_one_endpoint(fast_grid):
    # For q = 2 the half-weighted diagonal makes the estimate vanish
    # identically, matching F_2(-1) = 0.
    assert abs(fq_at_minus_one(2, fast_grid)) <= 1e-12
    mc, se = mc_oracle_fq(3, -1.0, 10**6, 7)
    assert abs(fq_at_minus_one(3, fast_grid) - mc) <= 4.0 * se


def test_interior_matches_mc_for_higher_q(fast_grid):
    for q, rho in ((3, 0.5), (4, -0.5)):
        mc, se = mc_oracle_fq(q, rho, 2 * 10**6, 123)
        assert abs(fq_interior(q, rho, fast_grid) - mc) <= 3.5 * se


def test_mirrored_nodes_match_direct_evaluation(fast_grid, table_q2, table_q3):
    # Negative-rho table entries come from reflecting the positive-rho
    # buffers; evaluating those nodes directly must agree.
    for table, q, tol in ((table_q2, 2, 1e-12), (table_q3, 3, 1e-5)):
        neg = (table.rhos > -1.0) & (table.rhos < 0.0)
        direct = np.array([fq_interior(q, r, fast_grid) for r in table.rhos[neg]])
        assert np.abs(table.values[neg] - direct).max() <= tol


def test_term_masses_sum_to_one(fast_grid):
    for q in (2, 3):
        mass_s, mass_d = _term_masses(q, 0.3, fast_grid)
        assert 0.0 < mass_s < 0.5
        assert 0.0 < mass_d < 0.5
        assert abs(q * mass_s + q * (q - 1) * mass_d - 1.0) <= 1e-4


def test_term_operations_validate_input(fast_grid):
    with pytest.raises(UsageError):
        term_same_argmax(1, 0.5, fast_grid)
    with pytest.raises(DomainError):
        term_diff_argmax(2, 1.0, fast_grid)
    with pytest.raises(UsageError):
        fq_interior(2, 0.5, fast_grid, scheme="bogus")
    with pytest.raises(DomainError):
        fq_interior(2, 1.5, fast_grid)
    for bad_q in (0, -1, 2.5, True):
        with pytest.raises(UsageError):
            fq_interior(bad_q, 0.5, fast_grid)


def test_near_endpoint_snap(fast_grid):
    hi = np.nextafter(1.0, 0.0)
    assert fq_interior(2, hi, fast_grid) == fq_at_plus_one(2, fast_grid)
    assert fq_interior(2, -hi, fast_grid) == fq_at_minus_one(2, fast_grid)


def test_table_invariants(table_q2):
    assert table_q2.n_rho == 201
    assert table_q2.rhos[0] == -1.0 and table_q2.rhos[-1] == 1.0
    assert np.all(np.diff(table_q2.rhos) > 0.0)
    assert np.all(table_q2.rhos + table_q2.rhos[::-1] == 0.0)
    assert np.all(np.isfinite(table_q2.values))
    assert table_q2.values[-1] > 0.0
    assert np.abs(table_q2.values).max() <= table_q2.values[-1] + 1e-6
    assert table_q2.meta == (8.0, 501, "product", FORMAT_VERSION)


def test_table_values_monotone(fast_grid, table_q2, table_q3):
    assert np.diff(table_q2.values).min() >= -1e-5
    assert np.diff(table_q3.values).min() >= -1e-4
    table_q4 = build_table(4, 21, fast_grid)
    assert np.diff(table_q4.values).min() >= -1e-4


def test_build_table_q1_degenerates_to_nodes(fast_grid):
    table = build_table(1, 21, fast_grid)
    assert np.abs(table.values - table.rhos).max() <= 1e-12


def test_build_table_deterministic(fast_grid):
    a = build_table(2, 21, fast_grid)
    b = build_table(2, 21, fast_grid)
    assert np.array_equal(a.rhos, b.rhos)
    assert np.array_equal(a.values, b.values)


def test_build_table_validates_input(fast_grid):
    with pytest.raises(UsageError):
        build_table(2, 2, fast_grid)
    with pytest.raises(UsageError):
        build_table(2, 20.5, fast_grid)
    with pytest.raises(UsageError):
        build_table(0, 21, fast_grid)
    with pytest.raises(UsageError):
        build_table(2, 21, fast_grid, scheme="trapezoid")


def test_table_constructor_validates_shape():
    rhos = np.linspace(-1.0, 1.0, 5)
    vals = np.zeros(5)
    with pytest.raises(UsageError):
        FqTable(2, rhos[:4], vals, 8.0, 501)
    with pytest.raises(UsageError):
        FqTable(2, rhos[:1], vals[:1], 8.0, 501)
    with pytest.raises(UsageError):
        FqTable(2, np.linspace(-0.9, 1.0, 5), vals, 8.0, 501)
    with pytest.raises(UsageError):
        FqTable(2, rhos[::-1], vals, 8.0, 501)
    with pytest.raises(UsageError):
        FqTable(2, rhos, vals, 8.0, 501, scheme="bogus")


def test_interpolate_is_exact_at_nodes(table_q2):
    np.testing.assert_array_equal(interpolate(table_q2, table_q2.rhos), table_q2.values)
    mid = 0.5 * (table_q2.rhos[10] + table_q2.rhos[11])
    want = 0.5 * (table_q2.values[10] + table_q2.values[11])
    assert interpolate(table_q2, mid) == pytest.approx(want, abs=1e-12)
    assert isinstance(interpolate(table_q2, 0.25), float)
    assert isinstance(interpolate(table_q2, np.array([0.25, 0.5])), np.ndarray)


def test_interpolate_clamps_rounding_but_rejects_garbage(table_q2):
    assert interpolate(table_q2, 1.0 + 5e-10) == table_q2.values[-1]
    assert interpolate(table_q2, -1.0 - 5e-10) == table_q2.values[0]
    with pytest.raises(DomainError):
        interpolate(table_q2, 1.0 + 2e-9)
    with pytest.raises(DomainError):
        interpolate(table_q2, math.nan)


def test_interpolation_accuracy_against_closed_form(table_q2):
    rng = np.random.default_rng(42)
    probes = rng.uniform(-1.0, 1.0, size=100)
    err = np.abs(interpolate(table_q2, probes) - closed_form_f2(probes))
    assert err.max() <= 1e-3
    assert abs(interpolate(table_q2, 0.123) - closed_form_f2(0.123)) <= 1e-3


def test_interpolation_consistent_under_refinement(fast_grid, table_q2):
    dense = build_table(2, 401, fast_grid)
    rng = np.random.default_rng(42)
    probes = rng.uniform(-1.0, 1.0, size=100)
    gap = np.abs(interpolate(table_q2, probes) - interpolate(dense, probes))
    assert gap.max() <= 1e-4


def test_save_load_round_trip(tmp_path, table_q3):
    path = tmp_path / "f3.tsv"
    table_q3.save(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# mnngp-fq-table v1"
    assert lines[1] == "# q=3 n_rho=41 r_max=8 n_grid=501 scheme=product"
    loaded = load_table(path)
    assert loaded.q == 3
    assert loaded.meta == table_q3.meta
    assert np.array_equal(loaded.rhos, table_q3.rhos)
    assert np.array_equal(loaded.values, table_q3.values)


def test_load_rejects_malformed_files(tmp_path, table_q3):
    good = (tmp_path / "good.tsv")
    table_q3.save(good)
    lines = good.read_text().splitlines()

    def corrupt(name, mutate):
        bad = tmp_path / name
        rows = list(lines)
        mutate(rows)
        bad.write_text("\n".join(rows) + "\n")
        with pytest.raises(FormatError):
            load_table(bad)

    corrupt("header.tsv", lambda r: r.__setitem__(0, "bogus"))
    corrupt("version.tsv", lambda r: r.__setitem__(0, "# mnngp-fq-table v2"))
    corrupt("meta.tsv", lambda r: r.__setitem__(1, r[1].replace("q=3", "q=x")))
    corrupt("short.tsv", lambda r: r.pop())
    corrupt("long.tsv", lambda r: r.append(r[-1]))
    corrupt("nonfinite.tsv", lambda r: r.__setitem__(5, "-0.8\tnan"))
    corrupt("swapped.tsv", lambda r: r.__setitem__(slice(5, 7), [r[6], r[5]]))
    corrupt("endpoint.tsv", lambda r: r.__setitem__(2, "-0.5\t" + r[2].split("\t")[1]))
    corrupt("fields.tsv", lambda r: r.__setitem__(5, r[5] + "\t0"))
    corrupt("text.tsv", lambda r: r.__setitem__(5, "-0.8\tabc"))
    with pytest.raises(FormatError):
        load_table(tmp_path / "missing.tsv")


def test_mc_oracle_statistics():
    mean, se = mc_oracle_fq(1, 0.3, 10**5, 5)
    assert se < 0.01
    assert abs(mean - 0.3) <= 3.0 * se
    mean2, se2 = mc_oracle_fq(2, 0.5, 10**6, 9)
    assert abs(mean2 - closed_form_f2(0.5)) <= 3.5 * se2
    mean_top, se_top = mc_oracle_fq(2, 1.0, 10**5, 3)
    assert abs(mean_top - 1.0) <= 3.0 * se_top


def test_mc_oracle_deterministic_and_validated():
    assert mc_oracle_fq(2, 0.2, 10**5, 17) == mc_oracle_fq(2, 0.2, 10**5, 17)
    with pytest.raises(UsageError):
        mc_oracle_fq(2, 0.2, 5000, 17)
    with pytest.raises(UsageError):
        mc_oracle_fq(2, 0.2, 10**5, -1)
    with pytest.raises(DomainError):
        mc_oracle_fq(2, 1.5, 10**5, 17)


def test_ratio_scheme_kept_distinct(tmp_path, fast_grid):
    # The self-normalized per-term ratios estimate conditional
    # expectations, so the scheme disagrees with the product rule by
    # design; it must stay available and round-trip, not be silently
    # aliased onto the default.
    prod = build_table(2, 11, fast_grid)
    ratio = build_table(2, 11, fast_grid, scheme="ratio")
    assert ratio.meta == (8.0, 501, "ratio", FORMAT_VERSION)
    assert np.all(np.isfinite(ratio.values))
    assert np.abs(ratio.values - prod.values).max() > 0.01
    # At rho = 1 the ratio collapses to q * E[(max of q)^2].
    assert fq_at_plus_one(2, fast_grid, scheme="ratio") == pytest.approx(2.0, abs=1e-6)
    path = tmp_path / "ratio.tsv"
    ratio.save(path)
    assert load_table(path).scheme == "ratio"
