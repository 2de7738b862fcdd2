import numpy as np
import pytest

from optray.dataset import MarginMatrix, synth, to_margin_matrix
from optray.decompose import (
    Decomposition,
    partition,
    row_feasible,
    separable_certificate,
    validate,
)

CANONICAL_MIXED = np.array([[-1.0, 0.0], [0.0, -1.0], [0.0, 1.0]])


def mat(rows):
    return MarginMatrix(np.asarray(rows, dtype=float))


class TestSeparableCertificate:
    def test_single_separable_row(self):
        cert = separable_certificate(mat([[-1.0, 0.0]]), [0])
        assert cert.slacks[0] == pytest.approx(1.0)
        assert cert.u[0] >= 1.0

    def test_opposing_rows_get_zero(self):
        cert = separable_certificate(mat([[-1.0], [1.0]]), [0, 1])
        np.testing.assert_allclose(cert.slacks, [0.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(cert.u, [0.0], atol=1e-12)

    def test_mixed_rows(self):
        # any u with A u <= 0 forces u_2 = 0, so only row 0 can win slack
        cert = separable_certificate(mat(CANONICAL_MIXED), [0, 1, 2])
        np.testing.assert_allclose(cert.slacks, [1.0, 0.0, 0.0], atol=1e-12)

    def test_certificate_invariant(self):
        cert = separable_certificate(mat(CANONICAL_MIXED), [0, 1, 2])
        assert np.all(CANONICAL_MIXED @ cert.u <= -cert.slacks + 1e-9)


class TestRowFeasible:
    def test_separable_row(self):
        assert row_feasible(mat(CANONICAL_MIXED), 0) is True

    def test_pinned_row(self):
        assert row_feasible(mat(CANONICAL_MIXED), 1) is False

    def test_single_row(self):
        assert row_feasible(mat([[-1.0]]), 0) is True


class TestPartition:
    def test_canonical_mixed(self):
        dec = partition(mat(CANONICAL_MIXED))
        np.testing.assert_array_equal(dec.sep_rows, [0])
        np.testing.assert_array_equal(dec.sc_rows, [1, 2])
        assert dec.rank_s == 1
        np.testing.assert_allclose(np.abs(dec.basis_s.columns[:, 0]), [0.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(dec.a_perp, [[-1.0, 0.0]], atol=1e-12)

    def test_fully_separable_circles(self):
        dec = partition(to_margin_matrix(synth("separable", 15, 3)))
        assert dec.sc_rows.size == 0
        assert dec.rank_s == 0
        assert dec.basis_perp.rank == 2

    def test_opposing_rows_all_remain(self):
        dec = partition(mat([[-1.0], [1.0]]))
        assert dec.sep_rows.size == 0
        assert dec.rank_s == 1

    def test_matches_per_row_oracle_on_random_instances(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            n = int(rng.integers(2, 9))
            d = int(rng.integers(1, 5))
            rows = rng.standard_normal((n, d))
            rows /= max(1.0, np.linalg.norm(rows, axis=1).max())
            A = mat(rows)
            dec = partition(A)
            oracle = {i for i in range(n) if row_feasible(A, i)}
            assert set(dec.sep_rows.tolist()) == oracle

    def test_invariant_under_row_permutation(self):
        rng = np.random.default_rng(9)
        rows = rng.standard_normal((6, 3))
        rows /= np.linalg.norm(rows, axis=1).max()
        A = mat(rows)
        base = set(partition(A).sep_rows.tolist())
        for _ in range(5):
            perm = rng.permutation(6)
            dec = partition(mat(rows[perm]))
            assert {perm[i] for i in dec.sep_rows} == base

    def test_invariant_under_global_scaling(self):
        rng = np.random.default_rng(4)
        rows = rng.standard_normal((5, 2))
        rows /= np.linalg.norm(rows, axis=1).max()
        base = set(partition(mat(rows)).sep_rows.tolist())
        for scale in (0.25, 0.5):
            assert set(partition(mat(rows * scale)).sep_rows.tolist()) == base

    def test_agrees_with_scipy_feasibility(self):
        # cross-check the per-row LP against an unrelated solver
        scipy_opt = pytest.importorskip("scipy.optimize")
        rng = np.random.default_rng(17)
        for _ in range(25):
            n = int(rng.integers(2, 7))
            d = int(rng.integers(1, 4))
            rows = rng.standard_normal((n, d))
            rows /= max(1.0, np.linalg.norm(rows, axis=1).max())
            A = mat(rows)
            box = 10.0 * n
            for i in range(n):
                # max s  s.t.  A u <= 0, (A u)_i <= -s, s <= 1, |u|_inf <= box
                c = np.zeros(d + 1)
                c[-1] = -1.0  # linprog minimizes
                G = np.zeros((n + 1, d + 1))
                G[:n, :d] = rows
                G[i, d] = 1.0
                G[n, d] = 1.0
                h = np.zeros(n + 1)
                h[n] = 1.0
                ref = scipy_opt.linprog(
                    c, A_ub=G, b_ub=h, bounds=[(-box, box)] * d + [(0, 1)], method="highs"
                )
                assert ref.success
                assert row_feasible(A, i) == (-ref.fun > 1e-7)


class TestValidate:
    def test_canonical_passes(self):
        A = mat(CANONICAL_MIXED)
        rep = validate(partition(A), A)
        assert rep.ok, rep.checks

    def test_corrupted_swap_fails(self):
        A = mat(CANONICAL_MIXED)
        dec = partition(A)
        swapped = Decomposition(
            sep_rows=np.array([1], dtype=np.int64),
            sc_rows=np.array([0, 2], dtype=np.int64),
            basis_s=dec.basis_s,
            basis_perp=dec.basis_perp,
            a_perp=dec.a_perp,
        )
        rep = validate(swapped, A)
        assert not rep.ok

    def test_empty_separable_block(self):
        A = mat([[-1.0], [1.0]])
        rep = validate(partition(A), A)
        assert rep.ok
        assert rep.checks["certificate"] == (True, 0.0)

    def test_synth_kinds_pass(self):
        for kind in ("separable", "overlap", "touching", "mixed"):
            A = to_margin_matrix(synth(kind, 10, 2))
            rep = validate(partition(A), A)
            assert rep.ok, (kind, rep.checks)

    def test_round_trip_dict(self):
        dec = partition(mat(CANONICAL_MIXED))
        back = Decomposition.from_dict(dec.to_dict())
        np.testing.assert_array_equal(back.sep_rows, dec.sep_rows)
        np.testing.assert_allclose(back.basis_perp.columns, dec.basis_perp.columns)


class TestSynthGeometry:
    def test_separable_rows_all_feasible(self):
        A = to_margin_matrix(synth("separable", 12, 7))
        assert all(row_feasible(A, i) for i in range(A.n))

    def test_mixed_partition_shape(self):
        ds = synth("mixed", 10, 5)
        A = to_margin_matrix(ds)
        dec = partition(A)
        # the three axis points stay, every disc point separates
        assert dec.sc_rows.size == 3
        assert dec.rank_s == 1

    def test_touching_origin_row_stays(self):
        ds = synth("touching", 8, 4)
        A = to_margin_matrix(ds)
        dec = partition(A)
        assert dec.sc_rows.size == 1
        assert dec.rank_s == 0
        assert np.all(A.rows[dec.sc_rows[0]] == 0.0)
