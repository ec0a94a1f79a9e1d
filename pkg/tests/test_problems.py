"""Instance generators, success metrics and the .npz round trip."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from rssd.problems import (
    FsvInstance,
    OdlInstance,
    gen_fsv,
    gen_odl,
    truncated_nnz,
    fsv_success,
    sparsity_level,
    save_instance,
    load_instance,
)


class TestGenFsv:
    @pytest.mark.parametrize("n", [5, 10, 15, 20])
    @pytest.mark.parametrize("ratio", [4, 6, 8, 10, 12, 14])
    def test_basis_is_orthonormal_and_contains_plant(self, n, ratio):
        m = ratio * n
        inst = gen_fsv(n, m, seed=n * 1000 + m)
        q = inst.q
        assert q.shape == (m, n)
        assert np.max(np.abs(q.T @ q - np.eye(n))) <= 1e-10
        e = inst.planted_vector()
        # the planted sparse vector lies in the span of the basis
        assert np.linalg.norm(q @ (q.T @ e) - e) <= 1e-8

    def test_planted_coefficients_recover_plant(self):
        count = 0
        for seed in range(50):
            inst = gen_fsv(5, 50, seed)
            if fsv_success(inst, inst.x_star):
                count += 1
        assert count >= 49

    def test_deterministic(self):
        a = gen_fsv(6, 36, 123)
        b = gen_fsv(6, 36, 123)
        assert np.array_equal(a.q, b.q)
        c = gen_fsv(6, 36, 124)
        assert not np.array_equal(a.q, c.q)

    def test_rejects_wide_or_degenerate(self):
        with pytest.raises(ValueError):
            gen_fsv(5, 5, 0)
        with pytest.raises(ValueError):
            gen_fsv(0, 10, 0)

    def test_x_star_unit_norm(self):
        inst = gen_fsv(5, 40, 7)
        assert_allclose(np.linalg.norm(inst.x_star), 1.0, rtol=1e-12)


class TestGenOdl:
    def test_data_size_rule(self):
        assert gen_odl(30, seed=0).m == 1643
        assert gen_odl(10, seed=0).m == 316

    def test_sparsity_of_planted_codes(self):
        inst = gen_odl(10, seed=3)
        frac_zero = np.mean(inst.s_star == 0.0)
        # Bernoulli(theta) support, so zero fraction concentrates near 1-theta
        sd = np.sqrt(0.25 / inst.s_star.size)
        assert abs(frac_zero - 0.5) <= 3 * sd
        assert inst.true_sparsity == frac_zero

    def test_planted_factorization(self):
        inst = gen_odl(8, seed=1)
        assert inst.y.shape == (inst.n, inst.m)
        assert np.max(np.abs(inst.x_star.T @ inst.x_star - np.eye(8))) <= 1e-10
        assert_allclose(inst.y.T @ inst.x_star, inst.s_star.T, atol=1e-12)

    def test_deterministic(self):
        a = gen_odl(6, seed=9)
        b = gen_odl(6, seed=9)
        assert np.array_equal(a.y, b.y)
        assert np.array_equal(a.s_star, b.s_star)

    def test_validation(self):
        with pytest.raises(ValueError):
            gen_odl(1, seed=0)
        with pytest.raises(ValueError):
            gen_odl(5, seed=0, theta=0.0)
        with pytest.raises(ValueError):
            gen_odl(5, seed=0, theta=1.0)


class TestMetrics:
    def test_truncated_nnz_examples(self):
        assert truncated_nnz(np.array([1e-9, 0.5, -2.0]), 1e-8) == 2
        assert truncated_nnz(np.zeros(4), 1e-8) == 0
        # entries at exactly tau still count, strictly smaller ones do not
        assert truncated_nnz(np.array([0.5, 0.49999, -0.5]), 0.5) == 2
        with pytest.raises(ValueError):
            truncated_nnz(np.ones(3), 0.0)

    def test_fsv_success(self):
        inst = gen_fsv(5, 50, 11)
        assert fsv_success(inst, inst.x_star)
        rng = np.random.Generator(np.random.Philox(0))
        x = rng.standard_normal(5)
        x /= np.linalg.norm(x)
        assert not fsv_success(inst, x)
        # an enormous threshold zeroes everything out, which is not a success
        assert not fsv_success(inst, inst.x_star, tau=1e9)

    def test_sparsity_level(self):
        inst = gen_odl(6, seed=2)
        assert sparsity_level(inst, inst.x_star) == inst.true_sparsity
        rng = np.random.Generator(np.random.Philox(1))
        x = np.linalg.qr(rng.standard_normal((6, 6)))[0]
        assert sparsity_level(inst, x) < 0.1
        assert sparsity_level(inst, inst.x_star, tau=1e9) == 1.0


class TestSerialization:
    def test_fsv_round_trip(self, tmp_path):
        inst = gen_fsv(5, 30, 42)
        path = tmp_path / "fsv.npz"
        save_instance(inst, path)
        back = load_instance(path)
        assert isinstance(back, FsvInstance)
        assert np.array_equal(back.q, inst.q)
        assert (back.n, back.m, back.seed, back.tau) == (5, 30, 42, inst.tau)

    def test_odl_round_trip(self, tmp_path):
        inst = gen_odl(5, seed=7, theta=0.4)
        path = tmp_path / "odl.npz"
        save_instance(inst, path)
        back = load_instance(path)
        assert isinstance(back, OdlInstance)
        assert np.array_equal(back.y, inst.y)
        assert np.array_equal(back.x_star, inst.x_star)
        assert np.array_equal(back.s_star, inst.s_star)
        assert back.theta == 0.4 and back.seed == 7

    def test_bad_payloads_rejected(self, tmp_path):
        inst = gen_fsv(4, 16, 0)
        path = tmp_path / "inst.npz"
        save_instance(inst, path)
        data = dict(np.load(path, allow_pickle=False))
        import json

        header = json.loads(str(data["header"]))
        header["kind"] = "mystery"
        data["header"] = np.array(json.dumps(header))
        np.savez(path, **data)
        with pytest.raises(ValueError):
            load_instance(path)

        header["kind"] = "fsv"
        header["format_version"] = 99
        data["header"] = np.array(json.dumps(header))
        np.savez(path, **data)
        with pytest.raises(ValueError):
            load_instance(path)

        with pytest.raises(TypeError):
            save_instance(object(), tmp_path / "junk.npz")


class TestConstructorValidation:
    def test_fsv_shape_checks(self):
        inst = gen_fsv(4, 16, 0)
        with pytest.raises(ValueError):
            FsvInstance(q=inst.q[:4], n=4, m=4, seed=0, tau=1e-8)
        with pytest.raises(ValueError):
            FsvInstance(q=inst.q * 2.0, n=4, m=16, seed=0, tau=1e-8)

    def test_odl_shape_checks(self):
        inst = gen_odl(4, seed=0)
        with pytest.raises(ValueError):
            OdlInstance(x_star=inst.x_star * 2.0, s_star=inst.s_star,
                        y=inst.y, n=4, m=inst.m, seed=0)
