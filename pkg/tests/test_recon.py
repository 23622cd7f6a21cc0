import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.integrate import quad

from ctlp.coeff import GlobalBounds, detect_sigma, global_bounds
from ctlp.disc import assemble_dual, discretize
from ctlp.errors import CertificationError, DataError, DomainError
from ctlp.instances import random_instance
from ctlp.mesh import Partition, build_partition, uniform_partition
from ctlp.recon import (
    certificate_bundle,
    discrete_gronwall,
    dual_certificate,
    dual_step,
    gronwall_bound,
    primal_bound,
    primal_step,
    rho,
    truncate_dual,
)
from ctlp.simplex import solve

from conftest import scalar_instance

UNIT = GlobalBounds(tau=1.0, zeta=1.0, eta=1.0, nu=1.0, phi=1.0, sigma=1.0)


class TestStepFunction:
    def test_endpoint_convention(self):
        f = primal_step([1.0, 2.0], Partition((0.0, 0.5, 1.0)))
        assert f(0.5)[0] == 2.0
        assert f(1.0)[0] == 2.0
        assert f(0.49)[0] == 1.0

    def test_single_block(self):
        f = primal_step([3.0], Partition((0.0, 2.0)))
        assert_allclose(f(np.linspace(0, 2, 7))[:, 0], 3.0)

    def test_midpoints_recover_blocks(self, rng):
        part = build_partition(scalar_instance(), 9)
        vals = rng.random((9, 2))
        f = dual_step(vals, part, 2)
        mids = 0.5 * (np.array(part.points[:-1]) + np.array(part.points[1:]))
        assert np.array_equal(f(mids), vals)

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            primal_step(np.ones((2, 2)), Partition((0.0, 0.5, 1.0)), q=3)
        with pytest.raises(DataError):
            primal_step(np.ones(3), Partition((0.0, 0.5, 1.0)))

    def test_outside_domain(self):
        with pytest.raises(DomainError):
            primal_step([1.0], Partition((0.0, 1.0)))(1.5)

    def test_csv(self):
        text = primal_step([1.0, 2.0], Partition((0.0, 0.5, 1.0))).to_csv()
        assert text.splitlines() == ["t_lo,t_hi,x0", "0.0,0.5,1.0", "0.5,1.0,2.0"]


class TestRho:
    def test_zero_rate(self):
        b = GlobalBounds(1, 1, 0, 0, 0, sigma=1)
        assert_allclose(rho(np.linspace(0, 1, 5), 1.0, b), 1.0)

    def test_boundary_value(self):
        b = GlobalBounds(2, 1, 1, 1, 1, sigma=1)
        assert rho(1.0, 1.0, b) == pytest.approx(2.0)

    def test_exponential(self):
        assert rho(0.0, 1.0, UNIT) == pytest.approx(math.e)

    def test_eta_variant(self):
        b = GlobalBounds(1, 1, 0.5, 2.0, 1, sigma=1)
        assert rho(0.0, 1.0, b, rate="eta") == pytest.approx(math.exp(0.5))
        assert rho(0.0, 1.0, b, rate="nu") == pytest.approx(math.exp(2.0))

    def test_needs_sigma(self):
        with pytest.raises(CertificationError):
            rho(0.0, 1.0, GlobalBounds(1, 1, 1, 1, 1, sigma=None))

    @given(st.floats(0, 0.5), st.floats(0, 0.5), st.floats(0, 1))
    @settings(max_examples=50, deadline=None)
    def test_monotone_in_eps(self, e1, e2, t):
        lo, hi = sorted((e1, e2))
        assert rho(t, 1.0, UNIT, eps=lo) >= rho(t, 1.0, UNIT, eps=hi)

    def test_decreasing_in_t(self):
        vals = rho(np.linspace(0, 1, 11), 1.0, UNIT)
        assert np.all(np.diff(vals) < 0)


class TestDualCertificate:
    def test_zero_rate(self):
        b = GlobalBounds(1, 1, 0, 0, 0, sigma=1)
        assert_allclose(dual_certificate(uniform_partition(1.0, 4), b, 1), 1.0)

    def test_two_blocks(self):
        assert_allclose(dual_certificate(uniform_partition(1.0, 2), UNIT, 1)[:, 0], [1.5, 1.0])

    def test_volterra_constraint_tight(self, vol):
        part = uniform_partition(1.0, 2)
        w = dual_certificate(part, UNIT, 1)
        dual = assemble_dual(discretize(vol, part))
        lhs = dual.A @ w.ravel()
        assert_allclose(lhs, dual.b, atol=1e-15)  # 1.5 - 0.5 * 1 = 1

    def test_random_instances(self, rng):
        for _ in range(10):
            inst = random_instance(rng)
            part = build_partition(inst, 12)
            b = global_bounds(inst, detect_sigma(inst.B))
            w = dual_certificate(part, b, inst.p)
            assert assemble_dual(discretize(inst, part)).violation(w.ravel()) <= 1e-10


class TestTruncation:
    def _volterra(self, vol, N):
        part = uniform_partition(1.0, N)
        D = discretize(vol, part)
        b = global_bounds(vol, detect_sigma(vol.B))
        return part, D, b

    def test_below_rho_unchanged(self, vol):
        part, D, b = self._volterra(vol, 4)
        d = solve(assemble_dual(D)).primal.reshape(4, 1)
        assert np.all(d <= rho(np.array(part.points[1:]), 1.0, b)[:, None])
        assert np.array_equal(truncate_dual(d, D, part, b), d)

    def test_clamped(self, vol):
        part, D, b = self._volterra(vol, 4)
        r = rho(np.array(part.points[1:]), 1.0, b)[:, None]
        assert_allclose(truncate_dual(10 * r, D, part, b), r)

    def test_two_blocks_objective(self, vol):
        part, D, b = self._volterra(vol, 2)
        dual = assemble_dual(D)
        sol = solve(dual)
        w = truncate_dual(sol.primal, D, part, b)
        assert dual.objective(w.ravel()) == pytest.approx(sol.objective, abs=1e-12)

    def test_refuses_infeasible_input(self, vol):
        part, D, b = self._volterra(vol, 2)
        with pytest.raises(CertificationError, match="not dual feasible"):
            truncate_dual(np.zeros((2, 1)), D, part, b)

    def test_refuses_negative_kernel(self):
        inst = scalar_instance(K=-1.0)
        part = uniform_partition(1.0, 2)
        D = discretize(inst, part)
        b = global_bounds(inst, 1.0)
        with pytest.raises(CertificationError, match="K >= 0"):
            truncate_dual(np.full((2, 1), 5.0), D, part, b)

    def test_invariants(self, rng):
        for _ in range(10):
            inst = random_instance(rng)
            part = build_partition(inst, 10)
            D = discretize(inst, part)
            b = global_bounds(inst, detect_sigma(inst.B))
            dual = assemble_dual(D)
            d = 3.0 * dual_certificate(part, b, inst.p)  # feasible since a >= 0
            w = truncate_dual(d, D, part, b)
            assert np.all(w <= d) and np.all(w >= 0)
            assert dual.violation(w.ravel()) <= 1e-9
            assert dual.objective(w.ravel()) <= dual.objective(d.ravel()) + 1e-12


class TestGronwall:
    def test_discrete_first(self):
        assert discrete_gronwall(1.0, 0.1, 3)[0] == 1.0

    def test_discrete_third(self):
        assert discrete_gronwall(2.0, 1.0, 3)[2] == 8.0

    @given(st.floats(0, 5), st.floats(1e-3, 2), st.integers(1, 40), st.integers(0, 2**32 - 1))
    @settings(max_examples=100, deadline=None)
    def test_discrete_hypothesis_implies_bound(self, theta1, theta2, N, seed):
        # x_u <= theta1 + theta2 * sum_{v<u} x_v, built at a random fraction of equality
        r = np.random.default_rng(seed)
        x = np.zeros(N)
        for u in range(N):
            x[u] = r.uniform(0, 1) * (theta1 + theta2 * x[:u].sum())
        assert np.all(x <= discrete_gronwall(theta1, theta2, N) * (1 + 1e-12) + 1e-300)

    def test_continuous_zero(self):
        assert gronwall_bound(0.0, 1.0, 0.7) == 0.0

    def test_continuous_e(self):
        assert gronwall_bound(1.0, 1.0, 1.0) == pytest.approx(math.e)

    @pytest.mark.parametrize("theta1,theta2", [(1.0, 1.0), (0.3, 2.5), (2.0, 0.1)])
    def test_equality_witness(self, theta1, theta2):
        # g(t) = theta1 + theta2 * int_0^t g(s) ds holds with equality
        for t in np.linspace(0, 1, 11):
            integral, _ = quad(lambda s: gronwall_bound(theta1, theta2, s), 0, t, epsabs=1e-13, epsrel=1e-13)
            assert abs(gronwall_bound(theta1, theta2, t) - theta1 - theta2 * integral) <= 1e-8

    def test_primal_bound_flat(self):
        b = GlobalBounds(1, 1, 0, 0, 0, sigma=1)
        assert_allclose(primal_bound(b, 1, 0.0, np.linspace(0, 1, 5)), 1.0)

    def test_primal_bound_e(self):
        assert primal_bound(UNIT, 1, 0.0, 1.0) == pytest.approx(math.e)

    def test_primal_bound_covers_volterra(self, vol):
        N = 50
        part = uniform_partition(1.0, N)
        from ctlp.disc import assemble_primal

        z = primal_step(solve(assemble_primal(discretize(vol, part))).primal, part)
        ts = np.linspace(0, 1, 1000)
        assert np.all(z(ts)[:, 0] <= primal_bound(UNIT, 1, 0.0, ts))

    def test_bundle(self):
        part = uniform_partition(1.0, 4)
        cert = certificate_bundle(part, UNIT, 1)
        assert cert.theta1 == 1.0 and cert.theta2 == pytest.approx(0.25)
        assert cert.primal_cap == pytest.approx(math.exp(1.0))
        assert cert.rho(0.0) == pytest.approx(math.e)
