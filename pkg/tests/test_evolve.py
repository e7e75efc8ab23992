import math

import numpy as np
import pytest
import scipy.linalg

from vschro.evolve import (
    SolverError,
    SplitConfig,
    diffusion_step,
    pcg,
    potential_step,
    scalar_heat_evolve,
    trotter_evolve,
)
from vschro.fields import make_rule, sample_field, shift_potential
from vschro.mesh import VectorField, build_grid, lp_norm
from vschro.operators import assemble_diffusion, assemble_potential


def identity_q(grid):
    return sample_field(make_rule("identity_Q", grid.dim)[0], grid, "diffusion")


def bump_field(grid, m, widths=(1.0, 0.7)):
    x = grid.axis_coords
    vals = np.zeros((grid.n_cells, m), dtype=complex)
    for k in range(m):
        vals[:, k] = np.exp(-(x**2) / (2.0 * widths[k % len(widths)] ** 2))
    return VectorField(grid, vals)


class TestSplitConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SplitConfig(scheme="verlet")
        with pytest.raises(ValueError):
            SplitConfig(n_steps=0)
        with pytest.raises(ValueError):
            SplitConfig(t_final=-1.0)
        with pytest.raises(ValueError):
            SplitConfig(linear_solver_tol=1.0)


class TestPcg:
    def test_solves_spd_system(self):
        rng = np.random.default_rng(0)
        n = 60
        M = rng.standard_normal((n, n))
        A = M @ M.T + n * np.eye(n)
        import scipy.sparse as sp

        As = sp.csr_matrix(A)
        b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        x, iters = pcg(As, b, atol=1e-12 * np.linalg.norm(b), max_iters=500)
        assert np.linalg.norm(As @ x - b) <= 1e-11 * np.linalg.norm(b)
        assert iters > 0

    def test_raises_on_iteration_budget(self):
        import scipy.sparse as sp

        rng = np.random.default_rng(1)
        M = rng.standard_normal((40, 40))
        A = sp.csr_matrix(M @ M.T + 40 * np.eye(40))
        b = rng.standard_normal(40)
        with pytest.raises(SolverError):
            pcg(A, b, atol=1e-300, max_iters=2)


class TestPotentialStep:
    def test_tau_zero_identity(self):
        g = build_grid(1, 2.0, 16)
        V = sample_field(make_rule("diag_V", 1, c=-1.0, m=2)[0], g, "potential")
        f = bump_field(g, 2)
        np.testing.assert_allclose(potential_step(V, f, 0.0).values, f.values)

    def test_diag_halving(self):
        g = build_grid(1, 2.0, 16)
        V = sample_field(make_rule("diag_V", 1, c=-1.0, m=2)[0], g, "potential")
        f = bump_field(g, 2)
        out = potential_step(V, f, math.log(2.0))
        np.testing.assert_allclose(out.values, 0.5 * f.values, rtol=1e-13)

    def test_rotation_preserves_cell_norms(self):
        g = build_grid(1, 4.0, 32)
        V = sample_field(make_rule("rotation_V", 1, r=1.5)[0], g, "potential")
        f = bump_field(g, 2)
        out = potential_step(V, f, 0.37)
        np.testing.assert_allclose(
            out.cell_amplitudes(), f.cell_amplitudes(), atol=1e-12
        )

    def test_shifted_potential_contracts(self):
        g = build_grid(1, 4.0, 32)
        V = shift_potential(sample_field(make_rule("rotation_V", 1, r=1.5)[0], g, "potential"))
        f = bump_field(g, 2)
        tau = 0.2
        out = potential_step(V, f, tau)
        assert lp_norm(out, 2) <= math.exp(-tau) * lp_norm(f, 2) + 1e-10


class TestDiffusionStep:
    def test_backward_euler_eigenvector(self):
        R, n = 2.0, 40
        g = build_grid(1, R, n)
        A = assemble_diffusion(identity_q(g), g, 1)
        h = g.spacing
        k = 3
        # discrete Dirichlet eigenvector and its exact discrete eigenvalue
        x = g.axis_coords
        v = np.sin(k * math.pi * (x + R) / (2 * R))
        lam = -4.0 / h**2 * math.sin(k * math.pi / (2 * (n + 1))) ** 2 - 1.0
        tau = 0.31
        cfg = SplitConfig(diffusion_substep="backward_euler", linear_solver_tol=1e-12)
        out = diffusion_step(A, VectorField(g, v[:, None].astype(complex)), tau, cfg)
        np.testing.assert_allclose(
            out.values[:, 0].real, v / (1.0 - tau * lam), atol=1e-10
        )

    def test_crank_nicolson_third_order_local(self):
        g = build_grid(1, 4.0, 32)
        A = assemble_diffusion(identity_q(g), g, 1)
        f = bump_field(g, 1)
        dense = A.matrix.toarray()
        errs = []
        for tau in (0.2, 0.1, 0.05):
            cfg = SplitConfig(diffusion_substep="crank_nicolson", linear_solver_tol=1e-13)
            out = diffusion_step(A, f, tau, cfg)
            ref = scipy.linalg.expm(tau * dense) @ f.values[:, 0]
            errs.append(np.linalg.norm(out.values[:, 0] - ref))
        order = math.log2(errs[1] / errs[2])
        assert 2.6 < order < 3.4

    def test_gaussian_widening_against_closed_form(self):
        from vschro.verify import gaussian_heat_profile

        R, n = 20.0, 800
        g = build_grid(1, R, n)
        A = assemble_diffusion(identity_q(g), g, 1)
        sigma = 0.5
        x = g.axis_coords
        f = VectorField(g, np.exp(-(x**2) / (2 * sigma**2))[:, None].astype(complex))
        t = 1.0
        cfg = SplitConfig(
            diffusion_substep="crank_nicolson", n_steps=200, t_final=t,
            linear_solver_tol=1e-11,
        )
        out = f
        for _ in range(cfg.n_steps):
            out = diffusion_step(A, out, t / cfg.n_steps, cfg)
        # undo the -I shift and compare against the exact widened Gaussian
        ref = gaussian_heat_profile(x, t, sigma)
        err = lp_norm(
            VectorField(g, (math.exp(t) * out.values[:, 0] - ref)[:, None]), 2
        )
        assert err <= 1e-3

    def test_norm_never_increases(self):
        g = build_grid(1, 3.0, 48)
        A = assemble_diffusion(identity_q(g), g, 2)
        rng = np.random.default_rng(4)
        f = VectorField(g, rng.standard_normal((48, 2)) + 1j * rng.standard_normal((48, 2)))
        for substep in ("backward_euler", "crank_nicolson"):
            cfg = SplitConfig(diffusion_substep=substep)
            out = diffusion_step(A, f, 0.5, cfg)
            assert lp_norm(out, 2) <= lp_norm(f, 2) * (1 + 1e-12)


class TestTrotter:
    def test_decoupled_diag_matches_scalar_runs(self):
        g = build_grid(1, 6.0, 96)
        Q = identity_q(g)
        V = sample_field(make_rule("diag_V", 1, c=-1.0, m=2)[0], g, "potential")
        A = assemble_diffusion(Q, g, 2)
        f = bump_field(g, 2)
        t = 0.4
        cfg = SplitConfig(scheme="lie", diffusion_substep="backward_euler",
                          n_steps=80, t_final=t, linear_solver_tol=1e-12)
        traj = trotter_evolve(A, V, f, cfg)
        # scalar route: same substeps on each component, potential factor e^{-t}
        for k in range(2):
            comp0 = VectorField(g, f.values[:, k][:, None])
            scalar = comp0
            A1 = assemble_diffusion(Q, g, 1)
            for _ in range(cfg.n_steps):
                scalar = diffusion_step(A1, scalar, t / cfg.n_steps, cfg)
            expected = math.exp(-t) * scalar.values[:, 0]
            err = np.linalg.norm(traj.final.values[:, k] - expected)
            assert err <= 1e-8 * max(1.0, np.linalg.norm(expected))

    def test_realness_preserved(self):
        g = build_grid(1, 4.0, 32)
        V = shift_potential(sample_field(make_rule("rotation_V", 1, r=1.5)[0], g, "potential"))
        A = assemble_diffusion(identity_q(g), g, 2)
        f = VectorField(g, np.real(bump_field(g, 2).values).astype(complex))
        cfg = SplitConfig(scheme="strang", diffusion_substep="crank_nicolson",
                          n_steps=20, t_final=0.5)
        out = trotter_evolve(A, V, f, cfg).final
        assert np.abs(out.values.imag).max() <= 1e-12

    def test_semigroup_property(self):
        g = build_grid(1, 4.0, 48)
        V = shift_potential(sample_field(make_rule("rotation_V", 1, r=1.5)[0], g, "potential"))
        A = assemble_diffusion(identity_q(g), g, 2)
        f = bump_field(g, 2)
        mk = lambda t, n: SplitConfig(scheme="lie", diffusion_substep="backward_euler",
                                      n_steps=n, t_final=t, linear_solver_tol=1e-12)
        once = trotter_evolve(A, V, f, mk(0.6, 60)).final
        first = trotter_evolve(A, V, f, mk(0.4, 40)).final
        second = trotter_evolve(A, V, first, mk(0.2, 20)).final
        assert lp_norm(second - once, 2) <= 1e-9 * lp_norm(once, 2) + 1e-12

    def test_all_p_norms_nonincreasing_backward_euler(self):
        g = build_grid(1, 4.0, 64)
        V = shift_potential(sample_field(make_rule("rotation_V", 1, r=1.5)[0], g, "potential"))
        A = assemble_diffusion(identity_q(g), g, 2)
        rng = np.random.default_rng(8)
        f = VectorField(g, rng.standard_normal((64, 2)) + 1j * rng.standard_normal((64, 2)))
        cfg = SplitConfig(scheme="lie", diffusion_substep="backward_euler",
                          n_steps=50, t_final=1.0)
        traj = trotter_evolve(A, V, f, cfg)
        for p, norms in traj.norm_log.items():
            assert np.all(np.diff(norms) <= 1e-8 * norms[:-1])

    def test_crank_nicolson_l2_nonincreasing(self):
        g = build_grid(1, 4.0, 64)
        V = shift_potential(sample_field(make_rule("rotation_V", 1, r=1.5)[0], g, "potential"))
        A = assemble_diffusion(identity_q(g), g, 2)
        rng = np.random.default_rng(9)
        f = VectorField(g, rng.standard_normal((64, 2)) + 0j)
        cfg = SplitConfig(scheme="strang", diffusion_substep="crank_nicolson",
                          n_steps=50, t_final=1.0)
        traj = trotter_evolve(A, V, f, cfg)
        norms = traj.norm_log[2]
        assert np.all(np.diff(norms) <= 1e-8 * norms[:-1])

    @pytest.mark.parametrize(
        "v_rule,v_params,do_shift",
        [
            ("rotation_V", {"r": 1.5}, True),
            ("degenerate_V", {}, False),
            ("coupled_V", {"a": -2.0, "b": 1.0, "c": 0.5}, False),
            ("upper_triangular_V", {}, False),
        ],
    )
    def test_strang_beats_lie(self, v_rule, v_params, do_shift):
        from vschro.verify import dense_expm_apply

        g = build_grid(1, 8.0, 64)
        V = sample_field(make_rule(v_rule, 1, **v_params)[0], g, "potential")
        if do_shift:
            V = shift_potential(V)
        A = assemble_diffusion(identity_q(g), g, 2)
        L = A + assemble_potential(V, 2)
        f = bump_field(g, 2)
        t = 0.5
        ref = dense_expm_apply(L, t, f)
        errs = {}
        for scheme in ("lie", "strang"):
            cfg = SplitConfig(scheme=scheme, diffusion_substep="crank_nicolson",
                              n_steps=32, t_final=t, linear_solver_tol=1e-12)
            out = trotter_evolve(A, V, f, cfg).final
            errs[scheme] = lp_norm(out - ref, 2)
        # ">= accuracy": ties happen when the factors commute (constant V)
        assert errs["strang"] <= errs["lie"] * (1 + 1e-6)

    def test_complex_potential_path(self):
        # B = Delta - 1 - i x runs through the same splitting code; the real
        # part of its numerical range is <= -1, so the 2-norm contracts
        g = build_grid(1, 10.0, 200)
        V = sample_field(make_rule("complex_linear_V", 1)[0], g, "potential")
        A = assemble_diffusion(identity_q(g), g, 1)
        rng = np.random.default_rng(2)
        f = VectorField(g, rng.standard_normal((200, 1)) + 1j * rng.standard_normal((200, 1)))
        cfg = SplitConfig(scheme="lie", diffusion_substep="backward_euler",
                          n_steps=40, t_final=0.5)
        traj = trotter_evolve(A, V, f, cfg, norm_ps=(2,))
        norms = traj.norm_log[2]
        assert np.all(np.diff(norms) <= 1e-10 * norms[:-1])
        assert norms[-1] <= math.exp(-0.5) * norms[0] * (1 + 1e-8)

    def test_snapshot_stride(self):
        g = build_grid(1, 2.0, 16)
        V = sample_field(make_rule("diag_V", 1, c=-1.0, m=2)[0], g, "potential")
        A = assemble_diffusion(identity_q(g), g, 2)
        cfg = SplitConfig(n_steps=10, t_final=0.1)
        traj = trotter_evolve(A, V, bump_field(g, 2), cfg, snapshot_stride=2)
        assert traj.snapshot_times == [0.0] + [0.02 * k for k in range(1, 6)]
        assert len(traj.times) == 11


class TestLayoutGuards:
    def test_diffusion_step_rejects_unflagged_operator(self):
        import scipy.sparse as sp
        from vschro.operators import SparseOperator

        g = build_grid(1, 1.0, 4)
        op = SparseOperator(sp.csr_matrix(-np.eye(4)), g, 1, symmetric=False)
        with pytest.raises(ValueError):
            diffusion_step(op, VectorField(g, np.ones((4, 1))), 0.1, SplitConfig())

    def test_trotter_rejects_mismatched_layouts(self):
        g = build_grid(1, 2.0, 8)
        A = assemble_diffusion(identity_q(g), g, 2)
        V = sample_field(make_rule("diag_V", 1, c=-1.0, m=2)[0], g, "potential")
        wrong = VectorField(g, np.ones((8, 3)))
        with pytest.raises(ValueError):
            trotter_evolve(A, V, wrong, SplitConfig(n_steps=2, t_final=0.1))

    def test_apply_operator_dimension_guard(self):
        from vschro.operators import AssemblyError, apply_operator

        g = build_grid(1, 2.0, 8)
        A = assemble_diffusion(identity_q(g), g, 2)
        with pytest.raises(AssemblyError):
            apply_operator(A, VectorField(g, np.ones((8, 1))))


class TestScalarHeat:
    def test_eigenfunction_decay(self):
        R, n = 3.0, 50
        g = build_grid(1, R, n)
        Q = identity_q(g)
        x = g.axis_coords
        v = np.sin(math.pi * (x + R) / (2 * R))
        h = g.spacing
        lam = -4.0 / h**2 * math.sin(math.pi / (2 * (n + 1))) ** 2
        t = 0.5
        cfg = SplitConfig(diffusion_substep="crank_nicolson", n_steps=400, t_final=t,
                          linear_solver_tol=1e-12)
        out = scalar_heat_evolve(Q, VectorField(g, v[:, None].astype(complex)), t, cfg)
        np.testing.assert_allclose(
            out.values[:, 0].real, math.exp(lam * t) * v, atol=5e-6
        )

    def test_positivity_and_mass_decay(self):
        g = build_grid(1, 3.0, 80)
        Q = identity_q(g)
        rng = np.random.default_rng(3)
        w0 = VectorField(g, rng.random((80, 1)).astype(complex))
        cfg = SplitConfig(diffusion_substep="backward_euler", n_steps=20, t_final=0.3,
                          linear_solver_tol=1e-12)
        out = scalar_heat_evolve(Q, w0, 0.3, cfg)
        assert out.values.real.min() >= -1e-12
        assert np.sum(out.values.real) * g.cell_measure <= np.sum(w0.values.real) * g.cell_measure
