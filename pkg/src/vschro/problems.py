"""Assembled problem bundles: coefficients, validator report and operators.

A Problem carries everything the checks and the CLI need for one (Q, V)
configuration: the sampled coefficient fields, the hypothesis report, the
diffusion and potential blocks and their sum.  Shift normalization is
applied here when requested: a potential whose quadratic form only satisfies
<V xi, xi> <= beta |xi|^2 is replaced by V - (beta+1) I, and the recorded
shift lets reports un-rescale by e^{t (1 + shift)} when comparing against
the unshifted dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from vschro.fields import (
    HypothesisReport,
    MatrixField,
    make_rule,
    sample_field,
    shift_potential,
    validate_hypotheses,
)
from vschro.mesh import Grid, build_grid
from vschro.operators import (
    SparseOperator,
    assemble_diffusion,
    assemble_potential,
)

__all__ = ["Problem", "build_problem"]


@dataclass
class Problem:
    grid: Grid
    m: int
    Q: MatrixField
    V: MatrixField
    report: HypothesisReport
    diffusion: SparseOperator = field(repr=False)
    potential: SparseOperator = field(repr=False)
    generator: SparseOperator = field(repr=False)

    @property
    def unrescale_rate(self) -> float:
        """Exponential rate e^{t * rate} restoring div(Q grad .) + V_original."""
        return 1.0 + self.V.shift


def build_problem(
    dim: int,
    extent: float,
    n_per_axis: int,
    m: int,
    q_rule: str = "identity_Q",
    q_params: dict | None = None,
    v_rule: str = "diag_V",
    v_params: dict | None = None,
    shift: str = "none",
    alpha: float = 0.0,
) -> Problem:
    """Sample named coefficient rules, validate, optionally shift, assemble.

    shift = "auto" applies the normalization only when the dissipativity
    margin is positive; "none" leaves the potential as sampled.
    """
    grid = build_grid(dim, extent, n_per_axis)
    qr, qkind = make_rule(q_rule, dim, **(q_params or {}))
    Q = sample_field(qr, grid, qkind)
    vr, vkind = make_rule(v_rule, dim, **(v_params or {}), m=m)
    V = sample_field(vr, grid, vkind)
    if V.rows != m:
        raise ValueError(f"rule {v_rule!r} produced {V.rows} components, expected {m}")
    report = validate_hypotheses(Q, V, alpha)
    if shift == "auto" and report.dissipativity_margin > 1e-12:
        V = shift_potential(V, report.shift_beta)
        report = validate_hypotheses(Q, V, alpha)
    elif shift not in ("auto", "none"):
        raise ValueError(f"shift must be 'auto' or 'none', got {shift!r}")
    A = assemble_diffusion(Q, grid, m)
    Vop = assemble_potential(V, m)
    return Problem(
        grid=grid,
        m=m,
        Q=Q,
        V=V,
        report=report,
        diffusion=A,
        potential=Vop,
        generator=A + Vop,
    )
