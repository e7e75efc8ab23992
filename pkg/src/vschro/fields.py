"""Matrix-valued coefficient fields Q(x), V(x) and per-cell matrix functions.

Q is the d x d symmetric diffusion matrix, V the m x m potential coupling the
components.  Everything here is cell-local: matrix exponentials (scaling and
squaring with a diagonal Pade approximant), real/complex matrix powers
(eigendecomposition with a quadrature fallback on the resolvent integral
M^(-a) = sin(pi a)/pi * int_0^inf t^(-a) (t+M)^(-1) dt), and a validator that
measures the structural assumptions the evolution and spectral layers rely
on: uniform ellipticity of Q, the dissipativity margin of V, the growth of
D_jV (-V)^(-a), off-diagonal signs, and the coercivity profile kappa(x) =
smallest singular value of V(x).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from vschro.mesh import Grid

__all__ = [
    "MatrixField",
    "HypothesisReport",
    "sample_field",
    "matrix_exp",
    "matrix_power",
    "matrix_power_field",
    "matrix_field_gradient",
    "validate_hypotheses",
    "shift_potential",
    "make_rule",
    "RULE_NAMES",
]

DIFFUSION = "diffusion"
POTENTIAL = "potential"

_SYMMETRY_HARD_LIMIT = 1e-8
_NORM_OVERFLOW_LIMIT = 1e8


class FieldError(ValueError):
    """Raised for invalid coefficient data (non-finite, asymmetric, ...)."""


class BranchCutError(ValueError):
    """Raised when a matrix power is requested for a spectrum touching (-inf, 0]."""


@dataclass
class MatrixField:
    """Per-cell small dense matrices; values has shape (n_cells, rows, cols).

    kind is "diffusion" (d x d, symmetric) or "potential" (m x m).  shift
    records how much has been subtracted from the diagonal relative to the
    potential the caller originally supplied, so semigroup comparisons can be
    un-rescaled later.
    """

    grid: Grid
    kind: str
    values: np.ndarray = field(repr=False)
    shift: float = 0.0
    symmetry_defect: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 3 or v.shape[0] != self.grid.n_cells or v.shape[1] != v.shape[2]:
            raise FieldError(f"values must be (n_cells, k, k), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise FieldError("non-finite matrix entries")
        if self.kind == DIFFUSION:
            if v.shape[1] != self.grid.dim:
                raise FieldError("diffusion matrices must be d x d")
            defect = float(np.max(np.abs(v - v.transpose(0, 2, 1))))
            if defect > _SYMMETRY_HARD_LIMIT:
                raise FieldError(f"diffusion symmetry defect {defect:.3e} > {_SYMMETRY_HARD_LIMIT}")
            if defect > 0.0:
                v = 0.5 * (v + v.transpose(0, 2, 1))
            object.__setattr__(self, "symmetry_defect", defect)
        elif self.kind != POTENTIAL:
            raise FieldError(f"unknown kind {self.kind!r}")
        v = np.ascontiguousarray(v)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def rows(self) -> int:
        return self.values.shape[1]

    @property
    def cols(self) -> int:
        return self.values.shape[2]

    def at(self, cell: int) -> np.ndarray:
        return self.values[cell]


def sample_field(rule, grid: Grid, kind: str) -> MatrixField:
    """Evaluate a per-point matrix rule at every cell.

    Diffusion samples are symmetrized; the recorded defect must stay below
    1e-8 or the sample is rejected.
    """
    pts = grid.coords()
    first = np.asarray(rule(pts[0]))
    vals = np.empty((grid.n_cells,) + first.shape, dtype=np.result_type(first, np.float64))
    vals[0] = first
    for c in range(1, grid.n_cells):
        vals[c] = rule(pts[c])
    return MatrixField(grid=grid, kind=kind, values=vals)


def _padded_norm(M: np.ndarray) -> np.ndarray:
    """Batched 1-norm (max column abs sum) over trailing (k, k) axes."""
    return np.abs(M).sum(axis=-2).max(axis=-1)


# Coefficients of the [13/13] diagonal Pade approximant to exp.
_PADE13 = np.array(
    [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ]
)


def matrix_exp(M: np.ndarray) -> np.ndarray:
    """exp(M) by scaling and squaring with the [13/13] Pade approximant.

    Accepts a single (k, k) matrix or a batch (..., k, k); the scaling power
    is chosen from the largest 1-norm in the batch.  Rejects norms above 1e8
    (the squaring chain would overflow long before being meaningful).
    """
    A = np.asarray(M, dtype=np.complex128 if np.iscomplexobj(M) else np.float64)
    single = A.ndim == 2
    if single:
        A = A[None]
    k = A.shape[-1]
    nrm = float(_padded_norm(A).max(initial=0.0))
    if not np.isfinite(nrm) or nrm > _NORM_OVERFLOW_LIMIT:
        raise FieldError(f"matrix norm {nrm:.3e} too large for exp")
    s = max(0, int(np.ceil(np.log2(nrm))) + 1) if nrm > 1.0 else 0
    A = A / (2.0**s)

    b = _PADE13
    ident = np.broadcast_to(np.eye(k, dtype=A.dtype), A.shape).copy()
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A2 @ A4
    U = A @ (
        A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
        + b[7] * A6
        + b[5] * A4
        + b[3] * A2
        + b[1] * ident
    )
    W = (
        A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
        + b[6] * A6
        + b[4] * A4
        + b[2] * A2
        + b[0] * ident
    )
    E = np.linalg.solve(W - U, W + U)
    for _ in range(s):
        E = E @ E
    return E[0] if single else E


def _eig_power(M: np.ndarray, z: complex, cond_limit: float = 1e8):
    """Principal power by eigendecomposition; returns (result, ok_mask).

    ok is False where the eigenbasis is ill-conditioned.  Raises if the
    spectrum touches the branch cut (-inf, 0].
    """
    w, S = np.linalg.eig(M)
    scale = np.abs(w).max(axis=-1)
    on_cut = (w.real <= 0.0) & (np.abs(w.imag) <= 1e-14 * np.maximum(scale, 1.0)[..., None])
    if np.any(on_cut):
        raise BranchCutError("eigenvalue on (-inf, 0]; principal power undefined")
    powered = np.exp(z * np.log(w))
    res = S @ (powered[..., :, None] * np.linalg.inv(S))
    cond = np.linalg.cond(S)
    return res, cond <= cond_limit


_GL_NODES, _GL_WEIGHTS = leggauss(10)


def _balakrishnan_power(M: np.ndarray, alpha: float, window: float = 40.0) -> np.ndarray:
    """M^(-alpha), alpha in (0, 1), by the resolvent integral.

    Substituting t = e^u turns the integral into
        sin(pi a)/pi * int e^{(1-a)u} (e^u + M)^{-1} du,
    evaluated with 10-point Gauss-Legendre panels of width 1 on
    [-window, window].  The truncated tails are added in closed form
    (geometric expansion of the resolvent), which keeps the rule accurate
    for every alpha in (0, 1), not just mid-range ones.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"quadrature route needs alpha in (0,1), got {alpha}")
    A = np.asarray(M, dtype=np.complex128)
    single = A.ndim == 2
    if single:
        A = A[None]
    k = A.shape[-1]
    ident = np.eye(k, dtype=np.complex128)
    total = np.zeros_like(A)
    edges = np.arange(-window, window)
    for left in edges:
        u = left + 0.5 * (_GL_NODES + 1.0)
        for ui, wi in zip(u, _GL_WEIGHTS):
            resolvent = np.linalg.inv(np.exp(ui) * ident + A)
            total = total + (0.5 * wi * np.exp((1.0 - alpha) * ui)) * resolvent
    # Tails: (e^u + M)^{-1} ~ e^{-u}(I - e^{-u} M) above, ~ M^{-1}(I - e^u M^{-1}) below.
    Minv = np.linalg.inv(A)
    upper = np.exp(-alpha * window) / alpha * ident - np.exp(-(1.0 + alpha) * window) / (
        1.0 + alpha
    ) * A
    lower = np.exp(-(1.0 - alpha) * window) / (1.0 - alpha) * Minv - np.exp(
        -(2.0 - alpha) * window
    ) / (2.0 - alpha) * (Minv @ Minv)
    total = total + upper + lower
    res = (np.sin(np.pi * alpha) / np.pi) * total
    return res[0] if single else res


def matrix_power(M: np.ndarray, z: complex) -> np.ndarray:
    """Principal power M^z for a spectrum avoiding (-inf, 0].

    Diagonalizable matrices go through the eigendecomposition.  When the
    eigenbasis is ill-conditioned the real-exponent case z = -a, a in (0, 1),
    falls back to the resolvent quadrature; complex powers of defective
    matrices are rejected.
    """
    A = np.asarray(M)
    z = complex(z)
    res, ok = _eig_power(A.astype(np.complex128), z)
    if bool(np.all(ok)):
        if not np.iscomplexobj(M) and z.imag == 0.0 and np.allclose(res.imag, 0.0, atol=1e-10):
            return res.real
        return res
    if z.imag == 0.0 and -1.0 < z.real < 0.0:
        return _balakrishnan_power(A, -z.real)
    raise FieldError("ill-conditioned eigenbasis; only real exponents in (-1,0) supported")


def matrix_power_field(V: MatrixField, z: complex, negate: bool = True) -> np.ndarray:
    """Per-cell principal powers ((-1)^negate V(x))^z over a whole field.

    Cells whose eigenbasis is too ill-conditioned are recomputed with the
    quadrature route (real exponents only); cells on the branch cut make the
    whole call raise BranchCutError.
    """
    A = (-V.values if negate else V.values).astype(np.complex128)
    z = complex(z)
    res, ok = _eig_power(A, z)
    bad = ~ok
    if np.any(bad):
        if z.imag != 0.0 or not -1.0 < z.real < 0.0:
            raise FieldError(
                f"{int(bad.sum())} cells have defective matrices; "
                "only real exponents in (-1,0) supported there"
            )
        res[bad] = _balakrishnan_power(A[bad], -z.real)
    return res


def matrix_field_gradient(M: MatrixField) -> np.ndarray:
    """Centered-difference gradient of the entries, shape (n_cells, d, r, c).

    One-sided differences at the boundary layer (the ghost values are not
    part of the coefficient field, so the stencil shortens there).
    """
    grid = M.grid
    N, h = grid.n_per_axis, grid.spacing
    if grid.dim == 1:
        v = M.values
        g = np.empty((N, 1) + v.shape[1:], dtype=v.dtype)
        g[1:-1, 0] = (v[2:] - v[:-2]) / (2.0 * h)
        g[0, 0] = (v[1] - v[0]) / h
        g[-1, 0] = (v[-1] - v[-2]) / h
        return g
    v = M.values.reshape((N, N) + M.values.shape[1:])
    g = np.empty((N, N, 2) + v.shape[2:], dtype=v.dtype)
    for axis in range(2):
        sl = [slice(None)] * 2
        lo, mid, hi = [slice(None)] * 2, [slice(None)] * 2, [slice(None)] * 2
        mid[axis] = slice(1, -1)
        lo[axis] = slice(0, 1)
        hi[axis] = slice(-1, None)
        up, dn = [slice(None)] * 2, [slice(None)] * 2
        up[axis] = slice(2, None)
        dn[axis] = slice(0, -2)
        g[tuple(mid) + (axis,)] = (v[tuple(up)] - v[tuple(dn)]) / (2.0 * h)
        first, second = [slice(None)] * 2, [slice(None)] * 2
        first[axis], second[axis] = slice(0, 1), slice(1, 2)
        g[tuple(lo) + (axis,)] = (v[tuple(second)] - v[tuple(first)]) / h
        last, prev = [slice(None)] * 2, [slice(None)] * 2
        last[axis], prev[axis] = slice(-1, None), slice(-2, -1)
        g[tuple(hi) + (axis,)] = (v[tuple(last)] - v[tuple(prev)]) / h
    return g.reshape((grid.n_cells, 2) + M.values.shape[1:])


@dataclass
class HypothesisReport:
    """Measured structural quantities for a (Q, V) pair.

    All suprema are over the sampled box, not over R^d; growth_sup in
    particular is only a box-restricted surrogate for the uniform bound.
    """

    eta1: float
    eta2: float
    dissipativity_margin: float
    alpha: float
    growth_sup: float
    offdiag_min: float
    kappa_profile: np.ndarray = field(repr=False)
    shift_beta: float

    @property
    def elliptic(self) -> bool:
        return self.eta1 > 0.0

    @property
    def dissipative(self) -> bool:
        """Quadratic form of V bounded by -|xi|^2 (margin <= 0)."""
        return self.dissipativity_margin <= 1e-12

    @property
    def passes(self) -> bool:
        return self.elliptic and self.dissipative and np.isfinite(self.growth_sup)


def validate_hypotheses(Q: MatrixField, V: MatrixField, alpha: float) -> HypothesisReport:
    """Measure the coefficient assumptions on the sampled grid.

    Never raises on a violation: the report records margins and the caller
    decides.  Derivatives of V come from grid finite differences, so
    growth_sup carries the same O(h^2) sampling error as everything else.
    """
    if Q.grid != V.grid:
        raise FieldError("Q and V live on different grids")
    if not 0.0 <= alpha < 0.5:
        raise ValueError(f"alpha must lie in [0, 0.5), got {alpha}")

    qsym = 0.5 * (Q.values + Q.values.transpose(0, 2, 1))
    qeigs = np.linalg.eigvalsh(qsym)
    eta1 = float(qeigs[:, 0].min())
    eta2 = float(qeigs[:, -1].max())

    vsym = 0.5 * (V.values + np.conj(V.values.transpose(0, 2, 1)))
    lam_max = float(np.linalg.eigvalsh(vsym)[:, -1].max())
    margin = lam_max + 1.0
    shift_beta = max(0.0, lam_max)

    gradV = matrix_field_gradient(V)
    try:
        P = matrix_power_field(V, -alpha) if alpha > 0.0 else np.broadcast_to(
            np.eye(V.rows, dtype=np.complex128), V.values.shape
        )
        prod = gradV.astype(np.complex128) @ P[:, None, :, :]
        growth_sup = float(np.sqrt((np.abs(prod) ** 2).sum(axis=(-2, -1))).max())
    except (BranchCutError, FieldError, np.linalg.LinAlgError):
        growth_sup = np.inf

    m = V.rows
    if m > 1:
        off = ~np.eye(m, dtype=bool)
        offdiag_min = float(V.values.real[:, off].min())
    else:
        offdiag_min = 0.0

    kappa = np.linalg.svd(V.values, compute_uv=False)[:, -1]

    return HypothesisReport(
        eta1=eta1,
        eta2=eta2,
        dissipativity_margin=margin,
        alpha=float(alpha),
        growth_sup=growth_sup,
        offdiag_min=offdiag_min,
        kappa_profile=kappa,
        shift_beta=float(shift_beta),
    )


def shift_potential(V: MatrixField, beta: float | None = None) -> MatrixField:
    """Subtract (beta + 1) I so the quadratic form drops below -|xi|^2.

    beta defaults to the measured max of the symmetric-part eigenvalues
    (clipped at 0).  The shift is recorded on the result; evolving with the
    shifted potential rescales the semigroup by e^{-t(beta+1)} relative to
    the unshifted one.
    """
    if beta is None:
        vsym = 0.5 * (V.values + np.conj(V.values.transpose(0, 2, 1)))
        beta = max(0.0, float(np.linalg.eigvalsh(vsym)[:, -1].max()))
    s = beta + 1.0
    ident = np.eye(V.rows, dtype=V.values.dtype)
    return MatrixField(
        grid=V.grid,
        kind=V.kind,
        values=V.values - s * ident,
        shift=V.shift + s,
    )


# ---------------------------------------------------------------------------
# Named coefficient rules, selectable from configs.

def _rule_identity_q(dim, **_):
    ident = np.eye(dim)
    return lambda x: ident, DIFFUSION


def _rule_anisotropic_q(dim, theta=0.0, ratio=1.0, **_):
    if dim == 1:
        mat = np.array([[float(ratio)]])
    else:
        c, s = np.cos(theta), np.sin(theta)
        rot = np.array([[c, -s], [s, c]])
        mat = rot @ np.diag([1.0, float(ratio)]) @ rot.T
    return lambda x: mat, DIFFUSION


def _rule_cross_q(dim, q12=0.3, **_):
    if dim != 2:
        raise FieldError("cross_Q needs dim = 2")
    mat = np.array([[1.0, float(q12)], [float(q12), 1.0]])
    return lambda x: mat, DIFFUSION


_J = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _rule_rotation_v(dim, r=1.5, **_):
    if not 1.0 <= r < 2.0:
        raise FieldError(f"rotation exponent r must lie in [1, 2), got {r}")

    def rule(x):
        return (1.0 + np.linalg.norm(x) ** r) * _J

    return rule, POTENTIAL


def _rule_upper_triangular_v(dim, **_):
    def rule(x):
        return np.array([[0.0, x[0]], [0.0, 0.0]])

    return rule, POTENTIAL


def _rule_degenerate_v(dim, **_):
    base = np.array([[-1.0, 1.0], [1.0, -1.0]])

    def rule(x):
        return np.linalg.norm(x) * base

    return rule, POTENTIAL


def _rule_diag_v(dim, c=-1.0, m=2, **_):
    mat = float(c) * np.eye(int(m))
    return lambda x: mat, POTENTIAL


def _rule_coupled_v(dim, a=-2.0, b=1.0, c=0.5, **_):
    """Constant 2x2 potential [[a, b], [c, a]]; sign of b, c drives positivity."""
    mat = np.array([[float(a), float(b)], [float(c), float(a)]])
    return lambda x: mat, POTENTIAL


def _rule_complex_linear_v(dim, **_):
    """1-component potential -i x[0]; the non-analyticity witness."""

    def rule(x):
        return np.array([[-1j * x[0]]])

    return rule, POTENTIAL


def _rule_custom_table(dim, path=None, kind=POTENTIAL, **_):
    if path is None:
        raise FieldError("custom_table needs a path parameter")
    table = np.loadtxt(path, delimiter=",", skiprows=1)
    cells = table[:, 0].astype(int)
    rows = table[:, 1].astype(int)
    cols = table[:, 2].astype(int)
    k = rows.max() + 1
    n = cells.max() + 1
    vals = np.zeros((n, k, k), dtype=np.complex128 if table.shape[1] > 4 else np.float64)
    if table.shape[1] > 4:
        vals[cells, rows, cols] = table[:, 3] + 1j * table[:, 4]
    else:
        vals[cells, rows, cols] = table[:, 3]
    holder = {"vals": vals, "i": -1}

    def rule(x):
        holder["i"] += 1
        return holder["vals"][holder["i"]]

    return rule, kind


_RULES = {
    "identity_Q": _rule_identity_q,
    "anisotropic_Q": _rule_anisotropic_q,
    "cross_Q": _rule_cross_q,
    "rotation_V": _rule_rotation_v,
    "upper_triangular_V": _rule_upper_triangular_v,
    "degenerate_V": _rule_degenerate_v,
    "diag_V": _rule_diag_v,
    "coupled_V": _rule_coupled_v,
    "complex_linear_V": _rule_complex_linear_v,
    "custom_table": _rule_custom_table,
}

RULE_NAMES = tuple(sorted(_RULES))


def make_rule(name: str, dim: int, **params):
    """Look up a named coefficient rule; returns (callable, kind)."""
    try:
        factory = _RULES[name]
    except KeyError:
        raise FieldError(f"unknown rule {name!r}; known: {', '.join(RULE_NAMES)}") from None
    return factory(dim, **params)
