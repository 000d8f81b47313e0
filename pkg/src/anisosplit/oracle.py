"""Independent checks on the admittance expansion.

Three unrelated routes corroborate the symbolic construction:

* scaling of the full-equation residual: the truncated sum is plugged
  into the admittance symbol equation and the residual is measured
  along (xi, s) -> (lam xi, lam s); the log-log slope must match the
  first uncancelled degree,
* an exact quadratic-root oracle for homogeneous media, where the
  symbol equation collapses to a scalar quadratic, and
* a grid oracle on depth-independent media: the 2x2 block systems
  operator is discretized with spectral derivatives on the transverse
  torus, its stable/unstable invariant subspaces give a matrix
  admittance, and quantized symbol truncations are compared against it.

Branch convention everywhere: the + family is the one whose generator
has positive real part (down-going, decaying with increasing depth).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .expr import (
    Expr,
    VarId,
    ZERO,
    const,
    diff,
    eval_expr,
    ipow,
    mul,
    neg,
    recip,
    simplify,
    variable,
)
from .medium import MediumSpec, is_depth_independent, is_homogeneous, schur
from .expansion import AdmittanceExpansion, SplitSymbols, gamma1
from .symbols import (
    SymbolTerm,
    TransverseGrid,
    quantize_apply,
    random_smooth_field,
    systems_symbols,
    x_derivative,
    xi_derivative,
)

__all__ = [
    "OracleError",
    "GlancingIncidenceError",
    "SpectralGapError",
    "ResidualReport",
    "QuadRoots",
    "GridOracleResult",
    "OrderClaimReport",
    "riccati_residual",
    "quad_oracle",
    "grid_riccati_oracle",
    "operator_distance",
    "order_claim_check",
    "depth_derivative_leading",
    "draw_probe_points",
    "fit_loglog",
    "DEFAULT_LAMBDAS",
]

DEFAULT_LAMBDAS = (4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0)

_XI1 = variable(VarId.XI1)
_XI2 = variable(VarId.XI2)
_S = variable(VarId.S)


class OracleError(Exception):
    pass


class GlancingIncidenceError(OracleError):
    """The quadratic discriminant degenerates at a probe point."""


class SpectralGapError(OracleError):
    """The discrete systems operator has eigenvalues too close to Re = 0."""


def fit_loglog(lambdas, values):
    """Least-squares slope of log(value) against log(lambda).

    Returns (slope, intercept, max_dev) with max_dev the worst absolute
    deviation of log(value) from the fitted line.
    """
    lam = np.asarray(lambdas, dtype=float)
    val = np.clip(np.asarray(values, dtype=float), 1e-300, None)
    if lam.size < 2:
        raise OracleError("need at least two scales for a slope fit")
    logs = np.log(val)
    slope, intercept = np.polyfit(np.log(lam), logs, 1)
    dev = float(np.max(np.abs(logs - (slope * np.log(lam) + intercept))))
    return float(slope), float(intercept), dev


def draw_probe_points(m: MediumSpec, count: int, rng=None):
    """Random (x1, x2, x3, xi1, xi2, s) tuples: x in the box, |xi| ~ 1,
    s in the open right half plane away from the imaginary axis."""
    if rng is None:
        rng = np.random.default_rng(7)
    pts = []
    for _ in range(count):
        x = [rng.uniform(lo, hi) for lo, hi in m.box]
        phi = rng.uniform(0.0, 2.0 * np.pi)
        mag = rng.uniform(0.6, 1.4)
        r = rng.uniform(0.7, 1.4)
        th = rng.uniform(-1.1, 1.1)
        pts.append(
            (
                x[0],
                x[1],
                x[2],
                mag * math.cos(phi),
                mag * math.sin(phi),
                r * complex(math.cos(th), math.sin(th)),
            )
        )
    return pts


# ---------------------------------------------------------------------------
# residual scaling


@dataclass(frozen=True)
class ResidualReport:
    """Scaling diagnostics for the truncated admittance symbol."""

    order: int
    eta: int
    beta_cap: int
    lambdas: tuple
    rms: tuple
    slope: float
    intercept: float
    fit_max_dev: float
    expected_slope: float
    slope_tol: float = 0.3

    @property
    def passed(self) -> bool:
        return abs(self.slope - self.expected_slope) <= self.slope_tol

    def describe(self) -> str:
        status = "ok" if self.passed else "FAIL"
        return (
            f"residual slope {self.slope:+.3f} (expected {self.expected_slope:+.1f} "
            f"+- {self.slope_tol}), fit dev {self.fit_max_dev:.2e} [{status}]"
        )


def _residual_expr(exp: AdmittanceExpansion, beta_cap: int) -> Expr:
    """Full symbol equation applied to the plain truncated sum.

    The composition tail is capped at |beta| <= beta_cap; the capped
    part scales below the first uncancelled degree for beta_cap >=
    order + 1, so it never pollutes the slope.
    """
    m = exp.medium
    A = systems_symbols(m)
    inv33 = recip(m.alpha[2][2])
    y = ZERO
    for t in exp.terms:
        y = y + t.expr
    y = simplify(y)
    b = simplify(_S * inv33 * y + A.a22.term(1))

    dxi = {(0, 0): y}
    dxb = {(0, 0): b}
    acc = ZERO
    for r in range(0, beta_cap + 1):
        coeff_i = (-1j) ** r
        for b1 in range(r + 1):
            b2 = r - b1
            if (b1, b2) not in dxi:
                src = (b1 - 1, b2) if b1 else (b1, b2 - 1)
                v = VarId.XI1 if b1 else VarId.XI2
                dxi[(b1, b2)] = diff(dxi[src], v)
            if (b1, b2) not in dxb:
                src = (b1 - 1, b2) if b1 else (b1, b2 - 1)
                v = VarId.X1 if b1 else VarId.X2
                dxb[(b1, b2)] = diff(dxb[src], v)
            cf = coeff_i / (math.factorial(b1) * math.factorial(b2))
            acc = acc + mul(const(cf), mul(dxi[(b1, b2)], dxb[(b1, b2)]))

    f1 = simplify(m.alpha[0][2] * inv33)
    f2 = simplify(m.alpha[1][2] * inv33)
    acc = acc - A.a11.term(1) * y
    acc = acc - (diff(mul(f1, y), VarId.X1) + diff(mul(f2, y), VarId.X2))
    acc = acc - (A.a12.term(1) + A.a12.term(0))
    if exp.eta:
        acc = acc - diff(y, VarId.X3)
    return simplify(acc)


def riccati_residual(
    exp: AdmittanceExpansion,
    points=None,
    lambdas=DEFAULT_LAMBDAS,
    rng=None,
    beta_cap=None,
) -> ResidualReport:
    """Measure the symbol-equation residual along the scaling ray.

    With terms through degree -N the equation cancels down to degree
    -N + 1, so |residual| ~ lam^-N; the report carries the fitted slope
    against the expectation -N.
    """
    if beta_cap is None:
        beta_cap = exp.order + 1
    if points is None:
        points = draw_probe_points(exp.medium, 6, rng)
    resid = _residual_expr(exp, beta_cap)
    pts = np.asarray(points, dtype=complex)
    lam = np.asarray(lambdas, dtype=float)
    env = {
        VarId.X1: pts[:, 0].real[:, None],
        VarId.X2: pts[:, 1].real[:, None],
        VarId.X3: pts[:, 2].real[:, None],
        VarId.XI1: pts[:, 3].real[:, None] * lam[None, :],
        VarId.XI2: pts[:, 4].real[:, None] * lam[None, :],
        VarId.S: pts[:, 5][:, None] * lam[None, :],
    }
    vals = np.asarray(eval_expr(resid, env))
    rms = np.sqrt(np.mean(np.abs(vals) ** 2, axis=0))
    slope, intercept, dev = fit_loglog(lam, rms)
    return ResidualReport(
        order=exp.order,
        eta=exp.eta,
        beta_cap=beta_cap,
        lambdas=tuple(float(v) for v in lam),
        rms=tuple(float(v) for v in rms),
        slope=slope,
        intercept=intercept,
        fit_max_dev=dev,
        expected_slope=float(-exp.order),
    )


# ---------------------------------------------------------------------------
# homogeneous quadratic oracle


@dataclass(frozen=True)
class QuadRoots:
    """Exact admittance values for a homogeneous medium (per probe)."""

    y_plus: np.ndarray
    y_minus: np.ndarray
    g_plus: np.ndarray
    g_minus: np.ndarray


def _constant_value(e: Expr, m: MediumSpec) -> complex:
    env = {
        VarId.X1: 0.5 * (m.box[0][0] + m.box[0][1]),
        VarId.X2: 0.5 * (m.box[1][0] + m.box[1][1]),
        VarId.X3: 0.5 * (m.box[2][0] + m.box[2][1]),
    }
    return complex(eval_expr(e, env))


def quad_oracle(m: MediumSpec, xi, s) -> QuadRoots:
    """Admittance of a homogeneous medium from the scalar quadratic.

    In constant coefficients the symbol equation is exactly
    a21 y^2 + (a22 - a11) y - a12 = 0; the two roots are labelled by
    the sign of Re(a21 y + a22) (the would-be generator). Raises
    GlancingIncidenceError when the discriminant degenerates and
    OracleError when the labelling is ambiguous or the medium varies.
    """
    if not is_homogeneous(m):
        raise OracleError("quad_oracle needs a homogeneous medium")
    xi_arr = np.atleast_2d(np.asarray(xi, dtype=float))
    if xi_arr.shape[-1] != 2:
        raise OracleError("xi must have two components")
    s_arr = np.broadcast_to(np.asarray(s, dtype=complex), (xi_arr.shape[0],)).copy()
    if np.any(s_arr.real <= 0):
        raise OracleError("s must lie in the open right half plane")

    a = [[_constant_value(m.alpha[i][j], m) for j in range(3)] for i in range(3)]
    kap = _constant_value(m.kappa, m)
    sd = schur(m)
    Q = [[_constant_value(sd.Q[i][j], m) for j in range(2)] for i in range(2)]

    x1, x2 = xi_arr[:, 0], xi_arr[:, 1]
    inv33 = 1.0 / a[2][2]
    a11 = 1j * (x1 * a[0][2] + x2 * a[1][2]) * inv33
    a22 = 1j * (x1 * a[2][0] + x2 * a[2][1]) * inv33
    a21 = s_arr * inv33
    qform = (
        Q[0][0] * x1 * x1 + (Q[0][1] + Q[1][0]) * x1 * x2 + Q[1][1] * x2 * x2
    )
    a12 = s_arr * kap + qform / s_arr

    disc = (a22 - a11) ** 2 + 4.0 * a21 * a12
    scale = np.abs(a22 - a11) ** 2 + 4.0 * np.abs(a21) * np.abs(a12) + 1e-300
    if np.any(np.abs(disc) <= 1e-12 * scale):
        raise GlancingIncidenceError("discriminant vanishes (glancing incidence)")
    sq = np.sqrt(disc)
    r1 = (a11 - a22 + sq) / (2.0 * a21)
    r2 = (a11 - a22 - sq) / (2.0 * a21)
    g1 = a21 * r1 + a22
    g2 = a21 * r2 + a22
    take1 = g1.real > 0
    if np.any(take1 == (g2.real > 0)):
        raise OracleError("cannot label branches: generator signs agree")
    y_plus = np.where(take1, r1, r2)
    y_minus = np.where(take1, r2, r1)
    g_plus = np.where(take1, g1, g2)
    g_minus = np.where(take1, g2, g1)
    return QuadRoots(y_plus=y_plus, y_minus=y_minus, g_plus=g_plus, g_minus=g_minus)


# ---------------------------------------------------------------------------
# grid oracle


@dataclass(frozen=True)
class GridOracleResult:
    """Matrix admittances extracted from the discrete systems operator."""

    grid: TransverseGrid
    s: complex
    y_plus: np.ndarray
    y_minus: np.ndarray
    eigenvalues: np.ndarray
    gap: float
    cond_plus: float
    cond_minus: float
    riccati_rel_plus: float
    riccati_rel_minus: float
    blocks: tuple  # (A11, A12, A21, A22)


def _grid_field(e: Expr, grid: TransverseGrid, x3: float) -> np.ndarray:
    X1g, X2g = grid.x_mesh()
    env = {VarId.X1: X1g, VarId.X2: X2g, VarId.X3: complex(x3)}
    return np.broadcast_to(
        np.asarray(eval_expr(e, env), dtype=np.complex128), X1g.shape
    ).copy()


def _check_grid_periodic(m: MediumSpec, grid: TransverseGrid):
    rng = np.random.default_rng(11)
    pts = rng.uniform(0.0, 1.0, size=(5, 2)) * np.array([grid.L1, grid.L2])
    fields = [m.kappa] + [e for row in m.alpha for e in row]
    for e in fields:
        base = np.asarray(
            eval_expr(e, {VarId.X1: pts[:, 0], VarId.X2: pts[:, 1], VarId.X3: 0.0})
        )
        for shift in ((grid.L1, 0.0), (0.0, grid.L2)):
            moved = np.asarray(
                eval_expr(
                    e,
                    {
                        VarId.X1: pts[:, 0] + shift[0],
                        VarId.X2: pts[:, 1] + shift[1],
                        VarId.X3: 0.0,
                    },
                )
            )
            if np.max(np.abs(moved - base)) > 1e-9 * (1.0 + np.max(np.abs(base))):
                raise OracleError(
                    "medium is not periodic over the grid box; the spectral "
                    "discretization would be inconsistent"
                )


def _derivative_matrix(n: int, L: float) -> np.ndarray:
    w = 2.0 * np.pi * np.fft.fftfreq(n) * n / L
    F = np.fft.fft(np.eye(n), axis=0)
    return np.fft.ifft((1j * w)[:, None] * F, axis=0)


def grid_riccati_oracle(
    m: MediumSpec,
    grid: TransverseGrid,
    s,
    gap_rtol: float = 1e-6,
    cond_cap: float = 1e10,
) -> GridOracleResult:
    """Matrix admittance from the invariant subspaces of the discrete
    systems operator.

    Needs a depth-independent medium whose fields are periodic over the
    grid box. The flattened operator A acts on (v3, p) stacked; modes
    evolve like exp(-lam x3), so eigenvalues with Re lam > 0 make up the
    + (down-going) family. Y = W V^-1 with W the v3 rows and V the p
    rows of the family's eigenvectors. Raises on a thin spectral gap,
    unequal family sizes, or an ill-conditioned eigenbasis.
    """
    if not is_depth_independent(m):
        raise OracleError("grid oracle needs a depth-independent medium")
    s = complex(s)
    if s.real <= 0:
        raise OracleError("s must lie in the open right half plane")
    _check_grid_periodic(m, grid)

    n = grid.n
    N = n * n
    D1 = np.kron(_derivative_matrix(n, grid.L1), np.eye(n))
    D2 = np.kron(np.eye(n), _derivative_matrix(n, grid.L2))

    def dg(e):
        return np.diag(_grid_field(e, grid, 0.0).ravel())

    inv33 = recip(m.alpha[2][2])
    sd = schur(m)
    f1 = dg(simplify(m.alpha[0][2] * inv33))
    f2 = dg(simplify(m.alpha[1][2] * inv33))
    A11 = D1 @ f1 + D2 @ f2
    A12 = s * dg(m.kappa) - (
        D1 @ dg(sd.Q[0][0]) @ D1
        + D1 @ dg(sd.Q[0][1]) @ D2
        + D2 @ dg(sd.Q[1][0]) @ D1
        + D2 @ dg(sd.Q[1][1]) @ D2
    ) / s
    A21 = s * dg(inv33)
    A22 = dg(simplify(m.alpha[2][0] * inv33)) @ D1 + dg(simplify(m.alpha[2][1] * inv33)) @ D2

    A = np.block([[A11, A12], [A21, A22]])
    lam, phi = scipy.linalg.eig(A)
    scale = float(np.max(np.abs(lam)))
    gap = float(np.min(np.abs(lam.real)))
    if gap < gap_rtol * scale:
        raise SpectralGapError(
            f"eigenvalue within {gap:.3e} of the imaginary axis (scale {scale:.3e})"
        )
    pos = lam.real > 0
    if int(np.sum(pos)) != N:
        raise OracleError(
            f"family sizes {int(np.sum(pos))} / {int(np.sum(~pos))} are not equal"
        )

    def family(mask):
        W = phi[:N, mask]
        V = phi[N:, mask]
        cond = float(np.linalg.cond(V))
        if cond > cond_cap:
            raise OracleError(f"eigenbasis condition {cond:.3e} exceeds {cond_cap:.1e}")
        Y = W @ np.linalg.inv(V)
        t1 = Y @ A21 @ Y
        t2 = Y @ A22
        t3 = A11 @ Y
        resid = t1 + t2 - t3 - A12
        denom = sum(np.linalg.norm(t) for t in (t1, t2, t3, A12)) + 1e-300
        return Y, cond, float(np.linalg.norm(resid) / denom)

    y_plus, cond_p, rel_p = family(pos)
    y_minus, cond_m, rel_m = family(~pos)
    return GridOracleResult(
        grid=grid,
        s=s,
        y_plus=y_plus,
        y_minus=y_minus,
        eigenvalues=lam,
        gap=gap,
        cond_plus=cond_p,
        cond_minus=cond_m,
        riccati_rel_plus=rel_p,
        riccati_rel_minus=rel_m,
        blocks=(A11, A12, A21, A22),
    )


def operator_distance(
    sym,
    ymat: np.ndarray,
    grid: TransverseGrid,
    s,
    probes: int = 8,
    rng=None,
    x3: float = 0.0,
) -> float:
    """Worst relative disagreement between Op(sym) and a matrix operator
    over band-limited random probe fields."""
    if rng is None:
        rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(probes):
        u = random_smooth_field(grid, rng)
        ref = (ymat @ u.ravel()).reshape(u.shape)
        got = quantize_apply(sym, u, grid, x3, s)
        denom = np.linalg.norm(ref)
        if denom < 1e-300:
            raise OracleError("reference operator annihilated a probe field")
        worst = max(worst, float(np.linalg.norm(got - ref) / denom))
    return worst


# ---------------------------------------------------------------------------
# order bookkeeping


@dataclass(frozen=True)
class OrderClaimReport:
    """Measured growth orders of the composition p and of d3 ell."""

    lambdas: tuple
    p_slope: float | None
    d3_slope: float | None
    p_rms: tuple
    d3_rms: tuple
    p_expected: float = 1.0
    d3_expected: float = 0.0
    slope_tol: float = 0.3

    @property
    def passed(self) -> bool:
        ok_p = self.p_slope is None or abs(self.p_slope - self.p_expected) <= self.slope_tol
        ok_d = self.d3_slope is None or abs(self.d3_slope - self.d3_expected) <= self.slope_tol
        return ok_p and ok_d

    def describe(self) -> str:
        fmt = lambda v: "exactly 0" if v is None else f"{v:+.3f}"
        status = "ok" if self.passed else "FAIL"
        return (
            f"p grows like lam^{fmt(self.p_slope)} (expected +1), "
            f"d3 ell like lam^{fmt(self.d3_slope)} (expected 0) [{status}]"
        )


def _scaling_rms(expr: Expr, points, lambdas):
    pts = np.asarray(points, dtype=complex)
    lam = np.asarray(lambdas, dtype=float)
    env = {
        VarId.X1: pts[:, 0].real[:, None],
        VarId.X2: pts[:, 1].real[:, None],
        VarId.X3: pts[:, 2].real[:, None],
        VarId.XI1: pts[:, 3].real[:, None] * lam[None, :],
        VarId.XI2: pts[:, 4].real[:, None] * lam[None, :],
        VarId.S: pts[:, 5][:, None] * lam[None, :],
    }
    vals = np.asarray(eval_expr(expr, env))
    return np.sqrt(np.mean(np.abs(vals) ** 2, axis=0))


def order_claim_check(
    split: SplitSymbols, points=None, lambdas=DEFAULT_LAMBDAS, rng=None
) -> OrderClaimReport:
    """Check that p = ell o g is first order while d3 ell is zeroth order.

    This is the quantitative form of the claim that the depth
    derivative of the composition matrix sits one order below the
    generator, which is what licenses dropping it at leading order in
    the approximate (eta = 0) splitting.
    """
    if points is None:
        points = draw_probe_points(split.medium, 6, rng)
    p_expr = simplify(split.p[0][0].total())
    d3_expr = simplify(split.d3_ell[0][0].total())

    p_slope = d3_slope = None
    p_rms = d3_rms = ()
    if not (p_expr.op == "const" and p_expr.data == 0):
        vals = _scaling_rms(p_expr, points, lambdas)
        p_slope, _, _ = fit_loglog(lambdas, vals)
        p_rms = tuple(float(v) for v in vals)
    if not (d3_expr.op == "const" and d3_expr.data == 0):
        vals = _scaling_rms(d3_expr, points, lambdas)
        d3_slope, _, _ = fit_loglog(lambdas, vals)
        d3_rms = tuple(float(v) for v in vals)
    return OrderClaimReport(
        lambdas=tuple(float(v) for v in lambdas),
        p_slope=p_slope,
        d3_slope=d3_slope,
        p_rms=p_rms,
        d3_rms=d3_rms,
    )


def depth_derivative_leading(m: MediumSpec, sign: int) -> SymbolTerm:
    """Hand formula for the degree-0 part of d3 y.

    s^-1 (-(1/2) i xi_mu d3(a_{3mu} - a_{mu3})
          +- (2 gamma1)^-1 (s^2 d3 kappa + (d3 Qt_{mu nu}) xi_mu xi_nu)).

    It coincides with the exact derivative of the leading term when
    alpha33 is depth independent and identically one; for general media
    the exact symbolic derivative picks up extra d3 alpha33 terms.
    """
    if sign not in (1, -1):
        raise OracleError("sign must be +1 or -1")
    sd = schur(m)
    g = gamma1(m)
    drift = const(1j) * (
        _XI1 * diff(simplify(m.alpha[2][0] - m.alpha[0][2]), VarId.X3)
        + _XI2 * diff(simplify(m.alpha[2][1] - m.alpha[1][2]), VarId.X3)
    )
    xis = (_XI1, _XI2)
    qdot = ipow(_S, 2) * diff(m.kappa, VarId.X3)
    for mu in range(2):
        for nu in range(2):
            qdot = qdot + diff(sd.Qt[mu][nu], VarId.X3) * xis[mu] * xis[nu]
    e = recip(_S) * (
        const(-0.5) * drift
        + const(sign) * recip(const(2) * g.expr) * qdot
    )
    return SymbolTerm(simplify(e), 0)
