"""Polyhomogeneous symbol calculus on the transverse torus.

Symbols are finite sums of terms, each an expression that is (jointly)
homogeneous of an integer degree in (xi1, xi2, s). The Laplace parameter
s scales like a wavenumber, so "degree" always means joint degree in
(xi, s). Composition follows the transverse Kohn-Nirenberg rule

    r ~ sum_beta (1/beta!) (d_xi^beta p) ((1/i) d_x^beta q),

with beta a 2-multi-index over (xi1, xi2)/(x1, x2); the target degree of
each contribution is deg p - |beta| + deg q, and a floor truncates the
sum. Quantization realizes a symbol as an operator on periodic grid
fields through the discrete inverse Fourier sum (the unmatched -N/2
Nyquist row/column of the input spectrum is always projected out).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .expr import (
    Expr,
    VarId,
    ZERO,
    const,
    diff,
    eval_expr,
    free_vars,
    mul,
    recip,
    simplify,
    variable,
)
from .medium import MediumSpec, schur

__all__ = [
    "SymbolTerm",
    "PolyhomSymbol",
    "SymbolMatrix22",
    "TransverseGrid",
    "SymbolError",
    "systems_symbols",
    "compose",
    "compose_degree_part",
    "quantize_apply",
    "quantize_matrix",
    "homogeneity_check",
    "HomogeneityReport",
    "xi_derivative",
    "x_derivative",
    "random_smooth_field",
]


class SymbolError(Exception):
    pass


@dataclass(frozen=True)
class SymbolTerm:
    """One homogeneous component: an expression and its declared degree."""

    expr: Expr
    degree: int


def _is_zero_expr(e: Expr) -> bool:
    return e.op == "const" and e.data == 0


class PolyhomSymbol:
    """A finite polyhomogeneous sum with strictly decreasing degrees.

    ``terms`` maps degree -> expression (at most one term per degree;
    exact-zero expressions are dropped). ``low_degree`` is the truncation
    floor: degrees below it are unknown, not zero.
    """

    __slots__ = ("terms", "low_degree")

    def __init__(self, terms, floor=None):
        clean = {}
        for d, e in dict(terms).items():
            if isinstance(e, SymbolTerm):
                if e.degree != d:
                    raise SymbolError(f"term degree {e.degree} filed under {d}")
                e = e.expr
            if not isinstance(e, Expr):
                raise SymbolError("symbol terms must be expressions")
            if not _is_zero_expr(e):
                clean[int(d)] = e
        self.terms = dict(sorted(clean.items(), reverse=True))
        if floor is None:
            floor = min(self.terms) if self.terms else 0
        self.low_degree = int(floor)
        if self.terms and min(self.terms) < self.low_degree:
            raise SymbolError("term below the truncation floor")

    @classmethod
    def from_term(cls, expr, degree, floor=None):
        return cls({int(degree): expr}, floor=degree if floor is None else floor)

    @classmethod
    def zero(cls, floor=0):
        return cls({}, floor=floor)

    @property
    def top_degree(self):
        return max(self.terms) if self.terms else None

    @property
    def is_zero(self):
        return not self.terms

    def term(self, degree) -> Expr:
        return self.terms.get(degree, ZERO)

    def term_list(self):
        return [SymbolTerm(e, d) for d, e in self.terms.items()]

    def total(self) -> Expr:
        """The plain sum of all retained terms (no grading)."""
        acc = ZERO
        for _, e in self.terms.items():
            acc = acc + e
        return acc

    def truncate(self, floor) -> "PolyhomSymbol":
        return PolyhomSymbol({d: e for d, e in self.terms.items() if d >= floor}, floor=floor)

    def __add__(self, other):
        if not isinstance(other, PolyhomSymbol):
            return NotImplemented
        out = dict(self.terms)
        for d, e in other.terms.items():
            out[d] = simplify(out[d] + e) if d in out else e
        return PolyhomSymbol(out, floor=max(self.low_degree, other.low_degree))

    def __sub__(self, other):
        return self + other.scale(const(-1))

    def scale(self, factor, degree_shift=0) -> "PolyhomSymbol":
        """Multiply every term by a fixed expression of known degree."""
        factor = factor if isinstance(factor, Expr) else const(factor)
        return PolyhomSymbol(
            {d + degree_shift: simplify(mul(factor, e)) for d, e in self.terms.items()},
            floor=self.low_degree + degree_shift,
        )

    def eval(self, env):
        vals = [eval_expr(e, env) for e in self.terms.values()]
        if not vals:
            return 0j
        acc = vals[0]
        for v in vals[1:]:
            acc = acc + v
        return acc

    def __repr__(self):
        degs = ", ".join(str(d) for d in self.terms)
        return f"PolyhomSymbol(degrees=[{degs}], floor={self.low_degree})"


@dataclass(frozen=True)
class SymbolMatrix22:
    """2x2 matrix of polyhomogeneous symbols (entries row-major)."""

    a11: PolyhomSymbol
    a12: PolyhomSymbol
    a21: PolyhomSymbol
    a22: PolyhomSymbol

    def entry(self, i, j):
        return (self.a11, self.a12, self.a21, self.a22)[2 * (i - 1) + (j - 1)]


# ---------------------------------------------------------------------------
# derivatives in the calculus


def xi_derivative(e: Expr, beta) -> Expr:
    b1, b2 = beta
    for _ in range(b1):
        e = diff(e, VarId.XI1)
    for _ in range(b2):
        e = diff(e, VarId.XI2)
    return e


def x_derivative(e: Expr, beta) -> Expr:
    b1, b2 = beta
    for _ in range(b1):
        e = diff(e, VarId.X1)
    for _ in range(b2):
        e = diff(e, VarId.X2)
    return e


def _multi_indices(total):
    return [(i, total - i) for i in range(total + 1)]


def compose_degree_part(p_terms, q_terms, d) -> Expr:
    """Degree-d part of the composition of two graded term maps.

    ``p_terms``/``q_terms`` map degree -> expression. Collects every
    (1/beta!) d_xi^beta p_j * ((1/i) d_x)^beta q_k with j - |beta| + k = d.
    """
    acc = ZERO
    for j, pj in p_terms.items():
        for k, qk in q_terms.items():
            r = j + k - d
            if r < 0:
                continue
            if r > 0 and not (free_vars(qk) & {VarId.X1, VarId.X2}):
                continue  # x-independent right factor: only beta = 0 survives
            for beta in _multi_indices(r):
                dp = xi_derivative(pj, beta)
                if _is_zero_expr(dp):
                    continue
                dq = x_derivative(qk, beta)
                if _is_zero_expr(dq):
                    continue
                coeff = (-1j) ** r / (math.factorial(beta[0]) * math.factorial(beta[1]))
                acc = acc + mul(const(coeff), mul(dp, dq))
    return simplify(acc)


def compose(p: PolyhomSymbol, q: PolyhomSymbol, floor) -> PolyhomSymbol:
    """Asymptotic composition p o q truncated at the given floor."""
    if p.is_zero or q.is_zero:
        return PolyhomSymbol.zero(floor)
    top = p.top_degree + q.top_degree
    out = {}
    for d in range(top, floor - 1, -1):
        e = compose_degree_part(p.terms, q.terms, d)
        if not _is_zero_expr(e):
            out[d] = e
    return PolyhomSymbol(out, floor=floor)


# ---------------------------------------------------------------------------
# systems symbols


def systems_symbols(m: MediumSpec) -> SymbolMatrix22:
    """Left symbols of the 2x2 first-order system acting on (v3, p).

    Exactly six homogeneous components are nonzero in general:
    a11 degree 1 and 0, a12 degree 1 and 0, a21 degree 1, a22 degree 1.
    For homogeneous media the degree-0 pieces fold away to empty.
    """
    xi1, xi2, s = variable(VarId.XI1), variable(VarId.XI2), variable(VarId.S)
    inv33 = recip(m.alpha[2][2])
    i = const(1j)

    f1 = simplify(m.alpha[0][2] * inv33)  # alpha_{13}/alpha_33
    f2 = simplify(m.alpha[1][2] * inv33)
    a11_1 = simplify(i * (xi1 * f1 + xi2 * f2))
    a11_0 = simplify(diff(f1, VarId.X1) + diff(f2, VarId.X2))

    sd = schur(m)
    qform = ZERO
    for mu in range(2):
        for nu in range(2):
            xim = xi1 if mu == 0 else xi2
            xin = xi1 if nu == 0 else xi2
            qform = qform + sd.Q[mu][nu] * xim * xin
    a12_1 = simplify(s * m.kappa + recip(s) * qform)
    a12_0 = simplify(const(-1) * recip(s) * i * (sd.dQ[0] * xi1 + sd.dQ[1] * xi2))

    a21_1 = simplify(s * inv33)
    a22_1 = simplify(i * (xi1 * m.alpha[2][0] + xi2 * m.alpha[2][1]) * inv33)

    return SymbolMatrix22(
        a11=PolyhomSymbol({1: a11_1, 0: a11_0}, floor=0),
        a12=PolyhomSymbol({1: a12_1, 0: a12_0}, floor=0),
        a21=PolyhomSymbol({1: a21_1}, floor=1),
        a22=PolyhomSymbol({1: a22_1}, floor=1),
    )


# ---------------------------------------------------------------------------
# transverse grid and quantization


@dataclass(frozen=True)
class TransverseGrid:
    """Uniform periodic grid on [0,L1) x [0,L2), n a power of two >= 4."""

    n: int
    L1: float
    L2: float

    def __post_init__(self):
        n = self.n
        if n < 4 or (n & (n - 1)) != 0:
            raise SymbolError("grid size must be a power of two, at least 4")
        if not (self.L1 > 0 and self.L2 > 0):
            raise SymbolError("grid periods must be positive")

    def x_axes(self):
        return (
            np.arange(self.n) * (self.L1 / self.n),
            np.arange(self.n) * (self.L2 / self.n),
        )

    def xi_axes(self):
        k = np.fft.fftfreq(self.n) * self.n  # 0..n/2-1, -n/2..-1
        return (2 * np.pi / self.L1) * k, (2 * np.pi / self.L2) * k

    def x_mesh(self):
        x1, x2 = self.x_axes()
        return np.meshgrid(x1, x2, indexing="ij")

    def xi_mesh(self):
        w1, w2 = self.xi_axes()
        return np.meshgrid(w1, w2, indexing="ij")

    def nyquist_mask(self):
        """True on modes kept by quantization (both indices != -n/2 row)."""
        keep = np.ones(self.n, dtype=bool)
        keep[self.n // 2] = False
        return np.logical_and.outer(keep, keep)


_PHASE_CACHE = {}


def _phase_matrix(grid: TransverseGrid):
    key = (grid.n, grid.L1, grid.L2)
    got = _PHASE_CACHE.get(key)
    if got is None:
        X1g, X2g = grid.x_mesh()
        W1g, W2g = grid.xi_mesh()
        ph = np.exp(
            1j
            * (
                np.outer(X1g.ravel(), W1g.ravel())
                + np.outer(X2g.ravel(), W2g.ravel())
            )
        )
        got = ph / grid.n**2
        _PHASE_CACHE[key] = got
    return got


def _term_exprs(sym):
    if isinstance(sym, PolyhomSymbol):
        return list(sym.terms.values())
    if isinstance(sym, SymbolTerm):
        return [sym.expr]
    if isinstance(sym, Expr):
        return [sym]
    raise SymbolError(f"cannot quantize {type(sym).__name__}")


def _symbol_total(sym) -> Expr:
    acc = ZERO
    for e in _term_exprs(sym):
        acc = acc + e
    return acc


def quantize_matrix(sym, grid: TransverseGrid, x3, s) -> np.ndarray:
    """Dense n^2 x n^2 matrix of the quantized symbol at fixed (x3, s).

    Row index flattens the x-grid, column index the xi-lattice; Nyquist
    columns are zero. Applying it to a flattened FFT of a field realizes
    the operator; ``quantize_apply`` wraps this.
    """
    total = _symbol_total(sym)
    n = grid.n
    X1g, X2g = grid.x_mesh()
    W1g, W2g = grid.xi_mesh()
    env = {
        VarId.X1: X1g.ravel()[:, None],
        VarId.X2: X2g.ravel()[:, None],
        VarId.X3: complex(x3),
        VarId.XI1: W1g.ravel()[None, :],
        VarId.XI2: W2g.ravel()[None, :],
        VarId.S: complex(s),
    }
    vals = np.broadcast_to(np.asarray(eval_expr(total, env)), (n * n, n * n))
    mat = vals * _phase_matrix(grid)
    mask = grid.nyquist_mask().ravel()
    return np.where(mask[None, :], mat, 0.0)


def _hat(values, grid):
    u = np.fft.fft2(values)
    return np.where(grid.nyquist_mask(), u, 0.0)


def quantize_apply(sym, field, grid: TransverseGrid, x3, s):
    """Apply the quantized symbol to a grid field.

    ``field`` is an (n, n) complex array (or an object with a ``values``
    array, returned in kind). Fast paths: a symbol free of xi acts by
    pointwise multiplication, one free of x by a Fourier multiplier; the
    general case goes through the dense kernel. All paths project out
    the Nyquist row/column of the input spectrum first.
    """
    wrapped = hasattr(field, "values") and not isinstance(field, np.ndarray)
    values = np.asarray(field.values if wrapped else field, dtype=np.complex128)
    if values.shape != (grid.n, grid.n):
        raise SymbolError(f"field shape {values.shape} does not match grid {grid.n}")
    total = _symbol_total(sym)
    fv = free_vars(total)
    uhat = _hat(values, grid)

    if not (fv & {VarId.XI1, VarId.XI2}):
        X1g, X2g = grid.x_mesh()
        env = {VarId.X1: X1g, VarId.X2: X2g, VarId.X3: complex(x3), VarId.S: complex(s)}
        coeff = np.broadcast_to(np.asarray(eval_expr(total, env)), values.shape)
        out = coeff * np.fft.ifft2(uhat)
    elif not (fv & {VarId.X1, VarId.X2}):
        W1g, W2g = grid.xi_mesh()
        env = {VarId.XI1: W1g, VarId.XI2: W2g, VarId.X3: complex(x3), VarId.S: complex(s)}
        mult = np.broadcast_to(np.asarray(eval_expr(total, env)), values.shape)
        out = np.fft.ifft2(mult * uhat)
    else:
        mat = quantize_matrix(sym, grid, x3, s)
        out = (mat @ uhat.ravel()).reshape(values.shape)

    if wrapped:
        return field.__class__(
            values=out, grid=grid, component=field.component, x3=field.x3, s=field.s
        )
    return out


def spectral_derivative(values, grid: TransverseGrid, axis: int):
    """Exact discrete d/dx_mu on the torus (fftfreq convention, Nyquist kept)."""
    w1, w2 = grid.xi_axes()
    u = np.fft.fft2(np.asarray(values, dtype=np.complex128))
    if axis == 1:
        u = u * (1j * w1)[:, None]
    elif axis == 2:
        u = u * (1j * w2)[None, :]
    else:
        raise SymbolError("axis must be 1 or 2")
    return np.fft.ifft2(u)


def random_smooth_field(grid: TransverseGrid, rng, decay: float = 3.0) -> np.ndarray:
    """Band-limited random probe field (Nyquist-free by construction)."""
    n = grid.n
    k = np.fft.fftfreq(n) * n
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    radius = np.sqrt(K1**2 + K2**2)
    spec = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    spec *= np.exp(-((radius / (n / 2 / decay)) ** 2))
    spec = np.where(grid.nyquist_mask(), spec, 0.0)
    return np.fft.ifft2(spec)


# ---------------------------------------------------------------------------
# homogeneity checking


@dataclass(frozen=True)
class HomogeneityReport:
    degree: int
    trials: int
    max_rel_error: float
    tol: float

    @property
    def passed(self):
        return self.max_rel_error <= self.tol


def homogeneity_check(
    term: SymbolTerm,
    trials: int = 16,
    tol: float = 1e-9,
    rng=None,
    box=((0.0, 1.0), (0.0, 1.0), (0.0, 1.0)),
) -> HomogeneityReport:
    """Euler-style scaling test: term(x, lam*xi, lam*s) vs lam^deg * term.

    Draws random points with |xi| of order one and Re s > 0, scales by
    lam in {2, 5, 10}, and reports the worst relative mismatch.
    """
    if rng is None:
        rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(trials):
        x = [rng.uniform(lo, hi) for lo, hi in box]
        xi = rng.uniform(-1.5, 1.5, size=2)
        if np.hypot(*xi) < 0.3:
            xi = xi + np.array([0.7, -0.4])
        r = rng.uniform(0.5, 2.0)
        th = rng.uniform(-1.2, 1.2)
        s = r * complex(np.cos(th), np.sin(th))
        base_env = {
            VarId.X1: x[0],
            VarId.X2: x[1],
            VarId.X3: x[2],
            VarId.XI1: xi[0],
            VarId.XI2: xi[1],
            VarId.S: s,
        }
        base = eval_expr(term.expr, base_env)
        for lam in (2.0, 5.0, 10.0):
            env = dict(base_env)
            env[VarId.XI1] = lam * xi[0]
            env[VarId.XI2] = lam * xi[1]
            env[VarId.S] = lam * s
            got = eval_expr(term.expr, env)
            want = lam**term.degree * base
            denom = max(abs(want), 1e-30)
            rel = abs(got - want) / denom
            if abs(want) < 1e-30 and abs(got) < 1e-30:
                rel = 0.0
            worst = max(worst, rel)
    return HomogeneityReport(term.degree, trials, worst, tol)
