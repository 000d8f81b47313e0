"""Diagonal gauges of the splitting and the symbol parametrix.

The splitting matrix is only fixed up to a diagonal symbol factor.
Constant gauges relabel the one-way components without touching the
generators; the impedance gauge rescales the columns so the pressure
row of the composition matrix becomes (1, 1).
"""

import numpy as np

from anisosplit import (
    NormalizationSpec,
    VarId,
    apply_normalization,
    compose,
    eval_expr,
    expand,
    presets,
    split_symbols,
    symbol_inverse,
)
from anisosplit.oracle import draw_probe_points

m = presets.heterogeneous_full()
split = split_symbols(expand(m, 1, 1, 2), expand(m, -1, 1, 2))

# Constant diag(m, m') gauge: generators are invariant.
spec = NormalizationSpec(kind="constant", m=2 + 1j, mprime=0.5 - 0.25j)
out = apply_normalization(split, spec)
pts = np.asarray(draw_probe_points(m, 10, np.random.default_rng(2)), dtype=complex)
env = {
    VarId.X1: pts[:, 0].real, VarId.X2: pts[:, 1].real, VarId.X3: pts[:, 2].real,
    VarId.XI1: pts[:, 3].real, VarId.XI2: pts[:, 4].real, VarId.S: pts[:, 5],
}
gap = np.max(np.abs(eval_expr(out.g_plus.total() - split.g_plus.total(), env)))
print(f"constant gauge, change in g+: {gap:.2e} (should vanish)")

# Impedance gauge on a homogeneous medium: the composition matrix rows
# become (1, 1) and (1/y0+, 1/y0-). The entries stay in quotient form
# symbolically, but evaluate to the displayed matrix.
hm = presets.homogeneous_anisotropic()
hsplit = split_symbols(expand(hm, 1, 0, 2), expand(hm, -1, 0, 2))
imp = apply_normalization(hsplit, NormalizationSpec(kind="impedance"))
henv = {VarId.X1: 0.0, VarId.X2: 0.0, VarId.X3: 0.0, VarId.XI1: 0.8, VarId.XI2: -0.6, VarId.S: 1.2 + 0.4j}
row = [eval_expr(imp.ell[0][j].total(), henv) for j in range(2)]
print(f"impedance gauge, pressure row at a probe: {row[0]:.12f}, {row[1]:.12f}")

# Parametrix: a two-term inverse of the admittance symbol cancels the
# composition to the retained depth.
y = expand(m, 1, 1, 2).series()
z = symbol_inverse(y, 2)
c = compose(z, y, floor=-2)
resid0 = np.max(np.abs(eval_expr(c.term(0), env) - 1.0))
resid1 = np.max(np.abs(eval_expr(c.term(-1), env)))
print(f"\nparametrix: |z#y - 1| at degree 0: {resid0:.2e}, degree -1: {resid1:.2e}")
