"""Defining a medium and inspecting its Schur data.

A medium is a compressibility kappa(x) plus an inverse-density matrix
alpha(x) (or its inverse rho, which is inverted symbolically). The
transverse Schur complement Q and its symmetrized form Qt drive every
later construction.
"""

import numpy as np

from anisosplit import VarId, eval_expr, load_medium, schur, to_text, validate

# Entries are expression strings; alpha is row-major. The box defaults
# to one period of 2*pi in each direction.
m = load_medium(
    {
        "kappa": "1 + 0.2*sin(x1)*cos(x3)",
        "alpha": (
            "2 + 0.2*sin(x1), 0.1, 0.4 + 0.1*sin(x3),"
            "0.1, 1.8, 0.2,"
            "0.3, 0.2, 1.5 + 0.2*cos(x2)"
        ),
    }
)
report = validate(m)
print(report.describe())

# The same physics can be given through rho; the package inverts it
# symbolically and validates the result the same way.
m_rho = load_medium({"kappa": "1", "rho": "0.5,0,0, 0,0.5,0, 0,0,1"})
print("alpha from rho, entry (1,1):", to_text(m_rho.alpha[0][0]))

# Schur data: Q = A - b c^T / a33 on the transverse block, Qt its
# symmetrized cousin. Both are 2x2 matrices of expressions.
sd = schur(m)
print("Q[1][1]:", to_text(sd.Q[0][0]))

# Qt xi.xi equals alpha zeta.zeta with zeta = (xi1, xi2, z3(x, xi)),
# which is why the symmetrized form is automatically positive.
rng = np.random.default_rng(0)
x = rng.uniform(0, 2 * np.pi, 3)
xi = rng.uniform(-1, 1, 2)
env = {VarId.X1: x[0], VarId.X2: x[1], VarId.X3: x[2]}
a = np.array([[eval_expr(m.alpha[i][j], env) for j in range(3)] for i in range(3)]).real
qt = np.array([[eval_expr(sd.Qt[i][j], env) for j in range(2)] for i in range(2)]).real
z3 = -0.5 * ((a[2, 0] + a[0, 2]) * xi[0] + (a[2, 1] + a[1, 2]) * xi[1]) / a[2, 2]
zeta = np.array([xi[0], xi[1], z3])
print("Qt xi.xi      =", xi @ qt @ xi)
print("alpha zeta.zeta =", zeta @ a @ zeta)
