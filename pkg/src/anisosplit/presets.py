"""Stock media used by the test suite, demos, and documentation.

Every preset goes through ``load_medium`` so the config-file path is
exercised constantly, and every trigonometric field is 2 pi periodic so
the same media work on spectral grids with L = 2 pi. Functions are
cached: media are immutable and carry derived-symbol caches, so sharing
one instance across callers saves rebuilding expansions.

Positivity margins are generous by construction (diagonally dominant
symmetric parts), keeping validation and the oracles' spectral-gap
checks comfortable.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .medium import MediumSpec, load_medium

__all__ = [
    "TAU",
    "unit_isotropic",
    "homogeneous_anisotropic",
    "heterogeneous_full",
    "dual_path_medium",
    "depth_varying_unit_a33",
    "transverse_anisotropic",
    "isotropic_heterogeneous",
    "up_down_symmetric",
    "random_homogeneous",
    "random_medium",
]

TAU = 2.0 * np.pi

_BOX = f"0,{TAU!r},0,{TAU!r},0,{TAU!r}"


def _medium(kappa: str, alpha9, box: str = _BOX) -> MediumSpec:
    return load_medium({"kappa": kappa, "alpha": ", ".join(alpha9), "box": box})


@lru_cache(maxsize=None)
def unit_isotropic() -> MediumSpec:
    """alpha = I, kappa = 1: gamma1 = s (kappa + |xi/s|^2 ... ) baseline."""
    return _medium("1", ["1", "0", "0", "0", "1", "0", "0", "0", "1"])


@lru_cache(maxsize=None)
def homogeneous_anisotropic() -> MediumSpec:
    """Constant, nonsymmetric, alpha33 != 1: full drift and Schur terms."""
    return _medium(
        "0.8",
        [
            "2.0", "0.3", "0.4",
            "0.1", "1.8", "0.2",
            "0.5", "0.3", "1.5",
        ],
    )


@lru_cache(maxsize=None)
def heterogeneous_full() -> MediumSpec:
    """The documented smooth heterogeneous anisotropic test medium.

    Every coordinate enters somewhere, the matrix is nonsymmetric, and
    each varying entry is a single product of trigs so derivative trees
    stay manageable at high expansion orders.
    """
    return _medium(
        "1 + 0.2*sin(x1)*cos(x3)",
        [
            "2 + 0.2*sin(x1)*cos(x2)", "0.3", "0.4 + 0.1*sin(x3)",
            "0.1", "1.8 + 0.2*cos(x2)", "0.2 + 0.1*cos(x3)",
            "0.5 + 0.1*cos(x1)", "0.3", "1.5 + 0.2*sin(x3)",
        ],
    )


@lru_cache(maxsize=None)
def dual_path_medium() -> MediumSpec:
    """Milder heterogeneous nonsymmetric medium for high-order recursions."""
    return _medium(
        "1 + 0.25*cos(x2)",
        [
            "2 + 0.3*sin(x1)", "0.2", "0.4",
            "0.1", "1.8", "0.2 + 0.2*cos(x3)",
            "0.6", "0.3 + 0.1*sin(x2)", "1.4",
        ],
    )


@lru_cache(maxsize=None)
def depth_varying_unit_a33() -> MediumSpec:
    """x3-dependent medium with alpha33 identically 1.

    With alpha33 constant and equal to one, the hand formula for the
    leading depth derivative of the admittance is exact, so this medium
    anchors that comparison; the off-column entries keep the
    antisymmetric drift active.
    """
    return _medium(
        "1 + 0.3*sin(x3)",
        [
            "1.6 + 0.2*cos(x3)", "0.1", "0.3 + 0.1*sin(x3)",
            "0.1", "1.5 + 0.1*sin(x1)", "0.1",
            "0.1 + 0.1*cos(x3)", "0.2", "1",
        ],
    )


@lru_cache(maxsize=None)
def transverse_anisotropic() -> MediumSpec:
    """x3-independent, transversely varying, nonsymmetric: grid-oracle food."""
    return _medium(
        "1 + 0.2*sin(x1)*sin(x2)",
        [
            "2 + 0.2*cos(x1)", "0.2", "0.3",
            "0.1", "1.8 + 0.2*sin(x2)", "0.2",
            "0.4", "0.3 + 0.1*cos(x2)", "1.5 + 0.2*cos(x1)",
        ],
    )


@lru_cache(maxsize=None)
def isotropic_heterogeneous() -> MediumSpec:
    """alpha = a(x) I with smooth a: the isotropic reduction case."""
    a = "1.4 + 0.3*sin(x1)*cos(x2) + 0.15*sin(x3)"
    return _medium(
        "1.1 + 0.2*cos(x1)",
        [a, "0", "0", "0", a, "0", "0", "0", a],
    )


@lru_cache(maxsize=None)
def up_down_symmetric() -> MediumSpec:
    """Symmetric anisotropic heterogeneous: the two Schur variants agree."""
    return _medium(
        "1 + 0.2*sin(x2)",
        [
            "2 + 0.2*sin(x1)", "0.2", "0.3 + 0.1*cos(x3)",
            "0.2", "1.7", "0.2",
            "0.3 + 0.1*cos(x3)", "0.2", "1.4 + 0.1*sin(x2)",
        ],
    )


def random_homogeneous(rng) -> MediumSpec:
    """Random constant medium: nonsymmetric alpha, PD symmetric part."""
    diag = rng.uniform(1.2, 2.2, size=3)
    off = rng.uniform(-0.25, 0.25, size=(3, 3))
    kappa = rng.uniform(0.5, 2.0)
    entries = []
    for i in range(3):
        for j in range(3):
            entries.append(repr(float(diag[i] if i == j else off[i][j])))
    return _medium(repr(float(kappa)), entries)


_WAVES = ("sin(x1)", "cos(x1)", "sin(x2)", "cos(x2)", "sin(x3)", "cos(x3)")


def random_medium(rng) -> MediumSpec:
    """Random smooth heterogeneous medium with safe positivity margins."""
    def wobble(base, amp):
        w = _WAVES[rng.integers(0, len(_WAVES))]
        return f"{float(base)!r} + {float(amp)!r}*{w}"

    entries = []
    for i in range(3):
        for j in range(3):
            if i == j:
                entries.append(wobble(rng.uniform(1.7, 2.1), rng.uniform(-0.15, 0.15)))
            else:
                entries.append(wobble(rng.uniform(-0.12, 0.12), rng.uniform(-0.08, 0.08)))
    return _medium(wobble(rng.uniform(0.8, 1.4), rng.uniform(-0.2, 0.2)), entries)
