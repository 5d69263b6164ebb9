"""Example systems used throughout the tests, demos and CLI.

Each constructor returns a :class:`SystemDefinition`; the files under
``systems/`` in the source tree are these definitions written out by
:func:`write_builtin_files`.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .cocycle import LinearCocycle, rotation
from .sft import SftSystem, full_shift, golden_mean_shift
from .suspension import RoofFunction
from .sysfile import SystemDefinition, format_system


def _diag(*v):
    return np.diag(np.asarray(v, dtype=float))


def full2_diagonal() -> SystemDefinition:
    """Full 2-shift, diagonal with a one-dimensional finest splitting."""
    c = LinearCocycle.from_blocks([[[1 / 2]], [[1 / 3]]], [_diag(2, 8), _diag(3, 7)], "full2-diagonal")
    return SystemDefinition("full2-diagonal", full_shift(2), c, RoofFunction([1.0, 2.0]),
                            description="diag(1/2,2,8) and diag(1/3,3,7) over the full 2-shift")


def golden_mixed() -> SystemDefinition:
    """Golden-mean shift, stable 1/2, unstable diag(2,4) and diag(3,5)."""
    c = LinearCocycle.from_blocks([[[0.5]], [[0.5]]], [_diag(2, 4), _diag(3, 5)], "golden-mixed")
    return SystemDefinition("golden-mixed", golden_mean_shift(), c, RoofFunction([1.0, 2.0]),
                            description="diag(1/2,2,4) and diag(1/2,3,5) over the golden-mean shift")


def three_symbol() -> SystemDefinition:
    """Irreducible aperiodic 3-symbol shift with diagonal generators."""
    adj = np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]])
    c = LinearCocycle.from_blocks([[[0.5]], [[0.4]], [[0.6]]],
                                  [_diag(2, 5), _diag(2.5, 6), _diag(3, 7)], "three-symbol")
    return SystemDefinition("three-symbol", SftSystem(adj, name="three-symbol"), c,
                            RoofFunction([1.0, 1.5, 2.0]),
                            description="3-symbol irreducible SFT, diagonal generators")


def two_fixed_point() -> SystemDefinition:
    """Two fixed points with signatures (2) and (1,1)."""
    c = LinearCocycle.from_blocks([[[0.5]], [[0.5]]], [2 * rotation(0.3), _diag(2, 3)], "two-fixed-point")
    return SystemDefinition("two-fixed-point", full_shift(2), c, RoofFunction([1.0, 2.0]),
                            description="fixed point 0 with unstable 2R(0.3), fixed point 1 with diag(2,3)")


def rotation_block() -> SystemDefinition:
    """Both unstable generators rotate; no fixed point has simple spectrum."""
    c = LinearCocycle.from_blocks([[[0.5]], [[1 / 3]]],
                                  [2 * rotation(0.3), 1.5 * rotation(0.9) @ _diag(1.2, 1.0)], "rotation-block")
    return SystemDefinition("rotation-block", full_shift(2), c, RoofFunction([1.0, 2.0]),
                            description="unstable 2R(0.3) and 1.5R(0.9)diag(1.2,1)")


def nilpotent() -> SystemDefinition:
    """Every unstable product is a Jordan block with a small shear."""
    c = LinearCocycle.from_blocks([[[0.5]], [[0.4]]],
                                  [np.array([[2.0, 0.1], [0.0, 2.0]]), np.array([[2.5, 0.05], [0.0, 2.5]])],
                                  "nilpotent")
    return SystemDefinition("nilpotent", golden_mean_shift(), c, RoofFunction([1.0, 2.0]),
                            description="upper-triangular unstable blocks with equal diagonals")


def rotation_arc_model() -> SystemDefinition:
    """Marked fixed point diag(1/2, 2R(0.3)) joined to a real fixed point."""
    c = LinearCocycle.from_blocks([[[0.5]], [[0.5]]], [2 * rotation(0.3), _diag(2.2, 2.0)], "rotation-arc")
    return SystemDefinition("rotation-arc", full_shift(2), c, RoofFunction([1.0, 2.0]),
                            description="rotation-number model: 2R(0.3) at the marked symbol 0")


def diag_crossing() -> SystemDefinition:
    """Unstable-only diagonal example whose strong coordinate switches with the symbol."""
    c = LinearCocycle.from_blocks(np.zeros((2, 0, 0)), [_diag(2, 8), _diag(4, 2)], "diag-crossing")
    return SystemDefinition("diag-crossing", full_shift(2), c, RoofFunction([1.0, 2.0]),
                            description="diag(2,8) and diag(4,2); exponents from the closed form")


def identity() -> SystemDefinition:
    c = LinearCocycle.from_blocks([[[1.0]], [[1.0]]], [np.eye(2), np.eye(2)], "identity")
    return SystemDefinition("identity", full_shift(2), c, RoofFunction([1.0, 1.0]),
                            description="identity cocycle (not hyperbolic)")


BUILTIN = {
    "full2-diagonal": full2_diagonal,
    "golden-mixed": golden_mixed,
    "three-symbol": three_symbol,
    "two-fixed-point": two_fixed_point,
    "rotation-block": rotation_block,
    "nilpotent": nilpotent,
    "rotation-arc": rotation_arc_model,
    "diag-crossing": diag_crossing,
    "identity": identity,
}

# systems over which the spectral-equivalence and domination checks are run
SHIPPED = ("full2-diagonal", "golden-mixed", "three-symbol", "two-fixed-point", "rotation-block",
           "nilpotent", "rotation-arc", "diag-crossing")


def builtin(name: str) -> SystemDefinition:
    try:
        return BUILTIN[name]()
    except KeyError:
        raise KeyError(f"unknown system {name!r}; known: {', '.join(BUILTIN)}") from None


def write_builtin_files(directory) -> list[Path]:
    out = []
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for name, make in BUILTIN.items():
        p = d / f"{name}.sys"
        p.write_text(format_system(make()))
        out.append(p)
    return out


def random_golden_cocycle(seed: int, sigma_range=(1.2, 3.0), stable_range=(0.3, 0.8)) -> LinearCocycle:
    """Random 3D cocycle over the golden-mean shift.

    Stable generators are scalars of random sign with modulus drawn from
    ``stable_range``; unstable generators are ``R(a) diag(s1, s2) R(b)``,
    with a reflection half of the time, singular values from
    ``sigma_range`` and uniform angles, so the unstable block expands by at
    least ``sigma_range[0]``.
    """
    rng = np.random.default_rng(seed)
    st, un = [], []
    for _ in range(2):
        st.append([[rng.choice([-1.0, 1.0]) * rng.uniform(*stable_range)]])
        s = np.sort(rng.uniform(*sigma_range, 2))[::-1]
        u = rotation(rng.uniform(-np.pi, np.pi)) @ np.diag(s) @ rotation(rng.uniform(-np.pi, np.pi))
        if rng.random() < 0.5:
            u = u @ np.diag([1.0, -1.0])
        un.append(u)
    return LinearCocycle.from_blocks(st, un, f"random-golden-{seed}")
