"""Idealized gate set on qubit modes (occupation 0 or 1).

All gates are exact unitaries built on the full register and act as the
identity on untouched modes.  The hopping gate comes in two phase
conventions, ``raw`` (exact tunneling evolution) and ``bell`` (raw followed
by a fixed local phase so the quarter hop lands exactly on the symmetric
Bell state); see :func:`hopping_gate`.  The reservoir-assisted rotation
carries the reservoir phase as a :class:`PhaseGrid` symbol and is
instantiated at every grid point.
"""

from __future__ import annotations

import numpy as np

from .fock import LinearOperator, ModeRegister, PhaseGrid, embed_matrix


def _qubit_subregister(register: ModeRegister, *labels: str) -> ModeRegister:
    if len(set(labels)) != len(labels):
        raise ValueError(f"gate targets repeat a mode: {labels}")
    for label in labels:
        dim = register.dims[register.position(label)]
        if dim != 2:
            raise ValueError(f"mode {label!r} has cutoff {dim}; gate needs a qubit mode")
    return ModeRegister((label, 2) for label in labels)


def phase_gate(register: ModeRegister, mode: str, angle: float) -> LinearOperator:
    """diag(1, e^{i angle}) on one qubit mode.

    Realized physically by biasing the mode's energy for a fixed time;
    angle = pi gives the Z gate |1> -> -|1>.
    """
    sub = _qubit_subregister(register, mode)
    small = np.diag([1.0, np.exp(1j * angle)]).astype(np.complex128)
    full = embed_matrix(register, sub, small)
    return LinearOperator(register, full, kind="unitary")


def number_rotation_matrix(theta_prime: float, theta: float | np.ndarray) -> np.ndarray:
    """Single-qubit rotation between |0> and |1> mediated by the reservoir.

    Columns are the images of |0> and |1>:

        |0> -> cos(theta') |0> - i e^{+i theta} sin(theta') |1>
        |1> -> cos(theta') |1> - i e^{-i theta} sin(theta') |0>

    ``theta`` may be an array of reservoir phases, in which case the result
    has shape (*theta.shape, 2, 2).
    """
    theta = np.asarray(theta, dtype=np.float64)
    c = np.cos(theta_prime) * np.ones_like(theta)
    s = np.sin(theta_prime)
    mat = np.empty(theta.shape + (2, 2), dtype=np.complex128)
    mat[..., 0, 0] = c
    mat[..., 1, 0] = -1j * np.exp(1j * theta) * s
    mat[..., 0, 1] = -1j * np.exp(-1j * theta) * s
    mat[..., 1, 1] = c
    return mat


def number_rotation_gate(
    register: ModeRegister, mode: str, theta_prime: float, grid: PhaseGrid
) -> LinearOperator:
    """Reservoir-assisted rotation of one qubit mode by half-angle theta'.

    The gate imprints the reservoir phase e^{+-i theta} on the rotated
    amplitudes, so it raises the state's Fourier order in ``grid.symbol``
    by one.
    """
    sub = _qubit_subregister(register, mode)
    small = number_rotation_matrix(theta_prime, grid.points)
    full = embed_matrix(register, sub, small)
    return LinearOperator(
        register, full, kind="unitary", grids=(grid,), fourier_order=(1,)
    )


def fermionic_swap_gate(
    register: ModeRegister, mode_j: str, mode_k: str
) -> LinearOperator:
    """Two-mode exchange with a minus sign on double occupation.

    Truth table: |00> -> |00>, |01> -> |10>, |10> -> |01>, |11> -> -|11>.
    This is the logical action of hard-core hopping for a half tunneling
    period, where the bosons behave like spinless fermions and exchanging
    the pair contributes the antisymmetric sign.
    """
    sub = _qubit_subregister(register, mode_j, mode_k)
    small = np.zeros((4, 4), dtype=np.complex128)
    small[0, 0] = 1.0
    small[2, 1] = 1.0  # |01> -> |10>
    small[1, 2] = 1.0  # |10> -> |01>
    small[3, 3] = -1.0
    full = embed_matrix(register, sub, small)
    return LinearOperator(register, full, kind="unitary")


def hopping_gate(
    register: ModeRegister,
    mode_j: str,
    mode_k: str,
    angle: float,
    convention: str = "raw",
) -> LinearOperator:
    """Tunneling between two qubit modes for angle = J*t/2.

    ``raw`` is the exact evolution exp(-i H t) with
    H = -J/2 (a_j^+ a_k + a_k^+ a_j) restricted to the qubit subspace:

        |10> -> cos(angle) |10> + i sin(angle) |01>   (and symmetrically)

    with |00> and |11> left alone (|11> cannot tunnel within the qubit
    truncation).  ``bell`` composes ``raw`` with the local phase
    diag(1, -i) on ``mode_k``, which maps the angle = pi/4 image of |10>
    exactly to (|10> + |01>)/sqrt(2); use it when intermediate states should
    match the conventional Bell-state expressions with no stray phases.
    """
    if convention not in ("raw", "bell"):
        raise ValueError(f"unknown hopping convention {convention!r}")
    sub = _qubit_subregister(register, mode_j, mode_k)
    c, s = np.cos(angle), np.sin(angle)
    small = np.zeros((4, 4), dtype=np.complex128)
    small[0, 0] = 1.0
    small[3, 3] = 1.0
    small[1, 1] = c
    small[2, 2] = c
    small[1, 2] = 1j * s  # <01| U |10>
    small[2, 1] = 1j * s
    if convention == "bell":
        correction = np.diag([1.0, -1j, 1.0, -1j]).astype(np.complex128)
        small = correction @ small
    full = embed_matrix(register, sub, small)
    return LinearOperator(register, full, kind="unitary")
