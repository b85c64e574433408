"""Bose-Hubbard-style Hamiltonians on a mode register and exact evolution.

The Hamiltonian couples nearest modes by tunneling, adds on-site repulsion
U_i n_i (n_i - 1) and bias energies E_i n_i, and optionally exchanges
particles between each mode and a resolved reservoir mode:

    H = -j_ab/2 (a_A^+ a_B + h.c.) - j_aa/2 (a_a^+ a_A + h.c.)
        + sum_i U_i n_i (n_i - 1) + sum_i E_i n_i
        - sum_i omega_i/2 (a_i^+ a_res + a_res^+ a_i)

Units use hbar = 1 throughout; times are meaningful only as products with
the named couplings.  Evolution is exact via Hermitian eigendecomposition.

The two scans in this module quantify the two idealizations behind the gate
library: the hard-core limit that turns tunneling into a fermionic-style
swap, and the large-reservoir limit behind the ideal number rotation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .fock import (
    HERM_ATOL,
    LinearOperator,
    ModeRegister,
    QuantumState,
    basis_state,
    build_register,
    embed_and_apply,
    ladder_operator,
    partial_trace,
    tensor,
    trace_distance,
)
from .gates import number_rotation_matrix
from .reservoir import ReservoirSpec, coherent_state


@dataclass(frozen=True)
class HamiltonianParams:
    """Couplings for :func:`build_hamiltonian`.

    ``j_ab`` and ``j_aa`` are the tunneling energies between modes A/B and
    a/A respectively (modes a and B never share a tunneling term).  ``u``,
    ``e`` and ``omega`` map mode labels to on-site interaction, bias energy
    and reservoir exchange coupling; ``omega`` requires ``reservoir`` to
    name the resolved reservoir mode.
    """

    j_ab: float = 0.0
    j_aa: float = 0.0
    u: Mapping[str, float] = field(default_factory=dict)
    e: Mapping[str, float] = field(default_factory=dict)
    omega: Mapping[str, float] = field(default_factory=dict)
    reservoir: ReservoirSpec | None = None

    def __post_init__(self):
        for name, value in (("j_ab", self.j_ab), ("j_aa", self.j_aa)):
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite")
        for name, table in (("u", self.u), ("e", self.e), ("omega", self.omega)):
            for label, value in table.items():
                if not math.isfinite(value):
                    raise ValueError(f"{name}[{label!r}] must be finite")
        if self.omega and self.reservoir is None:
            raise ValueError("omega couplings need a reservoir")


def _hop_term(register: ModeRegister, left: str, right: str) -> np.ndarray:
    create = ladder_operator(register, left, "create").matrix
    annihilate = ladder_operator(register, right, "annihilate").matrix
    term = create @ annihilate
    return term + term.conj().T


def build_hamiltonian(
    register: ModeRegister, params: HamiltonianParams
) -> LinearOperator:
    """Assemble the Hermitian Hamiltonian matrix on ``register``.

    Every nonzero coupling must reference modes present in the register.
    All terms conserve the total particle number, so when the reservoir is
    included as a resolved mode the full matrix commutes with total n.
    """
    matrix = np.zeros((register.dim, register.dim), dtype=np.complex128)
    if params.j_ab != 0.0:
        matrix += -0.5 * params.j_ab * _hop_term(register, "A", "B")
    if params.j_aa != 0.0:
        matrix += -0.5 * params.j_aa * _hop_term(register, "a", "A")
    for label, u_i in params.u.items():
        n = ladder_operator(register, label, "number").matrix
        matrix += u_i * (n @ n - n)
    for label, e_i in params.e.items():
        matrix += e_i * ladder_operator(register, label, "number").matrix
    if params.omega:
        res_label = params.reservoir.label
        for label, omega_i in params.omega.items():
            if omega_i != 0.0:
                matrix += -0.5 * omega_i * _hop_term(register, label, res_label)
    return LinearOperator(register, matrix, kind="hermitian")


def propagator(hamiltonian: LinearOperator, t: float) -> LinearOperator:
    """Unitary exp(-i H t), via eigendecomposition of H."""
    if hamiltonian.grids:
        raise ValueError("Hamiltonians must not carry phase symbols")
    dev = np.abs(hamiltonian.matrix - hamiltonian.matrix.conj().T).max()
    if dev > HERM_ATOL:
        raise ValueError(f"Hamiltonian is not Hermitian: deviation {dev:.3e}")
    w, v = np.linalg.eigh(hamiltonian.matrix)
    u = (v * np.exp(-1j * w * t)) @ v.conj().T
    return LinearOperator(hamiltonian.register, u, kind="unitary")


def evolve(state: QuantumState, hamiltonian: LinearOperator, t: float) -> QuantumState:
    """exp(-i H t) applied to the state."""
    if hamiltonian.register != state.register:
        raise ValueError("Hamiltonian register does not match the state register")
    if t == 0.0:
        # Still reject a non-Hermitian generator.
        propagator(hamiltonian, t)
        return state
    return embed_and_apply(state, propagator(hamiltonian, t))


# -- hard-core limit ---------------------------------------------------------


def _max_abs_over_local_phases(
    w: complex, x: complex, y: complex, z: complex
) -> float:
    """max over phases a, b of |w + x e^{ia} + y e^{ib} + z e^{i(a+b)}|.

    For fixed a the optimal b aligns (y + z e^{ia}) with (w + x e^{ia}), so
    the objective reduces to |w + x e^{ia}| + |y + z e^{ia}|; that is scanned
    densely and refined by ternary search.
    """

    def value(a: np.ndarray) -> np.ndarray:
        phase = np.exp(1j * a)
        return np.abs(w + x * phase) + np.abs(y + z * phase)

    grid = np.linspace(0.0, 2.0 * np.pi, 720, endpoint=False)
    values = value(grid)
    i = int(np.argmax(values))
    lo = grid[i] - 2.0 * np.pi / 720
    hi = grid[i] + 2.0 * np.pi / 720
    while hi - lo > 1e-12:
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if value(np.array(m1)) < value(np.array(m2)):
            lo = m1
        else:
            hi = m2
    return float(value(np.array(0.5 * (lo + hi))))


# Swap targets per qubit-subspace input: occupation image and its sign.
_SWAP_TARGETS = {
    (0, 0): ((0, 0), 1.0),
    (0, 1): ((1, 0), 1.0),
    (1, 0): ((0, 1), 1.0),
    (1, 1): ((1, 1), -1.0),
}


def swap_process_fidelity(u_over_j: float) -> float:
    """Gate fidelity of the tunneling-realized swap against the ideal one.

    Two modes with occupation cutoff 3 evolve under tunneling plus on-site
    repulsion U for a half period of the single-particle exchange (hopping
    matrix element g, pulse time pi / (2 g); the Hamiltonian carries the
    tunneling energy as j_ab = 2 g).  The evolved qubit-subspace amplitudes
    are compared with the fermionic swap truth table after optimizing the
    three free local phases:

        F = max_phases |(1/4) sum_s <target_s| P |out_s>|^2

    The coherent sum makes F sensitive to the phase structure, not just to
    population transfer; with U = 0 the doubly occupied state returns with
    the wrong relative sign and F = 1/2 even though nothing leaks.
    """
    g = 1.0
    register = build_register([("A", 3), ("B", 3)])
    params = HamiltonianParams(
        j_ab=2.0 * g, u={"A": u_over_j * g, "B": u_over_j * g}
    )
    hamiltonian = build_hamiltonian(register, params)
    t = np.pi / (2.0 * g)
    amps = {}
    for occ_in, (occ_out, sign) in _SWAP_TARGETS.items():
        evolved = evolve(basis_state(register, occ_in), hamiltonian, t)
        amps[occ_in] = sign * evolved.data[register.index_of(occ_out)]
    best = _max_abs_over_local_phases(
        amps[(0, 0)], amps[(0, 1)], amps[(1, 0)], amps[(1, 1)]
    )
    return (best / 4.0) ** 2


def hardcore_limit_scan(
    u_over_j: Sequence[float],
) -> list[tuple[float, float]]:
    """Process infidelity of the realized swap for each interaction ratio.

    Ratios must be positive and ascending.  The infidelity decreases toward
    zero as U/J grows, which is the executable form of the hard-core
    assumption behind the idealized swap gate.
    """
    ratios = [float(r) for r in u_over_j]
    if any(r <= 0 for r in ratios):
        raise ValueError("interaction ratios must be positive")
    if sorted(ratios) != ratios:
        raise ValueError("interaction ratios must be ascending")
    return [(r, 1.0 - swap_process_fidelity(r)) for r in ratios]


# -- reservoir limit ---------------------------------------------------------


def rotation_deviation(nbar: float, theta: float = 0.0) -> float:
    """Deviation of the resolved-reservoir rotation from the ideal one.

    A qubit mode exchanges particles with a truncated coherent reservoir at
    phase ``theta`` for the quarter-rotation time t = pi / (2 Omega
    sqrt(nbar)).  The reservoir is traced out and the outputs for inputs |0>
    and |1> are compared (trace distance) against the ideal rotation of
    :func:`number_rotation_matrix` at theta' = pi/4; the worst of the two is
    returned.

    The ideal rotation is generated by the exchange +|Omega|/2 (a^+ r +
    r^+ a); the Hamiltonian builder carries the coupling as -omega/2 (...),
    so the scan passes omega = -Omega.
    """
    if nbar <= 0:
        raise ValueError("nbar must be positive")
    cutoff = int(math.ceil(nbar + 10.0 * math.sqrt(nbar)))
    spec = ReservoirSpec("res", nbar, cutoff)
    res_state, _ = coherent_state(spec, theta)
    probe = build_register([("probe", 2)])
    register = build_register([("probe", 2), ("res", cutoff)])
    omega = 1.0
    params = HamiltonianParams(omega={"probe": -omega}, reservoir=spec)
    hamiltonian = build_hamiltonian(register, params)
    t = np.pi / (2.0 * omega * math.sqrt(nbar))
    pulse = propagator(hamiltonian, t)
    ideal = number_rotation_matrix(np.pi / 4, theta)
    worst = 0.0
    for occ in (0, 1):
        joint = tensor(basis_state(probe, (occ,)), res_state)
        evolved = embed_and_apply(joint, pulse)
        reduced = partial_trace(evolved, ["probe"])
        target = QuantumState(probe, ideal[:, occ])
        worst = max(worst, float(trace_distance(reduced, target)))
    return worst


def reservoir_resolved_rotation(
    nbars: Sequence[float], theta: float = 0.0
) -> list[tuple[float, float]]:
    """Rotation deviation for each reservoir size; ascending ``nbars``.

    The deviation shrinks as the mean occupation grows, which is the
    executable form of the large-reservoir assumption behind the idealized
    number rotation.
    """
    values = [float(n) for n in nbars]
    if any(n <= 0 for n in values):
        raise ValueError("nbar values must be positive")
    if sorted(values) != values:
        raise ValueError("nbar values must be ascending")
    return [(n, rotation_deviation(n, theta)) for n in values]
