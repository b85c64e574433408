"""BEC phase reference and the particle-number superselection rule.

A large condensate acts as a phase reference that lets single-mode
operations rotate a mode between occupation eigenstates.  Ignorance of the
condensate phase is modeled by twirling: the uniform average of the state
over the phase, which removes all coherences between different total
particle numbers.  The phase dependence lives on :class:`PhaseGrid` points
(see :mod:`modeport.fock`), so the twirl is an exact integral whenever the
grid satisfies the tracked Fourier-order bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import (
    ModeRegister,
    PhaseGrid,
    QuantumState,
    _require_exact_average,
)

SSR_ATOL = 1e-12


@dataclass(frozen=True)
class ReservoirSpec:
    """A condensate reservoir with mean occupation ``nbar``.

    With ``cutoff=None`` the reservoir is handled symbolically: operations
    depend on its phase through a :class:`PhaseGrid` and the reservoir state
    itself is never represented.  With an integer ``cutoff`` the reservoir is
    a resolved mode whose truncated coherent state keeps occupations
    0 .. cutoff - 1; the cutoff must be at least nbar + 10*sqrt(nbar) so the
    truncated state retains essentially all of its norm.
    """

    label: str
    nbar: float
    cutoff: int | None = None

    def __post_init__(self):
        if not str(self.label).isidentifier():
            raise ValueError(f"reservoir label {self.label!r} is not an identifier")
        if not self.nbar > 0:
            raise ValueError("reservoir mean occupation must be positive")
        if self.cutoff is not None:
            needed = self.nbar + 10.0 * math.sqrt(self.nbar)
            if self.cutoff < needed:
                raise ValueError(
                    f"reservoir cutoff {self.cutoff} too small for nbar={self.nbar}; "
                    f"need at least {needed:.1f}"
                )

    @property
    def resolved(self) -> bool:
        return self.cutoff is not None

    def phase_grid(self, n_points: int = 16) -> PhaseGrid:
        return PhaseGrid(self.label, n_points)


def twirl_state(state: QuantumState, symbol: str) -> QuantumState:
    """Uniform average of the state over one reservoir phase.

    Returns a density matrix without the named symbol.  The average is exact
    (not approximate) provided the grid resolves the state's recorded
    Fourier order, which is checked; a coarser grid raises.
    """
    grid = state.grid_for(symbol)
    order = state.fourier_for(symbol)
    _require_exact_average([grid], [order])
    axis = state.phase_symbols.index(symbol)
    avg = state.density_data().mean(axis=axis)
    remaining = [(g, f) for g, f in zip(state.grids, state.fourier_order) if g.symbol != symbol]
    return QuantumState(
        state.register,
        avg,
        grids=[g for g, _ in remaining],
        fourier_order=[f for _, f in remaining],
    )


def twirl_all(state: QuantumState) -> QuantumState:
    """Twirl over every phase symbol the state carries."""
    out = state
    for symbol in state.phase_symbols:
        out = twirl_state(out, symbol)
    return out.to_density()


@dataclass(frozen=True)
class SsrReport:
    """Result of a superselection compliance check."""

    compliant: bool
    max_offblock_norm: float


def ssr_compliance_check(state: QuantumState) -> SsrReport:
    """Check that a state carries no coherence between total-number sectors.

    The density matrix is decomposed into total-particle-number sectors;
    the state is compliant iff every matrix element connecting different
    sectors has magnitude at most ``SSR_ATOL``.  States still carrying
    unresolved phase symbols must be twirled first.
    """
    if state.grids:
        raise ValueError(
            f"state carries unresolved phase symbols {state.phase_symbols}; "
            "twirl before checking superselection compliance"
        )
    rho = state.density_data()
    totals = state.register.total_numbers
    offblock = totals[:, None] != totals[None, :]
    max_off = float(np.abs(rho[offblock]).max()) if offblock.any() else 0.0
    return SsrReport(compliant=max_off <= SSR_ATOL, max_offblock_norm=max_off)


def coherent_state(spec: ReservoirSpec, theta: float) -> tuple[QuantumState, float]:
    """Truncated coherent state of a resolved reservoir at phase ``theta``.

    Amplitudes are exp(-nbar/2) * (sqrt(nbar) e^{i theta})**n / sqrt(n!) on
    occupations 0 .. cutoff - 1, renormalized.  Returns the state together
    with the norm deficit of the truncated expansion before renormalization.
    """
    if not spec.resolved:
        raise ValueError("coherent_state needs a resolved reservoir (set cutoff)")
    n = np.arange(spec.cutoff)
    # Log-space magnitudes: n! overflows floats long before the cutoff does.
    log_mag = -spec.nbar / 2.0 + 0.5 * n * math.log(spec.nbar)
    log_mag -= 0.5 * np.array([math.lgamma(k + 1.0) for k in n])
    amps = np.exp(log_mag) * np.exp(1j * theta * n)
    norm_sq = float(np.sum(np.abs(amps) ** 2))
    deficit = 1.0 - norm_sq
    register = ModeRegister([(spec.label, spec.cutoff)])
    state = QuantumState(register, amps / math.sqrt(norm_sq))
    return state, deficit
