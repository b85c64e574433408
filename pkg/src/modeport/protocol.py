"""Teleportation of an unknown spatial-mode qubit state, plus dense coding.

The circuit uses three qubit modes.  A third party rotates mode ``a`` out of
the vacuum into an unknown superposition whose relative phase is tied to a
preparation reservoir; a single particle is split across modes ``A`` and
``B`` to form the shared entangled pair; Bell-state analysis on ``a`` and
``A`` (two reservoir-assisted rotations sandwiching a fermionic swap,
followed by number readout) picks one of four outcomes; a classical message
then selects the correction on mode ``B``.

Finding zero particles in mode ``a`` heralds success and the corrected mode
``B`` carries the unknown state exactly, at every reservoir phase.  Finding
one particle leaves the remaining information hidden in phases correlated
with the analysis reservoir, so once that phase is averaged out no
correction can recover the state: the protocol succeeds exactly half of the
time.  Dense coding on two modes does not suffer this: the encoding phase
and the analysis phase come from the same reservoir and cancel, making all
four messages distinguishable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import (
    PROB_FLOOR,
    MeasurementOutcome,
    MeasurementResult,
    ModeRegister,
    PhaseGrid,
    QuantumState,
    _require_exact_average,
    basis_state,
    build_register,
    embed_and_apply,
    fidelity,
    from_amplitudes,
    measure_number,
    partial_trace,
    trace_distance,
)
from .gates import (
    fermionic_swap_gate,
    hopping_gate,
    number_rotation_gate,
    phase_gate,
)
from .reservoir import SsrReport, ssr_compliance_check, twirl_all

PSI_PLUS = "psi_plus"
PSI_MINUS = "psi_minus"
FAILURE = "failure"

SUCCESS_STATUS = "success"
FAILED_STATUS = "failed"

# Named pseudo-random bit generator for reproducible preparation corpora.
GENERATOR_NAME = "pcg64"


@dataclass(frozen=True)
class UnknownStateSpec:
    """Preparation settings for the unknown single-mode state.

    The prepared state is cos(theta') |0> - i sin(theta') e^{i(theta + phi)}
    |1>, where theta is the preparation reservoir's phase; it is normalized
    by construction.
    """

    theta_prime: float
    phi: float
    prep_reservoir: str = "charlie"

    def __post_init__(self):
        if not (math.isfinite(self.theta_prime) and math.isfinite(self.phi)):
            raise ValueError("preparation angles must be finite")

    @property
    def alpha(self) -> complex:
        return complex(math.cos(self.theta_prime))

    @property
    def beta(self) -> complex:
        return -1j * math.sin(self.theta_prime)


@dataclass(frozen=True)
class BellOutcome:
    """Number-readout pair (n_a, n_A) with its Bell classification."""

    n_a: int
    n_A: int

    def __post_init__(self):
        if self.n_a not in (0, 1) or self.n_A not in (0, 1):
            raise ValueError("Bell readout occupations must be 0 or 1")

    @property
    def classification(self) -> str:
        if self.n_a == 1:
            return FAILURE
        return PSI_PLUS if self.n_A == 0 else PSI_MINUS


def prepare_unknown_state(
    spec: UnknownStateSpec, grid: PhaseGrid, register: ModeRegister | None = None
) -> QuantumState:
    """Rotate mode ``a`` from vacuum into the requested unknown state.

    Applies the reservoir-assisted rotation by theta' and then the bias
    phase phi.  ``grid`` must carry the preparation reservoir's symbol.
    """
    if grid.symbol != spec.prep_reservoir:
        raise ValueError(
            f"grid symbol {grid.symbol!r} does not match the preparation "
            f"reservoir {spec.prep_reservoir!r}"
        )
    if register is None:
        register = build_register([("a", 2)])
    state = basis_state(register, (0,) * register.n_modes)
    state = embed_and_apply(
        state, number_rotation_gate(register, "a", spec.theta_prime, grid)
    )
    return embed_and_apply(state, phase_gate(register, "a", spec.phi))


def unknown_state_target(
    spec: UnknownStateSpec, register: ModeRegister, grid: PhaseGrid
) -> QuantumState:
    """Closed-form prepared state on a single qubit mode, per grid point."""
    if register.n_modes != 1 or register.dims[0] != 2:
        raise ValueError("target register must hold a single qubit mode")
    theta = grid.points
    data = np.empty((grid.n_points, 2), dtype=np.complex128)
    data[:, 0] = spec.alpha
    data[:, 1] = spec.beta * np.exp(1j * (theta + spec.phi))
    return QuantumState(register, data, grids=(grid,), fourier_order=(1,))


def prepare_entangled_pair(register: ModeRegister | None = None) -> QuantumState:
    """Split one particle across modes A and B: (|10> + |01>)/sqrt(2).

    Starting from |1>_A |0>_B, a quarter-period tunneling pulse in the
    ``bell`` phase convention produces the symmetric pair exactly.
    """
    if register is None:
        register = build_register([("A", 2), ("B", 2)])
    occ = [0] * register.n_modes
    occ[register.position("A")] = 1
    state = basis_state(register, occ)
    return embed_and_apply(
        state, hopping_gate(register, "A", "B", np.pi / 4, convention="bell")
    )


@dataclass
class BellAnalysisResult:
    """Post-rotation state and classified readout of a Bell-state analysis."""

    state: QuantumState
    measurement: MeasurementResult
    outcomes: list[tuple[BellOutcome, MeasurementOutcome]]


def bell_state_analysis(
    state: QuantumState,
    grid: PhaseGrid,
    modes: tuple[str, str] = ("a", "A"),
) -> BellAnalysisResult:
    """Bell-basis readout of two qubit modes using one analysis reservoir.

    Rotates the second mode by a quarter rotation, applies the fermionic
    swap, rotates both modes back toward the number basis, and measures the
    occupations.  The analysis reservoir may, but need not, coincide with
    the reservoir used during preparation; pass the corresponding grid.
    """
    first, second = modes
    register = state.register
    out = embed_and_apply(
        state, number_rotation_gate(register, second, np.pi / 4, grid)
    )
    out = embed_and_apply(out, fermionic_swap_gate(register, first, second))
    out = embed_and_apply(out, number_rotation_gate(register, first, np.pi / 4, grid))
    out = embed_and_apply(out, number_rotation_gate(register, second, np.pi / 4, grid))
    measurement = measure_number(out, [first, second])
    classified = [
        (BellOutcome(int(o.occupations[0]), int(o.occupations[1])), o)
        for o in measurement.outcomes
    ]
    return BellAnalysisResult(state=out, measurement=measurement, outcomes=classified)


def feed_forward(
    outcome: BellOutcome, state_b: QuantumState
) -> tuple[QuantumState, str]:
    """Apply the classically selected correction to mode B.

    psi_plus needs nothing, psi_minus needs the Z phase flip (a plain bias
    pulse, no reservoir).  On failure the state is returned unmodified with
    a failed status: averaged over the unknown analysis phase, no choice
    between the two candidate corrections is possible even in principle.
    """
    if outcome.classification == FAILURE:
        return state_b, FAILED_STATUS
    if outcome.classification == PSI_MINUS:
        if state_b.register.n_modes != 1:
            raise ValueError("feed-forward expects the conditional state of mode B")
        label = state_b.register.labels[0]
        state_b = embed_and_apply(
            state_b, phase_gate(state_b.register, label, np.pi)
        )
    return state_b, SUCCESS_STATUS


def _weighted_phase_average(
    state: QuantumState, probability: np.ndarray
) -> QuantumState:
    """Probability-weighted phase average of a conditional state.

    This is the conditional state of the phase-averaged ensemble; weighting
    by the per-point outcome probability keeps the average exact on the
    grid (the weighted matrix is just a block of the pre-measurement
    density matrix).
    """
    if not state.grids:
        return state.to_density()
    _require_exact_average(state.grids, state.fourier_order)
    weighted = probability[..., None, None] * state.density_data()
    mean_p = float(np.mean(probability))
    if mean_p < PROB_FLOOR:
        raise ValueError("cannot average a branch of vanishing probability")
    avg = weighted.mean(axis=tuple(range(len(state.grids)))) / mean_p
    return QuantumState(state.register, avg)


@dataclass
class OutcomeRecord:
    """One Bell-readout branch of a teleportation run."""

    n_a: int
    n_A: int
    classification: str
    status: str
    probability: float
    probability_grid: np.ndarray
    fidelity_min: float
    fidelity_mean: float
    state: QuantumState
    twirled_state: QuantumState


@dataclass
class ProtocolResult:
    """Full audit of one teleportation run."""

    spec: UnknownStateSpec
    reservoir_config: str
    prep_symbol: str
    analysis_symbol: str
    grid_points: int
    outcomes: list[OutcomeRecord]
    success_probability: float
    failure_mode_a: QuantumState
    failure_mode_a_distance: float
    failure_mode_b: QuantumState
    failure_fidelity_mean: float
    unconditional_b: QuantumState
    ssr_report: SsrReport

    @property
    def ssr_compliant(self) -> bool:
        return self.ssr_report.compliant

    def to_json_dict(self) -> dict:
        return {
            "spec": {
                "theta_prime": self.spec.theta_prime,
                "phi": self.spec.phi,
            },
            "reservoirs": {
                "config": self.reservoir_config,
                "preparation": self.prep_symbol,
                "analysis": self.analysis_symbol,
                "grid_points": self.grid_points,
            },
            "outcomes": [
                {
                    "n_a": rec.n_a,
                    "n_A": rec.n_A,
                    "classification": rec.classification,
                    "probability": rec.probability,
                    "fidelity_min": rec.fidelity_min,
                    "fidelity_mean": rec.fidelity_mean,
                }
                for rec in self.outcomes
            ],
            "success_probability": self.success_probability,
            "ssr_compliant": self.ssr_compliant,
        }


def run_teleportation(
    spec: UnknownStateSpec,
    reservoir_config: str = "distinct",
    grid_points: int = 16,
    analysis_reservoir: str = "alice",
) -> ProtocolResult:
    """Execute preparation, Bell analysis and feed-forward over the grid.

    With ``reservoir_config='shared'`` the analysis reuses the preparation
    reservoir (one phase symbol); with ``'distinct'`` it uses its own.
    Success branches reproduce the prepared state with unit fidelity at
    every grid point; the failure branch leaves mode A maximally mixed once
    the phases are averaged.
    """
    if reservoir_config not in ("shared", "distinct"):
        raise ValueError(f"unknown reservoir config {reservoir_config!r}")
    prep_symbol = spec.prep_reservoir
    if reservoir_config == "shared":
        analysis_symbol = prep_symbol
    else:
        analysis_symbol = analysis_reservoir
        if analysis_symbol == prep_symbol:
            raise ValueError(
                "distinct reservoir config needs different preparation and "
                "analysis symbols"
            )
    prep_grid = PhaseGrid(prep_symbol, grid_points)
    analysis_grid = (
        prep_grid if reservoir_config == "shared" else PhaseGrid(analysis_symbol, grid_points)
    )

    register = build_register([("a", 2), ("A", 2), ("B", 2)])
    state = basis_state(register, (0, 1, 0))
    state = embed_and_apply(
        state, number_rotation_gate(register, "a", spec.theta_prime, prep_grid)
    )
    state = embed_and_apply(state, phase_gate(register, "a", spec.phi))
    state = embed_and_apply(
        state, hopping_gate(register, "A", "B", np.pi / 4, convention="bell")
    )

    analysis = bell_state_analysis(state, analysis_grid, modes=("a", "A"))
    b_register = register.restricted(["B"])
    target = unknown_state_target(spec, b_register, prep_grid)

    records: list[OutcomeRecord] = []
    success_probability = 0.0
    ssr_states: list[QuantumState] = []
    for bell, outcome in analysis.outcomes:
        corrected, status = feed_forward(bell, outcome.state)
        fid = np.asarray(fidelity(corrected, target))
        valid = outcome.probability > PROB_FLOOR
        fid_min = float(fid[valid].min())
        fid_mean = float(fid[valid].mean())
        twirled = _weighted_phase_average(corrected, outcome.probability)
        ssr_states.append(twirled)
        record = OutcomeRecord(
            n_a=bell.n_a,
            n_A=bell.n_A,
            classification=bell.classification,
            status=status,
            probability=outcome.mean_probability,
            probability_grid=outcome.probability,
            fidelity_min=fid_min,
            fidelity_mean=fid_mean,
            state=corrected,
            twirled_state=twirled,
        )
        records.append(record)
        if status == SUCCESS_STATUS:
            success_probability += record.probability

    # Failure diagnostics condition on mode a alone: mode A is still a
    # quantum system at that point and its phase-averaged state is what the
    # readout of A could at best reveal.
    res_a = measure_number(analysis.state, ["a"])
    fail = res_a.outcome((1,))
    fail_joint = fail.phase_averaged_state()
    fail_mode_a = partial_trace(fail_joint, ["A"])
    mixed = QuantumState(fail_mode_a.register, np.eye(2) / 2.0)
    fail_distance = float(trace_distance(fail_mode_a, mixed))
    fail_mode_b = partial_trace(fail_joint, ["B"])
    fail_fid = float(np.mean(np.asarray(fidelity(target, fail_mode_b))))

    unconditional_b = twirl_all(partial_trace(analysis.state, ["B"]))

    ssr_states.extend([fail_joint, fail_mode_a, fail_mode_b, unconditional_b])
    reports = [ssr_compliance_check(s) for s in ssr_states]
    ssr_report = SsrReport(
        compliant=all(r.compliant for r in reports),
        max_offblock_norm=max(r.max_offblock_norm for r in reports),
    )

    return ProtocolResult(
        spec=spec,
        reservoir_config=reservoir_config,
        prep_symbol=prep_symbol,
        analysis_symbol=analysis_symbol,
        grid_points=grid_points,
        outcomes=records,
        success_probability=success_probability,
        failure_mode_a=fail_mode_a,
        failure_mode_a_distance=fail_distance,
        failure_mode_b=fail_mode_b,
        failure_fidelity_mean=fail_fid,
        unconditional_b=unconditional_b,
        ssr_report=ssr_report,
    )


def random_spec_corpus(n: int, seed: int) -> list[UnknownStateSpec]:
    """Reproducible corpus of preparation settings.

    theta' is uniform on [0, pi/2], phi uniform on [0, 2*pi), drawn from the
    named bit generator (:data:`GENERATOR_NAME`) so corpora are identical
    across platforms for a given seed.
    """
    if n < 1:
        raise ValueError("corpus size must be at least 1")
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    theta = rng.uniform(0.0, np.pi / 2.0, size=n)
    phi = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return [UnknownStateSpec(float(t), float(p)) for t, p in zip(theta, phi)]


# -- dense coding ------------------------------------------------------------

# Readout pair -> message, fixed by the encoding conventions below.
DENSE_DECODE_TABLE = {(0, 0): 0, (0, 1): 1, (1, 1): 2, (1, 0): 3}


def encode_dense_message(
    state: QuantumState, message: int, mode: str, grid: PhaseGrid
) -> QuantumState:
    """Encode two classical bits on one mode of a shared pair.

    0 leaves the pair alone, 1 applies the Z phase flip, 2 applies the
    reservoir-assisted half rotation (occupation exchange, imprinting
    e^{+-2 i theta} on the two-particle sector), 3 applies both.  The four
    encoded states are mutually orthogonal at every fixed reservoir phase.
    """
    if message not in (0, 1, 2, 3):
        raise ValueError("message must be 0, 1, 2 or 3")
    register = state.register
    out = state
    if message in (2, 3):
        out = embed_and_apply(
            out, number_rotation_gate(register, mode, np.pi / 2, grid)
        )
    if message in (1, 3):
        out = embed_and_apply(out, phase_gate(register, mode, np.pi))
    return out


@dataclass
class DenseCodingResult:
    """Outcome trace of one dense-coding round trip."""

    message: int
    decoded: int
    deterministic: bool
    min_winning_probability: float
    outcome_probabilities: dict[tuple[int, int], np.ndarray]


def run_dense_coding(
    message: int,
    reservoir_config: str = "shared",
    grid_points: int = 16,
    reservoir: str = "bec",
) -> DenseCodingResult:
    """Encode a two-bit message on a shared pair and decode by Bell analysis.

    Encoding and analysis must draw on the same reservoir: the two-particle
    encoded states carry the reservoir phase, and only the analysis pulses
    from the same reservoir pick up the matching phase to cancel it.  A
    distinct-reservoir configuration is refused because the phase matching
    is unsatisfiable and the two-particle outcomes would stay correlated to
    the unknowable phase difference.
    """
    if message not in (0, 1, 2, 3):
        raise ValueError("message must be 0, 1, 2 or 3")
    if reservoir_config != "shared":
        raise ValueError(
            "dense coding requires a shared reservoir: with distinct encode "
            "and analysis reservoirs the imprinted phase has nothing to "
            "cancel against and decoding becomes phase dependent"
        )
    grid = PhaseGrid(reservoir, grid_points)
    register = build_register([("A", 2), ("B", 2)])
    pair = prepare_entangled_pair(register)
    encoded = encode_dense_message(pair, message, "A", grid)
    analysis = bell_state_analysis(encoded, grid, modes=("A", "B"))

    probabilities: dict[tuple[int, int], np.ndarray] = {}
    for outcome in analysis.measurement.outcomes:
        occ = (int(outcome.occupations[0]), int(outcome.occupations[1]))
        probabilities[occ] = outcome.probability

    best_occ = max(probabilities, key=lambda occ: float(np.mean(probabilities[occ])))
    min_winning = float(np.min(probabilities[best_occ]))
    deterministic = min_winning >= 1.0 - 1e-12
    return DenseCodingResult(
        message=message,
        decoded=DENSE_DECODE_TABLE[best_occ],
        deterministic=deterministic,
        min_winning_probability=min_winning,
        outcome_probabilities=probabilities,
    )
