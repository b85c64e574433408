"""Dense Fock-space engine for small registers of bosonic modes.

A :class:`ModeRegister` fixes an ordered set of modes, each with its own
occupation cutoff.  Basis states are occupation tuples enumerated
lexicographically with the first-listed mode most significant, so the basis
of ``[(A, 3), (B, 3)]`` runs |00>, |01>, |02>, |10>, ...

States are pure amplitude vectors or density matrices over that basis.  A
state may additionally depend on one or more reservoir phase angles; the
dependence is stored on a uniform grid of phase values per angle
(:class:`PhaseGrid`).  Every operation in this package produces amplitudes
that are trigonometric polynomials of bounded order in each angle, so a
sufficiently fine uniform grid represents the dependence exactly and phase
averages computed on the grid are exact integrals.  The bound is tracked per
angle as a Fourier order and checked whenever an average is taken.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

# Construction-time tolerances for state and operator invariants.
NORM_ATOL = 1e-12
HERM_ATOL = 1e-12
TRACE_ATOL = 1e-12
MIN_EIGVAL = -1e-10
# Measurement outcomes below this probability are dropped.
PROB_FLOOR = 1e-14


class ModeRegister:
    """Ordered collection of bosonic modes with per-mode occupation cutoffs.

    Each mode is a ``(label, dim)`` pair; occupations run 0 .. dim - 1.
    """

    def __init__(self, modes: Iterable[tuple[str, int]]):
        modes = tuple((str(label), int(dim)) for label, dim in modes)
        if not modes:
            raise ValueError("register needs at least one mode")
        labels = tuple(label for label, _ in modes)
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate mode label in {labels}")
        for label, dim in modes:
            if not label.isidentifier():
                raise ValueError(f"mode label {label!r} is not an identifier")
            if dim < 2:
                raise ValueError(f"mode {label!r}: occupation cutoff {dim} < 2")
        self.modes = modes
        self.labels = labels
        self.dims = tuple(dim for _, dim in modes)
        self.dim = int(np.prod(self.dims))
        self._positions = {label: i for i, label in enumerate(labels)}
        # (dim, n_modes) table of occupation tuples in basis order.
        self.occupations = np.array(list(np.ndindex(*self.dims)), dtype=np.int64)
        self.total_numbers = self.occupations.sum(axis=1)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def position(self, label: str) -> int:
        try:
            return self._positions[label]
        except KeyError:
            raise ValueError(f"unknown mode label {label!r}") from None

    def index_of(self, occupation: Sequence[int]) -> int:
        occupation = tuple(int(n) for n in occupation)
        if len(occupation) != self.n_modes:
            raise ValueError(
                f"occupation {occupation} has {len(occupation)} entries, "
                f"register has {self.n_modes} modes"
            )
        for n, d in zip(occupation, self.dims):
            if not 0 <= n < d:
                raise ValueError(f"occupation {occupation} exceeds cutoffs {self.dims}")
        return int(np.ravel_multi_index(occupation, self.dims))

    def occupation_of(self, index: int) -> tuple[int, ...]:
        return tuple(int(n) for n in self.occupations[index])

    def restricted(self, labels: Sequence[str]) -> "ModeRegister":
        """Sub-register containing ``labels``, kept in this register's order."""
        positions = sorted(self.position(label) for label in labels)
        return ModeRegister(self.modes[p] for p in positions)

    def __eq__(self, other) -> bool:
        return isinstance(other, ModeRegister) and self.modes == other.modes

    def __hash__(self) -> int:
        return hash(self.modes)

    def __repr__(self) -> str:
        inner = ", ".join(f"{label}:{dim}" for label, dim in self.modes)
        return f"ModeRegister({inner})"


def build_register(specs: Iterable[tuple[str, int]]) -> ModeRegister:
    """Build a register from ``(label, dim)`` pairs."""
    return ModeRegister(specs)


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform grid of reservoir phase values in [0, 2*pi).

    A grid of M points integrates e**(i*k*theta) exactly for all |k| < M, so
    it is exact for states whose density-matrix entries have Fourier order up
    to M - 1, i.e. amplitude order up to (M - 1) // 2.
    """

    symbol: str
    n_points: int = 16

    def __post_init__(self):
        if not str(self.symbol).isidentifier():
            raise ValueError(f"phase symbol {self.symbol!r} is not an identifier")
        if self.n_points < 2:
            raise ValueError("phase grid needs at least 2 points")

    @property
    def points(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_points) / self.n_points

    @property
    def weight(self) -> float:
        return 1.0 / self.n_points

    @property
    def max_exact_order(self) -> int:
        """Largest amplitude-level Fourier order this grid averages exactly."""
        return (self.n_points - 1) // 2


def _sort_grids(
    grids: Sequence[PhaseGrid], fourier_order: Sequence[int] | None
) -> tuple[tuple[PhaseGrid, ...], tuple[int, ...]]:
    grids = tuple(grids)
    symbols = [g.symbol for g in grids]
    if len(set(symbols)) != len(symbols):
        raise ValueError(f"repeated phase symbol in {symbols}")
    if fourier_order is None:
        fourier_order = tuple(g.max_exact_order for g in grids)
    else:
        fourier_order = tuple(int(f) for f in fourier_order)
        if len(fourier_order) != len(grids):
            raise ValueError("fourier_order must have one entry per phase grid")
    order = sorted(range(len(grids)), key=lambda i: grids[i].symbol)
    return tuple(grids[i] for i in order), tuple(fourier_order[i] for i in order)


def _merge_grids(
    a_grids: Sequence[PhaseGrid],
    a_orders: Sequence[int],
    b_grids: Sequence[PhaseGrid],
    b_orders: Sequence[int],
) -> tuple[tuple[PhaseGrid, ...], tuple[int, ...]]:
    """Union of two sorted grid sets; Fourier orders add per shared symbol."""
    by_symbol: dict[str, PhaseGrid] = {}
    orders: dict[str, int] = {}
    for grid, order in list(zip(a_grids, a_orders)) + list(zip(b_grids, b_orders)):
        if grid.symbol in by_symbol:
            if by_symbol[grid.symbol] != grid:
                raise ValueError(
                    f"phase grid mismatch for symbol {grid.symbol!r}: "
                    f"{by_symbol[grid.symbol].n_points} vs {grid.n_points} points"
                )
            orders[grid.symbol] += order
        else:
            by_symbol[grid.symbol] = grid
            orders[grid.symbol] = order
    symbols = sorted(by_symbol)
    return (
        tuple(by_symbol[s] for s in symbols),
        tuple(orders[s] for s in symbols),
    )


def _expand_axes(
    data: np.ndarray,
    own: Sequence[str],
    combined: Sequence[str],
) -> np.ndarray:
    """Insert singleton grid axes so ``data`` broadcasts over ``combined``."""
    out = data
    for pos, symbol in enumerate(combined):
        if symbol not in own:
            out = np.expand_dims(out, axis=pos)
    return out


def _require_exact_average(grids: Sequence[PhaseGrid], orders: Sequence[int]) -> None:
    for grid, order in zip(grids, orders):
        if grid.n_points < 2 * order + 1:
            raise ValueError(
                f"phase grid for {grid.symbol!r} has {grid.n_points} points but the "
                f"state carries Fourier order {order}; need at least {2 * order + 1}"
            )


class QuantumState:
    """Pure vector or density matrix over a register's Fock basis.

    ``data`` has shape ``(*grid_shape, dim)`` for pure states and
    ``(*grid_shape, dim, dim)`` for density matrices, with one leading axis
    per phase grid, ordered by symbol.  Per grid point, pure vectors are unit
    norm and density matrices are Hermitian, positive semidefinite and unit
    trace; a measurement branch that is impossible at some grid point may
    store the zero vector (zero matrix) there instead.

    Treat instances as immutable; operations return new states.
    """

    def __init__(
        self,
        register: ModeRegister,
        data: np.ndarray,
        grids: Sequence[PhaseGrid] = (),
        fourier_order: Sequence[int] | None = None,
        validate: bool = True,
    ):
        self.register = register
        self.grids, self.fourier_order = _sort_grids(grids, fourier_order)
        data = np.asarray(data, dtype=np.complex128)
        grid_shape = tuple(g.n_points for g in self.grids)
        n_grid = len(grid_shape)
        if data.ndim == n_grid + 1:
            self._pure = True
            expected = grid_shape + (register.dim,)
        elif data.ndim == n_grid + 2:
            self._pure = False
            expected = grid_shape + (register.dim, register.dim)
        else:
            raise ValueError(
                f"state data has shape {data.shape}, expected a vector or square "
                f"matrix over dimension {register.dim} with grid shape {grid_shape}"
            )
        if data.shape != expected:
            raise ValueError(f"state data has shape {data.shape}, expected {expected}")
        self.data = data
        if validate:
            self._validate()

    # -- structure ---------------------------------------------------------

    @property
    def is_pure(self) -> bool:
        return self._pure

    @property
    def phase_symbols(self) -> tuple[str, ...]:
        return tuple(g.symbol for g in self.grids)

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return tuple(g.n_points for g in self.grids)

    def grid_for(self, symbol: str) -> PhaseGrid:
        for grid in self.grids:
            if grid.symbol == symbol:
                return grid
        raise ValueError(f"state does not carry phase symbol {symbol!r}")

    def fourier_for(self, symbol: str) -> int:
        for grid, order in zip(self.grids, self.fourier_order):
            if grid.symbol == symbol:
                return order
        raise ValueError(f"state does not carry phase symbol {symbol!r}")

    # -- representations ---------------------------------------------------

    def density_data(self) -> np.ndarray:
        """Density-matrix array, forming |psi><psi| per grid point if pure."""
        if self._pure:
            return np.einsum("...i,...j->...ij", self.data, self.data.conj())
        return self.data

    def to_density(self) -> "QuantumState":
        if not self._pure:
            return self
        return QuantumState(
            self.register,
            self.density_data(),
            grids=self.grids,
            fourier_order=self.fourier_order,
            validate=False,
        )

    def norms(self) -> np.ndarray:
        """Per-grid-point 2-norm (pure) or trace (density)."""
        if self._pure:
            return np.sqrt(np.sum(np.abs(self.data) ** 2, axis=-1))
        return np.real(np.trace(self.data, axis1=-2, axis2=-1))

    # -- validation --------------------------------------------------------

    def _validate(self) -> None:
        values = self.norms()
        off = np.minimum(np.abs(values - 1.0), np.abs(values))
        if off.max() > (NORM_ATOL if self._pure else TRACE_ATOL):
            what = "norm" if self._pure else "trace"
            raise ValueError(
                f"state {what} must be 1 (or 0 on an impossible branch) per grid "
                f"point; worst deviation {off.max():.3e}"
            )
        if not self._pure:
            herm = np.abs(self.data - np.swapaxes(self.data, -1, -2).conj()).max()
            if herm > HERM_ATOL:
                raise ValueError(f"density matrix not Hermitian: deviation {herm:.3e}")
            eigs = np.linalg.eigvalsh(self.data)
            if eigs.min() < MIN_EIGVAL:
                raise ValueError(
                    f"density matrix not positive semidefinite: min eigenvalue "
                    f"{eigs.min():.3e}"
                )

    def __repr__(self) -> str:
        kind = "pure" if self._pure else "density"
        sym = ",".join(self.phase_symbols) or "-"
        return f"QuantumState({kind}, {self.register!r}, symbols={sym})"


def basis_state(register: ModeRegister, occupations: Sequence[int]) -> QuantumState:
    """Fock basis state |n_1 n_2 ...> for the given occupation tuple."""
    vec = np.zeros(register.dim, dtype=np.complex128)
    vec[register.index_of(occupations)] = 1.0
    return QuantumState(register, vec)


def from_amplitudes(
    register: ModeRegister,
    amplitudes: Mapping[tuple[int, ...], complex],
    normalize: bool = False,
) -> QuantumState:
    """Pure state from a sparse {occupation tuple: amplitude} mapping."""
    vec = np.zeros(register.dim, dtype=np.complex128)
    for occ, amp in amplitudes.items():
        vec[register.index_of(occ)] = amp
    if normalize:
        norm = np.linalg.norm(vec)
        if norm < PROB_FLOOR:
            raise ValueError("cannot normalize a zero state")
        vec = vec / norm
    return QuantumState(register, vec)


def tensor(a: QuantumState, b: QuantumState) -> QuantumState:
    """Tensor product of two pure, phase-symbol-free states."""
    if not (a.is_pure and b.is_pure):
        raise ValueError("tensor requires pure states")
    if a.grids or b.grids:
        raise ValueError("tensor requires phase-symbol-free states")
    register = ModeRegister(a.register.modes + b.register.modes)
    return QuantumState(register, np.kron(a.data, b.data))


class LinearOperator:
    """Matrix over a register's basis, optionally per phase-grid point.

    ``kind`` is one of ``unitary``, ``hermitian`` or ``general``; the first
    two are verified at construction.
    """

    KINDS = ("unitary", "hermitian", "general")

    def __init__(
        self,
        register: ModeRegister,
        matrix: np.ndarray,
        kind: str = "general",
        grids: Sequence[PhaseGrid] = (),
        fourier_order: Sequence[int] | None = None,
        validate: bool = True,
    ):
        if kind not in self.KINDS:
            raise ValueError(f"unknown operator kind {kind!r}")
        self.register = register
        self.kind = kind
        self.grids, self.fourier_order = _sort_grids(grids, fourier_order)
        matrix = np.asarray(matrix, dtype=np.complex128)
        expected = tuple(g.n_points for g in self.grids) + (register.dim, register.dim)
        if matrix.shape != expected:
            raise ValueError(f"operator matrix has shape {matrix.shape}, expected {expected}")
        self.matrix = matrix
        if validate:
            self._validate()

    @property
    def phase_symbols(self) -> tuple[str, ...]:
        return tuple(g.symbol for g in self.grids)

    def _validate(self) -> None:
        if self.kind == "unitary":
            prod = np.einsum("...ji,...jk->...ik", self.matrix.conj(), self.matrix)
            eye = np.eye(self.register.dim)
            dev = np.abs(prod - eye).max()
            if dev > NORM_ATOL:
                raise ValueError(f"operator is not unitary: max |U+U - I| = {dev:.3e}")
        elif self.kind == "hermitian":
            dev = np.abs(self.matrix - np.swapaxes(self.matrix, -1, -2).conj()).max()
            if dev > HERM_ATOL:
                raise ValueError(f"operator is not Hermitian: deviation {dev:.3e}")

    def __repr__(self) -> str:
        sym = ",".join(self.phase_symbols) or "-"
        return f"LinearOperator({self.kind}, {self.register!r}, symbols={sym})"


def ladder_operator(register: ModeRegister, mode: str, which: str) -> LinearOperator:
    """Creation, annihilation or number operator on one mode.

    Acts as the identity on all other modes.  The creation operator maps the
    top occupation dim - 1 to the zero vector rather than wrapping, so
    truncation error shows up as norm loss.
    """
    pos = register.position(mode)
    d = register.dims[pos]
    occ_n = register.occupations[:, pos]
    stride = int(np.prod(register.dims[pos + 1 :], initial=1))
    matrix = np.zeros((register.dim, register.dim), dtype=np.complex128)
    idx = np.arange(register.dim)
    if which == "create":
        mask = occ_n < d - 1
        matrix[idx[mask] + stride, idx[mask]] = np.sqrt(occ_n[mask] + 1.0)
        kind = "general"
    elif which == "annihilate":
        mask = occ_n > 0
        matrix[idx[mask] - stride, idx[mask]] = np.sqrt(occ_n[mask].astype(float))
        kind = "general"
    elif which == "number":
        matrix[idx, idx] = occ_n
        kind = "hermitian"
    else:
        raise ValueError(f"unknown ladder kind {which!r}; use create/annihilate/number")
    return LinearOperator(register, matrix, kind=kind)


def embed_matrix(
    register: ModeRegister, op_register: ModeRegister, matrix: np.ndarray
) -> np.ndarray:
    """Embed a matrix on a sub-register into the full register's basis.

    ``matrix`` may carry leading grid axes; they are preserved.
    """
    positions = []
    for label, dim in op_register.modes:
        p = register.position(label)
        if register.dims[p] != dim:
            raise ValueError(
                f"mode {label!r} has dim {dim} in the operator register but "
                f"{register.dims[p]} in the state register"
            )
        positions.append(p)
    if len(set(positions)) != len(positions):
        raise ValueError("operator register repeats a mode")
    rest = [p for p in range(register.n_modes) if p not in positions]

    occ = register.occupations
    sub_dims = [register.dims[p] for p in positions]
    sub_idx = np.ravel_multi_index([occ[:, p] for p in positions], sub_dims)
    if rest:
        rest_dims = [register.dims[p] for p in rest]
        rest_idx = np.ravel_multi_index([occ[:, p] for p in rest], rest_dims)
        d_rest = int(np.prod(rest_dims))
    else:
        rest_idx = np.zeros(register.dim, dtype=np.int64)
        d_rest = 1
    perm = sub_idx * d_rest + rest_idx

    eye = np.eye(d_rest)
    big = np.einsum("...ij,kl->...ikjl", matrix, eye)
    big = big.reshape(matrix.shape[:-2] + (register.dim, register.dim))
    return big[..., perm[:, None], perm[None, :]]


def embed_and_apply(
    state: QuantumState, op: LinearOperator, renormalize: bool = False
) -> QuantumState:
    """Apply an operator, tensoring it with the identity on untouched modes.

    Phase-grid axes are aligned by symbol and applied pointwise.  With
    ``renormalize`` the result is rescaled to unit norm per grid point, which
    is how norm loss from non-unitary operators (truncated creation, for
    instance) is absorbed explicitly; without it, a non-norm-preserving
    result fails state validation.
    """
    if op.register == state.register:
        matrix = op.matrix
    else:
        matrix = embed_matrix(state.register, op.register, op.matrix)

    grids, orders = _merge_grids(
        state.grids, state.fourier_order, op.grids, op.fourier_order
    )
    symbols = tuple(g.symbol for g in grids)
    mat = _expand_axes(matrix, op.phase_symbols, symbols)
    if state.is_pure:
        data = _expand_axes(state.data, state.phase_symbols, symbols)
        out = np.einsum("...ij,...j->...i", mat, data)
    else:
        data = _expand_axes(state.data, state.phase_symbols, symbols)
        out = np.einsum("...ij,...jk,...lk->...il", mat, data, mat.conj())
    shape = tuple(g.n_points for g in grids)
    out = np.broadcast_to(out, shape + out.shape[len(shape) :]).copy()

    if renormalize:
        if state.is_pure:
            norm = np.sqrt(np.sum(np.abs(out) ** 2, axis=-1, keepdims=True))
            if norm.max() < PROB_FLOOR:
                raise ValueError("operator annihilated the state everywhere")
            out = np.where(norm > PROB_FLOOR, out / np.maximum(norm, PROB_FLOOR), 0.0)
        else:
            tr = np.real(np.trace(out, axis1=-2, axis2=-1))[..., None, None]
            if tr.max() < PROB_FLOOR:
                raise ValueError("operator annihilated the state everywhere")
            out = np.where(tr > PROB_FLOOR, out / np.maximum(tr, PROB_FLOOR), 0.0)
    return QuantumState(state.register, out, grids=grids, fourier_order=orders)


def partial_trace(state: QuantumState, keep: Sequence[str]) -> QuantumState:
    """Reduced density matrix on ``keep``, in the register's mode order."""
    keep = list(keep)
    if not keep:
        raise ValueError("keep must name at least one mode")
    if len(set(keep)) != len(keep):
        raise ValueError("keep repeats a mode label")
    keep_positions = sorted(state.register.position(label) for label in keep)

    rho = state.density_data()
    dims = state.register.dims
    n = state.register.n_modes
    grid_shape = state.grid_shape
    rho = rho.reshape(grid_shape + dims + dims)

    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * n > len(letters):
        raise ValueError("register too large for partial trace")
    row = list(letters[:n])
    col = [
        letters[n + i] if i in keep_positions else letters[i] for i in range(n)
    ]
    out_row = "".join(row[i] for i in keep_positions)
    out_col = "".join(col[i] for i in keep_positions)
    spec = "..." + "".join(row) + "".join(col) + "->..." + out_row + out_col
    reduced = np.einsum(spec, rho)

    sub = state.register.restricted(keep)
    reduced = reduced.reshape(grid_shape + (sub.dim, sub.dim))
    return QuantumState(
        sub, reduced, grids=state.grids, fourier_order=state.fourier_order
    )


class MeasurementOutcome:
    """One projective number-measurement outcome.

    ``probability`` has the state's grid shape (0-dimensional when the state
    carries no phase symbols).  ``state`` is the conditional state on the
    unmeasured modes, normalized per grid point, with the zero vector at grid
    points where the outcome is impossible; it is ``None`` when every mode
    was measured.
    """

    def __init__(
        self,
        occupations: tuple[int, ...],
        probability: np.ndarray,
        state: QuantumState | None,
        grids: tuple[PhaseGrid, ...],
        fourier_order: tuple[int, ...],
    ):
        self.occupations = occupations
        self.probability = probability
        self.state = state
        self.grids = grids
        self.fourier_order = fourier_order

    @property
    def mean_probability(self) -> float:
        """Probability averaged uniformly over the phase grids."""
        if self.grids:
            _require_exact_average(self.grids, self.fourier_order)
        return float(np.mean(self.probability))

    def phase_averaged_state(self) -> QuantumState | None:
        """Conditional state of the phase-averaged ensemble.

        This is the probability-weighted average of the per-point conditional
        density matrices, renormalized by the average probability, which is
        the correct conditional state once the phases are unknown.
        """
        if self.state is None:
            return None
        if not self.grids:
            return self.state
        _require_exact_average(self.grids, self.fourier_order)
        weighted = self.probability[..., None, None] * self.state.density_data()
        axes = tuple(range(len(self.grids)))
        mean_p = float(np.mean(self.probability))
        if mean_p < PROB_FLOOR:
            raise ValueError("outcome has vanishing phase-averaged probability")
        avg = weighted.mean(axis=axes) / mean_p
        return QuantumState(self.state.register, avg)

    def __repr__(self) -> str:
        return (
            f"MeasurementOutcome({self.occupations}, "
            f"p~{float(np.mean(self.probability)):.4g})"
        )


class MeasurementResult:
    """All retained outcomes of a projective number measurement."""

    def __init__(self, measured: tuple[str, ...], outcomes: list[MeasurementOutcome]):
        self.measured = measured
        self.outcomes = outcomes

    def outcome(self, occupations: Sequence[int]) -> MeasurementOutcome:
        occupations = tuple(int(n) for n in occupations)
        for out in self.outcomes:
            if out.occupations == occupations:
                return out
        raise KeyError(f"outcome {occupations} not present (probability below floor?)")

    def __iter__(self):
        return iter(self.outcomes)

    def __len__(self) -> int:
        return len(self.outcomes)


def measure_number(state: QuantumState, modes: Sequence[str]) -> MeasurementResult:
    """Projective measurement of occupation numbers on ``modes``.

    Returns Born-rule probabilities and renormalized conditional states on
    the unmeasured modes, per phase-grid point.  Outcomes whose probability
    stays below ``PROB_FLOOR`` across the whole grid are omitted.
    """
    modes = list(modes)
    if not modes:
        raise ValueError("measure at least one mode")
    if len(set(modes)) != len(modes):
        raise ValueError("measured modes repeat a label")
    positions = [state.register.position(label) for label in modes]
    measured_dims = [state.register.dims[p] for p in positions]
    unmeasured = [label for label in state.register.labels if label not in modes]

    occ = state.register.occupations
    sub_idx = np.ravel_multi_index([occ[:, p] for p in positions], measured_dims)
    sub_register = state.register.restricted(unmeasured) if unmeasured else None

    outcomes: list[MeasurementOutcome] = []
    total = None
    for flat in range(int(np.prod(measured_dims))):
        occ_m = tuple(int(v) for v in np.unravel_index(flat, measured_dims))
        group = np.nonzero(sub_idx == flat)[0]
        if state.is_pure:
            sub = state.data[..., group]
            prob = np.sum(np.abs(sub) ** 2, axis=-1)
        else:
            sub = state.data[..., group[:, None], group[None, :]]
            prob = np.real(np.trace(sub, axis1=-2, axis2=-1))
        total = prob if total is None else total + prob
        if prob.max() < PROB_FLOOR:
            continue
        if sub_register is None:
            cond = None
        elif state.is_pure:
            norm = np.sqrt(prob)[..., None]
            vec = np.where(norm > PROB_FLOOR, sub / np.maximum(norm, PROB_FLOOR), 0.0)
            cond = QuantumState(
                sub_register, vec, grids=state.grids, fourier_order=state.fourier_order
            )
        else:
            p = prob[..., None, None]
            mat = np.where(p > PROB_FLOOR, sub / np.maximum(p, PROB_FLOOR), 0.0)
            cond = QuantumState(
                sub_register, mat, grids=state.grids, fourier_order=state.fourier_order
            )
        outcomes.append(
            MeasurementOutcome(occ_m, prob, cond, state.grids, state.fourier_order)
        )
    if np.abs(total - state.norms() ** (2 if state.is_pure else 1)).max() > 1e-10:
        raise AssertionError("measurement probabilities do not sum to the state norm")
    return MeasurementResult(tuple(modes), outcomes)


# -- metrics ---------------------------------------------------------------


def _aligned_pair(x: QuantumState, y: QuantumState):
    if x.register != y.register:
        raise ValueError("states live on different registers")
    grids, _ = _merge_grids(x.grids, x.fourier_order, y.grids, y.fourier_order)
    symbols = tuple(g.symbol for g in grids)
    return grids, symbols


def _maybe_scalar(value: np.ndarray, gridded: bool):
    arr = np.asarray(value)
    if not gridded:
        return float(arr)
    return arr


def _clip_spectrum(w: np.ndarray) -> np.ndarray:
    """Zero out eigenvalues at the eigensolver noise floor.

    Square roots turn O(1e-16) eigenvalue noise into O(1e-8) errors, so
    anything below 1e-14 of the largest eigenvalue is treated as exactly 0.
    """
    w = np.clip(w, 0.0, None)
    floor = 1e-14 * w.max(axis=-1, keepdims=True)
    return np.where(w > floor, w, 0.0)


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    w = np.sqrt(_clip_spectrum(w))
    return np.einsum("...ij,...j,...kj->...ik", v, w, v.conj())


def fidelity(x: QuantumState, y: QuantumState):
    """Uhlmann fidelity; equals |<x|y>|**2 for pure states.

    Returns a float for symbol-free inputs, otherwise an array over the
    combined phase grid (broadcast by symbol).
    """
    grids, symbols = _aligned_pair(x, y)
    if x.is_pure and y.is_pure:
        xd = _expand_axes(x.data, x.phase_symbols, symbols)
        yd = _expand_axes(y.data, y.phase_symbols, symbols)
        overlap = np.einsum("...i,...i->...", xd.conj(), yd)
        return _maybe_scalar(np.abs(overlap) ** 2, bool(grids))
    if x.is_pure or y.is_pure:
        pure, mixed = (x, y) if x.is_pure else (y, x)
        pd = _expand_axes(pure.data, pure.phase_symbols, symbols)
        md = _expand_axes(mixed.data, mixed.phase_symbols, symbols)
        value = np.real(np.einsum("...i,...ij,...j->...", pd.conj(), md, pd))
        return _maybe_scalar(value, bool(grids))
    xd = _expand_axes(x.data, x.phase_symbols, symbols)
    yd = _expand_axes(y.data, y.phase_symbols, symbols)
    xd, yd = np.broadcast_arrays(xd, yd)
    root = _psd_sqrt(xd)
    inner = np.einsum("...ij,...jk,...kl->...il", root, yd, root)
    w = np.linalg.eigvalsh(inner)
    value = np.sum(np.sqrt(_clip_spectrum(w)), axis=-1) ** 2
    return _maybe_scalar(value, bool(grids))


def trace_distance(x: QuantumState, y: QuantumState):
    """Trace distance (1/2)*tr|x - y|, per grid point when symbols are present."""
    grids, symbols = _aligned_pair(x, y)
    xd = _expand_axes(x.density_data(), x.phase_symbols, symbols)
    yd = _expand_axes(y.density_data(), y.phase_symbols, symbols)
    w = np.linalg.eigvalsh(xd - yd)
    return _maybe_scalar(0.5 * np.sum(np.abs(w), axis=-1), bool(grids))


def entanglement_entropy(state: QuantumState, keep: Sequence[str]):
    """Von Neumann entropy, in bits, of the reduced state on ``keep``.

    For a pure state this is the entanglement entropy across the cut
    ``keep`` versus the rest of the register.  Eigenvalues are clipped at
    1e-15 before the logarithm.
    """
    reduced = partial_trace(state, keep)
    w = np.linalg.eigvalsh(reduced.data)
    w = np.clip(w, 0.0, None)
    logs = np.log2(np.clip(w, 1e-15, None))
    value = -np.sum(w * logs, axis=-1)
    return _maybe_scalar(value, bool(state.grids))
