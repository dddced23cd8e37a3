"""Randomized-sequence execution engine.

Runs the loss protocol (random gate sequences, no inversion) and its
benchmarking variant (inversion gate appended before measurement) over a
grid of sequence lengths, in exact-expectation or finite-shot mode.

Noise convention: the imperfect implementation of gate g is "noise first,
then g".  Every (length, sequence) pair draws from its own RNG stream keyed
by (master_seed, length_index, sequence_index), so datasets are
bit-reproducible regardless of execution order or worker count.
"""

import csv
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DensityMatrix,
    MeasurementOperator,
    QuantumChannel,
    _apply_kraus,
    expectation,
    sample_clicks,
    stream,
)
from .gates import GateSet, inverse_gate, twirl

VARIANT_LOSS = "loss"
VARIANT_RB = "rb"

CSV_HEADER = ("m", "mean", "sem", "n_sequences", "shots")

# Sub-stream tags appended to (master_seed, m_index, seq_index).
_GATE_DRAWS = 0
_SHOT_DRAWS = 1


@dataclass(frozen=True)
class ProtocolConfig:
    """Everything that pins down one protocol run.

    ``shots=None`` requests exact per-sequence expectation values; a
    positive integer requests that many binomial shots per sequence.
    """

    gateset: GateSet
    noise: QuantumChannel
    rho0: DensityMatrix
    q_op: MeasurementOperator
    m_grid: tuple
    n_sequences: int
    master_seed: int
    shots: int | None = None
    variant: str = VARIANT_LOSS

    def __post_init__(self):
        grid = tuple(int(m) for m in self.m_grid)
        if not grid:
            raise ValueError("m_grid must be nonempty")
        if grid[0] < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError(f"m_grid must be strictly increasing positive, got {grid}")
        object.__setattr__(self, "m_grid", grid)
        dims = {
            "gateset": self.gateset.dim,
            "noise": self.noise.dim,
            "state": self.rho0.dim,
            "measurement": self.q_op.dim,
        }
        if len(set(dims.values())) != 1:
            raise ValueError(f"dimension mismatch across config: {dims}")
        if self.n_sequences < 1:
            raise ValueError(f"n_sequences must be positive, got {self.n_sequences}")
        if self.shots is not None and self.shots < 1:
            raise ValueError(f"shots must be positive or None, got {self.shots}")
        if self.variant not in (VARIANT_LOSS, VARIANT_RB):
            raise ValueError(f"variant must be 'loss' or 'rb', got {self.variant!r}")

    def fingerprint(self) -> str:
        """SHA-256 over a canonical byte encoding of the full configuration."""
        h = hashlib.sha256()
        h.update(
            json.dumps(
                {
                    "dim": self.gateset.dim,
                    "labels": list(self.gateset.labels),
                    "design_order": self.gateset.design_order,
                    "m_grid": list(self.m_grid),
                    "n_sequences": self.n_sequences,
                    "master_seed": self.master_seed,
                    "shots": self.shots,
                    "variant": self.variant,
                    "n_kraus": len(self.noise.kraus),
                },
                sort_keys=True,
            ).encode()
        )
        for g in self.gateset.gates:
            h.update(g.tobytes())
        for k in self.noise.kraus:
            h.update(k.tobytes())
        h.update(self.rho0.matrix.tobytes())
        h.update(self.q_op.matrix.tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class SequenceOutcome:
    """Measured signal for one random sequence at one length."""

    m: int
    sequence_indices: tuple
    value: float
    shots_used: int | None


@dataclass(frozen=True)
class DecayDataset:
    """Per-length statistics of the measured signal.

    ``sems`` holds the standard error of the mean over sequences
    (sample standard deviation with the n-1 convention, divided by
    sqrt(n)); it is NaN when fewer than two sequences were run.
    """

    m_values: tuple
    means: np.ndarray
    sems: np.ndarray
    n_sequences: int
    shots: int | None
    metadata: dict = field(default_factory=dict)
    raw: tuple | None = None

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        sems = np.asarray(self.sems, dtype=float)
        if not (len(self.m_values) == means.size == sems.size):
            raise ValueError("m_values, means and sems must have equal length")
        means.setflags(write=False)
        sems.setflags(write=False)
        object.__setattr__(self, "m_values", tuple(int(m) for m in self.m_values))
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "sems", sems)

    def to_csv(self, path) -> None:
        """Write rows as ``m,mean,sem,n_sequences,shots`` (shots: int or 'exact')."""
        shots_field = "exact" if self.shots is None else str(self.shots)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for m, mean, sem in zip(self.m_values, self.means, self.sems):
                writer.writerow([m, repr(float(mean)), repr(float(sem)), self.n_sequences, shots_field])


def read_decay_csv(path) -> DecayDataset:
    """Load a dataset written by :meth:`DecayDataset.to_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty CSV") from None
        if tuple(header) != CSV_HEADER:
            raise ValueError(
                f"{path}: bad header {header!r}, expected {','.join(CSV_HEADER)}"
            )
        m_values, means, sems = [], [], []
        n_sequences, shots = None, None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
            try:
                m_values.append(int(row[0]))
                means.append(float(row[1]))
                sems.append(float(row[2]))
                n_seq = int(row[3])
                sh = None if row[4] == "exact" else int(row[4])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if n_sequences is None:
                n_sequences, shots = n_seq, sh
            elif (n_sequences, shots) != (n_seq, sh):
                raise ValueError(f"{path}:{lineno}: inconsistent n_sequences/shots")
    if not m_values:
        raise ValueError(f"{path}: no data rows")
    return DecayDataset(
        m_values=tuple(m_values),
        means=np.array(means),
        sems=np.array(sems),
        n_sequences=n_sequences,
        shots=shots,
        metadata={"source": str(path)},
    )


def sample_sequence(gateset: GateSet, m: int, rng: np.random.Generator) -> np.ndarray:
    """Draw m i.i.d. uniform gate indices from the given stream."""
    if m < 1:
        raise ValueError(f"sequence length must be >= 1, got {m}")
    return rng.integers(0, len(gateset), size=m)


def execute_sequence(
    cfg: ProtocolConfig,
    indices,
    rng: np.random.Generator | None = None,
) -> SequenceOutcome:
    """Simulate one sequence: noise then gate, per index, then measure.

    The benchmarking variant appends the sequence's inverse gate (preceded,
    like every gate, by one application of the noise) before measuring.
    In exact mode the outcome value is the expectation of the measurement;
    in shot mode it is the click fraction drawn from ``rng``.
    """
    indices = [int(k) for k in indices]
    n = len(cfg.gateset)
    for k in indices:
        if not 0 <= k < n:
            raise IndexError(f"gate index {k} out of range [0, {n})")
    kraus = cfg.noise.kraus
    gates = cfg.gateset.gates
    mat = cfg.rho0.matrix
    for k in indices:
        mat = _apply_kraus(kraus, mat)
        u = gates[k]
        mat = u @ mat @ u.conj().T
    if cfg.variant == VARIANT_RB:
        inv = inverse_gate(cfg.gateset, indices)
        mat = _apply_kraus(kraus, mat)
        u = gates[inv]
        mat = u @ mat @ u.conj().T
    final = DensityMatrix(cfg.gateset.dim, mat)
    if cfg.shots is None:
        value = expectation(cfg.q_op, final)
        shots_used = None
    else:
        if rng is None:
            raise ValueError("shot mode needs an RNG stream")
        clicks = sample_clicks(cfg.q_op, final, cfg.shots, rng)
        value = clicks / cfg.shots
        shots_used = cfg.shots
    return SequenceOutcome(len(indices), tuple(indices), value, shots_used)


def _run_one(cfg: ProtocolConfig, m_index: int, seq_index: int) -> SequenceOutcome:
    m = cfg.m_grid[m_index]
    gate_rng = stream(cfg.master_seed, m_index, seq_index, _GATE_DRAWS)
    indices = sample_sequence(cfg.gateset, m, gate_rng)
    shot_rng = None
    if cfg.shots is not None:
        shot_rng = stream(cfg.master_seed, m_index, seq_index, _SHOT_DRAWS)
    return execute_sequence(cfg, indices, shot_rng)


def run_protocol(
    cfg: ProtocolConfig,
    keep_raw: bool = False,
    n_workers: int | None = None,
) -> DecayDataset:
    """Run the full protocol over the length grid.

    Sequences are independent tasks; with ``n_workers`` they execute on a
    thread pool and are gathered in (length, sequence) order, so the result
    is bit-identical to the serial run.
    """
    tasks = [
        (mi, si)
        for mi in range(len(cfg.m_grid))
        for si in range(cfg.n_sequences)
    ]
    if n_workers is not None and n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(lambda t: _run_one(cfg, *t), tasks))
    else:
        results = [_run_one(cfg, mi, si) for mi, si in tasks]

    n = cfg.n_sequences
    means = np.empty(len(cfg.m_grid))
    sems = np.empty(len(cfg.m_grid))
    for mi in range(len(cfg.m_grid)):
        values = np.array([results[mi * n + si].value for si in range(n)])
        means[mi] = values.mean()
        sems[mi] = values.std(ddof=1) / np.sqrt(n) if n >= 2 else np.nan

    metadata = {
        "master_seed": cfg.master_seed,
        "config_fingerprint": cfg.fingerprint(),
        "variant": cfg.variant,
        "m_grid": list(cfg.m_grid),
        "n_sequences": cfg.n_sequences,
        "shots": cfg.shots,
        "dim": cfg.gateset.dim,
        "gateset_labels": list(cfg.gateset.labels),
        "gateset_design_order": cfg.gateset.design_order,
    }
    return DecayDataset(
        m_values=cfg.m_grid,
        means=means,
        sems=sems,
        n_sequences=cfg.n_sequences,
        shots=cfg.shots,
        metadata=metadata,
        raw=tuple(results) if keep_raw else None,
    )


def exact_sequence_average(cfg: ProtocolConfig, m: int) -> float:
    """The sequence-averaged signal at length m, computed without sampling.

    Averaging over all |G|^m sequences factorizes into m rounds of
    (noise, then group average), because the m gate draws are independent.
    This holds for any gate set; when the set is a unitary 1-design the
    result collapses to the closed-form single-exponential decay.  Always
    evaluates the loss variant (no inversion gate).
    """
    if m < 1:
        raise ValueError(f"sequence length must be >= 1, got {m}")
    mat = cfg.rho0.matrix
    for _ in range(m):
        mat = _apply_kraus(cfg.noise.kraus, mat)
        mat = twirl(cfg.gateset, mat)
    return expectation(cfg.q_op, DensityMatrix(cfg.gateset.dim, mat))
