"""Memory-experiment circuits with bare-ancilla syndrome extraction.

One phase per check type per round, with a shared ancilla bank of size
max(#Z checks, #X checks): each phase resets the ancillas, couples them
(CNOTs data->ancilla for Z checks; Hadamard-conjugated CNOTs
ancilla->data for X checks) and measures them in Z.  CNOTs follow a
pinned order (checks ascending, data targets ascending inside a check)
and are packed into time steps greedily so no qubit is touched twice in
a step.

Detector layers are indexed 0..r: layer 0 compares the first same-basis
syndrome against the deterministic preparation value, layer t compares
time-adjacent syndromes, and layer r is the terminal layer
reconstructed from the destructive data measurement.  Opposite-basis
checks are nondeterministic after transversal preparation, so they
first appear as round-0/round-1 pairs assigned to layer 1.

Text format (one op per line, `TICK` advances the time step):
    qubits 53 / basis z / rounds 2 headers,
    PZ q | PX q | H q | RESET q | CNOT c t | MZ q,
    DETECTOR(layer,kind,check) m12 m31 ...,
    OBSERVABLE m52 m53 ...
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import min_weight_nontrivial
from .codes import CssCode, surface_code

OP_KINDS = ("prep_z", "prep_x", "hadamard", "cnot", "measure_z", "reset")
_MNEMONIC = {"prep_z": "PZ", "prep_x": "PX", "hadamard": "H",
             "cnot": "CNOT", "measure_z": "MZ", "reset": "RESET"}
_FROM_MNEMONIC = {v: k for k, v in _MNEMONIC.items()}


@dataclass(frozen=True)
class Op:
    kind: str
    targets: tuple[int, ...]
    time: int


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    ops: tuple[Op, ...]
    detectors: tuple[tuple[int, ...], ...]
    detector_rounds: tuple[int, ...]
    detector_kinds: tuple[str, ...]
    detector_checks: tuple[int, ...]
    observables: tuple[tuple[int, ...], ...]
    basis: str = "z"
    rounds: int = 0

    @property
    def num_measurements(self) -> int:
        return sum(1 for op in self.ops if op.kind == "measure_z")

    @property
    def num_detectors(self) -> int:
        return len(self.detectors)

    @property
    def num_time_steps(self) -> int:
        return 1 + max((op.time for op in self.ops), default=-1)

    def measured_qubits(self) -> list[int]:
        """Qubit measured by each measurement index, in order."""
        return [op.targets[0] for op in self.ops if op.kind == "measure_z"]


@dataclass
class Schedule:
    """Per-check ordered CNOT data-target lists and the phase order."""

    z_targets: list[list[int]]
    x_targets: list[list[int]]
    z_first: bool = True


def default_schedule(code: CssCode) -> Schedule:
    """Checks ascending; data targets ascending inside each check."""
    return Schedule(
        z_targets=[list(np.nonzero(row)[0]) for row in code.h_z],
        x_targets=[list(np.nonzero(row)[0]) for row in code.h_x],
        z_first=True,
    )


def _check_schedule(code: CssCode, schedule: Schedule) -> None:
    if len(schedule.z_targets) != code.num_z_checks:
        raise ValueError("schedule Z-check count does not match the code")
    if len(schedule.x_targets) != code.num_x_checks:
        raise ValueError("schedule X-check count does not match the code")
    for rows, targets in ((code.h_z, schedule.z_targets),
                          (code.h_x, schedule.x_targets)):
        for c, tlist in enumerate(targets):
            if sorted(tlist) != sorted(np.nonzero(rows[c])[0]):
                raise ValueError(f"schedule targets for check {c} do not "
                                 "match the check support")


class _Builder:
    def __init__(self, num_qubits):
        self.num_qubits = num_qubits
        self.ops: list[Op] = []
        self.time = 0
        self.meas_count = 0

    def layer(self, kind, qubits):
        for q in qubits:
            self.ops.append(Op(kind, (q,), self.time))
        self.time += 1

    def measure_layer(self, qubits):
        indices = []
        for q in qubits:
            self.ops.append(Op("measure_z", (q,), self.time))
            indices.append(self.meas_count)
            self.meas_count += 1
        self.time += 1
        return indices

    def cnot_block(self, pairs):
        """Greedy packing: place each CNOT (in order) in the earliest
        step where both its qubits are free."""
        busy: dict[int, int] = {}
        depth = 0
        for ctrl, tgt in pairs:
            step = max(busy.get(ctrl, 0), busy.get(tgt, 0))
            self.ops.append(Op("cnot", (ctrl, tgt), self.time + step))
            busy[ctrl] = busy[tgt] = step + 1
            depth = max(depth, step + 1)
        self.time += depth


def memory_circuit(code: CssCode, basis: str = "z", rounds: int = 0,
                   schedule: Schedule | None = None) -> Circuit:
    """Transversal prep, r extraction rounds with shared ancillas, then
    a destructive data measurement in the prep basis, with detector and
    observable annotations."""
    if basis not in ("z", "x"):
        raise ValueError("basis must be 'z' or 'x'")
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    if schedule is None:
        schedule = default_schedule(code)
    _check_schedule(code, schedule)

    n = code.n
    n_anc = max(code.num_z_checks, code.num_x_checks)
    b = _Builder(n + n_anc)

    b.layer("prep_z" if basis == "z" else "prep_x", range(n))

    meas_z: list[list[int]] = []
    meas_x: list[list[int]] = []
    for _ in range(rounds):
        phases = ("z", "x") if schedule.z_first else ("x", "z")
        for phase in phases:
            if phase == "z":
                ancillas = [n + c for c in range(code.num_z_checks)]
                b.layer("reset", ancillas)
                pairs = [(d, n + c)
                         for c, targets in enumerate(schedule.z_targets)
                         for d in targets]
                b.cnot_block(pairs)
                meas_z.append(b.measure_layer(ancillas))
            else:
                ancillas = [n + c for c in range(code.num_x_checks)]
                b.layer("reset", ancillas)
                b.layer("hadamard", ancillas)
                pairs = [(n + c, d)
                         for c, targets in enumerate(schedule.x_targets)
                         for d in targets]
                b.cnot_block(pairs)
                b.layer("hadamard", ancillas)
                meas_x.append(b.measure_layer(ancillas))

    if basis == "x":
        b.layer("hadamard", range(n))
    final = b.measure_layer(range(n))

    same_meas, opp_meas = (meas_z, meas_x) if basis == "z" else (meas_x, meas_z)
    same_pcm = code.h_z if basis == "z" else code.h_x
    same_kind, opp_kind = ("z", "x") if basis == "z" else ("x", "z")
    logicals = code.logicals_z if basis == "z" else code.logicals_x

    detectors, det_rounds, det_kinds, det_checks = [], [], [], []

    def add(meas_set, layer, kind, check):
        detectors.append(tuple(meas_set))
        det_rounds.append(layer)
        det_kinds.append(kind)
        det_checks.append(check)

    for t in range(rounds):
        for c in range(same_pcm.shape[0]):
            if t == 0:
                add((same_meas[0][c],), 0, same_kind, c)
            else:
                add((same_meas[t - 1][c], same_meas[t][c]), t, same_kind, c)
        if t >= 1:
            n_opp = len(opp_meas[t])
            for c in range(n_opp):
                add((opp_meas[t - 1][c], opp_meas[t][c]), t, opp_kind, c)
    for c in range(same_pcm.shape[0]):
        meas_set = [final[q] for q in np.nonzero(same_pcm[c])[0]]
        if rounds >= 1:
            meas_set.append(same_meas[rounds - 1][c])
        add(tuple(meas_set), rounds, same_kind, c)

    observables = tuple(
        tuple(final[q] for q in np.nonzero(log)[0]) for log in logicals
    )

    # Within a time step all ops touch disjoint qubits, so the stable
    # sort yields a valid sequential application order that is also
    # time-monotone (as the serializer and simulator expect).
    ordered = sorted(b.ops, key=lambda op: op.time)
    return Circuit(
        num_qubits=b.num_qubits,
        ops=tuple(ordered),
        detectors=tuple(detectors),
        detector_rounds=tuple(det_rounds),
        detector_kinds=tuple(det_kinds),
        detector_checks=tuple(det_checks),
        observables=observables,
        basis=basis,
        rounds=rounds,
    )


def cnot_count(circuit: Circuit) -> int:
    return sum(1 for op in circuit.ops if op.kind == "cnot")


def count_gate_scaling(dimension: int, length: int) -> int:
    """CNOTs per fault-tolerant decoding cycle: the total generator
    weight for the single-shot 4D code, times the distance for the 2D
    code (which repeats extraction d times)."""
    if dimension not in (2, 4):
        raise ValueError("dimension must be 2 or 4")
    code = surface_code(dimension, length)
    per_round = int(code.h_x.sum() + code.h_z.sum())
    if dimension == 4:
        return per_round
    return per_round * code.d


@dataclass(frozen=True)
class HookReport:
    """Support overlap of every stabilizer generator with every
    minimum-weight logical representative."""

    max_overlap: int
    passed: bool
    histogram: tuple[tuple[int, int], ...]
    num_generators: int
    num_logicals: int


def hook_audit(code: CssCode) -> HookReport:
    """Pass iff every generator/minimum-weight-logical overlap is <= 2,
    so a single ancilla fault can never spread into more than a benign
    fragment of any logical operator."""
    if code.d is None:
        raise ValueError("hook audit needs the exact distance")
    _, z_logicals = min_weight_nontrivial(code.h_x, code.h_z, code.d,
                                          collect_all=True)
    _, x_logicals = min_weight_nontrivial(code.h_z, code.h_x, code.d,
                                          collect_all=True)
    logicals = z_logicals + x_logicals
    generators = np.vstack([code.h_x, code.h_z])
    hist: dict[int, int] = {}
    max_overlap = 0
    for gen in generators:
        for log in logicals:
            ov = int((gen & log).sum())
            hist[ov] = hist.get(ov, 0) + 1
            max_overlap = max(max_overlap, ov)
    return HookReport(
        max_overlap=max_overlap,
        passed=max_overlap <= 2,
        histogram=tuple(sorted(hist.items())),
        num_generators=generators.shape[0],
        num_logicals=len(logicals),
    )


def circuit_to_text(circuit: Circuit) -> str:
    lines = [
        f"qubits {circuit.num_qubits}",
        f"basis {circuit.basis}",
        f"rounds {circuit.rounds}",
    ]
    time = 0
    for op in circuit.ops:
        while time < op.time:
            lines.append("TICK")
            time += 1
        lines.append(f"{_MNEMONIC[op.kind]} " + " ".join(map(str, op.targets)))
    for det, layer, kind, check in zip(circuit.detectors,
                                       circuit.detector_rounds,
                                       circuit.detector_kinds,
                                       circuit.detector_checks):
        refs = " ".join(f"m{i}" for i in det)
        lines.append(f"DETECTOR({layer},{kind},{check}) {refs}")
    for obs in circuit.observables:
        lines.append("OBSERVABLE " + " ".join(f"m{i}" for i in obs))
    return "\n".join(lines) + "\n"


def circuit_from_text(text: str) -> Circuit:
    num_qubits = 0
    basis, rounds = "z", 0
    ops: list[Op] = []
    detectors, det_rounds, det_kinds, det_checks = [], [], [], []
    observables = []
    time = 0
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(" ")
        if head == "qubits":
            num_qubits = int(rest)
        elif head == "basis":
            basis = rest.strip()
        elif head == "rounds":
            rounds = int(rest)
        elif head == "TICK":
            time += 1
        elif head.startswith("DETECTOR"):
            meta = head[len("DETECTOR("):-1].split(",")
            det_rounds.append(int(meta[0]))
            det_kinds.append(meta[1])
            det_checks.append(int(meta[2]))
            detectors.append(tuple(int(tok[1:]) for tok in rest.split()))
        elif head == "OBSERVABLE":
            observables.append(tuple(int(tok[1:]) for tok in rest.split()))
        elif head in _FROM_MNEMONIC:
            targets = tuple(int(t) for t in rest.split())
            ops.append(Op(_FROM_MNEMONIC[head], targets, time))
        else:
            raise ValueError(f"unrecognized line: {raw!r}")
    return Circuit(
        num_qubits=num_qubits,
        ops=tuple(ops),
        detectors=tuple(detectors),
        detector_rounds=tuple(det_rounds),
        detector_kinds=tuple(det_kinds),
        detector_checks=tuple(det_checks),
        observables=tuple(observables),
        basis=basis,
        rounds=rounds,
    )
