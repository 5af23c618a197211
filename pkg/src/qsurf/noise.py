"""Circuit-level stochastic Pauli noise and Pauli-frame Monte Carlo.

The frame simulator tracks X/Z error frames through Clifford ops for a
whole batch of shots at once; a measurement's recorded flip is the X
frame on the measured qubit.  Detector and observable statistics of
stabilizer circuits under Pauli noise are reproduced exactly (validated
against a stabilizer-tableau reference in the test suite).

Noise channels attached per op:
  - 15-way two-qubit depolarizing after each CNOT (p2),
  - 3-way depolarizing after single-qubit gates (p1),
  - flip after prep/reset and flip before measurement (p_spam),
  - biased idle noise on every qubit without an op in a time step
    (p_idle, Z fraction = bias).

A measurement flip is realized as an X error immediately before the
measurement; every measured qubit here is subsequently reset or never
used again, so this is equivalent to flipping only the record.

Shot sampling draws per-chunk Philox streams keyed on (seed, chunk
index), so results are reproducible and independent of execution order.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .circuits import Circuit

SAMPLE_MAGIC = b"QSS1"
_CHUNK = 1 << 14

_PAULI_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}

# The 15 nontrivial two-qubit Paulis, indexed for vectorized draws.
_TWO_QUBIT_PAULIS = [
    (a, b) for a in "IXYZ" for b in "IXYZ" if (a, b) != ("I", "I")
]
_P2_X1 = np.array([_PAULI_BITS[a][0] for a, _ in _TWO_QUBIT_PAULIS], bool)
_P2_Z1 = np.array([_PAULI_BITS[a][1] for a, _ in _TWO_QUBIT_PAULIS], bool)
_P2_X2 = np.array([_PAULI_BITS[b][0] for _, b in _TWO_QUBIT_PAULIS], bool)
_P2_Z2 = np.array([_PAULI_BITS[b][1] for _, b in _TWO_QUBIT_PAULIS], bool)

_ONE_QUBIT_PAULIS = ["X", "Y", "Z"]
_P1_X = np.array([1, 1, 0], bool)
_P1_Z = np.array([0, 1, 1], bool)


@dataclass(frozen=True)
class NoiseModel:
    p2: float = 1.3e-3
    p1: float = 3e-5
    p_spam: float = 1.5e-3
    p_idle: float = 0.0
    bias: float = 1.0

    def __post_init__(self):
        for name in ("p2", "p1", "p_spam", "p_idle", "bias"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")

    def scaled(self, factor: float) -> "NoiseModel":
        """Scale the gate and SPAM probabilities together."""
        return NoiseModel(self.p2 * factor, self.p1 * factor,
                          self.p_spam * factor, self.p_idle * factor,
                          self.bias)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "NoiseModel":
        return cls(**json.loads(text))


@dataclass(frozen=True)
class FaultSite:
    """A noise channel anchored to an op (idle channels anchor to the
    last op of their time step)."""

    op_index: int
    when: str  # 'before' | 'after'
    kind: str  # 'depol2' | 'depol1' | 'prep_flip' | 'meas_flip' | 'idle'
    qubits: tuple[int, ...]
    p: float
    bias: float = 1.0


@dataclass(frozen=True)
class NoisyCircuit:
    circuit: Circuit
    sites: tuple[FaultSite, ...]


def attach_noise(circuit: Circuit, model: NoiseModel) -> NoisyCircuit:
    """Insert fault sites; zero-probability channels are omitted."""
    sites: list[FaultSite] = []
    for i, op in enumerate(circuit.ops):
        if op.kind == "cnot" and model.p2 > 0:
            sites.append(FaultSite(i, "after", "depol2", op.targets, model.p2))
        elif op.kind == "hadamard" and model.p1 > 0:
            sites.append(FaultSite(i, "after", "depol1", op.targets, model.p1))
        elif op.kind in ("prep_z", "prep_x", "reset") and model.p_spam > 0:
            sites.append(FaultSite(i, "after", "prep_flip", op.targets,
                                   model.p_spam))
        elif op.kind == "measure_z" and model.p_spam > 0:
            sites.append(FaultSite(i, "before", "meas_flip", op.targets,
                                   model.p_spam))
    if model.p_idle > 0:
        occupied: dict[int, set[int]] = {}
        last_idx: dict[int, int] = {}
        for i, op in enumerate(circuit.ops):
            occupied.setdefault(op.time, set()).update(op.targets)
            last_idx[op.time] = i
        for t in sorted(occupied):
            for q in range(circuit.num_qubits):
                if q not in occupied[t]:
                    sites.append(FaultSite(last_idx[t], "after", "idle",
                                           (q,), model.p_idle, model.bias))
    return NoisyCircuit(circuit, tuple(sites))


def elementary_components(site: FaultSite, circuit: Circuit):
    """The mutually exclusive Pauli components of a fault site, as
    (paulis, probability) pairs with paulis aligned to site.qubits."""
    if site.kind == "depol2":
        return [(pair, site.p / 15.0) for pair in _TWO_QUBIT_PAULIS]
    if site.kind == "depol1":
        return [((p,), site.p / 3.0) for p in _ONE_QUBIT_PAULIS]
    if site.kind == "prep_flip":
        op = circuit.ops[site.op_index]
        flip = "Z" if op.kind == "prep_x" else "X"
        return [((flip,), site.p)]
    if site.kind == "meas_flip":
        return [(("X",), site.p)]
    if site.kind == "idle":
        comps = [(("Z",), site.p * site.bias),
                 (("X",), site.p * (1.0 - site.bias) / 2.0),
                 (("Y",), site.p * (1.0 - site.bias) / 2.0)]
        return [(pauli, p) for pauli, p in comps if p > 0]
    raise ValueError(f"unknown fault kind {site.kind}")


@dataclass(frozen=True)
class Symptom:
    detectors: tuple[int, ...]
    observables: tuple[int, ...]

    def __xor__(self, other: "Symptom") -> "Symptom":
        d = sorted(set(self.detectors) ^ set(other.detectors))
        o = sorted(set(self.observables) ^ set(other.observables))
        return Symptom(tuple(d), tuple(o))


class _FrameRunner:
    """One batched pass through a circuit's op stream."""

    def __init__(self, circuit: Circuit, batch: int):
        self.circuit = circuit
        self.batch = batch
        self.x = np.zeros((batch, circuit.num_qubits), dtype=bool)
        self.z = np.zeros((batch, circuit.num_qubits), dtype=bool)
        self.outcomes = np.zeros((batch, circuit.num_measurements), dtype=bool)

    def apply_pauli_rows(self, rows, qubit, px, pz):
        if px:
            self.x[rows, qubit] ^= True
        if pz:
            self.z[rows, qubit] ^= True

    def sample_site(self, site: FaultSite, rng):
        hit = rng.random(self.batch) < site.p
        count = int(hit.sum())
        if count == 0:
            return
        rows = np.nonzero(hit)[0]
        if site.kind == "depol2":
            k = rng.integers(0, 15, size=count)
            q1, q2 = site.qubits
            self.x[rows, q1] ^= _P2_X1[k]
            self.z[rows, q1] ^= _P2_Z1[k]
            self.x[rows, q2] ^= _P2_X2[k]
            self.z[rows, q2] ^= _P2_Z2[k]
        elif site.kind == "depol1":
            k = rng.integers(0, 3, size=count)
            (q,) = site.qubits
            self.x[rows, q] ^= _P1_X[k]
            self.z[rows, q] ^= _P1_Z[k]
        elif site.kind in ("prep_flip", "meas_flip"):
            (q,) = site.qubits
            op = self.circuit.ops[site.op_index]
            if site.kind == "prep_flip" and op.kind == "prep_x":
                self.z[rows, q] ^= True
            else:
                self.x[rows, q] ^= True
        elif site.kind == "idle":
            (q,) = site.qubits
            u = rng.random(count)
            is_z = u < site.bias
            is_x = (~is_z) & (u < site.bias + (1.0 - site.bias) / 2.0)
            is_y = ~(is_z | is_x)
            self.x[rows, q] ^= is_x | is_y
            self.z[rows, q] ^= is_z | is_y
        else:
            raise ValueError(f"unknown fault kind {site.kind}")

    def run(self, before, after):
        """Execute the op stream; *before*/*after* are callbacks
        (op_index) -> None used to apply noise or injections."""
        meas_idx = 0
        x, z = self.x, self.z
        for i, op in enumerate(self.circuit.ops):
            before(i)
            kind = op.kind
            if kind == "cnot":
                c, t = op.targets
                x[:, t] ^= x[:, c]
                z[:, c] ^= z[:, t]
            elif kind == "hadamard":
                (q,) = op.targets
                tmp = x[:, q].copy()
                x[:, q] = z[:, q]
                z[:, q] = tmp
            elif kind in ("prep_z", "prep_x", "reset"):
                (q,) = op.targets
                x[:, q] = False
                z[:, q] = False
            elif kind == "measure_z":
                (q,) = op.targets
                self.outcomes[:, meas_idx] = x[:, q]
                meas_idx += 1
            else:
                raise ValueError(f"non-Clifford or unknown op {kind!r}")
            after(i)

    def detector_bits(self):
        c = self.circuit
        dets = np.zeros((self.batch, len(c.detectors)), dtype=bool)
        for d, meas in enumerate(c.detectors):
            for m in meas:
                dets[:, d] ^= self.outcomes[:, m]
        obs = np.zeros((self.batch, len(c.observables)), dtype=bool)
        for o, meas in enumerate(c.observables):
            for m in meas:
                obs[:, o] ^= self.outcomes[:, m]
        return dets, obs


def _grouped_sites(sites):
    before: dict[int, list[FaultSite]] = {}
    after: dict[int, list[FaultSite]] = {}
    for s in sites:
        (before if s.when == "before" else after).setdefault(s.op_index, []).append(s)
    return before, after


def sample(noisy: NoisyCircuit, shots: int, seed: int,
           chunk: int = _CHUNK) -> tuple[np.ndarray, np.ndarray]:
    """Detector and observable bits for *shots* shots, deterministic in
    (circuit, model, seed, shots)."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    circuit = noisy.circuit
    before, after = _grouped_sites(noisy.sites)
    det_out = np.zeros((shots, len(circuit.detectors)), dtype=np.uint8)
    obs_out = np.zeros((shots, len(circuit.observables)), dtype=np.uint8)
    for ci, start in enumerate(range(0, shots, chunk)):
        stop = min(start + chunk, shots)
        rng = np.random.Generator(np.random.Philox(
            np.random.SeedSequence((int(seed) & 0xFFFFFFFFFFFFFFFF, ci))))
        runner = _FrameRunner(circuit, stop - start)

        def apply(table, i):
            for site in table.get(i, ()):
                runner.sample_site(site, rng)

        runner.run(lambda i: apply(before, i), lambda i: apply(after, i))
        dets, obs = runner.detector_bits()
        det_out[start:stop] = dets
        obs_out[start:stop] = obs
    return det_out, obs_out


def run_injections(circuit: Circuit, injections) -> tuple[np.ndarray, np.ndarray]:
    """Batched deterministic fault propagation.

    injections: list (one entry per batch row) of lists of
    (op_index, when, ((qubit, pauli), ...)) insertions.  Returns the
    detector and observable flip bits, row-aligned with the input.
    """
    batch = len(injections)
    runner = _FrameRunner(circuit, max(batch, 1))
    before: dict[int, list] = {}
    after: dict[int, list] = {}
    for row, entry in enumerate(injections):
        for op_index, when, paulis in entry:
            table = before if when == "before" else after
            table.setdefault(op_index, []).append((row, paulis))

    def apply(table, i):
        for row, paulis in table.get(i, ()):
            for qubit, pauli in paulis:
                px, pz = _PAULI_BITS[pauli]
                runner.apply_pauli_rows(row, qubit, px, pz)

    runner.run(lambda i: apply(before, i), lambda i: apply(after, i))
    dets, obs = runner.detector_bits()
    return dets[:batch], obs[:batch]


def inject_fault(noisy: NoisyCircuit | Circuit, site: FaultSite,
                 paulis) -> Symptom:
    """Noiseless run with exactly one Pauli inserted at *site*."""
    circuit = noisy.circuit if isinstance(noisy, NoisyCircuit) else noisy
    if isinstance(paulis, str):
        paulis = tuple(paulis)
    if len(paulis) != len(site.qubits):
        raise ValueError("one Pauli per site qubit required")
    if not (0 <= site.op_index < len(circuit.ops)):
        raise ValueError("fault site references no real op")
    entry = [(site.op_index, site.when, tuple(zip(site.qubits, paulis)))]
    dets, obs = run_injections(circuit, [entry])
    return Symptom(tuple(np.nonzero(dets[0])[0].tolist()),
                   tuple(np.nonzero(obs[0])[0].tolist()))


def save_samples_text(path, detectors, observables):
    detectors = np.asarray(detectors, dtype=np.uint8)
    observables = np.asarray(observables, dtype=np.uint8)
    with open(path, "w") as fh:
        for drow, orow in zip(detectors, observables):
            bits = "".join(map(str, drow)) + "".join(map(str, orow))
            fh.write(bits + "\n")


def load_samples_text(path, detector_count, observable_count):
    dets, obs = [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if len(line) != detector_count + observable_count:
                raise ValueError("sample row width mismatch")
            row = np.frombuffer(line.encode(), dtype=np.uint8) - ord("0")
            dets.append(row[:detector_count])
            obs.append(row[detector_count:])
    return (np.array(dets, dtype=np.uint8),
            np.array(obs, dtype=np.uint8))


def save_samples_packed(path, detectors, observables):
    detectors = np.asarray(detectors, dtype=np.uint8)
    observables = np.asarray(observables, dtype=np.uint8)
    shots, dcount = detectors.shape
    ocount = observables.shape[1]
    header = SAMPLE_MAGIC + np.array([shots, dcount, ocount],
                                     dtype="<u4").tobytes()
    rows = np.hstack([detectors, observables])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.packbits(rows, axis=1).tobytes())


def load_samples_packed(path):
    with open(path, "rb") as fh:
        header = fh.read(16)
        if header[:4] != SAMPLE_MAGIC:
            raise ValueError("bad magic in packed sample file")
        shots, dcount, ocount = np.frombuffer(header[4:], dtype="<u4")
        width = dcount + ocount
        row_bytes = (int(width) + 7) // 8
        raw = np.frombuffer(fh.read(), dtype=np.uint8)
    rows = np.unpackbits(raw.reshape(int(shots), row_bytes),
                         axis=1)[:, :width]
    return (rows[:, :dcount].astype(np.uint8).copy(),
            rows[:, dcount:].astype(np.uint8).copy())
