"""Detector error models: elementary-fault symptom enumeration, merging,
and overlapping-window slicing.

Every fault site is decomposed into its mutually exclusive Pauli
components; each component's symptom (flipped detectors and observables)
is computed by exact propagation through the circuit, and components
with identical symptoms are merged with p <- pa(1-pb) + pb(1-pa).  Since
(1-2p) factors multiply under that rule, analytic detector marginals
computed from merged mechanisms treat same-site components as
independent; the error of that approximation is O(p^2) per site and far
below sampling noise at the rates used here.

Text format:
    dem <detector_count> <observable_count>
    error <p> D<i> D<j> ... [L<k> ...]
    round D<i> <r>
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import Circuit
from .noise import NoisyCircuit, elementary_components, run_injections


@dataclass(frozen=True)
class Mechanism:
    p: float
    dets: tuple[int, ...]
    obs: tuple[int, ...]


@dataclass(frozen=True)
class DetectorErrorModel:
    detector_count: int
    observable_count: int
    mechanisms: tuple[Mechanism, ...]
    det_rounds: tuple[int, ...]
    # Slice provenance: rounds included in this window and the parent
    # mechanism index of each mechanism (None for a full model).
    active_rounds: tuple[int, ...] | None = None
    origin: tuple[int, ...] | None = None

    @property
    def num_rounds(self) -> int:
        return 1 + max(self.det_rounds, default=0)

    def active_detectors(self) -> np.ndarray:
        """Global indices of the detectors this model decodes."""
        if self.active_rounds is None:
            return np.arange(self.detector_count)
        active = set(self.active_rounds)
        return np.array([d for d, r in enumerate(self.det_rounds)
                         if r in active], dtype=np.intp)


def _merge(p_a: float, p_b: float) -> float:
    return p_a * (1.0 - p_b) + p_b * (1.0 - p_a)


def build_dem(noisy: NoisyCircuit) -> DetectorErrorModel:
    """Symptom-merge every elementary fault component of the circuit."""
    circuit = noisy.circuit
    for site in noisy.sites:
        if not site.p < 0.5:
            raise ValueError(f"fault site probability {site.p} not < 1/2")
    injections = []
    probs = []
    for site in noisy.sites:
        for paulis, p in elementary_components(site, circuit):
            injections.append(
                [(site.op_index, site.when, tuple(zip(site.qubits, paulis)))]
            )
            probs.append(p)
    merged: dict[tuple[tuple[int, ...], tuple[int, ...]], float] = {}
    if injections:
        dets, obs = run_injections(circuit, injections)
        for row in range(len(injections)):
            dkey = tuple(np.nonzero(dets[row])[0].tolist())
            okey = tuple(np.nonzero(obs[row])[0].tolist())
            if not dkey and not okey:
                continue
            key = (dkey, okey)
            merged[key] = _merge(merged.get(key, 0.0), probs[row])
    mechanisms = tuple(Mechanism(p, d, o) for (d, o), p in merged.items())
    return DetectorErrorModel(
        detector_count=len(circuit.detectors),
        observable_count=len(circuit.observables),
        mechanisms=mechanisms,
        det_rounds=tuple(circuit.detector_rounds),
    )


def window(dem: DetectorErrorModel, w: int, offset: int) -> DetectorErrorModel:
    """Sub-model of mechanisms whose earliest detector lies in rounds
    [offset, offset + w); detectors beyond the upper edge are masked
    (full symptoms remain reachable through `origin`)."""
    if w < 1:
        raise ValueError("window width must be >= 1")
    hi = offset + w
    rounds = tuple(r for r in range(offset, hi)
                   if any(dr == r for dr in dem.det_rounds))
    if not rounds:
        raise ValueError(f"empty window [{offset}, {hi})")
    mechs = []
    origin = []
    for idx, m in enumerate(dem.mechanisms):
        if not m.dets:
            continue
        first = min(dem.det_rounds[d] for d in m.dets)
        if offset <= first < hi:
            masked = tuple(d for d in m.dets if dem.det_rounds[d] < hi)
            mechs.append(Mechanism(m.p, masked, m.obs))
            origin.append(idx)
    return DetectorErrorModel(
        detector_count=dem.detector_count,
        observable_count=dem.observable_count,
        mechanisms=tuple(mechs),
        det_rounds=dem.det_rounds,
        active_rounds=rounds,
        origin=tuple(origin),
    )


def detector_fire_probabilities(dem: DetectorErrorModel) -> np.ndarray:
    """Analytic marginal fire probability of each detector under
    independent mechanisms: (1 - prod(1 - 2 p_m)) / 2."""
    factors = np.ones(dem.detector_count)
    for m in dem.mechanisms:
        for d in m.dets:
            factors[d] *= 1.0 - 2.0 * m.p
    return (1.0 - factors) / 2.0


def dem_to_text(dem: DetectorErrorModel) -> str:
    lines = [f"dem {dem.detector_count} {dem.observable_count}"]
    for m in dem.mechanisms:
        refs = [f"D{d}" for d in m.dets] + [f"L{o}" for o in m.obs]
        lines.append(f"error {m.p!r} " + " ".join(refs))
    for d, r in enumerate(dem.det_rounds):
        lines.append(f"round D{d} {r}")
    return "\n".join(lines) + "\n"


def dem_from_text(text: str) -> DetectorErrorModel:
    detector_count = observable_count = 0
    mechanisms: list[Mechanism] = []
    rounds: dict[int, int] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if tokens[0] == "dem":
            detector_count, observable_count = int(tokens[1]), int(tokens[2])
        elif tokens[0] == "error":
            p = float(tokens[1])
            dets = tuple(int(t[1:]) for t in tokens[2:] if t.startswith("D"))
            obs = tuple(int(t[1:]) for t in tokens[2:] if t.startswith("L"))
            mechanisms.append(Mechanism(p, dets, obs))
        elif tokens[0] == "round":
            rounds[int(tokens[1][1:])] = int(tokens[2])
        else:
            raise ValueError(f"unrecognized line: {raw!r}")
    det_rounds = tuple(rounds.get(d, 0) for d in range(detector_count))
    return DetectorErrorModel(
        detector_count=detector_count,
        observable_count=observable_count,
        mechanisms=tuple(mechanisms),
        det_rounds=det_rounds,
    )
