import numpy as np
import pytest

import tableau_ref
from qsurf.circuits import memory_circuit
from qsurf.dem import (
    DetectorErrorModel,
    Mechanism,
    build_dem,
    dem_from_text,
    dem_to_text,
    detector_fire_probabilities,
    window,
)
from qsurf.noise import (
    FaultSite,
    NoiseModel,
    NoisyCircuit,
    attach_noise,
    elementary_components,
    inject_fault,
    sample,
)


def test_zero_noise_empty_dem(code_2d_l2):
    circ = memory_circuit(code_2d_l2, "z", 1)
    dem = build_dem(NoisyCircuit(circ, ()))
    assert dem.mechanisms == ()
    assert dem.detector_count == len(circ.detectors)


def test_single_measurement_flip_mechanism(code_2d_l2):
    circ = memory_circuit(code_2d_l2, "z", 3)
    # Z-phase ancilla measurement in the middle round.
    z_meas = [i for i, op in enumerate(circ.ops)
              if op.kind == "measure_z" and op.targets[0] >= code_2d_l2.n]
    per_round = code_2d_l2.num_z_checks + code_2d_l2.num_x_checks
    op_index = z_meas[per_round]  # first Z check, second round
    site = FaultSite(op_index, "before", "meas_flip",
                     circ.ops[op_index].targets, 0.37)
    dem = build_dem(NoisyCircuit(circ, (site,)))
    assert len(dem.mechanisms) == 1
    mech = dem.mechanisms[0]
    assert mech.p == pytest.approx(0.37)
    assert len(mech.dets) == 2
    assert mech.obs == ()
    rounds = sorted(dem.det_rounds[d] for d in mech.dets)
    assert rounds == [1, 2]


def test_same_symptom_sites_merge():
    from qsurf.circuits import Circuit, Op

    circ = Circuit(
        num_qubits=1,
        ops=(Op("prep_z", (0,), 0), Op("measure_z", (0,), 1)),
        detectors=((0,),), detector_rounds=(0,), detector_kinds=("z",),
        detector_checks=(0,), observables=((0,),),
    )
    sites = (
        FaultSite(0, "after", "prep_flip", (0,), 0.1),
        FaultSite(1, "before", "meas_flip", (0,), 0.2),
    )
    dem = build_dem(NoisyCircuit(circ, sites))
    assert len(dem.mechanisms) == 1
    expected = 0.1 * 0.8 + 0.2 * 0.9
    assert dem.mechanisms[0].p == pytest.approx(expected)


def test_dem_symptoms_match_injection_oracle(code_4d_l2):
    circ = memory_circuit(code_4d_l2, "z", 1)
    noisy = attach_noise(circ, NoiseModel())
    dem = build_dem(noisy)
    oracle: dict = {}
    for site in noisy.sites:
        for paulis, p in elementary_components(site, circ):
            s = inject_fault(noisy, site, paulis)
            key = (s.detectors, s.observables)
            if key == ((), ()):
                continue
            pa = oracle.get(key, 0.0)
            oracle[key] = pa * (1 - p) + p * (1 - pa)
    built = {(m.dets, m.obs): m.p for m in dem.mechanisms}
    assert built.keys() == oracle.keys()
    for key, p in oracle.items():
        assert built[key] == pytest.approx(p)


def test_dem_symptoms_match_tableau(code_2d_l2):
    """Every mechanism's symptom reproduces an exact tableau propagation
    of one of its source faults."""
    circ = memory_circuit(code_2d_l2, "z", 2)
    noisy = attach_noise(circ, NoiseModel())
    dem = build_dem(noisy)
    tableau_symptoms = set()
    for site in noisy.sites:
        for paulis, _ in elementary_components(site, circ):
            injections = [(site.op_index, site.when,
                           tuple(zip(site.qubits, paulis)))]
            d, o = tableau_ref.run_circuit(circ, injections,
                                           rng=np.random.default_rng(2))
            key = (tuple(np.nonzero(d)[0]), tuple(np.nonzero(o)[0]))
            if key != ((), ()):
                tableau_symptoms.add(key)
    dem_symptoms = {(m.dets, m.obs) for m in dem.mechanisms}
    assert dem_symptoms == tableau_symptoms


def test_mechanism_probabilities_positive(code_4d_l2):
    circ = memory_circuit(code_4d_l2, "z", 2)
    dem = build_dem(attach_noise(circ, NoiseModel()))
    for m in dem.mechanisms:
        assert 0 < m.p < 1
    keys = [(m.dets, m.obs) for m in dem.mechanisms]
    assert len(keys) == len(set(keys))


def test_window_full_model_is_identity(code_4d_l2):
    circ = memory_circuit(code_4d_l2, "z", 3)
    dem = build_dem(attach_noise(circ, NoiseModel()))
    full = window(dem, dem.num_rounds, 0)
    assert len(full.mechanisms) == len(dem.mechanisms)
    assert {(m.dets, m.obs) for m in full.mechanisms} == \
        {(m.dets, m.obs) for m in dem.mechanisms}


def test_window_partition_by_first_round(code_4d_l2):
    circ = memory_circuit(code_4d_l2, "z", 4)
    dem = build_dem(attach_noise(circ, NoiseModel()))
    seen: list[int] = []
    for offset in range(dem.num_rounds):
        seen.extend(window(dem, 1, offset).origin)
    assert sorted(seen) == list(range(len(dem.mechanisms)))


def test_window_masks_upper_edge(code_4d_l2):
    circ = memory_circuit(code_4d_l2, "z", 3)
    dem = build_dem(attach_noise(circ, NoiseModel()))
    sl = window(dem, 1, 0)
    masked = 0
    for m, origin in zip(sl.mechanisms, sl.origin):
        full = dem.mechanisms[origin]
        assert set(m.dets) <= set(full.dets)
        assert all(dem.det_rounds[d] == 0 for d in m.dets)
        if len(m.dets) < len(full.dets):
            masked += 1
    assert masked > 0


def test_build_dem_rejects_heavy_sites(code_2d_l2):
    circ = memory_circuit(code_2d_l2, "z", 1)
    site = FaultSite(0, "after", "prep_flip", circ.ops[0].targets, 0.6)
    with pytest.raises(ValueError):
        build_dem(NoisyCircuit(circ, (site,)))


def test_inject_fault_requires_real_op(code_2d_l2):
    circ = memory_circuit(code_2d_l2, "z", 1)
    bad = FaultSite(len(circ.ops) + 5, "after", "depol1", (0,), 0.1)
    with pytest.raises(ValueError):
        inject_fault(circ, bad, ("X",))


def test_window_empty_raises(code_4d_l2):
    circ = memory_circuit(code_4d_l2, "z", 1)
    dem = build_dem(attach_noise(circ, NoiseModel()))
    with pytest.raises(ValueError):
        window(dem, 1, 99)


def test_window_c_equals_w_partitions_interior(code_4d_l2):
    circ = memory_circuit(code_4d_l2, "z", 4)
    dem = build_dem(attach_noise(circ, NoiseModel()))
    w = 2
    inside: dict[int, int] = {}
    for offset in (0, 2, 4):
        sl = window(dem, w, offset)
        for m, origin in zip(sl.mechanisms, sl.origin):
            full = dem.mechanisms[origin]
            rounds = {dem.det_rounds[d] for d in full.dets}
            if rounds <= set(range(offset, offset + w)):
                assert origin not in inside
                inside[origin] = offset


def test_detector_marginals_match_sampler(code_4d_l2):
    circ = memory_circuit(code_4d_l2, "z", 1)
    noisy = attach_noise(circ, NoiseModel(p2=1.3e-3, p1=0, p_spam=0))
    dem = build_dem(noisy)
    predicted = detector_fire_probabilities(dem)
    shots = 200_000
    dets, _ = sample(noisy, shots, seed=11)
    empirical = dets.mean(axis=0)
    sigma = np.sqrt(predicted * (1 - predicted) / shots)
    assert np.all(np.abs(empirical - predicted) <= 3 * sigma + 1e-12)


def test_dem_text_roundtrip(code_4d_l2):
    circ = memory_circuit(code_4d_l2, "z", 2)
    dem = build_dem(attach_noise(circ, NoiseModel()))
    text = dem_to_text(dem)
    parsed = dem_from_text(text)
    assert dem_to_text(parsed) == text
    assert parsed.mechanisms == dem.mechanisms
    assert parsed.det_rounds == dem.det_rounds
    assert parsed.detector_count == dem.detector_count
    assert parsed.observable_count == dem.observable_count


def test_dem_text_format_shape():
    dem = DetectorErrorModel(
        detector_count=3, observable_count=1,
        mechanisms=(Mechanism(0.25, (0, 2), (0,)),),
        det_rounds=(0, 0, 1),
    )
    text = dem_to_text(dem)
    lines = text.splitlines()
    assert lines[0] == "dem 3 1"
    assert lines[1] == "error 0.25 D0 D2 L0"
    assert lines[2:] == ["round D0 0", "round D1 0", "round D2 1"]
