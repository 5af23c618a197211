import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsurf import gf2
from qsurf.circuits import memory_circuit
from qsurf.codes import repetition_pcm
from qsurf.decoder import (
    BpConfig,
    InconsistentSyndromeError,
    WindowConfig,
    WindowDecoder,
    bp_decode,
    decode_to_selection,
    metasyndrome,
    osd_postprocess,
    postselect,
    window_decode,
)
from qsurf.dem import build_dem
from qsurf.noise import NoiseModel, attach_noise, sample


def exhaustive_ml(pcm, syndrome, weights):
    """Minimum-weight consistent error by full enumeration."""
    n = pcm.shape[1]
    best, best_score = None, None
    for bits in itertools.product([0, 1], repeat=n):
        v = np.array(bits, dtype=np.uint8)
        if np.array_equal(gf2.matvec(pcm, v), syndrome):
            score = float(np.dot(weights, v))
            if best_score is None or score < best_score:
                best, best_score = v, score
    return best, best_score


def test_config_validation():
    with pytest.raises(ValueError):
        BpConfig(max_iter=0)
    with pytest.raises(ValueError):
        BpConfig(osd_order=-1)
    with pytest.raises(ValueError):
        WindowConfig(2, 3)
    with pytest.raises(ValueError):
        WindowConfig(1, 1, terminal="sometimes")


def test_bp_zero_syndrome_immediate():
    pcm = repetition_pcm(5)
    post, hard, converged = bp_decode(pcm, np.zeros(4, np.uint8),
                                      priors=np.full(5, 0.01))
    assert converged
    assert not hard.any()
    assert np.all(post < 0.5)


def test_bp_single_error_matches_ml_oracle():
    pcm = repetition_pcm(5)
    priors = np.full(5, 0.01)
    weights = np.log((1 - priors) / priors)
    for qubit in range(5):
        e = np.zeros(5, np.uint8)
        e[qubit] = 1
        syn = gf2.matvec(pcm, e)
        post, hard, converged = bp_decode(pcm, syn, priors=priors)
        assert converged
        expected, _ = exhaustive_ml(pcm, syn, weights)
        assert np.array_equal(hard, expected)


def test_bp_symmetric_tie_does_not_converge():
    pcm = np.array([[1, 1]], dtype=np.uint8)
    post, hard, converged = bp_decode(pcm, np.array([1], np.uint8),
                                      priors=np.full(2, 0.01))
    assert not converged
    assert np.allclose(post, 0.5, atol=1e-6)


def test_bp_dimension_mismatch():
    with pytest.raises(ValueError):
        bp_decode(repetition_pcm(5), np.zeros(7, np.uint8),
                  priors=np.full(5, 0.01))


def test_serial_schedule_agrees_on_easy_case():
    pcm = repetition_pcm(5)
    priors = np.full(5, 0.01)
    e = np.zeros(5, np.uint8)
    e[2] = 1
    syn = gf2.matvec(pcm, e)
    _, hard_f, conv_f = bp_decode(pcm, syn, BpConfig(), priors)
    _, hard_s, conv_s = bp_decode(pcm, syn, BpConfig(schedule="serial"),
                                  priors)
    assert conv_f and conv_s
    assert np.array_equal(hard_f, hard_s)


def test_osd_confirms_converged_bp():
    pcm = repetition_pcm(5)
    priors = np.full(5, 0.01)
    e = np.zeros(5, np.uint8)
    e[0] = 1
    syn = gf2.matvec(pcm, e)
    sel, converged = decode_to_selection(pcm, syn, priors=priors)
    assert converged
    assert np.array_equal(sel, e)


def test_osd_resolves_bp_tie_with_valid_solution():
    pcm = np.array([[1, 1]], dtype=np.uint8)
    syn = np.array([1], np.uint8)
    priors = np.array([0.01, 0.02])
    post, _, converged = bp_decode(pcm, syn, priors=priors)
    sel = osd_postprocess(pcm, syn, post, priors=priors)
    assert np.array_equal(gf2.matvec(pcm, sel), syn)
    # The more probable single mechanism wins.
    assert np.array_equal(sel, [0, 1])


def test_osd_inconsistent_syndrome_raises():
    pcm = np.zeros((2, 3), dtype=np.uint8)
    pcm[0, 0] = 1
    with pytest.raises(InconsistentSyndromeError):
        osd_postprocess(pcm, np.array([0, 1], np.uint8),
                        np.full(3, 0.1), priors=np.full(3, 0.01))


@given(st.data())
@settings(max_examples=40, deadline=None)
def test_osd_output_always_satisfies_syndrome(data):
    rng = np.random.default_rng(data.draw(st.integers(0, 10_000)))
    m, n = data.draw(st.integers(2, 6)), data.draw(st.integers(3, 10))
    pcm = rng.integers(0, 2, size=(m, n), dtype=np.uint8)
    truth = rng.integers(0, 2, size=n, dtype=np.uint8)
    syn = gf2.matvec(pcm, truth)
    priors = rng.uniform(0.01, 0.2, size=n)
    post, _, _ = bp_decode(pcm, syn, BpConfig(max_iter=20), priors)
    sel = osd_postprocess(pcm, syn, post, priors=priors)
    assert np.array_equal(gf2.matvec(pcm, sel), syn)


def test_osd_finds_ml_solution_beyond_bp():
    rng = np.random.default_rng(23)
    pcm = rng.integers(0, 2, size=(5, 9), dtype=np.uint8)
    priors = np.full(9, 0.02)
    weights = np.log((1 - priors) / priors)
    for _ in range(20):
        truth = (rng.random(9) < 0.15).astype(np.uint8)
        syn = gf2.matvec(pcm, truth)
        post, _, _ = bp_decode(pcm, syn, BpConfig(max_iter=30), priors)
        sel = osd_postprocess(pcm, syn, post,
                              BpConfig(osd_order=9, osd_exhaustive=True),
                              priors=priors)
        _, best_score = exhaustive_ml(pcm, syn, weights)
        assert float(np.dot(weights, sel)) == pytest.approx(best_score)


@pytest.fixture(scope="module")
def dem_2d_l2_r2(code_2d_l2):
    circ = memory_circuit(code_2d_l2, "z", 2)
    noisy = attach_noise(circ, NoiseModel())
    return circ, build_dem(noisy)


def test_full_volume_single_mechanism_recovery(dem_2d_l2_r2):
    """Every single-mechanism syndrome decodes to a mechanism set with
    exactly that detector footprint.  Observable mismatches can only
    come from the distance-2 degeneracy (another valid explanation of
    the same footprint), and they stay rare."""
    _, dem = dem_2d_l2_r2
    decoder = WindowDecoder(dem, WindowConfig(dem.num_rounds, dem.num_rounds))
    mismatches = 0
    for mech in dem.mechanisms:
        stream = np.zeros(dem.detector_count, np.uint8)
        stream[list(mech.dets)] = 1
        out = decoder.decode(stream)
        replay = np.zeros(dem.detector_count, np.uint8)
        for i in out.committed:
            replay[list(dem.mechanisms[i].dets)] ^= 1
        assert np.array_equal(replay, stream)
        expected = tuple(1 if o in mech.obs else 0
                         for o in range(dem.observable_count))
        mismatches += out.observables != expected
    assert mismatches < len(dem.mechanisms) / 4


def test_window_grid_degenerate_single_window(code_4d_l2):
    circ = memory_circuit(code_4d_l2, "z", 1)
    dem = build_dem(attach_noise(circ, NoiseModel()))
    decoder = WindowDecoder(dem, WindowConfig(1, 1))
    assert len(decoder.windows) == 1
    act = decoder.windows[0]["active"]
    assert len(act) == dem.detector_count


def test_sliding_window_commits_first_round(code_4d_l2):
    """A first-round error is committed by the first (2,1) window and
    leaves the later windows clean."""
    circ = memory_circuit(code_4d_l2, "z", 3)
    dem = build_dem(attach_noise(circ, NoiseModel()))
    decoder = WindowDecoder(dem, WindowConfig(2, 1))
    assert len(decoder.windows) == 2
    mech_id = next(
        i for i, m in enumerate(dem.mechanisms)
        if len(m.dets) == 2
        and sorted(dem.det_rounds[d] for d in m.dets) == [0, 1]
    )
    mech = dem.mechanisms[mech_id]
    stream = np.zeros(dem.detector_count, np.uint8)
    stream[list(mech.dets)] = 1
    out = decoder.decode(stream)
    assert out.converged
    assert all(dem.det_rounds[min(dem.mechanisms[i].dets)] == 0
               for i in out.committed)
    assert not any(key[0] == 1 for key in decoder._cache)
    assert out.observables == (0,)


def test_window_matches_whole_volume_low_noise(code_2d_l4):
    circ = memory_circuit(code_2d_l4, "z", 4)
    noisy = attach_noise(circ, NoiseModel(p2=1e-4, p1=3e-6, p_spam=1e-4))
    dem = build_dem(noisy)
    dets, _ = sample(noisy, 400, seed=3)
    windowed = WindowDecoder(dem, WindowConfig(4, 4))
    whole = WindowDecoder(dem, WindowConfig(dem.num_rounds, dem.num_rounds))
    pred_w, _ = windowed.decode_batch(dets)
    pred_f, _ = whole.decode_batch(dets)
    agree = (pred_w == pred_f).all(axis=1).mean()
    assert agree >= 0.99


def test_terminal_separate_policy(code_4d_l2):
    circ = memory_circuit(code_4d_l2, "z", 2)
    dem = build_dem(attach_noise(circ, NoiseModel()))
    fold = WindowDecoder(dem, WindowConfig(1, 1))
    separate = WindowDecoder(dem, WindowConfig(1, 1, terminal="separate"))
    assert len(separate.windows) == len(fold.windows) + 1


def test_decode_requires_full_residual_clearing(code_4d_l2):
    circ = memory_circuit(code_4d_l2, "z", 2)
    dem = build_dem(attach_noise(circ, NoiseModel()))
    rng = np.random.default_rng(7)
    decoder = WindowDecoder(dem, WindowConfig(1, 1), BpConfig(max_iter=60))
    for _ in range(25):
        picks = rng.integers(0, len(dem.mechanisms), size=2)
        stream = np.zeros(dem.detector_count, np.uint8)
        obs = np.zeros(dem.observable_count, np.uint8)
        for i in picks:
            stream[list(dem.mechanisms[i].dets)] ^= 1
            obs[list(dem.mechanisms[i].obs)] ^= 1
        out = decoder.decode(stream)
        # The committed mechanisms must reproduce the whole stream.
        replay = np.zeros(dem.detector_count, np.uint8)
        for i in out.committed:
            replay[list(dem.mechanisms[i].dets)] ^= 1
        assert np.array_equal(replay, stream)


def test_window_decode_function_matches_class(code_4d_l2):
    circ = memory_circuit(code_4d_l2, "z", 2)
    dem = build_dem(attach_noise(circ, NoiseModel()))
    mech = dem.mechanisms[5]
    stream = np.zeros(dem.detector_count, np.uint8)
    stream[list(mech.dets)] = 1
    a = window_decode(dem, stream, WindowConfig(1, 1))
    b = WindowDecoder(dem, WindowConfig(1, 1)).decode(stream)
    assert a == b


def test_decoder_deterministic(code_4d_l2):
    circ = memory_circuit(code_4d_l2, "z", 2)
    noisy = attach_noise(circ, NoiseModel(p2=0.01, p1=1e-3, p_spam=0.01))
    dem = build_dem(noisy)
    dets, _ = sample(noisy, 40, seed=9)
    cfg = BpConfig(max_iter=60)
    p1, c1 = WindowDecoder(dem, WindowConfig(1, 1), cfg).decode_batch(dets)
    p2, c2 = WindowDecoder(dem, WindowConfig(1, 1), cfg).decode_batch(dets)
    assert np.array_equal(p1, p2) and np.array_equal(c1, c2)


def test_metasyndrome_operation(code_4d_l2):
    code = code_4d_l2
    rng = np.random.default_rng(4)
    for _ in range(20):
        e = rng.integers(0, 2, size=code.n, dtype=np.uint8)
        s = gf2.matvec(code.h_x, e)
        assert not metasyndrome(code.m_x, s).any()
    s = np.zeros(code.num_x_checks, np.uint8)
    s[7] = 1
    assert np.array_equal(metasyndrome(code.m_x, s), code.m_x[:, 7])
    # Uniformly random syndromes are invalid with probability 1 - 2^-4.
    invalid = sum(
        metasyndrome(code.m_x, rng.integers(0, 2, 20, np.uint8)).any()
        for _ in range(2000)
    )
    assert 0.9 < invalid / 2000 < 0.99


def test_postselect_clean_shot_kept(code_4d_l2):
    circ = memory_circuit(code_4d_l2, "z", 2)
    clean = np.zeros(len(circ.detectors), np.uint8)
    assert postselect(clean, code_4d_l2, circ, "discard")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        repaired = postselect(clean, code_4d_l2, circ, "repair")
    assert not repaired.any()


def test_postselect_discards_single_syndrome_flip(code_4d_l2):
    circ = memory_circuit(code_4d_l2, "z", 2)
    for det_index in (0, 25, 60):
        stream = np.zeros(len(circ.detectors), np.uint8)
        stream[det_index] = 1
        assert not postselect(stream, code_4d_l2, circ, "discard")


def test_postselect_keeps_valid_data_error_syndromes(code_4d_l2):
    """Data errors produce valid syndromes, so they survive discard."""
    circ = memory_circuit(code_4d_l2, "z", 2)
    noisy = attach_noise(circ, NoiseModel())
    dem = build_dem(noisy)
    kept_any = False
    for m in dem.mechanisms:
        if m.obs:  # a data-type mechanism on the logical support
            stream = np.zeros(dem.detector_count, np.uint8)
            stream[list(m.dets)] = 1
            if postselect(stream, code_4d_l2, circ, "discard"):
                kept_any = True
                break
    assert kept_any


def test_postselect_repair_warns_and_produces_valid_layers(code_4d_l2):
    circ = memory_circuit(code_4d_l2, "z", 2)
    code = code_4d_l2
    stream = np.zeros(len(circ.detectors), np.uint8)
    stream[3] = 1  # single syndrome-bit error
    with pytest.warns(UserWarning, match="distance < 3"):
        repaired = postselect(stream, code, circ, "repair")
    assert postselect(repaired, code, circ, "discard")
    # The residual deviation is metacheck-valid (a valid-syndrome shift).
    diff = repaired ^ stream
    assert diff.any()


def test_postselect_repair_exact_on_unique_columns(code_3d_l2):
    """Metacheck columns that appear once are uniquely repairable."""
    code = code_3d_l2
    circ = memory_circuit(code, "z", 2)
    m = code.m_z
    cols = [tuple(col) for col in m.T]
    unique_checks = [c for c, col in enumerate(cols) if cols.count(col) == 1]
    if not unique_checks:
        pytest.skip("no unique metacheck columns on this code")
    layer0 = [d for d, (r, k) in enumerate(zip(circ.detector_rounds,
                                               circ.detector_kinds))
              if r == 0 and k == "z"]
    check = unique_checks[0]
    stream = np.zeros(len(circ.detectors), np.uint8)
    stream[layer0[check]] = 1
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        repaired = postselect(stream, code, circ, "repair")
    assert not repaired.any()  # exact repair back to the clean stream


def test_postselect_requires_metachecks(code_2d_l2):
    circ = memory_circuit(code_2d_l2, "z", 1)
    stream = np.zeros(len(circ.detectors), np.uint8)
    with pytest.raises(ValueError):
        postselect(stream, code_2d_l2, circ, "discard")
