"""Product-sum BP with ordered-statistics post-processing, the
(w, c)-overlapping-window driver, and metacheck postselection/repair.

The window grid slides by the commit size c: each window decodes w
rounds of detectors, commits only mechanisms whose earliest detector
lies in the first c, XORs the committed full symptoms out of the
remaining detector stream, and advances.  Because a mechanism is
assigned to the window containing its earliest detector, the committed
set always explains the commit region exactly.  The terminal
data-measurement layer is folded into the last window by default
(terminal="separate" decodes it as its own window instead).

OSD "combination sweep" of order k: the OSD-0 baseline, every weight-1
flip over all non-pivot columns, and every weight-2 flip within the k
most reliable ones (all 2^k patterns there with osd_exhaustive=True);
candidates are scored by total prior log-likelihood and ties break
toward the lexicographically smallest mechanism index set.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from . import gf2
from ._bp_kernel import (
    HAVE_NUMBA,
    bp_flood_batch,
    bp_flood_kernel,
    build_csr,
    gf2_eliminate,
)
from .chain import EnumerationLimitError, min_weight_nontrivial
from .circuits import Circuit
from .codes import CssCode
from .dem import DetectorErrorModel, window

_LLR_CLIP = 30.0
_TANH_FLOOR = 1e-30


class InconsistentSyndromeError(ValueError):
    """The syndrome is outside the column space of the check matrix."""


@dataclass(frozen=True)
class BpConfig:
    """max_iter caps BP; patience ends a run early once the number of
    unsatisfied checks has not reached a new minimum for that many
    iterations (the degenerate-tie case that OSD exists to clean up).
    Set patience >= max_iter to always run the full budget."""

    max_iter: int = 1000
    osd_order: int = 10
    schedule: str = "flooding"  # "serial" is config-gated
    osd_exhaustive: bool = False
    clamp: float = 1e-12
    patience: int = 50

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.osd_order < 0:
            raise ValueError("osd_order must be >= 0")
        if self.schedule not in ("flooding", "serial"):
            raise ValueError("schedule must be 'flooding' or 'serial'")


@dataclass(frozen=True)
class WindowConfig:
    w: int
    c: int
    terminal: str = "fold"  # or "separate"

    def __post_init__(self):
        if not 1 <= self.c <= self.w:
            raise ValueError("need 1 <= c <= w")
        if self.terminal not in ("fold", "separate"):
            raise ValueError("terminal must be 'fold' or 'separate'")


@dataclass(frozen=True)
class DecodeOutcome:
    observables: tuple[int, ...]
    committed: tuple[int, ...]
    converged: bool
    postselected_out: bool = False


def _model_arrays(model, priors):
    if isinstance(model, DetectorErrorModel):
        act = model.active_detectors()
        row_of = {int(d): i for i, d in enumerate(act)}
        pcm = np.zeros((len(act), len(model.mechanisms)), dtype=np.uint8)
        for j, m in enumerate(model.mechanisms):
            for d in m.dets:
                pcm[row_of[d], j] = 1
        priors = np.array([m.p for m in model.mechanisms])
        return pcm, priors
    pcm = gf2.asbits(model)
    if priors is None:
        raise ValueError("a raw check matrix needs explicit priors")
    return pcm, np.asarray(priors, dtype=float)


def bp_decode(model, syndrome, cfg: BpConfig = BpConfig(), priors=None):
    """Flooding-schedule product-sum belief propagation.

    Returns (posteriors, hard, converged): per-mechanism posterior error
    probabilities, the hard decision, and whether the hard decision
    reproduced the syndrome within max_iter iterations.
    """
    pcm, p = _model_arrays(model, priors)
    m, n = pcm.shape
    syndrome = gf2.asbits(syndrome)
    if syndrome.shape[0] != m:
        raise ValueError(f"syndrome length {syndrome.shape[0]} != {m} checks")

    p = np.clip(p, cfg.clamp, 1.0 - cfg.clamp)
    prior_llr = np.log((1.0 - p) / p)
    if m == 0 or n == 0:
        converged = bool(m == 0 or not syndrome.any())
        return (1.0 / (1.0 + np.exp(prior_llr)), np.zeros(n, np.uint8),
                converged)

    echk, evar = np.nonzero(pcm)
    n_edges = len(echk)
    if n_edges == 0:
        converged = not syndrome.any()
        return (1.0 / (1.0 + np.exp(prior_llr)),
                np.zeros(n, np.uint8), converged)

    if cfg.schedule == "flooding" and HAVE_NUMBA:
        check_ptr, evar_csr, var_ptr, var_edges = build_csr(pcm)
        totals, hard, converged = bp_flood_kernel(
            check_ptr, evar_csr, var_ptr, var_edges, prior_llr,
            syndrome.astype(np.uint8), cfg.max_iter, cfg.clamp,
            max(cfg.patience, 1))
        post_prob = 1.0 / (1.0 + np.exp(np.clip(totals, -700, 700)))
        return post_prob, hard, bool(converged)

    sign_syn = 1.0 - 2.0 * syndrome.astype(float)

    m_v2c = prior_llr[evar].copy()
    posterior = prior_llr.copy()
    hard = np.zeros(n, dtype=np.uint8)
    converged = False

    serial = cfg.schedule == "serial"
    if serial:
        check_slices = [np.nonzero(echk == c)[0] for c in range(m)]
    m_c2v = np.zeros(n_edges)
    prev = np.full(n_edges, np.inf)
    prev2 = np.full(n_edges, np.inf)
    best_unsat = m + 1
    since_best = 0

    for _ in range(cfg.max_iter):
        if serial:
            for c in range(m):
                idx = check_slices[c]
                if idx.size == 0:
                    continue
                t = np.tanh(np.clip(m_v2c[idx], -_LLR_CLIP, _LLR_CLIP) / 2.0)
                out = _leave_one_out_product(t)
                msg = sign_syn[c] * 2.0 * np.arctanh(
                    np.clip(out, -1.0 + cfg.clamp, 1.0 - cfg.clamp))
                m_c2v[idx] = msg
                totals = prior_llr + np.bincount(evar, weights=m_c2v, minlength=n)
                m_v2c = totals[evar] - m_c2v
        else:
            t = np.tanh(np.clip(m_v2c, -_LLR_CLIP, _LLR_CLIP) / 2.0)
            zero = np.abs(t) < _TANH_FLOOR
            safe = np.where(zero, 1.0, t)
            log_abs = np.log(np.abs(safe))
            neg = (t < 0).astype(float)
            sum_log = np.bincount(echk, weights=log_abs, minlength=m)
            n_zero = np.bincount(echk, weights=zero.astype(float), minlength=m)
            n_neg = np.bincount(echk, weights=neg, minlength=m)
            others_zero = n_zero[echk] - zero
            prod = np.exp(sum_log[echk] - np.where(zero, 0.0, log_abs))
            sign = 1.0 - 2.0 * ((n_neg[echk] - neg) % 2)
            out = np.where(others_zero > 0, 0.0, prod * sign)
            m_c2v = sign_syn[echk] * 2.0 * np.arctanh(
                np.clip(out, -1.0 + cfg.clamp, 1.0 - cfg.clamp))
            totals = prior_llr + np.bincount(evar, weights=m_c2v, minlength=n)
            m_v2c = totals[evar] - m_c2v

        posterior = totals
        hard = (posterior < 0).astype(np.uint8)
        check_parity = np.bincount(
            echk, weights=hard[evar].astype(float), minlength=m) % 2
        unsat = int((check_parity.astype(np.uint8) != syndrome).sum())
        if unsat == 0:
            converged = True
            break
        if unsat < best_unsat:
            best_unsat = unsat
            since_best = 0
        else:
            since_best += 1
            if since_best >= max(cfg.patience, 1):
                break
        # Messages at a fixed point (or a period-2 cycle) cannot change
        # in later iterations, so the remaining budget is a no-op.
        if (np.max(np.abs(m_v2c - prev)) < 1e-9
                or np.max(np.abs(m_v2c - prev2)) < 1e-9):
            break
        prev2 = prev
        prev = m_v2c.copy()

    post_prob = 1.0 / (1.0 + np.exp(np.clip(posterior, -700, 700)))
    return post_prob, hard, converged


def _leave_one_out_product(t):
    zero = np.abs(t) < _TANH_FLOOR
    safe = np.where(zero, 1.0, t)
    total = np.prod(safe)
    n_zero = zero.sum()
    if n_zero == 0:
        return total / safe
    if n_zero == 1:
        return np.where(zero, total, 0.0)
    return np.zeros_like(t)


def osd_postprocess(model, syndrome, posteriors, cfg: BpConfig = BpConfig(),
                    priors=None):
    """Ordered-statistics solve with a combination sweep: always returns
    a mechanism set whose symptom reproduces the syndrome exactly, or
    raises InconsistentSyndromeError when none exists.

    Candidates: the order-0 baseline, every weight-1 flip over all
    non-pivot columns, and every weight-2 flip within the osd_order most
    reliable non-pivot columns (all 2^order patterns there with
    osd_exhaustive).  Scoring is by total prior log-likelihood; exact
    ties break toward the lexicographically smallest index set.
    """
    pcm, p = _model_arrays(model, priors)
    m, n = pcm.shape
    syndrome = gf2.asbits(syndrome)
    p = np.clip(p, cfg.clamp, 1.0 - cfg.clamp)
    weight_llr = np.log((1.0 - p) / p)

    # Descending reliability (most likely errors first), stable for
    # determinism.
    order = np.argsort(-np.asarray(posteriors), kind="stable")
    llr_perm = weight_llr[order]
    aug = np.ascontiguousarray(
        np.hstack([pcm[:, order], syndrome.reshape(-1, 1)]), dtype=np.uint8)
    if HAVE_NUMBA:
        red = aug
        pivots = gf2_eliminate(red, n).tolist()
    else:
        red, pivots = gf2.row_reduce(aug, n_pivot_cols=n)
    rank = len(pivots)
    if np.any(red[rank:, -1]):
        raise InconsistentSyndromeError("syndrome outside the column space")

    pivots_arr = np.array(pivots, dtype=np.intp)
    pivot_set = set(pivots)
    free_cols = np.array([c for c in range(n) if c not in pivot_set],
                         dtype=np.intp)
    base_pivot = red[:rank, -1].copy()
    llr_piv = llr_perm[pivots_arr] if rank else np.zeros(0)

    def realize(free_on):
        x_perm = np.zeros(n, dtype=np.uint8)
        rhs = base_pivot.copy()
        for c in free_on:
            rhs ^= red[:rank, c]
            x_perm[c] = 1
        x_perm[pivots_arr] = rhs
        x = np.zeros(n, dtype=np.uint8)
        x[order] = x_perm
        return x

    def key_of(free_on):
        x = realize(free_on)
        return (float(weight_llr[x == 1].sum()),
                tuple(np.nonzero(x)[0].tolist())), x

    best_key, best = key_of(())

    if free_cols.size:
        # Vectorized weight-1 sweep over all non-pivot columns.
        reduced = red[:rank, free_cols].astype(np.uint8)
        pivot_vals = base_pivot[:, None] ^ reduced if rank else reduced
        scores = (llr_piv @ pivot_vals) + llr_perm[free_cols]
        cutoff = best_key[0] + 1e-9
        for j in np.nonzero(scores <= cutoff)[0]:
            key, x = key_of((int(free_cols[j]),))
            if key < best_key:
                best_key, best = key, x

    t_cols = [int(c) for c in free_cols[: cfg.osd_order]]
    if cfg.osd_exhaustive:
        sweep = itertools.chain.from_iterable(
            itertools.combinations(t_cols, k)
            for k in range(2, len(t_cols) + 1))
    else:
        sweep = itertools.combinations(t_cols, 2)
    for combo in sweep:
        key, x = key_of(combo)
        if key < best_key:
            best_key, best = key, x
    return best


def decode_to_selection(model, syndrome, cfg: BpConfig = BpConfig(),
                        priors=None):
    """BP first; OSD only when BP's hard decision misses the syndrome.
    Returns (selection, converged)."""
    posteriors, hard, converged = bp_decode(model, syndrome, cfg, priors)
    if converged:
        return hard, True
    sel = osd_postprocess(model, syndrome, posteriors, cfg, priors)
    return sel, False


def _window_grid(dem: DetectorErrorModel, wcfg: WindowConfig):
    """(offset, span, is_final) triples covering every detector layer.

    Layers 0..r-1 are extraction rounds and layer r is the terminal
    data-measurement layer; with terminal="fold" the final window
    stretches to include it."""
    n_layers = dem.num_rounds
    r = n_layers - 1  # extraction rounds
    last = r if wcfg.terminal == "fold" else n_layers
    grid = []
    t = 0
    while True:
        if t + wcfg.w >= last:
            grid.append((t, n_layers - t, True))
            break
        grid.append((t, wcfg.w, False))
        t += wcfg.c
    return grid


class WindowDecoder:
    """Precompiled overlapping-window BP+OSD decoder with a decode cache
    keyed on per-window syndromes."""

    def __init__(self, dem: DetectorErrorModel, wcfg: WindowConfig,
                 cfg: BpConfig = BpConfig()):
        self.dem = dem
        self.wcfg = wcfg
        self.cfg = cfg
        self.windows = []
        for offset, span, is_final in _window_grid(dem, wcfg):
            sl = window(dem, span, offset)
            act = sl.active_detectors()
            pcm, priors = _model_arrays(sl, None)
            commit_hi = dem.num_rounds if is_final else offset + wcfg.c
            commit_ok = np.array(
                [min(dem.det_rounds[d] for d in m.dets) < commit_hi
                 for m in sl.mechanisms], dtype=bool)
            full_dets = [np.array(dem.mechanisms[o].dets, dtype=np.intp)
                         for o in sl.origin]
            full_obs = [np.array(dem.mechanisms[o].obs, dtype=np.intp)
                        for o in sl.origin]
            self.windows.append({
                "slice": sl, "active": act, "pcm": pcm, "priors": priors,
                "commit_ok": commit_ok, "full_dets": full_dets,
                "full_obs": full_obs, "origin": sl.origin,
                "csr": build_csr(pcm) if HAVE_NUMBA else None,
            })
        self._cache: dict = {}

    def _selection_to_result(self, wi: int, sel, converged: bool):
        win = self.windows[wi]
        det_xor = np.zeros(self.dem.detector_count, dtype=bool)
        obs_xor = np.zeros(self.dem.observable_count, dtype=bool)
        committed = []
        for j in np.nonzero(sel)[0]:
            if win["commit_ok"][j]:
                det_xor[win["full_dets"][j]] ^= True
                obs_xor[win["full_obs"][j]] ^= True
                committed.append(int(win["origin"][j]))
        return (det_xor, obs_xor, converged, tuple(committed))

    def _decode_window(self, wi: int, syn: np.ndarray):
        key = (wi, syn.tobytes())
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        win = self.windows[wi]
        try:
            sel, converged = decode_to_selection(
                win["pcm"], syn, self.cfg, win["priors"])
        except InconsistentSyndromeError:
            result = (None, None, False, ())
            self._cache[key] = result
            return result
        result = self._selection_to_result(wi, sel, converged)
        self._cache[key] = result
        return result

    def _decode_window_batch(self, wi: int, syns: np.ndarray):
        """Decode unique window syndromes, BP lanes in parallel; returns
        the cache entries row-aligned with *syns*."""
        win = self.windows[wi]
        keys = [(wi, syns[i].tobytes()) for i in range(syns.shape[0])]
        pending = [i for i, k in enumerate(keys) if k not in self._cache]
        if pending and HAVE_NUMBA:
            check_ptr, evar, var_ptr, var_edges = win["csr"]
            p = np.clip(win["priors"], self.cfg.clamp, 1 - self.cfg.clamp)
            prior_llr = np.log((1.0 - p) / p)
            batch = np.ascontiguousarray(syns[pending])
            totals, hards, conv = bp_flood_batch(
                check_ptr, evar, var_ptr, var_edges, prior_llr, batch,
                self.cfg.max_iter, self.cfg.clamp, max(self.cfg.patience, 1))
            for row, i in enumerate(pending):
                if conv[row]:
                    result = self._selection_to_result(wi, hards[row], True)
                else:
                    post = 1.0 / (1.0 + np.exp(
                        np.clip(totals[row], -700, 700)))
                    try:
                        sel = osd_postprocess(win["pcm"], syns[i], post,
                                              self.cfg, win["priors"])
                        result = self._selection_to_result(wi, sel, False)
                    except InconsistentSyndromeError:
                        result = (None, None, False, ())
                self._cache[keys[i]] = result
        elif pending:
            for i in pending:
                self._decode_window(wi, syns[i])
        return [self._cache[k] for k in keys]

    def decode(self, detector_bits) -> DecodeOutcome:
        rem = gf2.asbits(detector_bits).astype(bool).copy()
        obs_acc = np.zeros(self.dem.observable_count, dtype=bool)
        committed: list[int] = []
        converged_all = True
        solved = True
        for wi, win in enumerate(self.windows):
            syn = rem[win["active"]].astype(np.uint8)
            if not syn.any():
                continue
            det_xor, obs_xor, converged, ids = self._decode_window(wi, syn)
            if det_xor is None:
                solved = False
                converged_all = False
                continue
            rem ^= det_xor
            obs_acc ^= obs_xor
            converged_all &= converged
            committed.extend(ids)
        if not solved:
            return DecodeOutcome((0,) * self.dem.observable_count, (),
                                 False)
        return DecodeOutcome(
            tuple(int(b) for b in obs_acc), tuple(committed), converged_all)

    def decode_batch(self, detector_matrix):
        """Window-level pipeline over many shots: per window, deduplicate
        the live syndromes, decode the unique ones (BP lanes threaded),
        and XOR the committed symptoms back across all shots."""
        det = np.asarray(detector_matrix, dtype=np.uint8)
        unique, inverse = np.unique(det, axis=0, return_inverse=True)
        n_u = unique.shape[0]
        rem = unique.astype(bool)
        obs_acc = np.zeros((n_u, self.dem.observable_count), dtype=bool)
        conv = np.ones(n_u, dtype=bool)
        solved = np.ones(n_u, dtype=bool)
        for wi, win in enumerate(self.windows):
            syns = rem[:, win["active"]].astype(np.uint8)
            live = np.nonzero(syns.any(axis=1))[0]
            if live.size == 0:
                continue
            sub, sub_inv = np.unique(syns[live], axis=0, return_inverse=True)
            results = self._decode_window_batch(wi, sub)
            for k, (det_xor, obs_xor, ok, _ids) in enumerate(results):
                rows = live[sub_inv == k]
                if det_xor is None:
                    solved[rows] = False
                    conv[rows] = False
                    continue
                rem[rows] ^= det_xor
                obs_acc[rows] ^= obs_xor
                conv[rows] &= ok
        preds = obs_acc.astype(np.uint8)
        preds[~solved] = 0
        conv &= solved
        return preds[inverse], conv[inverse]


def window_decode(dem: DetectorErrorModel, detectors, wcfg: WindowConfig,
                  cfg: BpConfig = BpConfig()) -> DecodeOutcome:
    """Decode one shot's detector stream with the overlapping-window
    driver."""
    return WindowDecoder(dem, wcfg, cfg).decode(detectors)


def metasyndrome(m, s) -> np.ndarray:
    """M . s over GF(2)."""
    return gf2.matvec(m, s)


def _detector_layout(circuit: Circuit):
    """(round, kind) -> detector indices ordered by check index."""
    groups: dict[tuple[int, str], list[tuple[int, int]]] = {}
    for d, (layer, kind, check) in enumerate(zip(circuit.detector_rounds,
                                                 circuit.detector_kinds,
                                                 circuit.detector_checks)):
        groups.setdefault((layer, kind), []).append((check, d))
    return {
        key: np.array([d for _, d in sorted(entries)], dtype=np.intp)
        for key, entries in groups.items()
    }


def _metacheck_distance_below_3(code: CssCode, side: str) -> bool:
    m = code.metacheck(side)
    empty = np.zeros((0, m.shape[1]), dtype=np.uint8)
    try:
        w, _ = min_weight_nontrivial(m, empty, weight_cap=2)
    except EnumerationLimitError:
        return False
    return w is not None


def postselect(detectors, code: CssCode, circuit: Circuit,
               policy: str = "discard",
               repair_prior: float = 0.01,
               cfg: BpConfig = BpConfig()):
    """Metacheck-based shot filtering or syndrome repair.

    Valid syndromes satisfy M s = 0 round by round; since detector
    layers are XORs of time-adjacent syndromes, a shot's reconstructed
    syndromes are all valid exactly when every same-type detector layer
    passes its metacheck, so the test runs layer by layer.

    policy="discard": returns a kept mask (True = all layers valid).
    policy="repair": decodes each layer's metasyndrome against the
    metacheck matrix and flips the implicated detector bits; returns the
    repaired detector array.
    """
    if policy not in ("discard", "repair"):
        raise ValueError("policy must be 'discard' or 'repair'")
    det = np.atleast_2d(np.asarray(detectors, dtype=np.uint8))
    layout = _detector_layout(circuit)
    sides = [(kind, code.metacheck(kind)) for kind in ("z", "x")]
    sides = [(kind, m) for kind, m in sides if m is not None]
    if not sides:
        raise ValueError("code has no metachecks")

    if policy == "discard":
        kept = np.ones(det.shape[0], dtype=bool)
        for kind, m in sides:
            for (layer, k), idx in layout.items():
                if k != kind:
                    continue
                meta = (det[:, idx].astype(int) @ m.T.astype(int)) % 2
                kept &= ~meta.any(axis=1)
        if np.ndim(detectors) == 1:
            return bool(kept[0])
        return kept

    for kind, m in sides:
        if _metacheck_distance_below_3(code, kind):
            warnings.warn(
                f"{kind.upper()}-side metacheck code distance < 3: repair "
                "is not uniquely determined (detection-only regime)",
                stacklevel=2,
            )
    repaired = det.copy()
    for kind, m in sides:
        for (layer, k), idx in layout.items():
            if k != kind:
                continue
            meta = (repaired[:, idx].astype(int) @ m.T.astype(int)) % 2
            for row in np.nonzero(meta.any(axis=1))[0]:
                sel, _ = decode_to_selection(
                    m, meta[row], cfg,
                    np.full(m.shape[1], repair_prior))
                repaired[row, idx] ^= sel
    if np.ndim(detectors) == 1:
        return repaired[0]
    return repaired
