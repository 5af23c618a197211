"""End-to-end memory experiments: sample, decode, tally, fit.

A memory point prepares the logical state, runs r extraction rounds,
measures out, and asks the window decoder to predict the logical
observable; the logical error rate over kept shots follows

    p_log(r) = 0.5 + (p_spam - 0.5) (1 - 2 p_cycle)^r,

which is fitted in log-linearized form by weighted least squares.
p_log(0) is the logical SPAM error rate.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .circuits import cnot_count, memory_circuit
from .codes import surface_code
from .decoder import BpConfig, WindowConfig, WindowDecoder, postselect
from .dem import build_dem
from .noise import NoiseModel, attach_noise, sample

# Hardware logical QEC cycle error rates reported for the trapped-ion
# implementation of these protocols; context only, never a pass/fail
# reference (the physical noise model here is not the device's).
HARDWARE_CONTEXT = {
    "4d_single_shot": (2.5e-3, 7.6e-4),
    "2d_non_ft": (2.8e-3, 9.6e-4),
    "2d_ft": (1.5e-2, 4.8e-3),
}


@dataclass(frozen=True)
class ExperimentConfig:
    dimension: int = 4
    length: int = 2
    grade: int | None = None
    basis: str = "z"
    rounds: tuple[int, ...] = (0, 1, 2, 3, 4)
    shots: int = 20_000
    noise: NoiseModel = field(default_factory=NoiseModel)
    window: WindowConfig = field(default_factory=lambda: WindowConfig(1, 1))
    bp: BpConfig = field(default_factory=BpConfig)
    postselect: str = "off"
    seed: int = 0

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if any(r < 0 for r in self.rounds):
            raise ValueError("rounds must be >= 0")
        if self.postselect not in ("off", "discard", "repair"):
            raise ValueError("postselect must be off, discard, or repair")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rounds"] = list(self.rounds)
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class PointResult:
    r: int
    shots: int
    kept: int
    failures: int
    p_log: float
    sigma: float


@dataclass(frozen=True)
class FitResult:
    p_spam: float
    p_cycle: float
    cov: tuple[tuple[float, float], tuple[float, float]]

    @property
    def sigma_p_spam(self) -> float:
        return math.sqrt(max(self.cov[0][0], 0.0))

    @property
    def sigma_p_cycle(self) -> float:
        return math.sqrt(max(self.cov[1][1], 0.0))


@dataclass(frozen=True)
class ExperimentReport:
    points: tuple[PointResult, ...]
    fit: FitResult | None
    config_digest: str
    seed: int

    def to_json(self) -> str:
        payload = {
            "points": [asdict(p) for p in self.points],
            "fit": asdict(self.fit) if self.fit else None,
            "config_digest": self.config_digest,
            "seed": self.seed,
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        raw = json.loads(text)
        fit = None
        if raw.get("fit"):
            f = raw["fit"]
            cov = tuple(tuple(row) for row in f["cov"])
            fit = FitResult(f["p_spam"], f["p_cycle"], cov)
        return cls(
            points=tuple(PointResult(**p) for p in raw["points"]),
            fit=fit,
            config_digest=raw["config_digest"],
            seed=raw["seed"],
        )

    def to_csv(self) -> str:
        lines = ["r,shots,kept,failures,p_log,sigma"]
        for p in self.points:
            lines.append(
                f"{p.r},{p.shots},{p.kept},{p.failures},{p.p_log!r},{p.sigma!r}"
            )
        return "\n".join(lines) + "\n"


def logical_error_stats(failures: int, kept: int) -> tuple[float, float]:
    """p_log = failures / kept and its binomial standard error
    sqrt(p (1 - p) / kept)."""
    if kept < 1:
        raise ValueError("kept must be >= 1")
    if failures > kept:
        raise ValueError("failures cannot exceed kept")
    p = failures / kept
    return p, math.sqrt(p * (1.0 - p) / kept)


def fit_decay(points) -> FitResult:
    """Weighted least squares on ln(0.5 - p_log) = a + b r with
    a = ln(0.5 - p_spam) and b = ln(1 - 2 p_cycle).

    Points with p_log >= 0.5 are excluded with a warning; zero-sigma
    points get unit relative weight when all sigmas vanish, otherwise
    the smallest positive propagated sigma.
    """
    usable = []
    for r, p_log, sigma in points:
        if not math.isfinite(p_log) or p_log >= 0.5:
            warnings.warn(f"excluding point r={r} with p_log={p_log}",
                          stacklevel=2)
            continue
        usable.append((r, p_log, sigma))
    if len(usable) < 2:
        raise ValueError("need at least 2 usable points with p_log < 0.5")

    rs = np.array([u[0] for u in usable], dtype=float)
    ps = np.array([u[1] for u in usable], dtype=float)
    sig = np.array([u[2] for u in usable], dtype=float)
    y = np.log(0.5 - ps)
    sig_y = sig / (0.5 - ps)
    if np.all(sig_y == 0):
        sig_y = np.ones_like(sig_y)
    else:
        floor = sig_y[sig_y > 0].min()
        sig_y = np.where(sig_y == 0, floor, sig_y)
    w = 1.0 / sig_y**2
    x = np.column_stack([np.ones_like(rs), rs])
    xtw = x.T * w
    cov_ab = np.linalg.inv(xtw @ x)
    a, b = cov_ab @ (xtw @ y)
    p_spam = 0.5 - math.exp(a)
    p_cycle = (1.0 - math.exp(b)) / 2.0
    jac = np.diag([-math.exp(a), -math.exp(b) / 2.0])
    cov_p = jac @ cov_ab @ jac.T
    return FitResult(p_spam, p_cycle,
                     tuple(tuple(float(v) for v in row) for row in cov_p))


def decay_model(r, p_spam, p_cycle):
    return 0.5 + (p_spam - 0.5) * (1.0 - 2.0 * p_cycle) ** r


def _point_seed(seed: int, r: int) -> int:
    return int(np.random.SeedSequence((seed, r)).generate_state(1)[0])


def run_point(code, config: ExperimentConfig, r: int) -> PointResult:
    """Sample and decode one round count."""
    circ = memory_circuit(code, config.basis, r)
    noisy = attach_noise(circ, config.noise)
    dets, obs = sample(noisy, config.shots, _point_seed(config.seed, r))
    if config.postselect == "discard":
        kept_mask = postselect(dets, code, circ, "discard")
    elif config.postselect == "repair":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            dets = postselect(dets, code, circ, "repair")
        kept_mask = np.ones(config.shots, dtype=bool)
    else:
        kept_mask = np.ones(config.shots, dtype=bool)

    kept_idx = np.nonzero(kept_mask)[0]
    kept = int(kept_mask.sum())
    if kept == 0:
        return PointResult(r, config.shots, 0, 0, math.nan, math.nan)
    dem = build_dem(noisy)
    decoder = WindowDecoder(dem, config.window, config.bp)
    preds, _ = decoder.decode_batch(dets[kept_idx])
    failures = int((preds != obs[kept_idx]).any(axis=1).sum())
    p_log, sigma = logical_error_stats(failures, kept)
    return PointResult(r, config.shots, kept, failures, p_log, sigma)


def run_memory(config: ExperimentConfig) -> ExperimentReport:
    """Full memory experiment over the configured round list."""
    code = surface_code(config.dimension, config.length, config.grade)
    points = tuple(run_point(code, config, r) for r in config.rounds)
    fit = None
    usable = [(p.r, p.p_log, p.sigma) for p in points if p.kept > 0]
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fit = fit_decay(usable)
    except ValueError:
        fit = None
    return ExperimentReport(points, fit, config.digest(), config.seed)


@dataclass(frozen=True)
class ProtocolResult:
    label: str
    cnots_per_cycle: int
    rounds_per_cycle: int
    points: tuple[PointResult, ...]  # r field counts cycles
    fit: FitResult | None
    hardware_context: tuple[float, float] | None


@dataclass(frozen=True)
class ComparisonReport:
    protocols: tuple[ProtocolResult, ...]

    def to_json(self) -> str:
        payload = []
        for proto in self.protocols:
            payload.append({
                "label": proto.label,
                "cnots_per_cycle": proto.cnots_per_cycle,
                "rounds_per_cycle": proto.rounds_per_cycle,
                "points": [asdict(p) for p in proto.points],
                "fit": asdict(proto.fit) if proto.fit else None,
                "hardware_context": proto.hardware_context,
            })
        return json.dumps({"protocols": payload}, sort_keys=True)

    def to_csv(self) -> str:
        lines = ["protocol,cycle,shots,kept,failures,p_log,sigma"]
        for proto in self.protocols:
            for p in proto.points:
                lines.append(
                    f"{proto.label},{p.r},{p.shots},{p.kept},{p.failures},"
                    f"{p.p_log!r},{p.sigma!r}"
                )
        return "\n".join(lines) + "\n"


def compare_2d_4d(cycles=(1, 2, 3, 4), shots=20_000,
                  noise: NoiseModel | None = None, seed: int = 0,
                  bp: BpConfig = BpConfig(),
                  basis: str = "z") -> ComparisonReport:
    """Three-way protocol comparison at matched physical noise:
    single-shot 4D (one extraction round per cycle, (1,1) windows),
    non-fault-tolerant 2D (same), and fault-tolerant 2D (four extraction
    rounds per cycle, (4,4) windows)."""
    noise = noise or NoiseModel()
    protocols = [
        ("4d_single_shot", 4, 2, 1, WindowConfig(1, 1)),
        ("2d_non_ft", 2, 4, 1, WindowConfig(1, 1)),
        ("2d_ft", 2, 4, 4, WindowConfig(4, 4)),
    ]
    results = []
    for label, dim, length, rpc, wcfg in protocols:
        code = surface_code(dim, length)
        config = ExperimentConfig(
            dimension=dim, length=length, basis=basis,
            rounds=tuple(rpc * c for c in cycles), shots=shots,
            noise=noise, window=wcfg, bp=bp, postselect="off", seed=seed,
        )
        raw_points = [run_point(code, config, r) for r in config.rounds]
        points = tuple(
            PointResult(c, p.shots, p.kept, p.failures, p.p_log, p.sigma)
            for c, p in zip(cycles, raw_points)
        )
        fit = None
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                fit = fit_decay([(p.r, p.p_log, p.sigma) for p in points
                                 if p.kept > 0])
        except ValueError:
            fit = None
        results.append(ProtocolResult(
            label=label,
            cnots_per_cycle=cnot_count(memory_circuit(code, basis, rpc)),
            rounds_per_cycle=rpc,
            points=points,
            fit=fit,
            hardware_context=HARDWARE_CONTEXT.get(label),
        ))
    return ComparisonReport(tuple(results))
