"""D-dimensional surface codes, memory circuits, Pauli-frame sampling,
and single-shot BP+OSD window decoding."""

from .chain import ChainComplex, DistanceProfile, tensor_product
from .circuits import Circuit, Schedule, cnot_count, hook_audit, memory_circuit
from .codes import CssCode, repetition_complex, surface_code
from .decoder import BpConfig, DecodeOutcome, WindowConfig, WindowDecoder
from .dem import DetectorErrorModel, build_dem
from .experiments import ExperimentConfig, ExperimentReport, run_memory
from .noise import NoiseModel, attach_noise, sample

__all__ = [
    "ChainComplex",
    "DistanceProfile",
    "tensor_product",
    "Circuit",
    "Schedule",
    "cnot_count",
    "hook_audit",
    "memory_circuit",
    "CssCode",
    "repetition_complex",
    "surface_code",
    "BpConfig",
    "DecodeOutcome",
    "WindowConfig",
    "WindowDecoder",
    "DetectorErrorModel",
    "build_dem",
    "ExperimentConfig",
    "ExperimentReport",
    "run_memory",
    "NoiseModel",
    "attach_noise",
    "sample",
]
