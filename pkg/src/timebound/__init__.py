"""timebound: static WCET and stack-depth bounds for a small 32-bit RISC machine."""

from .analysis import AnalysisResult, run_phases
from .annotations import Annotations, parse_annotations
from .errors import (AnalysisError, AnnotationError, AssemblyError, DecodeError,
                     EncodingError, InternalError, TimeboundError, TrapError)
from .isa import Instruction, ProgramImage, assemble, disassemble
from .machine import CacheConfig, MachineConfig
from .sim import exhaustive_run, run

__all__ = [
    "AnalysisResult", "run_phases", "Annotations", "parse_annotations",
    "AnalysisError", "AnnotationError", "AssemblyError", "DecodeError", "EncodingError",
    "InternalError", "TimeboundError", "TrapError",
    "Instruction", "ProgramImage", "assemble", "disassemble",
    "CacheConfig", "MachineConfig", "exhaustive_run", "run",
]
