"""Natural-logic fact verification over tables with arithmetic expressions."""

from .config import EngineConfig, load_config
from .natlog import Proof, ProofStep, Verdict, execute_proof
from .numerals import NatOp
from .pipeline import Engine, VerdictReport, aggregate

__version__ = "0.1.0"

__all__ = [
    "Engine", "EngineConfig", "NatOp", "Proof", "ProofStep", "Verdict", "VerdictReport",
    "aggregate", "execute_proof", "load_config",
]
