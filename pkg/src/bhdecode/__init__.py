"""Learning information-recovery decoders for t-doped Clifford scramblers.

The main entry points are :func:`bhdecode.fidelity.fidelity` (closed-form
recovery fidelity), :func:`bhdecode.anneal.train` (Metropolis learner) and
:func:`bhdecode.harness.run_sweep` (t-sweeps with fits); the ``bhdecode``
console script wraps the latter.
"""
from .anneal import AnnealConfig, TrainResult, resume_train, train
from .circuit import Circuit, Gate, sample_doped_circuit, synthesize_dense
from .fidelity import cost, fidelity, ideal_fidelity, p_out, teleport_fidelity
from .harness import SweepConfig, fit_exponential, run_sweep
from .metrics import Partition, omega_exact
from .pauli import Pauli

__version__ = "0.1.0"
