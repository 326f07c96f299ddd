"""Metropolis annealing of a mocking decoder V.

V starts at the identity and grows one gate at a time (V <- gV).  Moves that
do not lower F are always kept; a move that lowers F is kept with the
Boltzmann weight exp(-beta (1/F_new - 1/F_old)) under the standard rule.
The ``literal`` rule reproduces the training pseudocode word for word, where
that same weight is the probability of *undoing* the worsening move.

A chain is fully determined by (U, config, RNG state), and a snapshot holds
exactly that plus the accepted gate list, so a resumed chain replays the
uninterrupted one bit for bit.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .circuit import Circuit, Gate, propose_clifford_gate, synthesize_dense
from .fidelity import CostEvaluator, learnability_overlap
from .linalg import apply_gate
from .metrics import Partition, scrambling_plateau

SNAPSHOT_FORMAT = "bhdecode-anneal/1"
# F within this of the target counts as reaching it
HALT_TOL = 1e-12


class SnapshotError(ValueError):
    pass


class TrainError(RuntimeError):
    """A cost evaluation failed mid-run; ``state`` keeps the partial trajectory."""

    def __init__(self, message: str, state: "AnnealState"):
        super().__init__(message)
        self.state = state


@dataclass
class AnnealConfig:
    beta: float = 250.0
    t_max_factor: float | None = None  # None: 100 for n_c <= 1, 300 otherwise
    target_mode: str = "ideal"  # ideal | threshold | none
    threshold: float | None = None  # threshold mode; None means 1/(d_A^2 Omega_plateau)
    ansatz: str = "clifford"  # clifford | doped
    t_prob: float = 0.25  # doped ansatz: chance a proposal is a T gate
    t_budget: int | None = None  # doped ansatz: cap on T gates in V
    acceptance: str = "standard"  # standard | literal
    seed: int | None = None

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.t_max_factor is not None and self.t_max_factor < 1:
            raise ValueError("t_max_factor must be >= 1")
        if self.target_mode not in ("ideal", "threshold", "none"):
            raise ValueError(f"unknown target_mode {self.target_mode!r}")
        if self.ansatz not in ("clifford", "doped"):
            raise ValueError(f"unknown ansatz {self.ansatz!r}")
        if self.acceptance not in ("standard", "literal"):
            raise ValueError(f"unknown acceptance rule {self.acceptance!r}")

    def t_max(self, n: int, n_c: int) -> int:
        factor = self.t_max_factor
        if factor is None:
            factor = 100 if n_c <= 1 else 300
        return int(round(factor * n * n))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AnnealConfig":
        return cls(**d)


@dataclass
class TrainResult:
    circuit: Circuit
    fidelity: float
    trajectory: np.ndarray
    steps: int
    accepted: int
    wall_time: float
    config: dict
    overlap: float
    target: float
    reached_target: bool
    v_dense: np.ndarray | None = field(default=None, repr=False, compare=False)

    def summary(self) -> dict:
        return {
            "fidelity": self.fidelity,
            "steps": self.steps,
            "accepted": self.accepted,
            "wall_time": self.wall_time,
            "overlap": self.overlap,
            "target": self.target,
            "reached_target": self.reached_target,
            "v_gates": len(self.circuit),
            "v_t_count": self.circuit.t,
        }


@dataclass
class AnnealState:
    """Mutable chain state; ``metropolis_step`` advances it in place."""

    u: np.ndarray
    part: Partition
    cfg: AnnealConfig
    rng: np.random.Generator
    evaluator: CostEvaluator
    w: np.ndarray  # V in the evaluator's packed layout
    gates: list[Gate]
    fidelity: float
    target: float
    t_max: int
    step: int = 0
    accepted: int = 0
    trajectory: list[float] = field(default_factory=list)
    u_circuit: Circuit | None = None
    elapsed: float = 0.0

    @property
    def v(self) -> np.ndarray:
        return self.evaluator.unpack(self.w)

    @property
    def t_count(self) -> int:
        return sum(g.kind == "T" for g in self.gates)

    def done(self) -> bool:
        if self.step >= self.t_max:
            return True
        return self.cfg.target_mode != "none" and self.fidelity >= self.target - HALT_TOL


def _target(u: np.ndarray, part: Partition, cfg: AnnealConfig, evaluator: CostEvaluator) -> float:
    if cfg.target_mode == "ideal":
        return evaluator(u).fidelity
    if cfg.target_mode == "threshold":
        if cfg.threshold is not None:
            return cfg.threshold
        return 1.0 / (part.d_a**2 * scrambling_plateau(part))
    return math.inf


def start(
    u: np.ndarray | Circuit,
    part: Partition,
    cfg: AnnealConfig,
    rng: np.random.Generator | None = None,
) -> AnnealState:
    """Chain at V = 1, before any proposal."""
    u_circuit = None
    if isinstance(u, Circuit):
        u_circuit = u
        u = synthesize_dense(u)
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    evaluator = CostEvaluator(u, part, strict=False)
    w = evaluator.pack(np.eye(part.d, dtype=complex))
    f0 = evaluator.evaluate_packed(w).fidelity
    return AnnealState(
        u=u,
        part=part,
        cfg=cfg,
        rng=rng,
        evaluator=evaluator,
        w=w,
        gates=[],
        fidelity=f0,
        target=_target(u, part, cfg, evaluator),
        t_max=cfg.t_max(part.n, part.n_c),
        trajectory=[f0],
        u_circuit=u_circuit,
    )


def _propose(state: AnnealState) -> Gate:
    cfg, rng, n = state.cfg, state.rng, state.part.n
    if cfg.ansatz == "doped":
        room = cfg.t_budget is None or state.t_count < cfg.t_budget
        if rng.random() < cfg.t_prob and room:
            return Gate("T", (int(rng.integers(n)),))
    return propose_clifford_gate(n, rng)


def boltzmann_weight(f_new: float, f_old: float, beta: float) -> float:
    """exp(-beta (1/F_new - 1/F_old)), with F = 0 meaning infinite energy."""
    if beta == 0:
        return 1.0
    e_new = math.inf if f_new <= 0 else 1.0 / f_new
    e_old = math.inf if f_old <= 0 else 1.0 / f_old
    return math.exp(-beta * (e_new - e_old))


def metropolis_step(state: AnnealState) -> AnnealState:
    """Process exactly one proposal.  A rejected move leaves V untouched."""
    g = _propose(state)
    gw = apply_gate(state.evaluator.packed_gate(g), state.w)
    f_new = state.evaluator.evaluate_packed(gw).fidelity
    keep = True
    if f_new < state.fidelity:
        r = state.rng.random()
        below = r < boltzmann_weight(f_new, state.fidelity, state.cfg.beta)
        keep = below if state.cfg.acceptance == "standard" else not below
    if keep:
        state.w = gw
        state.gates.append(g)
        state.fidelity = f_new
        state.accepted += 1
    state.step += 1
    state.trajectory.append(state.fidelity)
    return state


def run(
    state: AnnealState,
    max_steps: int | None = None,
    checkpoint_path: str | os.PathLike | None = None,
    checkpoint_every: int | None = None,
) -> AnnealState:
    """Advance until halting (or for at most ``max_steps`` more proposals)."""
    t0 = time.perf_counter()
    budget = math.inf if max_steps is None else max_steps
    taken = 0
    while not state.done() and taken < budget:
        try:
            metropolis_step(state)
        except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            state.elapsed += time.perf_counter() - t0
            raise TrainError(f"cost evaluation failed at step {state.step}: {exc}", state) from exc
        taken += 1
        if checkpoint_path is not None and checkpoint_every and state.step % checkpoint_every == 0:
            state.elapsed += time.perf_counter() - t0
            t0 = time.perf_counter()
            save_checkpoint(state, checkpoint_path)
    state.elapsed += time.perf_counter() - t0
    return state


def finish(state: AnnealState) -> TrainResult:
    v = state.v
    return TrainResult(
        circuit=Circuit(state.part.n, tuple(state.gates)),
        fidelity=state.fidelity,
        trajectory=np.array(state.trajectory),
        steps=state.step,
        accepted=state.accepted,
        wall_time=state.elapsed,
        config=state.cfg.to_dict(),
        overlap=learnability_overlap(state.u, v),
        target=state.target,
        reached_target=state.cfg.target_mode != "none" and state.fidelity >= state.target - HALT_TOL,
        v_dense=v,
    )


def train(
    u: np.ndarray | Circuit,
    part: Partition,
    cfg: AnnealConfig,
    rng: np.random.Generator | None = None,
    checkpoint_path: str | os.PathLike | None = None,
    checkpoint_every: int | None = None,
) -> TrainResult:
    """Anneal V against U until F reaches the target or T_max proposals.

    Checkpointing needs ``u`` as a :class:`Circuit` so the snapshot can
    rebuild it.
    """
    if checkpoint_path is not None and not isinstance(u, Circuit):
        raise TypeError("checkpointing needs U as a Circuit")
    state = run(start(u, part, cfg, rng), checkpoint_path=checkpoint_path, checkpoint_every=checkpoint_every)
    if checkpoint_path is not None:
        save_checkpoint(state, checkpoint_path)
    return finish(state)


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def snapshot(state: AnnealState) -> dict:
    if state.u_circuit is None:
        raise SnapshotError("state was started from a dense U; no circuit to store")
    u_text = state.u_circuit.to_text()
    return {
        "format": SNAPSHOT_FORMAT,
        "config": state.cfg.to_dict(),
        "partition": {"n": state.part.n, "n_a": state.part.n_a, "n_c": state.part.n_c},
        "u_circuit": u_text,
        "u_sha256": _sha(u_text),
        "v_gates": [str(g) for g in state.gates],
        "step": state.step,
        "accepted": state.accepted,
        "fidelity": state.fidelity,
        "target": state.target,
        "trajectory": list(state.trajectory),
        "elapsed": state.elapsed,
        "rng_state": state.rng.bit_generator.state,
        "complete": state.done(),
    }


def restore(snap: dict) -> AnnealState:
    if snap.get("format") != SNAPSHOT_FORMAT:
        raise SnapshotError(f"unrecognised snapshot format {snap.get('format')!r}")
    try:
        u_text = snap["u_circuit"]
        if _sha(u_text) != snap["u_sha256"]:
            raise SnapshotError("scrambler circuit does not match its recorded hash")
        u_circuit = Circuit.from_text(u_text)
        cfg = AnnealConfig.from_dict(snap["config"])
        part = Partition(**snap["partition"])
        gates = [Gate.parse(s) for s in snap["v_gates"]]
        rng = np.random.default_rng()
        rng.bit_generator.state = snap["rng_state"]
    except (KeyError, TypeError) as exc:
        raise SnapshotError(f"corrupt snapshot: {exc}") from exc
    u = synthesize_dense(u_circuit)
    evaluator = CostEvaluator(u, part, strict=False)
    # replaying the same gate applications reproduces V bit for bit
    w = evaluator.pack(np.eye(part.d, dtype=complex))
    for g in gates:
        w = apply_gate(evaluator.packed_gate(g), w)
    return AnnealState(
        u=u,
        part=part,
        cfg=cfg,
        rng=rng,
        evaluator=evaluator,
        w=w,
        gates=gates,
        fidelity=snap["fidelity"],
        target=snap["target"],
        t_max=cfg.t_max(part.n, part.n_c),
        step=snap["step"],
        accepted=snap["accepted"],
        trajectory=list(snap["trajectory"]),
        u_circuit=u_circuit,
        elapsed=snap.get("elapsed", 0.0),
    )


def save_checkpoint(state: AnnealState, path: str | os.PathLike) -> None:
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "w") as fh:
        json.dump(snapshot(state), fh)
    os.replace(tmp, path)


def load_checkpoint(path: str | os.PathLike) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SnapshotError(f"corrupt snapshot file {path}: {exc}") from exc


def resume_train(snap: dict | str | os.PathLike, checkpoint_path: str | os.PathLike | None = None,
                 checkpoint_every: int | None = None) -> TrainResult:
    """Continue a checkpointed chain to completion (no-op if already done)."""
    if not isinstance(snap, dict):
        snap = load_checkpoint(snap)
    state = run(restore(snap), checkpoint_path=checkpoint_path, checkpoint_every=checkpoint_every)
    if checkpoint_path is not None:
        save_checkpoint(state, checkpoint_path)
    return finish(state)
