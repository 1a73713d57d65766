"""Turn solved variable assignments into routed circuits, and back.

A RoutedCircuit is the physical schedule: where every logical qubit
starts, which arc every gate runs on (with or without an absorbed
operand swap), which standalone swaps move free qubits, and where
everything ends up. ``decode`` reads it off a feasible assignment,
``encode`` reproduces the assignment from it, and the two verifiers
check structure (token tracking, arc existence, gate coverage) and full
unitary equivalence by simulation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .circuit import LayeredCircuit
from .gatefid import FidelityModel
from .hwgraph import HardwareGraph
from .simulate import SWAP, embed_two_qubit, permutation_matrix, phase_distance


class ExtractError(ValueError):
    """Raised when an assignment or routed circuit is malformed."""


@dataclass(frozen=True)
class GateOp:
    """One logical gate placed on a hardware arc.

    ``arc`` is ordered: the first node hosts the gate's first operand.
    ``merged_swap`` marks the variant that also exchanges the operands.
    """

    gid: int
    p: int
    q: int
    arc: tuple[int, int]
    merged_swap: bool
    cnots_used: int


@dataclass(frozen=True)
class FreeSwap:
    """A standalone swap of two gate-free qubits across an edge."""

    edge: tuple[int, int]


@dataclass(frozen=True)
class RoutedCircuit:
    n_nodes: int
    initial_map: tuple[int, ...]
    final_map: tuple[int, ...]
    steps: tuple[tuple, ...]
    origin: str = "bip"
    # True when steps line up one-to-one with the model's time steps;
    # heuristic routers emit their own step structure instead.
    time_aligned: bool = True


@dataclass(frozen=True)
class CircuitStats:
    cnot_count: int
    depth_proxy: int
    error_objective_value: float
    crosstalk_count: int

    def as_dict(self) -> dict:
        return {"cnot_count": self.cnot_count, "depth_proxy": self.depth_proxy,
                "error_objective_value": self.error_objective_value,
                "crosstalk_count": self.crosstalk_count}


def _norm(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


def decode(vs, assignment, c: LayeredCircuit, g: HardwareGraph,
           fid: FidelityModel) -> RoutedCircuit:
    """Read the routed circuit off a feasible assignment.

    Gates go where their y variable is 1; an operand swap is merged into
    a gate when the operands' movement variables cross the gate's own
    arc; disjoint crossing movements of two gate-free qubits become one
    FreeSwap each.
    """
    a = assignment
    n, m = vs.n, vs.m
    if m == 0:
        ident = tuple(range(n))
        return RoutedCircuit(n_nodes=n, initial_map=ident, final_map=ident,
                             steps=(), origin="bip", time_aligned=True)

    def layout(t: int) -> list[int]:
        pos = [-1] * n
        for q in range(n):
            for i in range(n):
                if a[vs.w(q, i, t)]:
                    if pos[q] >= 0:
                        raise ExtractError(f"qubit {q} placed twice at step {t}")
                    pos[q] = i
        if any(p < 0 for p in pos):
            raise ExtractError(f"incomplete placement at step {t}")
        return pos

    steps = []
    initial = layout(0)
    for t in range(m):
        pos = layout(t)
        busy = c.busy_qubits(t)
        ops = []
        for gate in c.groups[t]:
            placed = None
            for (i, j) in g.arcs():
                if a[vs.y(gate.gid, i, j)]:
                    if placed is not None:
                        raise ExtractError(f"gate {gate.gid} placed twice")
                    placed = (i, j)
            if placed is None:
                raise ExtractError(f"gate {gate.gid} not placed")
            i, j = placed
            merged = bool(t < m - 1 and a[vs.x(gate.p, i, j, t)])
            cost = fid.cost(gate.gid, i, j)
            ops.append(GateOp(gid=gate.gid, p=gate.p, q=gate.q, arc=placed,
                              merged_swap=merged,
                              cnots_used=cost.n_merged if merged else cost.n_plain))
        if t < m - 1:
            occ = [-1] * n
            for q in range(n):
                occ[pos[q]] = q
            for (i, j) in g.edges:
                qa, qb = occ[i], occ[j]
                if qa in busy or qb in busy:
                    continue
                if a[vs.x(qa, i, j, t)] and a[vs.x(qb, j, i, t)]:
                    ops.append(FreeSwap(edge=(i, j)))
        steps.append(tuple(ops))
    final = layout(m - 1)
    rc = RoutedCircuit(n_nodes=n, initial_map=tuple(initial),
                       final_map=tuple(final), steps=tuple(steps),
                       origin="bip", time_aligned=True)
    report = verify_structural(rc, c, g)
    if report is not None:
        raise ExtractError(f"decoded circuit is inconsistent: {report}")
    return rc


def encode(rc: RoutedCircuit, vs) -> np.ndarray:
    """Inverse of decode: rebuild the 0/1 assignment from the schedule.

    Placement, movement and gate variables follow directly; dummy-step
    indicators are closed under the symmetry chain (a dummy step is
    marked used whenever any later step of its run moves something), and
    edge-use indicators follow the placed operations.
    """
    if not rc.time_aligned:
        raise ExtractError("only step-aligned circuits can be encoded")
    n, m = vs.n, vs.m
    if rc.n_nodes != n or len(rc.steps) != m:
        raise ExtractError("circuit shape does not match the variable space")
    out = np.zeros(vs.num_vars, dtype=np.int8)
    pos = list(rc.initial_map)
    moved_at = [False] * m
    used_edges: list[set] = []
    for t in range(m):
        for q in range(n):
            out[vs.w(q, pos[q], t)] = 1
        moves = []
        used = set()
        for op in rc.steps[t]:
            if isinstance(op, GateOp):
                out[vs.y(op.gid, op.arc[0], op.arc[1])] = 1
                used.add(_norm(*op.arc))
                if op.merged_swap:
                    moves.append(op.arc)
            else:
                moves.append(op.edge)
                used.add(_norm(*op.edge))
        used_edges.append(used)
        if t == m - 1:
            if moves:
                raise ExtractError("movement scheduled at the final step")
            continue
        dest = list(range(n))
        for (i, j) in moves:
            dest[i], dest[j] = dest[j], dest[i]
        for q in range(n):
            i = pos[q]
            out[vs.x(q, i, dest[i], t)] = 1
            if dest[i] != i:
                moved_at[t] = True
        pos = [dest[pos[q]] for q in range(n)]
    if tuple(pos) != rc.final_map:
        raise ExtractError("declared final map does not match the swaps")

    dummies = sorted(vs.circuit.dummy_steps)
    run: list[int] = []
    for t in dummies + [-2]:
        if run and t != run[-1] + 1:
            flag = False
            for s in reversed(run):
                flag = flag or moved_at[s]
                if flag:
                    out[vs.z(s)] = 1
            run = []
        run.append(t)

    if vs.crosstalk_mode:
        xedges = sorted({e for pair in vs.graph.crosstalk_pairs for e in pair})
        for t in range(m):
            for e in xedges:
                if e in used_edges[t]:
                    out[vs.u(e[0], e[1], t)] = 1
            for e1, e2 in vs.graph.crosstalk_pairs:
                if e1 in used_edges[t] and e2 in used_edges[t]:
                    out[vs.v(e1, e2, t)] = 1
    return out


def stats(rc: RoutedCircuit, fid: FidelityModel, g: HardwareGraph) -> CircuitStats:
    """Recompute cost figures from the schedule alone."""
    cnots = 0
    active = 0
    err = 0.0
    xtalk = 0
    for ops in rc.steps:
        if ops:
            active += 1
        used = set()
        for op in ops:
            if isinstance(op, GateOp):
                cnots += op.cnots_used
                cost = fid.cost(op.gid, *op.arc)
                err += -(cost.log_merged if op.merged_swap else cost.log_plain)
                used.add(_norm(*op.arc))
            else:
                cnots += 3
                err += -3.0 * math.log(g.beta_of(*op.edge))
                used.add(_norm(*op.edge))
        for e1, e2 in g.crosstalk_pairs:
            if e1 in used and e2 in used:
                xtalk += 1
    return CircuitStats(cnot_count=cnots, depth_proxy=active,
                        error_objective_value=err, crosstalk_count=xtalk)


def verify_structural(rc: RoutedCircuit, c: LayeredCircuit,
                      g: HardwareGraph) -> str | None:
    """Check the schedule's bookkeeping; None when clean, else a report.

    Token tracking must carry initial_map to final_map, gates must sit on
    existing arcs hosting their operands, each exactly once; when the
    schedule is step-aligned every gate must run in its own time step,
    otherwise per-qubit gate order must be preserved.
    """
    n = rc.n_nodes
    if n != g.n:
        return f"node count {n} does not match hardware size {g.n}"
    for label, mp in (("initial", rc.initial_map), ("final", rc.final_map)):
        if len(mp) != n or sorted(mp) != list(range(n)):
            return f"{label}_map is not a qubit-to-node bijection"

    gate_step = {}
    gate_by_gid = {}
    order: list[list[int]] = [[] for _ in range(n)]
    for t, grp in enumerate(c.groups):
        for gt in grp:
            gate_step[gt.gid] = t
            gate_by_gid[gt.gid] = gt
            order[gt.p].append(gt.gid)
            order[gt.q].append(gt.gid)
    progress = [0] * n

    if rc.time_aligned and len(rc.steps) != c.num_steps:
        return (f"schedule has {len(rc.steps)} steps, "
                f"circuit has {c.num_steps}")

    pos = list(rc.initial_map)
    seen = set()
    for t, ops in enumerate(rc.steps):
        touched = set()
        swaps = []
        for op in ops:
            if isinstance(op, GateOp):
                i, j = op.arc
                nodes = (i, j)
            else:
                i, j = op.edge
                nodes = (i, j)
            if i == j or not g.has_edge(i, j):
                return f"step {t}: arc ({i}, {j}) not in hardware"
            if touched & set(nodes):
                return f"step {t}: overlapping operations on node {min(touched & set(nodes))}"
            touched.update(nodes)
            if isinstance(op, GateOp):
                if op.gid in seen:
                    return f"gate {op.gid} scheduled twice"
                seen.add(op.gid)
                gt = gate_by_gid.get(op.gid)
                if gt is None:
                    return f"unknown gate id {op.gid}"
                if (op.p, op.q) != (gt.p, gt.q):
                    return f"gate {op.gid} lists wrong operands"
                if rc.time_aligned and gate_step[op.gid] != t:
                    return (f"gate {op.gid} runs at step {t}, "
                            f"belongs to step {gate_step[op.gid]}")
                for q in (gt.p, gt.q):
                    if order[q][progress[q]] != op.gid:
                        return f"gate {op.gid} out of order on qubit {q}"
                if pos[gt.p] != i or pos[gt.q] != j:
                    return (f"gate {op.gid} placed on ({i}, {j}) but operands "
                            f"sit at ({pos[gt.p]}, {pos[gt.q]})")
                progress[gt.p] += 1
                progress[gt.q] += 1
                if op.merged_swap:
                    swaps.append((i, j))
            else:
                swaps.append((i, j))
        for (i, j) in swaps:
            occ = {pos.index(i): j, pos.index(j): i}
            for q, node in occ.items():
                pos[q] = node
    if len(seen) != len(gate_by_gid):
        missing = sorted(set(gate_by_gid) - seen)
        return f"gates never scheduled: {missing}"
    if tuple(pos) != rc.final_map:
        return "token tracking does not reach final_map"
    return None


def verify_unitary(rc: RoutedCircuit, c: LayeredCircuit) -> float:
    """Max deviation between the routed circuit and the permuted logical
    unitary, after global-phase alignment. Passing means <= 1e-8."""
    n = rc.n_nodes
    if n > 6:
        raise ExtractError("instance too large for dense unitary verification")
    unis = {gt.gid: gt.unitary for gt in c.gates()}
    dim = 2 ** n
    phys = np.eye(dim, dtype=complex)
    for ops in rc.steps:
        for op in ops:
            if isinstance(op, GateOp):
                i, j = op.arc
                phys = embed_two_qubit(unis[op.gid], i, j, n) @ phys
                if op.merged_swap:
                    phys = embed_two_qubit(SWAP, i, j, n) @ phys
            else:
                i, j = op.edge
                phys = embed_two_qubit(SWAP, i, j, n) @ phys
    logical = np.eye(dim, dtype=complex)
    for grp in c.groups:
        for gt in grp:
            logical = embed_two_qubit(gt.unitary, gt.p, gt.q, n) @ logical
    p_init = permutation_matrix(rc.initial_map)
    p_final = permutation_matrix(rc.final_map)
    target = p_final @ logical @ p_init.conj().T
    return phase_distance(phys, target)


# ---------------------------------------------------------------------------
# Serialization.

def routed_to_json(rc: RoutedCircuit) -> str:
    steps = []
    for ops in rc.steps:
        row = []
        for op in ops:
            if isinstance(op, GateOp):
                row.append({"kind": "gate", "gid": op.gid, "p": op.p, "q": op.q,
                            "arc": list(op.arc), "merged_swap": op.merged_swap,
                            "cnots_used": op.cnots_used})
            else:
                row.append({"kind": "swap", "edge": list(op.edge)})
        steps.append(row)
    doc = {"n_nodes": rc.n_nodes, "initial_map": list(rc.initial_map),
           "final_map": list(rc.final_map), "steps": steps,
           "origin": rc.origin, "time_aligned": rc.time_aligned}
    return json.dumps(doc, indent=1)


def routed_from_json(source: str | dict) -> RoutedCircuit:
    doc = json.loads(source) if isinstance(source, str) else source
    try:
        steps = []
        for row in doc["steps"]:
            ops = []
            for entry in row:
                if entry["kind"] == "gate":
                    ops.append(GateOp(gid=int(entry["gid"]), p=int(entry["p"]),
                                      q=int(entry["q"]),
                                      arc=tuple(entry["arc"]),
                                      merged_swap=bool(entry["merged_swap"]),
                                      cnots_used=int(entry["cnots_used"])))
                elif entry["kind"] == "swap":
                    ops.append(FreeSwap(edge=tuple(entry["edge"])))
                else:
                    raise ExtractError(f"unknown op kind {entry['kind']!r}")
            steps.append(tuple(ops))
        return RoutedCircuit(n_nodes=int(doc["n_nodes"]),
                             initial_map=tuple(doc["initial_map"]),
                             final_map=tuple(doc["final_map"]),
                             steps=tuple(steps),
                             origin=str(doc.get("origin", "imported")),
                             time_aligned=bool(doc.get("time_aligned", True)))
    except KeyError as exc:
        raise ExtractError(f"routed-circuit document lacks field {exc}") from exc
