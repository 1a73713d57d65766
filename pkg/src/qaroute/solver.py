"""Exact solvers and model I/O for the routing program.

``solve_branch_and_bound`` is a deterministic depth-first search with
best-bound pruning over the binary variables. Activity-based propagation
fixes everything a partial layout implies (placement, movement and gate
variables follow from the equality rows), and the lower bound combines
the objective contribution of fixed variables with, for the error
objective, the cheapest remaining placement of every unplaced gate. No
LP relaxation is involved; at desk scale the combinatorial bound closes
the tree quickly and keeps the solver dependency-free.

``solve_exhaustive`` is the independent reference: dynamic programming
over complete qubit-to-node mappings with transitions enumerated from
the matchings of the hardware graph. It shares nothing with the
branch-and-bound path except the fidelity tables.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .bipmodel import BipProblem, ModelError, Row
from .circuit import LayeredCircuit
from .gatefid import FidelityModel
from .hwgraph import HardwareGraph, enumerate_matchings

_FEAS_TOL = 1e-9
_GAP_TOL = 1e-6


class SolveError(ValueError):
    """Raised for malformed solver inputs or solution documents."""


class SolutionInfeasibleError(SolveError):
    """An imported assignment violates a constraint row."""

    def __init__(self, row: Row, activity: float, row_name: str):
        self.row = row
        self.activity = activity
        self.row_name = row_name
        super().__init__(
            f"assignment violates row {row_name} (family {row.family}): "
            f"activity {activity!r} vs {row.sense} {row.rhs!r}")


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"  # defensive; binaries cannot actually be unbounded


@dataclass
class SolveLimits:
    """Search budgets. ``cutoff`` discards any solution above the given
    objective value; ``emphasis`` picks the value-ordering flavour."""

    time_limit: float | None = None
    node_limit: int | None = None
    cutoff: float | None = None
    emphasis: str = "find"

    def __post_init__(self) -> None:
        if self.time_limit is not None and self.time_limit <= 0:
            raise SolveError("time limit must be positive")
        if self.node_limit is not None and self.node_limit <= 0:
            raise SolveError("node limit must be positive")
        if self.emphasis not in ("find", "prove"):
            raise SolveError(f"unknown emphasis {self.emphasis!r}")


@dataclass
class SolveResult:
    status: SolveStatus
    objective: float | None
    assignment: np.ndarray | None
    dual_bound: float
    nodes: int
    wall_time: float

    @property
    def gap(self) -> float | None:
        if self.objective is None:
            return None
        return self.objective - self.dual_bound


def solve_branch_and_bound(p: BipProblem, limits: SolveLimits | None = None) -> SolveResult:
    """Minimize the active objective over all feasible 0/1 assignments.

    Deterministic: identical inputs explore identical trees. Branching
    follows the time-expanded structure, assigning the placement
    variables of the earliest undecided step first (widest objective
    spread wins inside a step) with value 1 tried first, so the equality
    rows immediately pin the movement and gate variables of completed
    steps.
    """
    limits = limits or SolveLimits()
    t_start = time.perf_counter()
    nvars = p.num_vars
    obj = [float(v) for v in p.objective]
    offset = float(p.objective_offset)

    # Compiled row storage.
    nrows = len(p.rows)
    row_vars: list[tuple[int, ...]] = [r.vars for r in p.rows]
    row_coefs: list[tuple[float, ...]] = [r.coefs for r in p.rows]
    row_lo = [0.0] * nrows
    row_hi = [0.0] * nrows
    row_max = [0.0] * nrows
    for k, r in enumerate(p.rows):
        if r.sense == "=":
            row_lo[k] = row_hi[k] = r.rhs
        elif r.sense == "<=":
            row_lo[k], row_hi[k] = -math.inf, r.rhs
        elif r.sense == ">=":
            row_lo[k], row_hi[k] = r.rhs, math.inf
        else:
            raise SolveError(f"unknown row sense {r.sense!r}")
        row_max[k] = max((abs(c) for c in r.coefs), default=0.0)

    var_rows: list[list[tuple[int, float]]] = [[] for _ in range(nvars)]
    minact = [0.0] * nrows
    maxact = [0.0] * nrows
    for k in range(nrows):
        for v, cf in zip(row_vars[k], row_coefs[k]):
            var_rows[v].append((k, cf))
            if cf < 0.0:
                minact[k] += cf
            else:
                maxact[k] += cf

    # Gate placement structures for the error-objective bound.
    mode_gates = []
    is_mode_var = bytearray(nvars)
    if p.objective_kind == "error" and p.gate_modes:
        for gm in p.gate_modes:
            ys, xps, xqs, cps, cms = [], [], [], [], []
            for a in gm.arcs:
                ys.append(a.y)
                xps.append(a.xp)
                xqs.append(a.xq)
                cps.append(a.cost_plain)
                cms.append(a.cost_merged)
                is_mode_var[a.y] = 1
                if a.xp >= 0:
                    is_mode_var[a.xp] = 1
                    is_mode_var[a.xq] = 1
            mode_gates.append((ys, xps, xqs, cps, cms))

    vals = [-1] * nvars
    trail: list[int] = []
    state = {
        "objfix_all": 0.0,
        "objfix_other": 0.0,
        "negsum_all": sum(c for c in obj if c < 0.0),
        "negsum_other": sum(c for v, c in enumerate(obj) if c < 0.0 and not is_mode_var[v]),
    }

    queue: list[int] = []
    in_queue = bytearray(nrows)

    def fix(v: int, a: int) -> bool:
        cur = vals[v]
        if cur >= 0:
            return cur == a
        vals[v] = a
        trail.append(v)
        c = obj[v]
        if a:
            state["objfix_all"] += c
            if not is_mode_var[v]:
                state["objfix_other"] += c
        if c < 0.0:
            state["negsum_all"] -= c
            if not is_mode_var[v]:
                state["negsum_other"] -= c
        for k, cf in var_rows[v]:
            if cf < 0.0:
                minact[k] += cf * a - cf
                maxact[k] += cf * a
            else:
                minact[k] += cf * a
                maxact[k] += cf * a - cf
            if not in_queue[k]:
                in_queue[k] = 1
                queue.append(k)
        return True

    def undo_to(mark: int) -> None:
        while len(trail) > mark:
            v = trail.pop()
            a = vals[v]
            vals[v] = -1
            c = obj[v]
            if a:
                state["objfix_all"] -= c
                if not is_mode_var[v]:
                    state["objfix_other"] -= c
            if c < 0.0:
                state["negsum_all"] += c
                if not is_mode_var[v]:
                    state["negsum_other"] += c
            for k, cf in var_rows[v]:
                if cf < 0.0:
                    minact[k] -= cf * a - cf
                    maxact[k] -= cf * a
                else:
                    minact[k] -= cf * a
                    maxact[k] -= cf * a - cf

    def propagate() -> bool:
        qi = 0
        while qi < len(queue):
            k = queue[qi]
            qi += 1
            in_queue[k] = 0
            ma, xa = minact[k], maxact[k]
            lo, hi = row_lo[k], row_hi[k]
            if ma > hi + _FEAS_TOL or xa < lo - _FEAS_TOL:
                queue.clear()
                in_queue[:] = bytes(nrows)
                return False
            if not (ma + row_max[k] > hi + _FEAS_TOL or xa - row_max[k] < lo - _FEAS_TOL):
                continue
            rv, rc = row_vars[k], row_coefs[k]
            for idx in range(len(rv)):
                v = rv[idx]
                if vals[v] >= 0:
                    continue
                cf = rc[idx]
                ma, xa = minact[k], maxact[k]
                if cf > 0.0:
                    can1 = ma + cf <= hi + _FEAS_TOL
                    can0 = xa - cf >= lo - _FEAS_TOL
                else:
                    can1 = xa + cf >= lo - _FEAS_TOL
                    can0 = ma - cf <= hi + _FEAS_TOL
                if can1 and can0:
                    continue
                if not can1 and not can0:
                    queue.clear()
                    in_queue[:] = bytes(nrows)
                    return False
                if not fix(v, 1 if can1 else 0):
                    queue.clear()
                    in_queue[:] = bytes(nrows)
                    return False
        queue.clear()
        return True

    inf = math.inf

    def bound() -> float:
        if mode_gates:
            total = state["objfix_other"] + state["negsum_other"]
            for ys, xps, xqs, cps, cms in mode_gates:
                forced = -1
                for a in range(len(ys)):
                    if vals[ys[a]] == 1:
                        forced = a
                        break
                best = inf
                rng = (forced,) if forced >= 0 else range(len(ys))
                for a in rng:
                    if forced < 0 and vals[ys[a]] == 0:
                        continue
                    xp = xps[a]
                    if xp < 0:
                        if cps[a] < best:
                            best = cps[a]
                        continue
                    vp, vq = vals[xp], vals[xqs[a]]
                    if vp != 1 and vq != 1 and cps[a] < best:
                        best = cps[a]
                    if vp != 0 and vq != 0 and cms[a] < best:
                        best = cms[a]
                if math.isinf(best):
                    return inf
                total += best
            return total + offset
        return state["objfix_all"] + state["negsum_all"] + offset

    # Branching order: placement variables grouped by step, widest
    # objective spread first inside a step.
    w_groups: list[list[int]] = []
    meta = p.var_meta
    if meta:
        by_t: dict[int, list[int]] = {}
        for v, entry in enumerate(meta):
            if entry and entry[0] == "w":
                by_t.setdefault(entry[3], []).append(v)
        spread = [0.0] * nvars
        if mode_gates:
            node_cost: dict[tuple[int, int], list[float]] = {}
            for gm, (ys, xps, xqs, cps, cms) in zip(p.gate_modes, mode_gates):
                for a, arc in enumerate(gm.arcs):
                    lo_cost = min(cps[a], cms[a])
                    yentry = meta[arc.y]
                    _, _, i, j, t = yentry
                    node_cost.setdefault((i, t), []).append(lo_cost)
            for v, entry in enumerate(meta):
                if entry and entry[0] == "w":
                    costs = node_cost.get((entry[2], entry[3]))
                    if costs:
                        spread[v] = max(costs) - min(costs)
        for t in sorted(by_t):
            group = sorted(by_t[t], key=lambda v: (-spread[v], v))
            w_groups.append(group)

    def pick_branch() -> int:
        for group in w_groups:
            for v in group:
                if vals[v] < 0:
                    return v
        for v in range(nvars):
            if vals[v] < 0:
                return v
        return -1

    def preferred(v: int) -> int:
        entry = meta[v] if meta else None
        if entry and entry[0] == "w":
            return 1
        c = obj[v]
        if c < 0.0:
            return 1
        return 0

    best_val = inf
    best_assign: np.ndarray | None = None
    ub_limit = inf if limits.cutoff is None else limits.cutoff + _FEAS_TOL

    nodes = 0
    stack: list[tuple[int, int, int, float]] = []
    limit_hit = False
    conflict = not propagate()
    descending = True

    while True:
        if descending:
            nodes += 1
            if limits.node_limit is not None and nodes > limits.node_limit:
                limit_hit = True
                break
            if (nodes % 512 == 0 and limits.time_limit is not None
                    and time.perf_counter() - t_start > limits.time_limit):
                limit_hit = True
                break
            if conflict:
                descending = False
                continue
            b = bound()
            prune_at = min(best_val - 1e-12, ub_limit)
            if b >= prune_at:
                descending = False
                continue
            v = pick_branch()
            if v < 0:
                val = state["objfix_all"] + offset
                if val < best_val - 1e-12 and val <= ub_limit:
                    best_val = val
                    best_assign = np.array(vals, dtype=np.int8)
                descending = False
                continue
            a = preferred(v)
            stack.append((v, 1 - a, len(trail), b))
            conflict = not (fix(v, a) and propagate())
        else:
            if not stack:
                break
            v, alt, mark, pbound = stack.pop()
            undo_to(mark)
            prune_at = min(best_val - 1e-12, ub_limit)
            if pbound >= prune_at:
                continue
            conflict = not (fix(v, alt) and propagate())
            descending = True

    wall = time.perf_counter() - t_start
    if limit_hit:
        open_bounds = [e[3] for e in stack]
        dual = min(open_bounds) if open_bounds else (best_val if best_assign is not None else -inf)
        status = SolveStatus.FEASIBLE
        objective = best_val if best_assign is not None else None
        return SolveResult(status=status, objective=objective, assignment=best_assign,
                           dual_bound=dual, nodes=nodes, wall_time=wall)
    if best_assign is None:
        return SolveResult(status=SolveStatus.INFEASIBLE, objective=None, assignment=None,
                           dual_bound=inf, nodes=nodes, wall_time=wall)
    return SolveResult(status=SolveStatus.OPTIMAL, objective=best_val,
                       assignment=best_assign, dual_bound=best_val, nodes=nodes,
                       wall_time=wall)


# ---------------------------------------------------------------------------
# Exhaustive reference solver.

_OBJECTIVES = ("error", "depth", "crosstalk")


def solve_exhaustive(c: LayeredCircuit, g: HardwareGraph, fid: FidelityModel,
                     objective="error"):
    """Reference optimum by dynamic programming over complete layouts.

    ``objective`` is one of ``error``/``depth``/``crosstalk`` or a tuple
    of them, in which case cost vectors are compared lexicographically.
    Returns ``(value, routed)`` where ``routed`` is one optimal routed
    circuit (see extract.RoutedCircuit). Instances are capped at eight
    nodes; the state space is every permutation of the register.
    """
    from .extract import FreeSwap, GateOp, RoutedCircuit

    single = isinstance(objective, str)
    objs = (objective,) if single else tuple(objective)
    for o in objs:
        if o not in _OBJECTIVES:
            raise SolveError(f"unknown objective {o!r}")
    if c.n_qubits != g.n:
        raise SolveError("circuit and graph sizes differ; pad the circuit first")
    n, m = g.n, c.num_steps
    if n > 8:
        raise SolveError("instance too large for exhaustive enumeration")
    matchings = enumerate_matchings(g)
    if math.factorial(n) * max(1, len(matchings)) * max(1, m) > 5e7:
        raise SolveError("instance too large for exhaustive enumeration")
    if m == 0:
        zero = 0.0 if single else (0.0,) * len(objs)
        rc = RoutedCircuit(n_nodes=n, initial_map=(), final_map=(), steps=(),
                           origin="exhaustive", time_aligned=True)
        return zero, rc

    adj = [[False] * n for _ in range(n)]
    for i, j in g.edges:
        adj[i][j] = adj[j][i] = True
    move_maps = []
    for M in matchings:
        mv = list(range(n))
        for i, j in M:
            mv[i], mv[j] = j, i
        move_maps.append(tuple(mv))
    dummyset = set(c.dummy_steps)
    gates_at = [[(gt.p, gt.q, gt.gid) for gt in grp] for grp in c.groups]
    partner_at = []
    for grp in c.groups:
        pm: dict[int, int] = {}
        for gt in grp:
            pm[gt.p] = gt.q
            pm[gt.q] = gt.p
        partner_at.append(pm)
    pairs = g.crosstalk_pairs

    def valid(t: int, pos: tuple[int, ...]) -> bool:
        for pq, qq, _ in gates_at[t]:
            if not adj[pos[pq]][pos[qq]]:
                return False
        return True

    def norm(i: int, j: int) -> tuple[int, int]:
        return (i, j) if i < j else (j, i)

    def stage_cost(t: int, pos, occ, M, mv) -> tuple[float, ...] | None:
        """Cost incurred leaving step t with swap set M; None if invalid."""
        pm = partner_at[t]
        err = 0.0
        used = set()
        for pq, qq, gid in gates_at[t]:
            i, j = pos[pq], pos[qq]
            cost = fid.cost(gid, i, j)
            if mv[i] == j:
                err += -cost.log_merged
            else:
                err += -cost.log_plain
            used.add(norm(i, j))
        for (i, j) in M:
            qa, qb = occ[i], occ[j]
            in_a, in_b = qa in pm, qb in pm
            if in_a or in_b:
                if pm.get(qa) != qb:
                    return None
            else:
                err += -3.0 * math.log(g.beta_of(i, j))
            used.add((i, j))
        out = []
        for o in objs:
            if o == "error":
                out.append(err)
            elif o == "depth":
                out.append(1.0 if (t in dummyset and M) else 0.0)
            else:
                out.append(float(sum(1 for e1, e2 in pairs if e1 in used and e2 in used)))
        return tuple(out)

    def final_cost(pos) -> tuple[float, ...]:
        t = m - 1
        err = 0.0
        used = set()
        for pq, qq, gid in gates_at[t]:
            i, j = pos[pq], pos[qq]
            err += -fid.cost(gid, i, j).log_plain
            used.add(norm(i, j))
        out = []
        for o in objs:
            if o == "error":
                out.append(err)
            elif o == "depth":
                out.append(0.0)
            else:
                out.append(float(sum(1 for e1, e2 in pairs if e1 in used and e2 in used)))
        return tuple(out)

    zero = (0.0,) * len(objs)
    dp: dict[tuple[int, ...], tuple] = {}
    for pos in itertools.permutations(range(n)):
        if valid(0, pos):
            dp[pos] = zero
    parents: list[dict] = [dict() for _ in range(m)]
    for t in range(m - 1):
        ndp: dict[tuple[int, ...], tuple] = {}
        npar = parents[t + 1]
        for pos, cost in dp.items():
            occ = [0] * n
            for qq, node in enumerate(pos):
                occ[node] = qq
            for mi, M in enumerate(matchings):
                sc = stage_cost(t, pos, occ, M, move_maps[mi])
                if sc is None:
                    continue
                mv = move_maps[mi]
                npos = tuple(mv[node] for node in pos)
                if not valid(t + 1, npos):
                    continue
                nc = tuple(a + b for a, b in zip(cost, sc))
                old = ndp.get(npos)
                if old is None or nc < old:
                    ndp[npos] = nc
                    npar[npos] = (pos, mi)
        dp = ndp
        if not dp:
            raise SolveError("instance is infeasible")
    if not dp:
        raise SolveError("instance is infeasible")

    best_pos, best_total = None, None
    for pos, cost in dp.items():
        total = tuple(a + b for a, b in zip(cost, final_cost(pos)))
        if best_total is None or total < best_total:
            best_total, best_pos = total, pos

    # Walk parents back to recover layouts and swap sets per step.
    layouts = [None] * m
    msets: list[tuple] = [()] * m
    layouts[m - 1] = best_pos
    cur = best_pos
    for t in range(m - 1, 0, -1):
        prev, mi = parents[t][cur]
        layouts[t - 1] = prev
        msets[t - 1] = matchings[mi]
        cur = prev
    steps = []
    for t in range(m):
        ops = []
        pos = layouts[t]
        swap_edges = set(msets[t])
        for pq, qq, gid in gates_at[t]:
            i, j = pos[pq], pos[qq]
            merged = norm(i, j) in swap_edges
            cost = fid.cost(gid, i, j)
            ops.append(GateOp(gid=gid, p=pq, q=qq, arc=(i, j), merged_swap=merged,
                              cnots_used=cost.n_merged if merged else cost.n_plain))
            swap_edges.discard(norm(i, j))
        for (i, j) in sorted(swap_edges):
            ops.append(FreeSwap(edge=(i, j)))
        steps.append(tuple(ops))
    rc = RoutedCircuit(n_nodes=n, initial_map=tuple(layouts[0]),
                       final_map=tuple(layouts[m - 1]), steps=tuple(steps),
                       origin="exhaustive", time_aligned=True)
    value = best_total[0] if single else best_total
    return value, rc


# ---------------------------------------------------------------------------
# Model export / import.

def _fmt(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _row_name(k: int, family: str) -> str:
    return f"{family}_{k}"


def export_model(p: BipProblem, fmt: str = "lp") -> str:
    """Serialize the program; ``lp`` (CPLEX-style text) or ``mps`` (fixed).

    Output is deterministic and round-trips through import_model: export,
    import and export again yields the identical byte sequence.
    """
    if fmt == "lp":
        return _export_lp(p)
    if fmt == "mps":
        return _export_mps(p)
    raise SolveError(f"unknown model format {fmt!r}")


def _export_lp(p: BipProblem) -> str:
    lines = ["\\ routing model", "Minimize"]
    terms = []
    for v in range(p.num_vars):
        c = float(p.objective[v])
        if c != 0.0:
            terms.append((v, c))
    chunks = ["obj:"]
    for v, c in terms:
        sign = "+" if c >= 0 else "-"
        chunks.append(f"{sign} {_fmt(abs(c))} {p.names[v]}")
    lines.append(" " + " ".join(chunks))
    lines.append("Subject To")
    for k, row in enumerate(p.rows):
        parts = [f"{_row_name(k, row.family)}:"]
        for idx, (v, c) in enumerate(zip(row.vars, row.coefs)):
            sign = "+" if c >= 0 else "-"
            if idx == 0 and c >= 0:
                parts.append(f"{_fmt(abs(c))} {p.names[v]}")
            else:
                parts.append(f"{sign} {_fmt(abs(c))} {p.names[v]}")
        op = {"=": "=", "<=": "<=", ">=": ">="}[row.sense]
        parts.append(f"{op} {_fmt(row.rhs)}")
        lines.append(" " + " ".join(parts))
    lines.append("Binary")
    for name in p.names:
        lines.append(f" {name}")
    lines.append("End")
    return "\n".join(lines) + "\n"


def _export_mps(p: BipProblem) -> str:
    def pad(s: str, width: int) -> str:
        return s + " " * max(1, width - len(s))

    lines = ["NAME          ROUTING"]
    lines.append("ROWS")
    lines.append(" N  obj")
    sense_code = {"=": "E", "<=": "L", ">=": "G"}
    for k, row in enumerate(p.rows):
        lines.append(f" {sense_code[row.sense]}  {_row_name(k, row.family)}")
    lines.append("COLUMNS")
    lines.append("    MARKER                 'MARKER'                 'INTORG'")
    by_var: list[list[tuple[str, float]]] = [[] for _ in range(p.num_vars)]
    for k, row in enumerate(p.rows):
        rname = _row_name(k, row.family)
        for v, c in zip(row.vars, row.coefs):
            by_var[v].append((rname, c))
    for v in range(p.num_vars):
        c = float(p.objective[v])
        if c != 0.0:
            lines.append("    " + pad(p.names[v], 16) + pad("obj", 20) + _fmt(c))
        for rname, coef in by_var[v]:
            lines.append("    " + pad(p.names[v], 16) + pad(rname, 20) + _fmt(coef))
    lines.append("    MARKER                 'MARKER'                 'INTEND'")
    lines.append("RHS")
    for k, row in enumerate(p.rows):
        if row.rhs != 0.0:
            lines.append("    " + pad("RHS", 16) + pad(_row_name(k, row.family), 20)
                         + _fmt(row.rhs))
    lines.append("BOUNDS")
    for name in p.names:
        lines.append(" BV " + pad("BND", 13) + name)
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def import_model(text: str) -> BipProblem:
    """Parse a model produced by export_model (format auto-detected)."""
    stripped = text.lstrip()
    if stripped.startswith("NAME"):
        return _import_mps(text)
    return _import_lp(text)


def _parse_terms(tokens: list[str]) -> list[tuple[str, float]]:
    out = []
    k = 0
    sign = 1.0
    while k < len(tokens):
        tok = tokens[k]
        if tok == "+":
            sign = 1.0
            k += 1
        elif tok == "-":
            sign = -1.0
            k += 1
        else:
            coef = sign * float(tok)
            name = tokens[k + 1]
            out.append((name, coef))
            sign = 1.0
            k += 2
    return out


def _import_lp(text: str) -> BipProblem:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("\\")]
    if "Minimize" not in lines or "Subject To" not in lines or "Binary" not in lines:
        raise SolveError("LP document lacks required sections")
    i_min = lines.index("Minimize")
    i_st = lines.index("Subject To")
    i_bin = lines.index("Binary")
    i_end = lines.index("End") if "End" in lines else len(lines)

    names = tuple(lines[i_bin + 1:i_end])
    index = {nm: k for k, nm in enumerate(names)}
    if len(index) != len(names):
        raise SolveError("duplicate variable names in Binary section")

    obj = np.zeros(len(names))
    obj_tokens: list[str] = []
    for ln in lines[i_min + 1:i_st]:
        obj_tokens.extend(ln.split())
    if obj_tokens and obj_tokens[0] == "obj:":
        obj_tokens = obj_tokens[1:]
    for name, coef in _parse_terms(obj_tokens):
        if name not in index:
            raise SolveError(f"objective references unknown variable {name!r}")
        obj[index[name]] = coef

    rows = []
    for ln in lines[i_st + 1:i_bin]:
        head, _, rest = ln.partition(":")
        family = head.rsplit("_", 1)[0]
        tokens = rest.split()
        sense = None
        for op in ("<=", ">=", "="):
            if op in tokens:
                sense = op
                break
        if sense is None:
            raise SolveError(f"row {head!r} lacks a comparison operator")
        cut = tokens.index(sense)
        terms = _parse_terms(tokens[:cut])
        rhs = float(tokens[cut + 1])
        try:
            vs = tuple(index[nm] for nm, _ in terms)
        except KeyError as exc:
            raise SolveError(f"row {head!r} references unknown variable {exc}") from exc
        rows.append(Row(vars=vs, coefs=tuple(c for _, c in terms), sense=sense,
                        rhs=rhs, family=family))
    return BipProblem(names=names, rows=tuple(rows), objective=obj,
                      objective_kind="imported",
                      var_meta=tuple(("var",) for _ in names))


def _import_mps(text: str) -> BipProblem:
    section = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    col_entries: dict[str, list[tuple[str, float]]] = {}
    col_order: list[str] = []
    rhs: dict[str, float] = {}
    bound_names: list[str] = []
    code_sense = {"E": "=", "L": "<=", "G": ">="}
    for raw in text.splitlines():
        if not raw.strip():
            continue
        head = raw.strip()
        if head in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "RANGES", "ENDATA") or head.startswith("NAME"):
            section = head.split()[0]
            continue
        fields = raw.split()
        if section == "ROWS":
            code, name = fields
            if code == "N":
                continue
            row_sense[name] = code_sense[code]
            row_order.append(name)
        elif section == "COLUMNS":
            if "'MARKER'" in fields:
                continue
            var, rname, val = fields
            if var not in col_entries:
                col_entries[var] = []
                col_order.append(var)
            col_entries[var].append((rname, float(val)))
        elif section == "RHS":
            _, rname, val = fields
            rhs[rname] = float(val)
        elif section == "BOUNDS":
            if fields[0] != "BV":
                raise SolveError("only binary (BV) bounds are supported")
            bound_names.append(fields[2])
    names = tuple(bound_names if bound_names else col_order)
    index = {nm: k for k, nm in enumerate(names)}
    obj = np.zeros(len(names))
    row_terms: dict[str, list[tuple[int, float]]] = {nm: [] for nm in row_order}
    for var in col_order:
        if var not in index:
            raise SolveError(f"column {var!r} lacks a bound entry")
        for rname, val in col_entries[var]:
            if rname == "obj":
                obj[index[var]] = val
            else:
                row_terms[rname].append((index[var], val))
    rows = []
    for rname in row_order:
        family = rname.rsplit("_", 1)[0]
        terms = row_terms[rname]
        rows.append(Row(vars=tuple(v for v, _ in terms),
                        coefs=tuple(c for _, c in terms),
                        sense=row_sense[rname], rhs=rhs.get(rname, 0.0), family=family))
    return BipProblem(names=names, rows=tuple(rows), objective=obj,
                      objective_kind="imported",
                      var_meta=tuple(("var",) for _ in names))


def import_solution(p: BipProblem, text: str) -> SolveResult:
    """Read a ``name value`` listing, validate it, and price it.

    Missing variables default to 0; unknown names and constraint
    violations raise. The result reports status ``feasible``.
    """
    index = {nm: k for k, nm in enumerate(p.names)}
    assignment = np.zeros(p.num_vars, dtype=np.int8)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        ln = raw.strip()
        if not ln or ln.startswith("#"):
            continue
        fields = ln.split()
        if len(fields) != 2:
            raise SolveError(f"line {lineno}: expected 'name value'")
        name, sval = fields
        if name not in index:
            raise SolveError(f"line {lineno}: unknown variable {name!r}")
        val = float(sval)
        if abs(val - round(val)) > 1e-6 or round(val) not in (0, 1):
            raise SolveError(f"line {lineno}: value {sval!r} is not binary")
        assignment[index[name]] = int(round(val))
    for k, row in enumerate(p.rows):
        if not row.satisfied(assignment, _FEAS_TOL):
            raise SolutionInfeasibleError(row, row.activity(assignment),
                                          _row_name(k, row.family))
    objective = p.objective_value(assignment)
    return SolveResult(status=SolveStatus.FEASIBLE, objective=objective,
                       assignment=assignment, dual_bound=-math.inf, nodes=0,
                       wall_time=0.0)


def export_solution(p: BipProblem, assignment) -> str:
    """Inverse of import_solution: one ``name value`` line per nonzero."""
    lines = []
    for v in range(p.num_vars):
        val = int(round(float(assignment[v])))
        if val:
            lines.append(f"{p.names[v]} 1")
    return "\n".join(lines) + "\n"
