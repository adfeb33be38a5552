"""Self-contained linear programming: bounded-variable simplex and a small
exact integer solver used as an oracle.

The simplex keeps a full dense tableau (basis-inverse times the constraint
matrix) and runs two phases: artificial variables absorb any initial
infeasibility, then the real objective is maximized.  Nonbasic variables
rest at either bound; Dantzig pricing switches to Bland's rule after a run
of degenerate pivots so cycling cannot occur.  Intended for desk-scale
instances; anything bigger should go through the specialized network path
in `evac`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

LE, EQ, GE = "<=", "=", ">="

_AT_LO, _AT_UP, _BASIC = 0, 1, 2

DEFAULT_TOL = 1e-7


class NodeLimitExceeded(RuntimeError):
    """The branch-and-bound oracle hit its node budget."""


@dataclass(frozen=True)
class LPInstance:
    """Sparse maximization LP with per-variable bounds.

    variables: (id, lower, upper) triples; ids are arbitrary hashables.
    rows: (coefficients, sense, rhs) with coefficients keyed by variable id.
    objective: sparse coefficients, sense is always maximize.
    """

    variables: tuple
    rows: tuple
    objective: dict
    label: str = ""

    def __post_init__(self):
        ids = [v[0] for v in self.variables]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate variable ids")
        known = set(ids)
        for vid, lo, hi in self.variables:
            if lo > hi:
                raise ValueError(f"variable {vid!r} has lower > upper bound")
        for coeffs, sense, _ in self.rows:
            if sense not in (LE, EQ, GE):
                raise ValueError(f"unknown row sense {sense!r}")
            for vid in coeffs:
                if vid not in known:
                    raise ValueError(f"row references undeclared variable {vid!r}")
        for vid in self.objective:
            if vid not in known:
                raise ValueError(f"objective references undeclared variable {vid!r}")

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_rows(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class LPSolution:
    status: str
    values: dict
    objective: float
    integral: bool
    iterations: int = 0

    def value(self, vid, default=0.0) -> float:
        return self.values.get(vid, default)


def lp_instance(variables, rows, objective, label="") -> LPInstance:
    return LPInstance(
        variables=tuple((v, float(lo), float(hi)) for v, lo, hi in variables),
        rows=tuple((dict(c), s, float(r)) for c, s, r in rows),
        objective=dict(objective),
        label=label,
    )


def solve_lp(inst: LPInstance, tol: float = DEFAULT_TOL) -> LPSolution:
    """Maximize the instance objective; never raises on bad geometry."""
    n = inst.n_vars
    m = inst.n_rows
    idx = {v[0]: k for k, v in enumerate(inst.variables)}

    lo = np.full(n, -np.inf)
    hi = np.full(n, np.inf)
    for k, (_, l, h) in enumerate(inst.variables):
        lo[k], hi[k] = l, h
        if not (math.isfinite(l) or math.isfinite(h)):
            raise ValueError("free variables are not supported")

    A = np.zeros((m, n))
    b = np.zeros(m)
    senses = []
    for r, (coeffs, sense, rhs) in enumerate(inst.rows):
        for vid, coef in coeffs.items():
            A[r, idx[vid]] = coef
        b[r] = rhs
        senses.append(sense)
    c = np.zeros(n)
    for vid, coef in inst.objective.items():
        c[idx[vid]] = coef

    status, x, iters = _bounded_simplex(A, b, senses, c, lo, hi, tol)
    if status != OPTIMAL:
        return LPSolution(status=status, values={}, objective=float("nan"),
                          integral=False, iterations=iters)
    values = {inst.variables[k][0]: float(x[k]) for k in range(n)}
    obj = float(c @ x)
    integral = bool(np.all(np.abs(x - np.round(x)) <= 1e-7))
    return LPSolution(status=OPTIMAL, values=values, objective=obj,
                      integral=integral, iterations=iters)


def _bounded_simplex(A, b, senses, c, lo, hi, tol):
    m, n = A.shape

    # Slack per row turns every sense into an equality.
    slack_lo = np.zeros(m)
    slack_hi = np.zeros(m)
    for r, sense in enumerate(senses):
        if sense == LE:
            slack_lo[r], slack_hi[r] = 0.0, np.inf
        elif sense == GE:
            slack_lo[r], slack_hi[r] = -np.inf, 0.0
        else:
            slack_lo[r], slack_hi[r] = 0.0, 0.0

    lo_all = np.concatenate([lo, slack_lo])
    hi_all = np.concatenate([hi, slack_hi])
    T = np.hstack([A, np.eye(m)])

    # Nonbasic structurals start at their finite bound; slacks absorb b.
    status = np.full(n + m, _AT_LO, dtype=np.int8)
    nb_val = np.where(np.isfinite(lo_all), lo_all, hi_all)
    status[~np.isfinite(lo_all)] = _AT_UP

    x_nb = nb_val[:n]
    s0 = b - A @ x_nb
    target = np.clip(s0, slack_lo, slack_hi)

    basis = []
    art_cols = []
    art_rows = []
    resid = s0 - target
    need_art = np.abs(resid) > tol
    beta = np.zeros(m)
    for r in range(m):
        if need_art[r]:
            art_rows.append(r)
        else:
            basis.append(n + r)
            beta[r] = s0[r]
            status[n + r] = _BASIC
    if art_rows:
        n_art = len(art_rows)
        art = np.zeros((m, n_art))
        art_lo = np.zeros(n_art)
        art_hi = np.full(n_art, np.inf)
        for k, r in enumerate(art_rows):
            gamma = 1.0 if resid[r] > 0 else -1.0
            art[r, k] = gamma
            col = n + m + k
            art_cols.append(col)
            # slack parked at its nearest feasible bound
            status[n + r] = _AT_LO if target[r] == slack_lo[r] else _AT_UP
            nb_val[n + r] = target[r]
        T = np.hstack([T, art])
        lo_all = np.concatenate([lo_all, art_lo])
        hi_all = np.concatenate([hi_all, art_hi])
        status = np.concatenate([status, np.full(n_art, _BASIC, dtype=np.int8)])
        nb_val = np.concatenate([nb_val, np.zeros(n_art)])
        # rebuild basis/beta in row order
        basis = []
        beta = np.zeros(m)
        k = 0
        for r in range(m):
            if need_art[r]:
                basis.append(n + m + k)
                beta[r] = abs(resid[r])
                k += 1
            else:
                basis.append(n + r)
                beta[r] = s0[r]
        # normalize rows so artificial columns are +e_r
        for k, r in enumerate(art_rows):
            if T[r, n + m + k] < 0:
                T[r, :] *= -1.0
                # flipping the row also flips the slack column sign; beta holds
                # the artificial's value which is already positive

    basis = np.array(basis, dtype=np.int64)
    total_iters = 0

    if art_cols:
        obj1 = np.zeros(T.shape[1])
        obj1[art_cols] = -1.0
        d1 = _reduced_costs(T, obj1, basis)
        st, iters = _iterate(T, beta, basis, status, nb_val, lo_all, hi_all, d1, tol)
        total_iters += iters
        if st != OPTIMAL:
            raise RuntimeError("phase 1 cannot be unbounded")
        art_set = set(art_cols)
        infeas = sum(beta[i] for i in range(m) if basis[i] in art_set)
        if infeas > 1e-6:
            return INFEASIBLE, None, total_iters
        _expel_artificials(T, beta, basis, status, nb_val, art_set, n + m)
        lo_all[art_cols] = 0.0
        hi_all[art_cols] = 0.0
        nb_val[art_cols] = 0.0

    obj2 = np.zeros(T.shape[1])
    obj2[:n] = c
    d2 = _reduced_costs(T, obj2, basis)
    st, iters = _iterate(T, beta, basis, status, nb_val, lo_all, hi_all, d2, tol)
    total_iters += iters
    if st != OPTIMAL:
        return UNBOUNDED, None, total_iters

    x_full = nb_val.copy()
    x_full[basis] = beta
    x = x_full[:n]
    finite_lo = np.isfinite(lo)
    finite_hi = np.isfinite(hi)
    x = np.where(finite_lo, np.maximum(x, lo), x)
    x = np.where(finite_hi, np.minimum(x, hi), x)
    return OPTIMAL, x, total_iters


def _reduced_costs(T, obj, basis):
    d = obj.copy()
    cb = obj[basis]
    nz = np.nonzero(cb)[0]
    if nz.size:
        d -= cb[nz] @ T[nz, :]
        d[basis] = 0.0
    return d


def _expel_artificials(T, beta, basis, status, nb_val, art_set, n_real):
    """Pivot basic artificials (all at zero) out where a real column allows."""
    for i in range(len(basis)):
        if basis[i] in art_set:
            row = T[i, :n_real]
            cand = [
                int(j)
                for j in np.nonzero(np.abs(row) > 1e-9)[0]
                if status[j] != _BASIC
            ]
            if cand:
                out = _pivot(T, beta, basis, status, i, cand[0])
                beta[i] = nb_val[cand[0]]
                status[cand[0]] = _BASIC
                status[out] = _AT_LO
                nb_val[out] = 0.0


def _pivot(T, beta, basis, status, r, q):
    piv = T[r, q]
    T[r, :] /= piv
    col = T[:, q].copy()
    col[r] = 0.0
    nz = np.nonzero(np.abs(col) > 1e-12)[0]
    if nz.size:
        T[nz, :] -= np.outer(col[nz], T[r, :])
    old = basis[r]
    basis[r] = q
    return old


def _iterate(T, beta, basis, status, nb_val, lo_all, hi_all, d, tol):
    """Run bounded-variable simplex to optimality on the current objective.

    `d` is the reduced-cost row for the starting basis and is kept in sync
    through pivots.  Dantzig pricing; Bland's rule after 3(m+n) pivots with
    no objective improvement.
    """
    m, n_total = T.shape
    bland_after = 3 * (m + n_total)
    stall = 0
    iters = 0
    max_iters = 200 * (m + n_total) + 10000

    fixed = (hi_all - lo_all) <= tol

    while True:
        iters += 1
        if iters > max_iters:
            raise RuntimeError("simplex iteration limit exceeded")

        at_lo = (status == _AT_LO) & ~fixed
        at_up = (status == _AT_UP) & ~fixed
        gain = np.where(at_lo, d, np.where(at_up, -d, -np.inf))
        use_bland = stall > bland_after
        if use_bland:
            cand = np.nonzero(gain > tol)[0]
            if cand.size == 0:
                return OPTIMAL, iters
            q = int(cand[0])
        else:
            q = int(np.argmax(gain))
            if gain[q] <= tol:
                return OPTIMAL, iters

        entering_from_lo = status[q] == _AT_LO
        col = T[:, q]
        # movement t >= 0 of the entering variable off its bound
        sign = 1.0 if entering_from_lo else -1.0
        delta = sign * col  # basic values change by -delta * t

        t_best = hi_all[q] - lo_all[q]
        leave = -1  # row index; -1 means bound flip
        if m:
            with np.errstate(divide="ignore", invalid="ignore"):
                drop = np.where(delta > 1e-9, (beta - lo_all[basis]) / delta, np.inf)
                rise = np.where(delta < -1e-9, (beta - hi_all[basis]) / delta, np.inf)
            limits = np.minimum(drop, rise)
            limits[~np.isfinite(limits)] = np.inf
            limits = np.maximum(limits, 0.0)
            if use_bland:
                rmin = np.min(limits)
                if rmin < t_best - 1e-12:
                    ties = np.nonzero(limits <= rmin + 1e-9)[0]
                    leave = int(ties[np.argmin(basis[ties])])
                    t_best = rmin
            else:
                r = int(np.argmin(limits))
                if limits[r] < t_best - 1e-12:
                    rmin = limits[r]
                    ties = np.nonzero(limits <= rmin + 1e-9)[0]
                    leave = int(ties[np.argmax(np.abs(delta[ties]))])
                    t_best = rmin

        if not np.isfinite(t_best):
            return UNBOUNDED, iters

        improve = gain[q] * t_best
        stall = 0 if improve > tol else stall + 1

        if leave < 0:
            # entering variable flips to its opposite bound
            if m:
                beta -= delta * t_best
            status[q] = _AT_UP if entering_from_lo else _AT_LO
            nb_val[q] = hi_all[q] if entering_from_lo else lo_all[q]
            continue

        start = lo_all[q] if entering_from_lo else hi_all[q]
        enter_val = start + sign * t_best
        beta -= delta * t_best
        out = _pivot(T, beta, basis, status, leave, q)
        beta[leave] = enter_val
        status[q] = _BASIC
        # the ratio test drove the leaving variable onto the bound matching
        # the sign of its movement
        if delta[leave] > 0:
            status[out] = _AT_LO
            nb_val[out] = lo_all[out]
        else:
            status[out] = _AT_UP
            nb_val[out] = hi_all[out]
        # keep reduced costs in sync with the new basis
        dq = d[q]
        if abs(dq) > 0:
            d -= dq * T[leave, :]
        d[q] = 0.0


def check_solution(inst: LPInstance, sol: LPSolution, tol: float = 1e-6) -> list[str]:
    """Constraint violations of an optimal solution (empty list when clean)."""
    if sol.status != OPTIMAL:
        return [f"status {sol.status}"]
    bad = []
    for vid, l, h in inst.variables:
        v = sol.value(vid)
        if v < l - tol or v > h + tol:
            bad.append(f"bound {vid!r}: {v} not in [{l}, {h}]")
    for k, (coeffs, sense, rhs) in enumerate(inst.rows):
        lhs = sum(coef * sol.value(vid) for vid, coef in coeffs.items())
        scale = 1.0 + abs(rhs)
        if sense == LE and lhs > rhs + tol * scale:
            bad.append(f"row {k}: {lhs} > {rhs}")
        elif sense == GE and lhs < rhs - tol * scale:
            bad.append(f"row {k}: {lhs} < {rhs}")
        elif sense == EQ and abs(lhs - rhs) > tol * scale:
            bad.append(f"row {k}: {lhs} != {rhs}")
    return bad


def solve_integer(inst: LPInstance, node_limit: int = 20000,
                  tol: float = DEFAULT_TOL) -> LPSolution:
    """Depth-first branch and bound over all variables declared integer.

    Exact for the small instances it is meant to check; raises
    NodeLimitExceeded when the tree grows past `node_limit` relaxations.
    """
    base_bounds = {v[0]: (v[1], v[2]) for v in inst.variables}
    best: LPSolution | None = None
    nodes = 0
    stack: list[dict] = [dict()]

    while stack:
        overrides = stack.pop()
        nodes += 1
        if nodes > node_limit:
            raise NodeLimitExceeded(f"exceeded {node_limit} nodes")
        rel = solve_lp(_with_bounds(inst, base_bounds, overrides), tol=tol)
        if rel.status != OPTIMAL:
            continue
        if best is not None and rel.objective <= best.objective + 1e-9:
            continue
        frac_vid, frac_val = None, 0.0
        worst = 1e-6
        for vid, _, _ in inst.variables:
            v = rel.value(vid)
            f = abs(v - round(v))
            if f > worst:
                worst = f
                frac_vid, frac_val = vid, v
        if frac_vid is None:
            values = {vid: float(round(rel.value(vid))) for vid, _, _ in inst.variables}
            obj = sum(coef * values.get(vid, 0.0) for vid, coef in inst.objective.items())
            cand = LPSolution(status=OPTIMAL, values=values, objective=obj,
                              integral=True, iterations=rel.iterations)
            if best is None or cand.objective > best.objective + 1e-9:
                best = cand
            continue
        lo_b, hi_b = overrides.get(frac_vid, base_bounds[frac_vid])
        down = dict(overrides)
        down[frac_vid] = (lo_b, math.floor(frac_val))
        up = dict(overrides)
        up[frac_vid] = (math.ceil(frac_val), hi_b)
        # explore the side nearer the fractional value first (LIFO stack)
        if frac_val - math.floor(frac_val) > 0.5:
            stack.append(down)
            stack.append(up)
        else:
            stack.append(up)
            stack.append(down)

    if best is None:
        return LPSolution(status=INFEASIBLE, values={}, objective=float("nan"),
                          integral=False)
    return best


def _with_bounds(inst: LPInstance, base, overrides) -> LPInstance:
    if not overrides:
        return inst
    variables = []
    for vid, lo, hi in inst.variables:
        if vid in overrides:
            lo, hi = overrides[vid]
            lo = max(lo, base[vid][0])
            hi = min(hi, base[vid][1])
        variables.append((vid, lo, hi))
    return LPInstance(variables=tuple(variables), rows=inst.rows,
                      objective=inst.objective, label=inst.label)


def write_lp_text(inst: LPInstance) -> str:
    """Debug dump in LP text format (columns in declaration order)."""
    names = {v[0]: f"v{k}" for k, v in enumerate(inst.variables)}

    def term(coeffs):
        parts = []
        for vid, _, _ in inst.variables:
            if vid in coeffs and coeffs[vid] != 0:
                coef = coeffs[vid]
                sign = "+" if coef >= 0 else "-"
                parts.append(f"{sign} {abs(coef):g} {names[vid]}")
        return " ".join(parts) if parts else "0"

    lines = ["Maximize", f" obj: {term(inst.objective)}", "Subject To"]
    for k, (coeffs, sense, rhs) in enumerate(inst.rows):
        op = {"<=": "<=", ">=": ">=", "=": "="}[sense]
        lines.append(f" r{k}: {term(coeffs)} {op} {rhs:g}")
    lines.append("Bounds")
    for vid, lo, hi in inst.variables:
        lines.append(f" {lo:g} <= {names[vid]} <= {hi:g}")
    lines.append("End")
    return "\n".join(lines) + "\n"
