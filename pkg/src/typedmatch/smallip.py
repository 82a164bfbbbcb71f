"""Exact solver for tiny bounded integer programs.

Supports linear constraints with a linear or quadratic objective over
non-negative integer variables with finite bounds.  The search is plain
depth-first branch-and-bound over the variables in declaration order with
ascending values, interval propagation on the constraints, and an interval
bound on the objective, so the returned optimum is the first one in
lexicographic order: exhaustive grid search with strict improvement finds
the identical assignment.
"""

from __future__ import annotations

import re


class Infeasible(Exception):
    """No assignment satisfies the constraints."""


class BudgetExceeded(RuntimeError):
    """Search-node budget blown; the program is too large for this engine."""


RELATIONS = ("<=", "=", ">=")


class IntegerProgram:
    """Variables with bounds, linear rows, and a linear/quadratic objective.

    Quadratic terms are given directly as weighted products w * x_i * x_j,
    so integer weights suffice for every symmetric integer matrix.
    """

    def __init__(self):
        self.names: list[str] = []
        self.lb: list[int] = []
        self.ub: list[int] = []
        self._index: dict[str, int] = {}
        self.rows: list[tuple[tuple[int, ...], str, int]] = []
        # quadratic rows: (linear vec, qterm list, relation, rhs)
        self.qrows: list[tuple[tuple[int, ...], tuple, str, int]] = []
        self.sense = "min"
        self.c: list[int] = []
        self.qterms: list[tuple[int, int, int]] = []  # (i, j, weight), i <= j

    def add_var(self, name: str, lb: int = 0, ub: int = 0) -> int:
        if name in self._index:
            raise ValueError(f"variable {name} declared twice")
        if not (0 <= lb <= ub):
            raise ValueError(f"variable {name}: need 0 <= lb <= ub, got [{lb},{ub}]")
        self._index[name] = len(self.names)
        self.names.append(name)
        self.lb.append(int(lb))
        self.ub.append(int(ub))
        self.c.append(0)
        return self._index[name]

    def var_index(self, name: str) -> int:
        return self._index[name]

    def _coeff_vector(self, coeffs) -> tuple[int, ...]:
        if isinstance(coeffs, dict):
            vec = [0] * len(self.names)
            for name, w in coeffs.items():
                vec[self._index[name]] += int(w)
            return tuple(vec)
        vec = tuple(int(w) for w in coeffs)
        if len(vec) != len(self.names):
            raise ValueError("coefficient vector length mismatch")
        return vec

    def add_constraint(self, coeffs, rel: str, rhs: int):
        if rel not in RELATIONS:
            raise ValueError(f"unknown relation {rel!r}")
        self.rows.append((self._coeff_vector(coeffs), rel, int(rhs)))

    def _qterm_list(self, quadratic) -> tuple:
        out = []
        for (na, nb), w in quadratic.items():
            i, j = self._index[na], self._index[nb]
            if i > j:
                i, j = j, i
            if w:
                out.append((i, j, int(w)))
        return tuple(out)

    def add_quadratic_constraint(self, coeffs, quadratic, rel: str, rhs: int):
        """Row of the form  linear + sum w*x_i*x_j  <rel>  rhs."""
        if rel not in RELATIONS:
            raise ValueError(f"unknown relation {rel!r}")
        self.qrows.append((self._coeff_vector(coeffs or {}),
                           self._qterm_list(quadratic or {}), rel, int(rhs)))

    def set_objective(self, sense: str, linear=None, quadratic=None):
        """linear: dict or vector; quadratic: dict (name_i, name_j) -> weight
        meaning weight * x_i * x_j added to the objective."""
        if sense not in ("min", "max"):
            raise ValueError(f"unknown sense {sense!r}")
        self.sense = sense
        self.c = list(self._coeff_vector(linear)) if linear is not None \
            else [0] * len(self.names)
        self.qterms = list(self._qterm_list(quadratic)) if quadratic else []

    def evaluate(self, values) -> int:
        total = sum(ci * vi for ci, vi in zip(self.c, values))
        total += sum(w * values[i] * values[j] for (i, j, w) in self.qterms)
        return total


def _term_interval(w, lo, hi):
    corners = (w * lo, w * hi)
    return min(corners), max(corners)


def _qterm_interval(w, la, ha, lb, hb):
    corners = (w * la * lb, w * la * hb, w * ha * lb, w * ha * hb)
    return min(corners), max(corners)


def _qterms_interval(qterms, lo, hi):
    tmin = tmax = 0
    for (i, j, w) in qterms:
        if i == j:
            l, h = lo[i], hi[i]
            sqmin = 0 if l < 0 < h else min(l * l, h * h)
            a, b = _term_interval(w, sqmin, max(l * l, h * h))
        else:
            a, b = _qterm_interval(w, lo[i], hi[i], lo[j], hi[j])
        tmin += a
        tmax += b
    return tmin, tmax


def _propagate(ip: IntegerProgram, lo: list, hi: list) -> bool:
    """Tighten bounds to a fixpoint; False when a row cannot be satisfied.

    Quadratic rows only participate through their reachable interval (exact
    once all variables are fixed), never through bound tightening."""
    for _ in range(100):
        for vec, qterms, rel, rhs in ip.qrows:
            smin = smax = 0
            for w, l, h in zip(vec, lo, hi):
                a, b = _term_interval(w, l, h)
                smin += a
                smax += b
            a, b = _qterms_interval(qterms, lo, hi)
            smin += a
            smax += b
            if rel in ("<=", "=") and smin > rhs:
                return False
            if rel in (">=", "=") and smax < rhs:
                return False
        changed = False
        for vec, rel, rhs in ip.rows:
            mins = []
            maxs = []
            for w, l, h in zip(vec, lo, hi):
                a, b = _term_interval(w, l, h)
                mins.append(a)
                maxs.append(b)
            smin, smax = sum(mins), sum(maxs)
            if rel in ("<=", "=") and smin > rhs:
                return False
            if rel in (">=", "=") and smax < rhs:
                return False
            for j, w in enumerate(vec):
                if w == 0 or lo[j] == hi[j]:
                    continue
                if rel in ("<=", "="):
                    slack = rhs - (smin - mins[j])  # w * x_j <= slack
                    if w > 0:
                        b = slack // w
                        if b < hi[j]:
                            hi[j] = b
                            changed = True
                    else:
                        b = -(slack // (-w))  # ceil(slack / w), w < 0
                        if b > lo[j]:
                            lo[j] = b
                            changed = True
                if rel in (">=", "="):
                    need = rhs - (smax - maxs[j])  # w * x_j >= need
                    if w > 0:
                        b = -((-need) // w)  # ceil(need / w)
                        if b > lo[j]:
                            lo[j] = b
                            changed = True
                    else:
                        b = need // w
                        if b < hi[j]:
                            hi[j] = b
                            changed = True
                if lo[j] > hi[j]:
                    return False
        if not changed:
            return True
    return True


def _objective_interval(ip: IntegerProgram, lo, hi):
    omin = omax = 0
    for w, l, h in zip(ip.c, lo, hi):
        a, b = _term_interval(w, l, h)
        omin += a
        omax += b
    a, b = _qterms_interval(ip.qterms, lo, hi)
    return omin + a, omax + b


def solve(ip: IntegerProgram, node_budget: int = 2_000_000):
    """(optimal value, assignment dict), or raise Infeasible / BudgetExceeded.

    Lexicographically first optimum in declaration order.
    """
    n = len(ip.names)
    best_val = None
    best_asg = None
    nodes = 0

    def rec(idx, lo, hi):
        nonlocal best_val, best_asg, nodes
        nodes += 1
        if nodes > node_budget:
            raise BudgetExceeded(f"exceeded {node_budget} search nodes")
        if not _propagate(ip, lo, hi):
            return
        if best_val is not None:
            omin, omax = _objective_interval(ip, lo, hi)
            if ip.sense == "max" and omax <= best_val:
                return
            if ip.sense == "min" and omin >= best_val:
                return
        while idx < n and lo[idx] == hi[idx]:
            idx += 1
        if idx == n:
            vals = lo
            v = ip.evaluate(vals)
            better = best_val is None or \
                (v > best_val if ip.sense == "max" else v < best_val)
            if better:
                best_val = v
                best_asg = list(vals)
            return
        for v in range(lo[idx], hi[idx] + 1):
            l2 = list(lo)
            h2 = list(hi)
            l2[idx] = h2[idx] = v
            rec(idx + 1, l2, h2)

    rec(0, list(ip.lb), list(ip.ub))
    if best_val is None:
        raise Infeasible("no feasible assignment")
    return best_val, dict(zip(ip.names, best_asg))


def grid_optimum(ip: IntegerProgram):
    """Reference implementation: scan the whole grid in lexicographic order,
    keep the first strict improvement.  Only for tiny programs and tests."""
    n = len(ip.names)
    best = None

    def feasible(vals):
        rows = [(vec, (), rel, rhs) for vec, rel, rhs in ip.rows]
        for vec, qterms, rel, rhs in rows + list(ip.qrows):
            s = sum(w * v for w, v in zip(vec, vals))
            s += sum(w * vals[i] * vals[j] for i, j, w in qterms)
            if rel == "<=" and s > rhs:
                return False
            if rel == ">=" and s < rhs:
                return False
            if rel == "=" and s != rhs:
                return False
        return True

    def rec(idx, vals):
        nonlocal best
        if idx == n:
            if feasible(vals):
                v = ip.evaluate(vals)
                if best is None or \
                        (v > best[0] if ip.sense == "max" else v < best[0]):
                    best = (v, list(vals))
            return
        for x in range(ip.lb[idx], ip.ub[idx] + 1):
            vals.append(x)
            rec(idx + 1, vals)
            vals.pop()

    rec(0, [])
    if best is None:
        raise Infeasible("no feasible assignment")
    return best[0], dict(zip(ip.names, best[1]))


# -- debug text format ----------------------------------------------------

_TERM_RE = re.compile(
    r"([+-])?\s*(\d+)?\s*\*?\s*([A-Za-z_]\w*)(?:\s*\*\s*([A-Za-z_]\w*))?")


def _parse_terms(text, lineno):
    linear: dict[str, int] = {}
    quad: dict[tuple[str, str], int] = {}
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TERM_RE.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"line {lineno}: cannot parse term at {text[pos:]!r}")
        sign = -1 if m.group(1) == "-" else 1
        coef = sign * int(m.group(2) or 1)
        if m.group(4):
            key = tuple(sorted((m.group(3), m.group(4))))
            quad[key] = quad.get(key, 0) + coef
        else:
            linear[m.group(3)] = linear.get(m.group(3), 0) + coef
        pos = m.end()
        while pos < len(text) and text[pos] in " \t":
            pos += 1
    return linear, quad


def parse_program(text: str) -> IntegerProgram:
    """LP-like debug format:

        var x 0 3
        var y 0 2
        max: 2 x + y + x*y
        st: x + y <= 4
        st: x - y >= 0
    """
    ip = IntegerProgram()
    objective = None
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("var "):
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"line {lineno}: expected `var name lb ub`")
            ip.add_var(parts[1], int(parts[2]), int(parts[3]))
        elif line.startswith(("min:", "max:")):
            sense = line[:3]
            objective = (sense, line[4:], lineno)
        elif line.startswith(("st:", "s.t.:")):
            body = line.split(":", 1)[1].strip()
            m = re.match(r"(.*?)(<=|>=|=)\s*(-?\d+)$", body)
            if not m:
                raise ValueError(f"line {lineno}: expected `st: <terms> <rel> <int>`")
            rows.append((m.group(1), m.group(2), int(m.group(3)), lineno))
        else:
            raise ValueError(f"line {lineno}: unrecognized line {line!r}")
    for (terms, rel, rhs, lineno) in rows:
        linear, quad = _parse_terms(terms, lineno)
        if quad:
            raise ValueError(f"line {lineno}: quadratic terms only allowed in the objective")
        ip.add_constraint(linear, rel, rhs)
    if objective is not None:
        sense, body, lineno = objective
        linear, quad = _parse_terms(body, lineno)
        ip.set_objective(sense, linear, quad)
    return ip
