"""Brute-force ground truth: QBF evaluation, lexicographically maximal
satisfying assignments, and a bisimulation checker.

Everything here is deliberately simple and exhaustive; the value of this
module is that it is independent of (and obviously simpler than) the code
it is used to validate.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

from .formula import And, Atom, Formula, Know, Not, UpdateBox, parse_formula
from .kripke import EpistemicModel


class OracleError(ValueError):
    """Invalid oracle input."""


LEXMAX_VAR_LIMIT = 20


# ---------------------------------------------------------------------------
# Quantified boolean formulas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Qbf:
    """Prenex QBF: an ordered quantifier prefix over distinct variables and
    a quantifier-free propositional matrix using only those variables."""

    prefix: tuple[tuple[str, str], ...]  # (quantifier 'e'|'a', variable)
    matrix: Formula
    dummies: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        seen = set()
        for q, x in self.prefix:
            if q not in ("e", "a"):
                raise OracleError(f"bad quantifier {q!r}")
            if x in seen:
                raise OracleError(f"duplicate prefix variable {x!r}")
            seen.add(x)
        for node in _prop_nodes(self.matrix):
            if type(node) is Atom and node.prop not in seen:
                raise OracleError(f"matrix uses unquantified variable {node.prop!r}")

    def variables(self) -> tuple[str, ...]:
        return tuple(x for _, x in self.prefix)

    def is_alternating(self) -> bool:
        """Strictly alternating prefix starting existential, even length."""
        if len(self.prefix) % 2 != 0 or not self.prefix:
            return False
        return all(
            q == ("e" if i % 2 == 0 else "a") for i, (q, _) in enumerate(self.prefix)
        )


def _prop_nodes(f: Formula):
    stack = [f]
    while stack:
        node = stack.pop()
        t = type(node)
        if t is Atom:
            yield node
        elif t is Not:
            stack.append(node.sub)
        elif t is And:
            stack.append(node.left)
            stack.append(node.right)
        else:
            raise OracleError("QBF matrices must be propositional")


def eval_propositional(f: Formula, assignment: dict[str, bool]) -> bool:
    """Evaluate a propositional formula under a total assignment."""
    t = type(f)
    if t is Atom:
        try:
            return assignment[f.prop]
        except KeyError:
            raise OracleError(f"free variable {f.prop!r}") from None
    if t is Not:
        return not eval_propositional(f.sub, assignment)
    if t is And:
        return eval_propositional(f.left, assignment) and eval_propositional(
            f.right, assignment
        )
    raise OracleError("not a propositional formula")


def qbf_eval(q: Qbf) -> bool:
    """Truth of a prenex QBF by full recursive expansion."""

    def rec(i: int, assignment: dict[str, bool]) -> bool:
        if i == len(q.prefix):
            return eval_propositional(q.matrix, assignment)
        quant, var = q.prefix[i]
        results = (
            rec(i + 1, {**assignment, var: value}) for value in (True, False)
        )
        return any(results) if quant == "e" else all(results)

    return rec(0, {})


_dummy_counter = itertools.count()


def normalize_alternating(q: Qbf) -> Qbf:
    """Equivalent QBF whose prefix strictly alternates starting with an
    existential and has even length, obtained by inserting fresh dummy
    variables that the matrix never mentions."""
    out: list[tuple[str, str]] = []
    new_dummies = set(q.dummies)
    want = "e"
    for quant, var in q.prefix:
        if quant != want:
            dummy = f"_d{next(_dummy_counter)}"
            new_dummies.add(dummy)
            out.append((want, dummy))
            want = "a" if want == "e" else "e"
        out.append((quant, var))
        want = "a" if want == "e" else "e"
    if not out or len(out) % 2 != 0:
        dummy = f"_d{next(_dummy_counter)}"
        new_dummies.add(dummy)
        out.append((want, dummy))
        if len(out) % 2 != 0:  # empty input prefix: add the leading pair
            dummy2 = f"_d{next(_dummy_counter)}"
            new_dummies.add(dummy2)
            out.append(("a" if want == "e" else "e", dummy2))
    return Qbf(tuple(out), q.matrix, frozenset(new_dummies))


# ---------------------------------------------------------------------------
# Lexicographically maximal satisfying assignment
# ---------------------------------------------------------------------------

def lexmax_sat(f: Formula, ordering: list[str] | tuple[str, ...]) -> dict[str, bool] | None:
    """The satisfying assignment that is maximal in the lexicographic order
    with the first variable most significant, or ``None`` when unsatisfiable.

    Exhaustive: assignments are enumerated from all-true downward and the
    first hit wins, so the variable count is capped to keep this obviously
    terminating at small cost.
    """
    ordering = list(ordering)
    if len(set(ordering)) != len(ordering):
        raise OracleError("ordering contains duplicates")
    if len(ordering) > LEXMAX_VAR_LIMIT:
        raise OracleError(
            f"lexmax_sat is capped at {LEXMAX_VAR_LIMIT} variables, got {len(ordering)}"
        )
    allowed = set(ordering)
    for node in _prop_nodes(f):
        if type(node) is Atom and node.prop not in allowed:
            raise OracleError(f"formula uses unknown variable {node.prop!r}")
    for bits in itertools.product((True, False), repeat=len(ordering)):
        assignment = dict(zip(ordering, bits))
        if eval_propositional(f, assignment):
            return assignment
    return None


# ---------------------------------------------------------------------------
# Bisimulation (partition refinement on the disjoint union)
# ---------------------------------------------------------------------------

def bisimilar(m1: EpistemicModel, w1: str, m2: EpistemicModel, w2: str) -> bool:
    """Whether the two pointed models are bisimilar.

    Refines the partition of the disjoint union of both world sets, starting
    from valuation signatures and splitting by the sets of successor blocks
    per agent until stable; the pointed worlds are bisimilar exactly when
    they end in the same block.
    """
    if w1 not in m1.worlds or w2 not in m2.worlds:
        raise OracleError("pointed world not in its model")
    agents = sorted(set(m1.relations) | set(m2.relations))
    worlds = [("1", w) for w in sorted(m1.worlds)] + [("2", w) for w in sorted(m2.worlds)]

    def model_of(tag: str) -> EpistemicModel:
        return m1 if tag == "1" else m2

    block: dict[tuple[str, str], int] = {}
    signatures: dict[frozenset[str], int] = {}
    for tag, w in worlds:
        sig = model_of(tag).valuation[w]
        if sig not in signatures:
            signatures[sig] = len(signatures)
        block[(tag, w)] = signatures[sig]

    while True:
        keys: dict[tuple, int] = {}
        new_block: dict[tuple[str, str], int] = {}
        for tag, w in worlds:
            m = model_of(tag)
            succ = tuple(
                frozenset(block[(tag, v)] for v in m.neighbors(agent, w))
                for agent in agents
            )
            key = (block[(tag, w)], succ)
            if key not in keys:
                keys[key] = len(keys)
            new_block[(tag, w)] = keys[key]
        if new_block == block:
            break
        block = new_block
    return block[("1", w1)] == block[("2", w2)]


# ---------------------------------------------------------------------------
# QBF text and QDIMACS input
# ---------------------------------------------------------------------------

_PREFIX_LINE = re.compile(r"^\s*prefix\s*:\s*(.*)$", re.IGNORECASE)
_MATRIX_LINE = re.compile(r"^\s*matrix\s*:\s*(.*)$", re.IGNORECASE)


def parse_qbf_text(text: str) -> Qbf:
    """Parse the two-line QBF format::

        prefix: e x1 a x2
        matrix: (x1 | x2)
    """
    prefix_part = matrix_part = None
    for line in text.splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        m = _PREFIX_LINE.match(line)
        if m:
            prefix_part = m.group(1)
            continue
        m = _MATRIX_LINE.match(line)
        if m:
            matrix_part = m.group(1)
            continue
        raise OracleError(f"unrecognised QBF line: {line!r}")
    if prefix_part is None or matrix_part is None:
        raise OracleError("QBF text needs both a prefix and a matrix line")
    tokens = prefix_part.split()
    if len(tokens) % 2 != 0:
        raise OracleError("prefix must be quantifier/variable pairs")
    prefix = []
    for i in range(0, len(tokens), 2):
        quant = tokens[i].lower()
        if quant not in ("e", "a"):
            raise OracleError(f"bad quantifier {tokens[i]!r}")
        prefix.append((quant, tokens[i + 1]))
    matrix = parse_formula(matrix_part)
    return Qbf(tuple(prefix), matrix)


def render_qbf_text(q: Qbf) -> str:
    from .formula import render_formula

    prefix = " ".join(f"{quant} {var}" for quant, var in q.prefix)
    return f"prefix: {prefix}\nmatrix: {render_formula(q.matrix)}\n"


def load_qdimacs(text: str) -> Qbf:
    """Import a QDIMACS file: numbered variables become ``x<N>``, free
    variables are bound by outermost existentials, and the clause list
    becomes a conjunction of disjunctions."""
    from .formula import lor

    prefix: list[tuple[str, str]] = []
    clauses: list[list[int]] = []
    declared: set[int] = set()
    nvars = 0
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise OracleError(f"bad problem line: {line!r}")
            nvars = int(parts[2])
            continue
        if line.startswith(("e", "a")):
            parts = line.split()
            quant = parts[0]
            for tok in parts[1:]:
                n = int(tok)
                if n == 0:
                    break
                prefix.append((quant, f"x{n}"))
                declared.add(n)
            continue
        lits = [int(tok) for tok in line.split()]
        if lits and lits[-1] == 0:
            lits = lits[:-1]
        if lits:
            clauses.append(lits)
    free = sorted(
        {abs(l) for clause in clauses for l in clause if abs(l) not in declared}
        | {n for n in range(1, nvars + 1) if n not in declared}
    )
    prefix = [("e", f"x{n}") for n in free] + prefix
    if not clauses:
        matrix: Formula = Not(And(Atom("x1"), Not(Atom("x1"))))
        if not prefix:
            prefix = [("e", "x1")]
    else:
        clause_formulas = []
        for clause in clauses:
            parts = [
                Not(Atom(f"x{abs(l)}")) if l < 0 else Atom(f"x{abs(l)}")
                for l in clause
            ]
            out = parts[0]
            for p in parts[1:]:
                out = lor(out, p)
            clause_formulas.append(out)
        matrix = clause_formulas[0]
        for c in clause_formulas[1:]:
            matrix = And(matrix, c)
    return Qbf(tuple(prefix), matrix)
