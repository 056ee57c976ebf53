"""File formats: instances, rules, measures, budgets; exact round-trips.

Rationals serialize as "num/den" strings so files stay exact; decimal
renderings are added next to values only for human eyes.  Function fields
of instance files are either named built-ins ("zero", "const:c", "coord",
"sup", "power:a,q,lambda") or small arithmetic expressions in t, x_current
and x_sup, evaluated in exact rational arithmetic.
"""

from __future__ import annotations

import ast
import hashlib
import json
import math
import os
from fractions import Fraction
from typing import Dict, Optional, Union

from .errors import NodeNotInTree
from .lattice import TreeInstance, Word, build_tree
from .measures import StoppingMeasure
from .rules import RandomizedStoppingRule, rule_from_map
from .xreal import Ext, as_fraction


# ---------------------------------------------------------------------------
# rational rendering
# ---------------------------------------------------------------------------

def fmt_rational(x) -> str:
    x = Ext.parse(x)
    if x.is_pos_inf:
        return "inf"
    if x.is_neg_inf:
        return "-inf"
    f = x.fraction()
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def fmt_value(x) -> str:
    """Exact rational plus a decimal for humans, e.g. "3/2 (1.5)"."""
    x = Ext.parse(x)
    if not x.is_finite:
        return fmt_rational(x)
    return f"{fmt_rational(x)} ({float(x)})"


# ---------------------------------------------------------------------------
# the expression mini-language
# ---------------------------------------------------------------------------

_ALLOWED_NAMES = ("t", "x_current", "x_sup")
_BINOPS = {ast.Add: lambda a, b: a + b, ast.Sub: lambda a, b: a - b,
           ast.Mult: lambda a, b: a * b, ast.Div: lambda a, b: a / b,
           ast.Pow: None}


def _eval_node(node, env):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body, env)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ValueError(f"non-numeric literal {node.value!r}")
        if isinstance(node.value, int):
            return Fraction(node.value)
        return Fraction(str(node.value))  # decimal literals parse exactly
    if isinstance(node, ast.Name):
        if node.id not in env:
            raise ValueError(f"unknown name {node.id!r}; use one of {_ALLOWED_NAMES}")
        return env[node.id]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval_node(node.operand, env)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        a = _eval_node(node.left, env)
        b = _eval_node(node.right, env)
        if isinstance(node.op, ast.Pow):
            if b.denominator != 1:
                raise ValueError("only integer exponents are supported")
            return a ** b.numerator
        return _BINOPS[type(node.op)](a, b)
    raise ValueError(f"unsupported expression element {ast.dump(node)}")


def _x_parts(prefix):
    """Current value and running sup of the first state coordinate."""
    scalars = [p[0] if isinstance(p, tuple) else p for p in prefix]
    return scalars[-1], max(scalars)


def parse_function(spec) -> tuple:
    """Turn a function field into (callable, canonical spec string)."""
    if isinstance(spec, (int, float)):
        spec = fmt_rational(as_fraction(spec))
    spec = spec.strip()
    low = spec.lower()
    if low == "zero":
        return (lambda t, prefix: Fraction(0)), "zero"
    if low == "coord":
        return (lambda t, prefix: _x_parts(prefix)[0]), "coord"
    if low == "sup":
        return (lambda t, prefix: _x_parts(prefix)[1]), "sup"
    if low.startswith("const:"):
        c = as_fraction(spec.split(":", 1)[1])
        return (lambda t, prefix: c), f"const:{fmt_rational(c)}"
    if low.startswith("power:"):
        a_s, q_s, lam_s = spec.split(":", 1)[1].split(",")
        a, q, lam = as_fraction(a_s), as_fraction(q_s), as_fraction(lam_s)

        def moment_rate(t, prefix, a=a, q=q, lam=lam):
            # integrand a*q*t^(q-1) + lam accrues a*((t0+tau)^q - t0^q) + lam*tau
            t = as_fraction(t)
            if (q - 1).denominator == 1:
                power = t ** (q - 1).numerator
            else:
                power = as_fraction(math.pow(float(t), float(q - 1)))
            return a * q * power + lam

        return moment_rate, f"power:{fmt_rational(a)},{fmt_rational(q)},{fmt_rational(lam)}"
    tree_ast = ast.parse(spec, mode="eval")

    def expr(t, prefix, _ast=tree_ast):
        cur, sup = _x_parts(prefix)
        env = {"t": as_fraction(t), "x_current": cur, "x_sup": sup}
        return _eval_node(_ast, env)

    expr(Fraction(0), (Fraction(0),))  # validate eagerly on a dummy point
    return expr, spec


# ---------------------------------------------------------------------------
# increment words
# ---------------------------------------------------------------------------

def parse_word(tree: TreeInstance, text: str) -> Word:
    """Word strings: digits index branches; "+"/"-" alias 0/1 on binary trees."""
    if text in ("", "root"):
        return ()
    if set(text) <= {"+", "-"}:
        word = tuple(0 if ch == "+" else 1 for ch in text)
    elif text.isdigit():
        word = tuple(int(ch) for ch in text)
    else:
        raise NodeNotInTree(f"cannot parse word {text!r}")
    tree.check_word(word)
    return word


def word_str(tree: TreeInstance, word: Word) -> str:
    binary = all(len(level) == 2 for level in tree.branching)
    if binary:
        return "".join("+" if j == 0 else "-" for j in word)
    return "".join(str(j) for j in word)


# ---------------------------------------------------------------------------
# instance files
# ---------------------------------------------------------------------------

def load_instance(source: Union[str, dict]) -> TreeInstance:
    raw = _read_obj(source)
    canon: dict = {}
    t0 = as_fraction(raw.get("t0", 0))
    dt = as_fraction(raw["dt"])
    depth = int(raw["depth"])
    canon["t0"], canon["dt"], canon["depth"] = fmt_rational(t0), fmt_rational(dt), depth

    def level_of(entries):
        out = []
        for e in entries:
            w = e["w"]
            w = [as_fraction(c) for c in w] if isinstance(w, list) else as_fraction(w)
            out.append((as_fraction(e["p"]), w))
        return out

    braw = raw["branching"]
    if braw and isinstance(braw[0], list):
        branching = [level_of(level) for level in braw]
        canon["branching"] = [[_branch_json(p, w) for p, w in level]
                              for level in branching]
    else:
        branching = level_of(braw)
        canon["branching"] = [_branch_json(p, w) for p, w in branching]

    hist = raw.get("x0_history", [0])
    history = [[as_fraction(c) for c in x] if isinstance(x, list) else as_fraction(x)
               for x in hist]
    canon["x0_history"] = [_vec_json(x) for x in history]

    fns = {}
    for key, default in (("drift", "zero"), ("diffusion", "const:1"),
                         ("f", "zero"), ("pi", "zero")):
        fn, spec = parse_function(raw.get(key, default))
        fns[key] = fn
        canon[key] = spec

    cons = raw.get("constraints", {})
    ineq, eq = [], []
    canon_cons = {"ineq": [], "eq": []}
    for item in cons.get("ineq", []):
        g, g_spec = parse_function(item["g"])
        y = Ext.parse(item["y"])
        ineq.append((g, y))
        canon_cons["ineq"].append({"g": g_spec, "y": fmt_rational(y)})
    for item in cons.get("eq", []):
        h, h_spec = parse_function(item["h"])
        z = Ext.parse(item["z"])
        eq.append((h, z))
        canon_cons["eq"].append({"h": h_spec, "z": fmt_rational(z)})
    canon["constraints"] = canon_cons

    w_history = tuple(as_fraction(v) for v in raw.get("w_history", []))
    canon["w_history"] = [fmt_rational(v) for v in w_history]

    return build_tree(
        t0=t0, dt=dt, depth=depth, branching=branching, history=history,
        drift=fns["drift"], diffusion=fns["diffusion"],
        reward=fns["f"], terminal=fns["pi"],
        inequalities=ineq, equalities=eq, w_history=w_history, source=canon)


def _branch_json(p, w):
    wj = _vec_json(w) if isinstance(w, (list, tuple)) else fmt_rational(w)
    return {"p": fmt_rational(p), "w": wj}


def _vec_json(x):
    if isinstance(x, (list, tuple)):
        return [fmt_rational(c) for c in x]
    return fmt_rational(x)


def dump_instance(tree: TreeInstance) -> dict:
    if tree.source is None:
        raise ValueError("instance was built from Python callables and has "
                         "no file representation")
    return dict(tree.source)


def instance_hash(source: Union[TreeInstance, dict]) -> str:
    if isinstance(source, TreeInstance):
        source = dump_instance(source)
    payload = json.dumps(source, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


# ---------------------------------------------------------------------------
# rule / measure / budget files
# ---------------------------------------------------------------------------

def load_rule(tree: TreeInstance, source: Union[str, dict]) -> RandomizedStoppingRule:
    raw = _read_obj(source)
    q = {parse_word(tree, k): as_fraction(v) for k, v in raw.items()}
    return rule_from_map(tree, q)


def dump_rule(tree: TreeInstance, rule: RandomizedStoppingRule) -> dict:
    return {word_str(tree, w): fmt_rational(rule.prob(w)) for w in tree.nodes()}


def load_measure(tree: TreeInstance, source: Union[str, dict]) -> StoppingMeasure:
    raw = _read_obj(source)
    s: Dict[Word, Fraction] = {}
    u: Dict[Word, Fraction] = {}
    for key, entry in raw.items():
        w = parse_word(tree, key)
        s[w] = as_fraction(entry.get("s", 0))
        u[w] = as_fraction(entry.get("u", 0))
    measure = StoppingMeasure(s=s, u=u)
    measure.validate(tree)
    return measure


def dump_measure(tree: TreeInstance, measure: StoppingMeasure) -> dict:
    return {word_str(tree, w): {"s": fmt_rational(measure.stop(w)),
                                "u": fmt_rational(measure.cont(w))}
            for w in tree.nodes()}


def load_budgets(tree: TreeInstance, source: Union[str, dict]):
    from .lattice import BudgetVector
    raw = _read_obj(source)
    return BudgetVector(ys=tuple(Ext.parse(v) for v in raw.get("ineq", [])),
                        zs=tuple(Ext.parse(v) for v in raw.get("eq", [])))


def dump_budgets(budgets) -> dict:
    return {"ineq": [fmt_rational(y) for y in budgets.ys],
            "eq": [fmt_rational(z) for z in budgets.zs]}


# ---------------------------------------------------------------------------
# plumbing
# ---------------------------------------------------------------------------

def _read_obj(source: Union[str, dict]) -> dict:
    if isinstance(source, dict):
        return source
    with open(source) as fh:
        return json.load(fh)


def write_json_atomic(path: str, obj) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
