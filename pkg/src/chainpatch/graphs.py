"""Control-flow graphs, postdominators, control dependence and static chains.

CFG nodes are StatementIds; the synthetic ENTRY and EXIT nodes use negative ids.
Control dependence follows Ferrante, Ottenstein and Warren: for every CFG edge
(a, b) walk the postdominator tree from b up to (excluding) ipdom(a), marking
each visited node as control dependent on a.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from chainpatch.errors import AnalysisError, FeasibilityError
from chainpatch.minilang import nodes as ast

ENTRY = -1
EXIT = -2

MAX_STATIC_CHAINS = 100_000


@dataclass
class Cfg:
    name: str
    nodes: list
    succ: dict  # node -> list of (target, label); label is True/False on predicate edges
    entry: int = ENTRY
    exit: int = EXIT

    def successors(self, n) -> list:
        return [t for t, _ in self.succ.get(n, ())]

    def predecessors(self) -> dict:
        pred = {n: [] for n in self.nodes}
        for n in self.nodes:
            for t, _ in self.succ.get(n, ()):
                pred[t].append(n)
        return pred


def build_cfg(function: ast.FunctionDecl) -> Cfg:
    succ = {ENTRY: [], EXIT: []}
    has_loop = False

    def lower_block(block, follow):
        nxt = follow
        for stmt in reversed(block):
            nxt = lower_stmt(stmt, nxt)
        return nxt

    def lower_stmt(stmt, follow):
        nonlocal has_loop
        s = stmt.sid
        if isinstance(stmt, ast.If):
            t = lower_block(stmt.then, follow)
            f = lower_block(stmt.orelse, follow)
            succ[s] = [(t, True), (f, False)]
        elif isinstance(stmt, ast.While):
            has_loop = True
            body = lower_block(stmt.body, s)
            succ[s] = [(body, True), (follow, False)]
        elif isinstance(stmt, ast.Return):
            succ[s] = [(EXIT, None)]
        else:
            succ[s] = [(follow, None)]
        return s

    first = lower_block(function.body, EXIT)
    succ[ENTRY].append((first, None))
    if has_loop and first != EXIT:
        # lets ENTRY reach EXIT without passing the body, as FOW preprocessing does
        succ[ENTRY].append((EXIT, None))
    nodes = [ENTRY] + sorted(s for s in succ if s >= 0) + [EXIT]
    return Cfg(function.name, nodes, succ)


def postdominators(cfg: Cfg) -> dict:
    """Immediate postdominator of every node; EXIT maps to None.

    Cooper-Harvey-Kennedy iteration on the reversed graph.
    """
    pred = cfg.predecessors()
    # postorder of the reverse graph rooted at EXIT
    order, seen = [], {cfg.exit}
    stack = [(cfg.exit, iter(pred[cfg.exit]))]
    while stack:
        node, it = stack[-1]
        for p in it:
            if p not in seen:
                seen.add(p)
                stack.append((p, iter(pred[p])))
                break
        else:
            stack.pop()
            order.append(node)
    missing = [n for n in cfg.nodes if n not in seen]
    if missing:
        raise AnalysisError(f"nodes {missing} in {cfg.name!r} cannot reach EXIT")

    number = {n: i for i, n in enumerate(order)}
    rpo = list(reversed(order))
    ipdom = {cfg.exit: cfg.exit}

    def intersect(a, b):
        while a != b:
            while number[a] < number[b]:
                a = ipdom[a]
            while number[b] < number[a]:
                b = ipdom[b]
        return a

    changed = True
    while changed:
        changed = False
        for n in rpo:
            if n == cfg.exit:
                continue
            new = None
            for s in cfg.successors(n):
                if s in ipdom:
                    new = s if new is None else intersect(s, new)
            if ipdom.get(n) != new:
                ipdom[n] = new
                changed = True
    ipdom[cfg.exit] = None
    return ipdom


def control_dependences(cfg: Cfg, ipdom: dict) -> dict:
    """Map (controller, dependent) -> frozenset of branch labels."""
    deps = defaultdict(set)
    for a in cfg.nodes:
        stop = ipdom[a]
        for b, label in cfg.succ.get(a, ()):
            runner = b
            while runner != stop:
                deps[(a, runner)].add(label)
                runner = ipdom[runner]
    return {k: frozenset(v) for k, v in deps.items()}


@dataclass
class Cdg:
    """Program-wide control dependence graph over predicate statements."""

    labels: dict  # (s1, s2) -> frozenset of outcomes of s1 under which s2 runs
    parents: dict = field(init=False)
    children: dict = field(init=False)

    def __post_init__(self):
        parents, children = defaultdict(list), defaultdict(list)
        for (a, b), lab in sorted(self.labels.items()):
            parents[b].append((a, lab))
            children[a].append(b)
        self.parents = {k: tuple(v) for k, v in parents.items()}
        self.children = {k: tuple(v) for k, v in children.items()}

    @property
    def edges(self) -> list:
        return sorted(self.labels)

    def __contains__(self, edge) -> bool:
        return edge in self.labels

    def __len__(self) -> int:
        return len(self.labels)


@dataclass
class StaticAnalysis:
    cfgs: dict  # function name -> Cfg
    ipdoms: dict
    cdg: Cdg


def analyze(program) -> StaticAnalysis:
    cfgs, ipdoms, labels = {}, {}, {}
    for f in program.functions:
        cfg = build_cfg(f)
        pd = postdominators(cfg)
        cfgs[f.name], ipdoms[f.name] = cfg, pd
        for (a, b), lab in control_dependences(cfg, pd).items():
            if a >= 0 and b >= 0:
                labels[(a, b)] = lab
    return StaticAnalysis(cfgs, ipdoms, Cdg(labels))


@dataclass(frozen=True, order=True)
class Chain:
    nodes: tuple

    def __post_init__(self):
        if len(self.nodes) < 2:
            raise ValueError("a chain has at least two nodes")

    @property
    def head(self) -> int:
        return self.nodes[0]

    @property
    def tail(self) -> int:
        return self.nodes[-1]

    @property
    def length(self) -> int:
        return len(self.nodes) - 1

    @property
    def edges(self) -> list:
        return list(zip(self.nodes, self.nodes[1:]))

    def is_extension_of(self, other: "Chain") -> bool:
        return len(self.nodes) > len(other.nodes) and self.nodes[:len(other.nodes)] == other.nodes

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.nodes)) + ")"


def enumerate_chains(cdg: Cdg, length: int, cap: int = MAX_STATIC_CHAINS) -> list:
    """All chains with exactly ``length`` Cdg edges, sorted by node sequence."""
    if length < 1:
        raise ValueError("chain length must be positive")
    out = []

    def extend(path):
        if len(path) == length + 1:
            out.append(Chain(tuple(path)))
            if len(out) > cap:
                raise FeasibilityError(f"more than {cap} static chains of length {length}")
            return
        for nxt in cdg.children.get(path[-1], ()):
            path.append(nxt)
            extend(path)
            path.pop()

    for start in sorted(cdg.children):
        extend([start])
    out.sort()
    return out


def is_valid_chain(chain: Chain, cdg: Cdg) -> bool:
    return all(e in cdg for e in chain.edges)


def to_dot(program, analysis: StaticAnalysis) -> str:
    """CFG clusters per function plus dashed control-dependence edges."""

    def name(fn, n):
        return {ENTRY: f'"{fn}:ENTRY"', EXIT: f'"{fn}:EXIT"'}.get(n, f"s{n}")

    lines = ["digraph program {", "  node [shape=box, fontname=monospace];"]
    for fn, cfg in analysis.cfgs.items():
        lines.append(f'  subgraph "cluster_{fn}" {{')
        lines.append(f'    label="{fn}";')
        for n in cfg.nodes:
            if n >= 0:
                info = program.statement_table[n]
                shape = ", shape=diamond" if info.kind in ("if", "while") else ""
                lines.append(f'    s{n} [label="{n}: {info.kind} @{info.line}"{shape}];')
            else:
                lines.append(f"    {name(fn, n)} [shape=oval];")
        for n in cfg.nodes:
            for t, lab in cfg.succ.get(n, ()):
                attr = "" if lab is None else f' [label="{"T" if lab else "F"}"]'
                lines.append(f"    {name(fn, n)} -> {name(fn, t)}{attr};")
        lines.append("  }")
    for a, b in analysis.cdg.edges:
        lines.append(f"  s{a} -> s{b} [style=dashed, color=blue, constraint=false];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def reachable(succ_fn, start) -> set:
    seen, todo = {start}, [start]
    while todo:
        n = todo.pop()
        for m in succ_fn(n):
            if m not in seen:
                seen.add(m)
                todo.append(m)
    return seen


def chain_statements(chains: Iterable[Chain]) -> list:
    return sorted({s for c in chains for s in c.nodes})

