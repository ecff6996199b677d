import itertools

import pytest

from chainpatch.errors import AnalysisError, FeasibilityError
from chainpatch.graphs import (
    ENTRY,
    EXIT,
    Cdg,
    Cfg,
    Chain,
    analyze,
    build_cfg,
    control_dependences,
    enumerate_chains,
    is_valid_chain,
    postdominators,
    to_dot,
)
from chainpatch.minilang import parse


def cfg_of(src, fn="main"):
    p = parse(src)
    return p, build_cfg(p.function_map[fn])


def test_straight_line_cfg():
    _, cfg = cfg_of("func main(){ print(1); }")
    assert cfg.nodes == [ENTRY, 0, EXIT]
    assert cfg.successors(ENTRY) == [0]
    assert cfg.successors(0) == [EXIT]


def test_if_else_is_a_diamond():
    _, cfg = cfg_of("func main(a:int){ if (a > 0) { print(1); } else { print(2); } print(3); }")
    # if=0, then=1, else=2, join=3
    assert cfg.succ[0] == [(1, True), (2, False)]
    assert cfg.successors(1) == [3] and cfg.successors(2) == [3]
    assert len([n for n in cfg.nodes if n >= 0]) == 4


def test_while_has_back_edge_and_entry_exit_edge():
    _, cfg = cfg_of("func main(a:int){ while (a > 0) { a = a - 1; } }")
    assert cfg.succ[0] == [(1, True), (EXIT, False)]
    assert cfg.successors(1) == [0]
    assert EXIT in cfg.successors(ENTRY)


def test_postdominators_simple_shapes():
    _, cfg = cfg_of("func main(){ print(1); print(2); }")
    ip = postdominators(cfg)
    assert ip[0] == 1 and ip[1] == EXIT and ip[EXIT] is None
    _, cfg = cfg_of("func main(a:int){ if (a > 0) { print(1); } else { print(2); } print(3); }")
    assert postdominators(cfg)[0] == 3


def test_postdominators_reject_dead_end():
    cfg = Cfg("g", [ENTRY, 0, 1, EXIT], {ENTRY: [(0, None)], 0: [(1, None), (EXIT, None)],
                                          1: [(1, None)], EXIT: []})
    with pytest.raises(AnalysisError):
        postdominators(cfg)


def _oracle_cd(cfg):
    """Definition check: b depends on a (via label l) iff b postdominates the l-successor
    of a (reflexively) and does not strictly postdominate a. Postdomination by
    enumeration of simple paths to EXIT."""
    def paths(n, seen):
        if n == EXIT:
            yield [n]
            return
        for t in cfg.successors(n):
            if t not in seen:
                for rest in paths(t, seen | {t}):
                    yield [n] + rest

    pdom = {n: set(cfg.nodes) for n in cfg.nodes}
    for n in cfg.nodes:
        for path in paths(n, {n}):
            pdom[n] &= set(path)
    out = {}
    for a in cfg.nodes:
        for s, lab in cfg.succ.get(a, ()):
            for b in cfg.nodes:
                if b in pdom[s] and not (b in pdom[a] and b != a):
                    out.setdefault((a, b), set()).add(lab)
    return {k: frozenset(v) for k, v in out.items()}


def test_if_else_control_dependences():
    _, cfg = cfg_of("func main(a:int){ if (a > 0) { print(1); } else { print(2); } print(3); }")
    cd = control_dependences(cfg, postdominators(cfg))
    stmt_edges = {k: v for k, v in cd.items() if k[0] >= 0}
    assert stmt_edges == {(0, 1): frozenset({True}), (0, 2): frozenset({False})}
    assert cd == _oracle_cd(cfg)


def test_while_self_dependence():
    _, cfg = cfg_of("func main(a:int){ while (a > 0) { a = a - 1; } }")
    cd = control_dependences(cfg, postdominators(cfg))
    assert cd[(0, 1)] == frozenset({True})
    assert cd[(0, 0)] == frozenset({True})
    assert cd == _oracle_cd(cfg)


def test_straight_line_cdg_is_empty():
    p = parse("func main(a:int){ var b:int = a; print(b); }")
    assert len(analyze(p).cdg) == 0


def test_cdg_excludes_entry_and_is_over_predicates():
    p = parse("func f(x:int):int { if (x > 0) { return 1; } return 0; }"
              "func main(a:int){ while (a > 0) { if (a == 3) { print(f(a)); } a = a - 1; } }")
    cdg = analyze(p).cdg
    for a, b in cdg.edges:
        assert a >= 0 and b >= 0
        assert p.is_predicate_sid(a)
        if a == b:
            assert type(p.statements[a]).__name__ == "While"


def _oracle_chains(cdg, length):
    nodes = sorted({n for e in cdg.edges for n in e})
    return sorted(Chain(seq) for seq in itertools.product(nodes, repeat=length + 1)
                  if all((seq[i], seq[i + 1]) in cdg for i in range(length)))


def _cdg(*edges):
    return Cdg({e: frozenset({True}) for e in edges})


def test_enumerate_chains_examples():
    p, a, b, q, s = 0, 1, 2, 3, 4
    assert [c.nodes for c in enumerate_chains(_cdg((p, a), (p, b)), 1)] == [(p, a), (p, b)]
    assert [c.nodes for c in enumerate_chains(_cdg((p, q), (q, a)), 2)] == [(p, q, a)]
    loop = _cdg((p, p), (p, s))
    # by exhaustive edge-path enumeration: (p,p,p) and (p,p,s)
    assert enumerate_chains(loop, 2) == _oracle_chains(loop, 2)
    assert [c.nodes for c in enumerate_chains(loop, 2)] == [(p, p, p), (p, p, s)]


def test_enumerate_chains_cap():
    loop = _cdg((0, 0), (0, 1), (1, 0), (1, 1))
    with pytest.raises(FeasibilityError):
        enumerate_chains(loop, 8, cap=10)
    with pytest.raises(ValueError):
        enumerate_chains(loop, 0)


def test_chain_accessors():
    c = Chain((3, 5, 7))
    assert c.head == 3 and c.tail == 7 and c.length == 2
    assert c.edges == [(3, 5), (5, 7)]
    assert c.is_extension_of(Chain((3, 5)))
    assert not c.is_extension_of(Chain((5, 7)))
    with pytest.raises(ValueError):
        Chain((1,))


def test_chains_extend_shorter_chains():
    p = parse("func main(a:int){ while (a > 0) { if (a == 2) { print(a); } a = a - 1; } }")
    cdg = analyze(p).cdg
    for L in (1, 2, 3):
        shorter = set(enumerate_chains(cdg, L))
        for c in enumerate_chains(cdg, L + 1):
            assert is_valid_chain(c, cdg)
            assert Chain(c.nodes[:-1]) in shorter


def test_dot_dump_mentions_every_statement():
    p = parse("func main(a:int){ if (a > 0) { print(1); } }")
    dot = to_dot(p, analyze(p))
    assert dot.startswith("digraph")
    assert "s0 -> s1 [style=dashed" in dot
