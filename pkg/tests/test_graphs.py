"""Tests of the CDFG and callgraph analysis"""

import itertools
from dataclasses import replace

import numpy as np
import pytest

from lib.exceptions import EmptyFunction, UnknownTop
from lib.graphs import (
    CallGraphFeatures,
    Cdfg,
    FunctionSummary,
    build_callgraph,
    build_cdfg,
    callgraph_features,
    cdfg_features,
    count_fcus,
    dump_graphs,
    longest_path,
)
from lib.irparser import parse_module

DIAMOND = """\
define i32 @d(i1 %c, i32 %a) {
entry:
  %x = add i32 %a, 1
  br i1 %c, label %t, label %f

t:
  br label %merge

f:
  br label %merge

merge:
  %y = add i32 %x, 2
  ret i32 %y
}
"""

CHAIN = """\
define i32 @c(i32 %a) {
entry:
  %x = add i32 %a, 1
  br label %mid

mid:
  %y = add i32 %x, 1
  br label %last

last:
  %z = add i32 %y, 1
  ret i32 %z
}
"""

LOOP = """\
define void @l(i32 %n) {
entry:
  br label %header

header:
  %i = phi i32 [ 0, %entry ], [ %next, %body ]
  %more = icmp slt i32 %i, %n
  br i1 %more, label %body, label %exit

body:
  %next = add i32 %i, 1
  br label %header

exit:
  ret void
}
"""


def cdfg_of(text, name):
    return build_cdfg(parse_module(text).get(name))


def brute_force_longest(nodes, edges):
    "Longest simple path in nodes by enumerating all of them"
    successors = {node: [to for frm, to in edges if frm == node] for node in nodes}
    best = 0

    def walk(node, seen):
        nonlocal best
        best = max(best, len(seen))
        for child in successors[node]:
            if child not in seen:
                walk(child, seen | {child})

    for node in nodes:
        walk(node, {node})
    return best


class TestCdfg:
    def test_single_block(self):
        graph = cdfg_of("define void @f() {\n  ret void\n}\n", "f")
        assert graph.nodes == ("entry",)
        assert graph.control_edges == ()
        assert graph.data_edges == ()

    def test_diamond(self):
        graph = cdfg_of(DIAMOND, "d")
        assert len(graph.nodes) == 4
        assert len(graph.control_edges) == 4
        (edge,) = graph.data_edges
        assert (edge.def_block, edge.use_block, edge.value_id, edge.data_type) == (
            "entry",
            "merge",
            "%x",
            "i32",
        )

    def test_diamond_features(self):
        graph = cdfg_of(DIAMOND, "d")
        features = cdfg_features(graph, count_fcus(parse_module(DIAMOND).get("d")))
        assert features.total_nodes == 4
        assert features.longest_path_len == 3
        assert features.max_degree == 2
        assert features.avg_degree == 2
        assert features.fcu_count == 1

    def test_minimal_features(self):
        graph = cdfg_of("define void @f() {\n  ret void\n}\n", "f")
        assert cdfg_features(graph, 0).values() == (1, 1, 0, 0, 0, 0)

    def test_chain_data_edges(self):
        features = cdfg_features(cdfg_of(CHAIN, "c"), 0)
        assert features.data_edge_count == 2
        assert features.longest_path_len == 3

    def test_loop_back_edge_is_ignored(self):
        graph = cdfg_of(LOOP, "l")
        assert longest_path(graph) == 3
        # phi in the header uses %next of the body, the body uses %i of the header
        assert {(e.def_block, e.use_block) for e in graph.data_edges} == {
            ("body", "header"),
            ("header", "body"),
        }

    def test_declaration(self):
        with pytest.raises(EmptyFunction):
            build_cdfg(parse_module("declare void @x()\n").get("x"))


class TestLongestPath:
    def test_single_node(self):
        assert longest_path(Cdfg(("a",), ())) == 1

    def test_chain_of_five(self):
        nodes = tuple("abcde")
        assert longest_path(Cdfg(nodes, tuple(zip(nodes, nodes[1:])))) == 5

    def test_random_dags_match_brute_force(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            count = int(rng.integers(1, 13))
            nodes = tuple(f"n{i}" for i in rng.permutation(count))
            probability = rng.uniform(0.1, 0.6)
            edges = tuple(
                (nodes[i], nodes[j])
                for i, j in itertools.combinations(range(count), 2)
                if rng.random() < probability
            )
            # shuffled node order must not matter
            order = tuple(nodes[i] for i in rng.permutation(count))
            assert longest_path(Cdfg(order, edges)) == brute_force_longest(nodes, edges)


class TestFcus:
    def test_no_math(self):
        assert count_fcus(parse_module("define void @f() {\n  ret void\n}\n").get("f")) == 0

    def test_replicated_in_block(self):
        function = parse_module(
            "define i32 @f(i32 %a) {\n"
            "  %x = add i32 %a, 1\n"
            "  %y = add i32 %x, 1\n"
            "  %z = mul i32 %y, %a\n"
            "  ret i32 %z\n"
            "}\n"
        ).get("f")
        assert count_fcus(function) == 3

    def test_shared_between_blocks(self):
        function = parse_module(
            "define i32 @f(i32 %a) {\n"
            "entry:\n"
            "  %x = add i32 %a, 1\n"
            "  br label %next\n"
            "next:\n"
            "  %y = add i32 %x, 1\n"
            "  ret i32 %y\n"
            "}\n"
        ).get("f")
        assert count_fcus(function) == 1

    @pytest.mark.parametrize("stem", ["average", "matrix_mult", "sobel", "sha", "dfadd"])
    def test_block_order_does_not_matter(self, corpus_dir, stem):
        module = parse_module((corpus_dir / f"{stem}.ll").read_text(encoding="utf-8"))
        rng = np.random.default_rng(5)
        for function in module.functions:
            if not function.is_defined:
                continue
            expected = count_fcus(function)
            for _ in range(10):
                order = rng.permutation(len(function.blocks))
                shuffled = replace(function, blocks=tuple(function.blocks[i] for i in order))
                assert count_fcus(shuffled) == expected


CALLS = """\
define void @h() {
  ret void
}

define void @g() {
  call void @h()
  ret void
}

define void @f() {
  call void @g()
  call void @g()
  ret void
}
"""

TWO_CHILDREN = """\
define void @g() {
  ret void
}

define void @h() {
  ret void
}

define void @top() {
  call void @g()
  call void @h()
  call void @missing()
  ret void
}
"""


class TestCallGraph:
    def test_edge_per_call_site(self):
        graph = build_callgraph(parse_module(CALLS))
        assert [(e.caller, e.callee) for e in graph.edges if e.caller == "f"] == [
            ("f", "g"),
            ("f", "g"),
        ]

    def test_leaf_module(self):
        graph = build_callgraph(parse_module("define void @f() {\n  ret void\n}\n"))
        assert graph.edges == ()

    def test_transitive_reachability(self):
        graph = build_callgraph(parse_module(CALLS))
        assert graph.reachable_from("f") == ["g", "h"]
        assert graph.reachable_from("h") == []

    def test_leaf_top(self):
        graph = build_callgraph(parse_module(CALLS))
        assert callgraph_features(graph, "h") == CallGraphFeatures.zero()

    def test_child_aggregation(self):
        estimates = {
            "g": FunctionSummary(fcu_count=2, est_latency=10, est_cp_min=3.1, est_cp_max=3.1),
            "h": FunctionSummary(fcu_count=5, est_latency=20, est_cp_min=4.7, est_cp_max=4.7),
        }
        graph = build_callgraph(parse_module(TWO_CHILDREN), estimates)
        features = callgraph_features(graph, "top")
        assert features.child_count == 2
        assert features.max_child_fcu == 5
        assert features.min_child_fcu == 2
        assert features.max_child_latency == 20
        assert features.max_child_cp == 4.7
        assert features.min_child_cp == 3.1

    def test_structural_summary(self, corpus_dir):
        module = parse_module((corpus_dir / "sha.ll").read_text(encoding="utf-8"))
        graph = build_callgraph(module)
        assert graph.summary("rotl") == FunctionSummary(
            fcu_count=1, est_latency=1.0, est_cp_min=0.0, est_cp_max=0.0
        )
        assert callgraph_features(graph, "sha_transform").child_count == 1

    def test_unreachable_functions_do_not_matter(self):
        estimates = {"g": FunctionSummary(fcu_count=2, est_latency=10, est_cp_min=3.1, est_cp_max=3.1)}
        base = callgraph_features(build_callgraph(parse_module(TWO_CHILDREN), estimates), "top")
        extra = TWO_CHILDREN + (
            "\ndefine i32 @unused(i32 %a) {\n"
            "  %x = mul i32 %a, %a\n"
            "  %y = call i32 @unused2(i32 %x)\n"
            "  ret i32 %y\n"
            "}\n"
            "\ndeclare i32 @unused2(i32)\n"
        )
        graph = build_callgraph(parse_module(extra), estimates)
        assert "unused" in graph.nodes
        assert callgraph_features(graph, "top") == base

    def test_unknown_top(self):
        with pytest.raises(UnknownTop):
            callgraph_features(build_callgraph(parse_module(CALLS)), "main")

    def test_dump(self):
        text = dump_graphs(cdfg_of(DIAMOND, "d"), build_callgraph(parse_module(CALLS)))
        assert text.startswith('digraph "cdfg_d" {')
        assert '"entry" -> "merge" [style=dashed, label="%x: i32"];' in text
        assert '"f" -> "g" [label=""];' in text
