"""Control/dataflow graph and callgraph analysis with their feature families"""

import logging
from collections import Counter, defaultdict, deque
from dataclasses import astuple, dataclass, field, fields
from typing import Mapping, Self

from lib.datatypes import InstructionCategory
from lib.exceptions import EmptyFunction, UnknownTop
from lib.helpers import fsum_mean
from lib.irparser import IrFunction, IrModule


@dataclass(frozen=True)
class DataEdge:
    "Def-use dependency crossing a block boundary"
    def_block: str
    use_block: str
    value_id: str
    data_type: str


@dataclass(frozen=True)
class Cdfg:
    "Control and dataflow graph of one function, nodes are block labels"
    nodes: tuple[str, ...]
    control_edges: tuple[tuple[str, str], ...]
    data_edges: tuple[DataEdge, ...] = ()
    function: str = ""

    def successors(self, label: str) -> list[str]:
        "Returns control successors of a block"
        return [to for frm, to in self.control_edges if frm == label]

    def in_degree(self, label: str) -> int:
        "Number of incoming control edges"
        return sum(1 for _, to in self.control_edges if to == label)

    def out_degree(self, label: str) -> int:
        "Number of outgoing control edges"
        return sum(1 for frm, _ in self.control_edges if frm == label)

    def degree(self, label: str) -> int:
        return self.in_degree(label) + self.out_degree(label)


@dataclass(frozen=True)
class CallEdge:
    "One call site"
    caller: str
    callee: str
    argument_types: tuple[str, ...] = ()


@dataclass(frozen=True)
class FunctionSummary:
    """
    Pre-synthesis estimate of a function used when it is somebody's child.
    Latency and clock period estimates are None when unknown
    """
    fcu_count: int = 0
    est_latency: float | None = None
    est_cp_min: float | None = None
    est_cp_max: float | None = None


@dataclass(frozen=True)
class CallGraph:
    "Function call relationships of a module"
    nodes: tuple[str, ...]
    edges: tuple[CallEdge, ...]
    summaries: Mapping[str, FunctionSummary] = field(default_factory=dict)

    def callees(self, name: str) -> list[str]:
        "Distinct direct callees in call-site order"
        return list(dict.fromkeys(e.callee for e in self.edges if e.caller == name))

    def reachable_from(self, name: str) -> list[str]:
        "Functions transitively called from `name` in breadth-first order, `name` excluded"
        seen = {name}
        order = []
        queue = deque([name])
        while queue:
            for callee in self.callees(queue.popleft()):
                if callee not in seen:
                    seen.add(callee)
                    order.append(callee)
                    queue.append(callee)
        return order

    def summary(self, name: str) -> FunctionSummary:
        return self.summaries.get(name, FunctionSummary())


@dataclass(frozen=True)
class CdfgFeatures:
    "6 features of the control and dataflow graph"
    total_nodes: float = 0.0
    longest_path_len: float = 0.0
    fcu_count: float = 0.0
    max_degree: float = 0.0
    avg_degree: float = 0.0
    data_edge_count: float = 0.0

    @classmethod
    def names(cls) -> tuple[str, ...]:
        "Slot names in schema order"
        return tuple(f.name for f in fields(cls))

    def values(self) -> tuple[float, ...]:
        "Slot values in schema order"
        return tuple(float(v) for v in astuple(self))

    @classmethod
    def zero(cls) -> Self:
        return cls()


@dataclass(frozen=True)
class CallGraphFeatures:
    "6 features of the children of the top function"
    child_count: float = 0.0
    max_child_fcu: float = 0.0
    min_child_fcu: float = 0.0
    max_child_latency: float = 0.0
    max_child_cp: float = 0.0
    min_child_cp: float = 0.0

    @classmethod
    def names(cls) -> tuple[str, ...]:
        "Slot names in schema order"
        return tuple(f.name for f in fields(cls))

    def values(self) -> tuple[float, ...]:
        "Slot values in schema order"
        return tuple(float(v) for v in astuple(self))

    @classmethod
    def zero(cls) -> Self:
        return cls()


def build_cdfg(function: IrFunction) -> Cdfg:
    "Builds the CDFG of a defined function, edges in source order"
    if not function.is_defined or not function.blocks:
        raise EmptyFunction(f"function @{function.name} has no basic blocks")
    control_edges = []
    definitions: dict[str, tuple[str, str]] = {}
    for block in function.blocks:
        for successor in dict.fromkeys(block.successor_labels):
            control_edges.append((block.label, successor))
        for instruction in block.instructions:
            if instruction.result_id is not None:
                definitions[instruction.result_id] = (block.label, instruction.result_type)
    data_edges: dict[tuple[str, str, str], DataEdge] = {}
    for block in function.blocks:
        for instruction in block.instructions:
            for operand in instruction.operand_ids:
                # function arguments and globals have no defining block
                if operand not in definitions:
                    continue
                def_block, data_type = definitions[operand]
                key = (def_block, block.label, operand)
                if def_block != block.label and key not in data_edges:
                    data_edges[key] = DataEdge(def_block, block.label, operand, data_type)
    return Cdfg(
        nodes=tuple(block.label for block in function.blocks),
        control_edges=tuple(control_edges),
        data_edges=tuple(data_edges.values()),
        function=function.name,
    )


def _back_edges(graph: Cdfg) -> set[tuple[str, str]]:
    "Edges closing a cycle in depth-first order from the entry, then from unvisited blocks"
    successors: dict[str, list[str]] = defaultdict(list)
    for frm, to in graph.control_edges:
        successors[frm].append(to)
    back: set[tuple[str, str]] = set()
    visited: set[str] = set()
    for root in graph.nodes:
        if root in visited:
            continue
        visited.add(root)
        on_stack = {root}
        stack = [(root, iter(successors[root]))]
        while stack:
            node, pending = stack[-1]
            child = next(pending, None)
            if child is None:
                stack.pop()
                on_stack.discard(node)
            elif child in on_stack:
                back.add((node, child))
            elif child not in visited:
                visited.add(child)
                on_stack.add(child)
                stack.append((child, iter(successors[child])))
    return back


def longest_path(graph: Cdfg) -> int:
    "Number of blocks on the longest path once loop back edges are removed"
    if not graph.nodes:
        return 0
    back = _back_edges(graph)
    edges = [e for e in dict.fromkeys(graph.control_edges) if e not in back]
    indegree = Counter(to for _, to in edges)
    successors: dict[str, list[str]] = defaultdict(list)
    for frm, to in edges:
        successors[frm].append(to)
    length = dict.fromkeys(graph.nodes, 1)
    ready = deque(node for node in graph.nodes if indegree[node] == 0)
    while ready:
        node = ready.popleft()
        for child in successors[node]:
            length[child] = max(length[child], length[node] + 1)
            indegree[child] -= 1
            if indegree[child] == 0:
                ready.append(child)
    return max(length.values())


def count_fcus(function: IrFunction) -> int:
    """
    Estimates functional units: every (math opcode, result type) unit is shared
    between blocks but replicated inside a block
    """
    needed: dict[tuple[str, str], int] = {}
    for block in function.blocks:
        per_block = Counter(
            (i.opcode, i.result_type)
            for i in block.instructions
            if i.category is InstructionCategory.MATH
        )
        for unit, count in per_block.items():
            needed[unit] = max(needed.get(unit, 0), count)
    return sum(needed.values())


def cdfg_features(graph: Cdfg, fcu: int) -> CdfgFeatures:
    degrees = [float(graph.degree(node)) for node in graph.nodes]
    return CdfgFeatures(
        total_nodes=float(len(graph.nodes)),
        longest_path_len=float(longest_path(graph)),
        fcu_count=float(fcu),
        max_degree=max(degrees, default=0.0),
        avg_degree=fsum_mean(degrees),
        data_edge_count=float(len(graph.data_edges)),
    )


def build_callgraph(
    module: IrModule, estimates: Mapping[str, FunctionSummary] | None = None
) -> CallGraph:
    """
    Builds the callgraph with one edge per call site.
    Defined functions without an external estimate are summarized structurally:
    FCU count, longest path as latency and zero clock period
    """
    estimates = estimates or {}
    known = set(module.function_names)
    edges = []
    summaries: dict[str, FunctionSummary] = {}
    for function in module.functions:
        if function.name in estimates:
            summaries[function.name] = estimates[function.name]
        elif function.is_defined:
            summaries[function.name] = FunctionSummary(
                fcu_count=count_fcus(function),
                est_latency=float(longest_path(build_cdfg(function))),
                est_cp_min=0.0,
                est_cp_max=0.0,
            )
        else:
            summaries[function.name] = FunctionSummary()
        for instruction in function.instructions():
            if instruction.callee is None:
                continue
            if instruction.callee not in known:
                logging.debug(
                    "call from @%s to undeclared @%s ignored", function.name, instruction.callee
                )
                continue
            edges.append(CallEdge(function.name, instruction.callee, instruction.argument_types))
    return CallGraph(module.function_names, tuple(edges), summaries)


def callgraph_features(graph: CallGraph, top: str) -> CallGraphFeatures:
    "Aggregates summaries of all functions reachable from `top`"
    if top not in graph.nodes:
        raise UnknownTop(f"top function @{top} is not in the module")
    children = [graph.summary(name) for name in graph.reachable_from(top)]
    if not children:
        return CallGraphFeatures.zero()
    fcus = [float(s.fcu_count) for s in children]
    return CallGraphFeatures(
        child_count=float(len(children)),
        max_child_fcu=max(fcus),
        min_child_fcu=min(fcus),
        max_child_latency=max(s.est_latency or 0.0 for s in children),
        max_child_cp=max(s.est_cp_max or 0.0 for s in children),
        min_child_cp=min(s.est_cp_min or 0.0 for s in children),
    )


def dump_graphs(cdfg: Cdfg, callgraph: CallGraph) -> str:
    "Renders both graphs as DOT text, data edges dashed"
    out = [f'digraph "cdfg_{cdfg.function}" {{']
    out.extend(f'  "{node}";' for node in cdfg.nodes)
    out.extend(f'  "{frm}" -> "{to}";' for frm, to in cdfg.control_edges)
    out.extend(
        f'  "{e.def_block}" -> "{e.use_block}" [style=dashed, label="{e.value_id}: {e.data_type}"];'
        for e in cdfg.data_edges
    )
    out.append("}")
    out.append('digraph "callgraph" {')
    for node in callgraph.nodes:
        summary = callgraph.summary(node)
        out.append(f'  "{node}" [label="{node}\\nfcu={summary.fcu_count}"];')
    out.extend(
        f'  "{e.caller}" -> "{e.callee}" [label="{", ".join(e.argument_types)}"];'
        for e in callgraph.edges
    )
    out.append("}")
    return "\n".join(out) + "\n"
