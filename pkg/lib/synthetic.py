"""
Synthetic design-space datasets.

Every design is a loop skeleton. Every variant of it gets its own pragma
settings and target frequency, is rendered to behavioral C and textual IR and
goes through the regular extraction pipeline. Labels come from a fixed
ground-truth function of the extracted features (see README.md):

    period  = 1000 / target_freq_mhz
    cp      = 0.9 + 0.55 * period + 0.1 * longest_path_len + 0.03 * max_unroll_factor
    latency = 16 + 4 * total_loop_count
              + B * (3 - 2 * r) * (1 + 0.0015 * (target_freq_mhz - 100))
              B = avg_batch_size * total_loop_count
              r = num_pipelined_loops / total_loop_count
    luts    = 4 + 6 * instr_total + 40 * fcu_count
              + 150 * num_array_partition_pragmas + 80 * num_array_reshape_pragmas

cp is rounded to 3 decimals and clipped to [1.4, 9.4], latency and luts are
rounded and clipped to [2, 63536] and [4, 60537]. With a noise level `k` every
label is multiplied by (1 + k * u), u uniform in [-1, 1], then rounded and
clipped again. The noise has its own generator, so the same seed gives the
same variants at every noise level.
"""

import logging
from dataclasses import dataclass

import numpy as np

from lib.dataset import Dataset, DesignRecord, Labels
from lib.errormessage import ErrorMessageCollector
from lib.exceptions import BadHyperparam, InsufficientData
from lib.features import FeatureVector, extract_features

BOUNDS = (16, 32, 64, 128, 256, 512, 1024, 2048)
UNROLL_FACTORS = (1, 2, 4, 8, 16, 32)
FREQUENCIES = (100.0, 125.0, 150.0, 175.0, 200.0, 225.0, 300.0, 500.0)
INT_OPS = ("add", "sub", "mul", "shl", "and", "xor", "or", "lshr")
FLOAT_OPS = ("fadd", "fsub", "fmul", "fdiv")
WRAPPING_OPS = ("add", "sub", "mul", "shl")
C_OPERATORS = {
    "add": "+", "sub": "-", "mul": "*", "shl": "<<", "and": "&", "xor": "^",
    "or": "|", "lshr": ">>", "fadd": "+", "fsub": "-", "fmul": "*", "fdiv": "/",
}

CP_RANGE = (1.4, 9.4)
LATENCY_RANGE = (2, 63536)
LUT_RANGE = (4, 60537)


@dataclass(frozen=True)
class LoopSkeleton:
    "Loop of a synthetic design: bound, element type and body operations"
    label: str
    bound: int
    dtype: str
    ops: tuple[str, ...]
    widen: str | None = None

    @property
    def c_type(self) -> str:
        return "float" if self.dtype == "float" else "int"


@dataclass(frozen=True)
class ChildSkeleton:
    name: str
    dtype: str
    ops: tuple[str, ...]


@dataclass(frozen=True)
class DesignSkeleton:
    "Structure shared by all variants of one synthetic design"
    name: str
    loops: tuple[LoopSkeleton, ...]
    children: tuple[ChildSkeleton, ...]

    @property
    def arrays(self) -> list[str]:
        return [f"{kind}{i}" for i in range(len(self.loops)) for kind in ("in", "out")]


@dataclass(frozen=True)
class ArrayDirective:
    "Array partition or reshape of one variant, factor None means complete"
    array: str
    style: str
    factor: int | None
    reshape: bool = False


@dataclass(frozen=True)
class VariantChoice:
    "Pragma settings and target frequency of one variant"
    unroll: tuple[int | None, ...]
    pipeline_ii: tuple[int | None, ...]
    arrays: tuple[ArrayDirective, ...]
    inlined: tuple[bool, ...]
    target_freq_mhz: float

    def unroll_count(self, loop: LoopSkeleton, index: int) -> int:
        "Number of body copies, a complete unroll copies the body `bound` times"
        factor = self.unroll[index]
        return loop.bound if factor is None else factor


def random_skeleton(name: str, rng: np.random.Generator) -> DesignSkeleton:
    "Draws a design with 2-5 loops and 0-3 children"
    loops = []
    for index in range(int(rng.integers(2, 6))):
        dtype = "float" if rng.random() < 0.3 else "i32"
        table = FLOAT_OPS if dtype == "float" else INT_OPS
        ops = tuple(str(op) for op in rng.choice(table, size=int(rng.integers(2, 6))))
        widen = None
        if dtype == "i32" and rng.random() < 0.5:
            widen = "sext" if rng.random() < 0.5 else "zext"
        loops.append(
            LoopSkeleton(f"L{index}", int(rng.choice(BOUNDS)), dtype, ops, widen)
        )
    children = []
    for index in range(int(rng.integers(0, 4))):
        table = FLOAT_OPS if loops[0].dtype == "float" else INT_OPS
        ops = tuple(str(op) for op in rng.choice(table, size=int(rng.integers(1, 5))))
        children.append(ChildSkeleton(f"{name}_child{index}", loops[0].dtype, ops))
    return DesignSkeleton(name, tuple(loops), tuple(children))


def random_variant(skeleton: DesignSkeleton, rng: np.random.Generator) -> VariantChoice:
    "Draws pragma settings and the target frequency of a variant"
    unroll: list[int | None] = []
    pipeline: list[int | None] = []
    for loop in skeleton.loops:
        if loop.bound <= 32 and rng.random() < 0.1:
            unroll.append(None)
        else:
            allowed = [f for f in UNROLL_FACTORS if f <= loop.bound]
            unroll.append(int(rng.choice(allowed)))
        pipeline.append(int(rng.integers(1, 5)) if rng.random() < 0.4 else None)
    arrays = []
    for array in skeleton.arrays:
        draw = rng.random()
        if draw < 0.25:
            if rng.random() < 0.2:
                arrays.append(ArrayDirective(array, "complete", None))
            else:
                style = "cyclic" if rng.random() < 0.5 else "block"
                arrays.append(ArrayDirective(array, style, int(rng.choice((2, 4, 8)))))
        elif draw < 0.4:
            arrays.append(ArrayDirective(array, "block", int(rng.choice((2, 4))), reshape=True))
    inlined = tuple(bool(rng.random() < 0.5) for _ in skeleton.children)
    return VariantChoice(
        tuple(unroll),
        tuple(pipeline),
        tuple(arrays),
        inlined,
        float(rng.choice(FREQUENCIES)),
    )


def _c_expression(element: str, ops: tuple[str, ...]) -> str:
    expression = element
    for index, op in enumerate(ops):
        expression = f"({expression} {C_OPERATORS[op]} {index + 2})"
    return expression


def render_source(skeleton: DesignSkeleton, variant: VariantChoice) -> str:
    "Behavioral C of a variant with its pragmas"
    out = []
    for child, inlined in zip(skeleton.children, variant.inlined):
        c_type = "float" if child.dtype == "float" else "int"
        out.append(f"void {child.name}({c_type} a[16], {c_type} b[16]) {{")
        if inlined:
            out.append("#pragma HLS inline")
        out.append(f"  b[0] = {_c_expression('a[0]', child.ops)};")
        out.append("}")
        out.append("")
    params = ", ".join(
        f"{loop.c_type} {kind}{i}[{loop.bound}]"
        for i, loop in enumerate(skeleton.loops)
        for kind in ("in", "out")
    )
    out.append(f"void {skeleton.name}({params}) {{")
    for directive in variant.arrays:
        kind = "array_reshape" if directive.reshape else "array_partition"
        if directive.factor is None:
            out.append(f"#pragma HLS {kind} variable={directive.array} complete dim=1")
        else:
            out.append(
                f"#pragma HLS {kind} variable={directive.array}"
                f" {directive.style} factor={directive.factor} dim=1"
            )
    for index, loop in enumerate(skeleton.loops):
        out.append(f"  {loop.label}: for (int i = 0; i < {loop.bound}; i++) {{")
        factor = variant.unroll[index]
        if factor is None:
            out.append("#pragma HLS unroll")
        elif factor > 1:
            out.append(f"#pragma HLS unroll factor={factor}")
        if variant.pipeline_ii[index] is not None:
            out.append(f"#pragma HLS pipeline II={variant.pipeline_ii[index]}")
        out.append(f"    out{index}[i] = {_c_expression(f'in{index}[i]', loop.ops)};")
        out.append("  }")
    for child in skeleton.children:
        out.append(f"  {child.name}(in0, out0);")
    out.append("}")
    return "\n".join(out) + "\n"


def _operand(dtype: str, index: int) -> str:
    if dtype == "float":
        return f"{index + 2}.000000e+00"
    return str(index + 2)


def _chain(prefix: str, dtype: str, ops: tuple[str, ...], source: str, target: str) -> list[str]:
    "Load, a chain of operations and a store, all value names start with `prefix`"
    lines = [f"%{prefix}.v0 = load {dtype}, ptr {source}"]
    for index, op in enumerate(ops):
        flags = "nsw " if op in WRAPPING_OPS else ""
        lines.append(
            f"%{prefix}.v{index + 1} = {op} {flags}{dtype} %{prefix}.v{index},"
            f" {_operand(dtype, index)}"
        )
    lines.append(f"store {dtype} %{prefix}.v{len(ops)}, ptr {target}")
    return lines


def _loop_blocks(
    loop: LoopSkeleton, index: int, copies: int, predecessor: str, next_label: str
) -> list[str]:
    name = loop.label
    lines = [
        f"{name}.header:",
        f"  %{name}.i = phi i32 [ 0, %{predecessor} ], [ %{name}.next, %{name}.body ]",
        f"  %{name}.cond = icmp slt i32 %{name}.i, {loop.bound}",
        f"  br i1 %{name}.cond, label %{name}.body, label %{name}.exit",
        f"{name}.body:",
    ]
    for copy in range(copies):
        prefix = f"{name}.u{copy}"
        body = [
            f"%{prefix}.p = getelementptr inbounds {loop.dtype}, ptr %in{index}, i32 %{name}.i",
            f"%{prefix}.q = getelementptr inbounds {loop.dtype}, ptr %out{index}, i32 %{name}.i",
        ]
        chain = _chain(prefix, loop.dtype, loop.ops, f"%{prefix}.p", f"%{prefix}.q")
        if loop.widen is not None:
            last = f"%{prefix}.v{len(loop.ops)}"
            store = chain.pop()
            chain += [
                f"%{prefix}.w = {loop.widen} i32 {last} to i64",
                f"%{prefix}.x = mul nsw i64 %{prefix}.w, 3",
                f"%{prefix}.t = trunc i64 %{prefix}.x to i32",
                store.replace(last, f"%{prefix}.t"),
            ]
        lines += [f"  {line}" for line in body + chain]
    lines += [
        f"  %{name}.next = add nsw i32 %{name}.i, {copies}",
        f"  br label %{name}.header",
        f"{name}.exit:",
        f"  br label %{next_label}",
    ]
    return lines


def render_ir(skeleton: DesignSkeleton, variant: VariantChoice) -> str:
    "Textual IR of a variant: one header/body/exit triple per loop, children called or inlined"
    out = []
    for child, inlined in zip(skeleton.children, variant.inlined):
        if inlined:
            continue
        out.append(f"define void @{child.name}(ptr %a, ptr %b) {{")
        out.append("entry:")
        out += [f"  {line}" for line in _chain("c", child.dtype, child.ops, "%a", "%b")]
        out.append("  ret void")
        out.append("}")
        out.append("")
    params = ", ".join(
        f"ptr %{kind}{i}" for i in range(len(skeleton.loops)) for kind in ("in", "out")
    )
    out.append(f"define void @{skeleton.name}({params}) {{")
    out.append("entry:")
    out.append(f"  br label %{skeleton.loops[0].label}.header")
    predecessor = "entry"
    for index, loop in enumerate(skeleton.loops):
        following = (
            f"{skeleton.loops[index + 1].label}.header"
            if index + 1 < len(skeleton.loops)
            else "done"
        )
        out += _loop_blocks(
            loop, index, variant.unroll_count(loop, index), predecessor, following
        )
        predecessor = f"{loop.label}.exit"
    out.append("done:")
    for child, inlined in zip(skeleton.children, variant.inlined):
        if inlined:
            chain = _chain(child.name, child.dtype, child.ops, "%in0", "%out0")
            out += [f"  {line}" for line in chain]
        else:
            out.append(f"  call void @{child.name}(ptr %in0, ptr %out0)")
    out.append("  ret void")
    out.append("}")
    return "\n".join(out) + "\n"


def _clip(value: float, bounds: tuple[float, float]) -> float:
    return min(max(value, bounds[0]), bounds[1])


def ground_truth(features: FeatureVector, factors: tuple[float, float, float] = (1.0, 1.0, 1.0)) -> Labels:
    "Labels of a variant from its features, `factors` scale (cp, latency, luts) before rounding"
    x = features.as_dict()
    period = 1000.0 / x["target_freq_mhz"]
    cp = 0.9 + 0.55 * period + 0.1 * x["longest_path_len"] + 0.03 * x["max_unroll_factor"]
    loops = x["total_loop_count"]
    batches = x["avg_batch_size"] * loops
    pipelined_ratio = x["num_pipelined_loops"] / loops if loops else 0.0
    latency = 16 + 4 * loops + batches * (3 - 2 * pipelined_ratio) * (
        1 + 0.0015 * (x["target_freq_mhz"] - 100)
    )
    luts = (
        4
        + 6 * x["instr_total"]
        + 40 * x["fcu_count"]
        + 150 * x["num_array_partition_pragmas"]
        + 80 * x["num_array_reshape_pragmas"]
    )
    return Labels(
        cp_ns=_clip(round(cp * factors[0], 3), CP_RANGE),
        latency_cycles=int(_clip(round(latency * factors[1]), LATENCY_RANGE)),
        luts=int(_clip(round(luts * factors[2]), LUT_RANGE)),
    )


def synthetic_generate(
    n: int,
    seed: int,
    noise_level: float = 0.0,
    designs: int = 1,
    latency_na: bool = False,
    device: str = "zynq7000",
    name: str = "synth",
) -> Dataset:
    """
    Generates `n` variants of each of `designs` random designs.
    With `latency_na` latency labels are left out, like designs for which
    no latency was reported
    """
    if n < 1:
        raise InsufficientData("number of variants must be positive")
    if not 0.0 <= noise_level < 1.0:
        raise BadHyperparam("noise", noise_level, "a fraction in [0, 1)")
    rng = np.random.default_rng(seed)
    noise_rng = np.random.default_rng([seed, 1])
    reporter = ErrorMessageCollector()
    records = []
    for design_index in range(designs):
        design = name if designs == 1 else f"{name}{design_index}"
        skeleton = random_skeleton(design, rng)
        logging.debug(
            "synthetic design %s: %d loops, %d children",
            design,
            len(skeleton.loops),
            len(skeleton.children),
        )
        for variant_index in range(n):
            variant = random_variant(skeleton, rng)
            features = extract_features(
                render_source(skeleton, variant),
                render_ir(skeleton, variant),
                design,
                variant.target_freq_mhz,
                f"{design}.c",
                reporter,
            )
            factors = (1.0, 1.0, 1.0)
            if noise_level > 0:
                u = noise_rng.uniform(-1.0, 1.0, size=3)
                factors = tuple(float(1.0 + noise_level * v) for v in u)  # type: ignore[assignment]
            labels = ground_truth(features, factors)
            if latency_na:
                labels = Labels(cp_ns=labels.cp_ns, luts=labels.luts)
            records.append(
                DesignRecord(design, f"v{variant_index:04d}", device, features, labels)
            )
    return Dataset(tuple(records))
