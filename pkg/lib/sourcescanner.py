"""HLS source scanning: pragmas, loop structure and the source feature family"""

import re
from dataclasses import astuple, dataclass, fields
from fractions import Fraction
from typing import Iterator, Self

from lib.datatypes import PartitionStyle, PragmaKind
from lib.errormessage import ErrorMessageConsoleHandler, ErrorMessageHandler
from lib.exceptions import MalformedPragma
from lib.helpers import fsum_mean

PRAGMA_REGEXP = r"^\s*#\s*pragma\s+(?P<vendor>\w+)\b\s*(?P<body>.*?)\s*$"
PRAGMA_ARG_REGEXP = r"(?P<key>\w+)\s*=\s*(?P<value>[^\s,]+)|(?P<flag>\w+)"

FUNCTION_REGEXP = (
    r"^\s*(?:[A-Za-z_][\w:<>,\s\*&]*?[\s\*&])?(?P<name>[A-Za-z_]\w*)"
    r"\s*\((?P<params>[^;{}()]*)\)\s*(?:const\s*)?(?:\{.*)?$"
)
FOR_REGEXP = r"(?:\b(?P<label>[A-Za-z_]\w*)\s*:\s*)?\bfor\s*\("
LABEL_LINE_REGEXP = r"^\s*(?P<label>[A-Za-z_]\w*)\s*:\s*$"
FOR_HEADER_REGEXP = (
    r"^\s*(?:(?:const\s+)?(?:unsigned\s+|signed\s+)?"
    r"(?:int|short|long|char|size_t|u?int\d+_t|ap_u?int<\s*\d+\s*>)\s+)?"
    r"(?P<var>[A-Za-z_]\w*)\s*=\s*(?P<start>-?\d+)\s*;"
    r"\s*(?P=var)\s*(?P<op><=|>=|<|>|!=)\s*(?P<bound>-?\d+)\s*;"
    r"\s*(?P<inc>.*?)\s*$"
)

C_KEYWORDS = frozenset(
    ("if", "for", "while", "switch", "return", "sizeof", "else", "do", "case")
)


@dataclass(frozen=True)
class PragmaDirective:
    "Single `#pragma HLS ...` directive"
    kind: PragmaKind
    enclosing_function: str
    source_line: int
    factor: int | None = None
    initiation_interval: int | None = None
    dimension: int | None = None
    partition_style: PartitionStyle | None = None
    attached_loop_label: str | None = None
    attached_loop_index: int | None = None  # position of the loop in source order, from 1
    variable: str | None = None
    off: bool = False


@dataclass(frozen=True)
class LoopInfo:
    "A `for` loop of the behavioral source with its directives applied"
    label: str
    function: str
    source_line: int
    loop_bound: int | None = None
    unroll_factor: int = 1
    batch_size: Fraction | None = None
    pipelined: bool = False
    initiation_interval: int | None = None
    nesting_depth: int = 0


@dataclass(frozen=True)
class SourceFeatures:
    "13 features of the HLS source"
    max_unroll_factor: float = 0.0
    avg_unroll_factor: float = 0.0
    max_batch_size: float = 0.0
    avg_batch_size: float = 0.0
    num_unrolled_loops: float = 0.0
    num_pipelined_loops: float = 0.0
    max_pipeline_ii: float = 0.0
    avg_pipeline_ii: float = 0.0
    max_pipelined_loop_index: float = 0.0
    num_array_partition_pragmas: float = 0.0
    num_array_reshape_pragmas: float = 0.0
    num_inlined_functions: float = 0.0
    total_loop_count: float = 0.0

    @classmethod
    def names(cls) -> tuple[str, ...]:
        "Slot names in schema order"
        return tuple(f.name for f in fields(cls))

    def values(self) -> tuple[float, ...]:
        "Slot values in schema order"
        return tuple(float(v) for v in astuple(self))

    @classmethod
    def zero(cls) -> Self:
        "Features of a design with no source available"
        return cls()


@dataclass
class _LoopRecord:
    index: int
    label: str
    function: str
    line: int
    bound: int | None
    depth: int


@dataclass
class _Scope:
    loop: _LoopRecord | None
    depth: int
    braced: bool


@dataclass
class _Event:
    "Item met while walking the source"
    line: int
    loop: _LoopRecord | None = None
    pragma_body: str | None = None
    function: str = ""
    innermost_loop: _LoopRecord | None = None


def _strip_comments(text: str) -> list[str]:
    "Replaces comments and string literals with spaces, keeps line numbering"
    result = []
    in_block = False
    for line in text.splitlines():
        out = []
        i = 0
        while i < len(line):
            if in_block:
                if line.startswith("*/", i):
                    in_block = False
                    out.append("  ")
                    i += 2
                    continue
                out.append(" ")
                i += 1
                continue
            if line.startswith("//", i):
                break
            if line.startswith("/*", i):
                in_block = True
                out.append("  ")
                i += 2
                continue
            if line[i] in "\"'":
                quote = line[i]
                end = i + 1
                while end < len(line) and line[end] != quote:
                    end += 2 if line[end] == "\\" else 1
                out.append(" " * (min(end, len(line) - 1) - i + 1))
                i = end + 1
                continue
            out.append(line[i])
            i += 1
        result.append("".join(out))
    return result


def _loop_step(inc: str, var: str) -> int | None:
    inc = inc.replace(" ", "")
    if inc in (f"{var}++", f"++{var}"):
        return 1
    if inc in (f"{var}--", f"--{var}"):
        return -1
    for pattern, sign in (
        (rf"^{var}\+=(\d+)$", 1),
        (rf"^{var}-=(\d+)$", -1),
        (rf"^{var}={var}\+(\d+)$", 1),
        (rf"^{var}={var}-(\d+)$", -1),
    ):
        if match := re.match(pattern, inc):
            return sign * int(match.group(1))
    return None


def trip_count(header: str) -> int | None:
    "Returns iteration count of a `for (init; cond; inc)` header with literal bounds"
    header_match = re.match(FOR_HEADER_REGEXP, header)
    if not header_match:
        return None
    start, bound = int(header_match["start"]), int(header_match["bound"])
    step = _loop_step(header_match["inc"], header_match["var"])
    if not step:
        return None
    count: int | None = None
    match header_match["op"], step > 0:
        case "<", True:
            count = (bound - start + step - 1) // step
        case "<=", True:
            count = (bound - start) // step + 1
        case ">", False:
            count = (start - bound - step - 1) // -step
        case ">=", False:
            count = (start - bound) // -step + 1
        case "!=", _:
            if (bound - start) % step == 0:
                count = (bound - start) // step
    if count is None or count <= 0:
        return None
    return count


def _walk(source_text: str) -> Iterator[_Event]:
    """
    Walks a constrained C/C++ source: function headers, braces, `for` loops
    with one-line headers and `#pragma` lines. Yields loops in source order and
    pragma lines together with their enclosing function and innermost loop
    """
    depth = 0
    scopes: list[_Scope] = []
    function = ""
    function_depth = -1
    pending_function: str | None = None
    pending_label: str | None = None
    awaiting_body: _LoopRecord | None = None
    loop_count = 0

    def innermost() -> _LoopRecord | None:
        for scope in reversed(scopes):
            if scope.loop is not None:
                return scope.loop
        return None

    def open_loop_count() -> int:
        return sum(1 for s in scopes if s.loop is not None)

    for line_no, line in enumerate(_strip_comments(source_text), start=1):
        if match := re.match(PRAGMA_REGEXP, line):
            if match["vendor"].upper() == "HLS":
                yield _Event(
                    line_no,
                    pragma_body=match["body"],
                    function=function,
                    innermost_loop=innermost(),
                )
            continue
        if match := re.match(LABEL_LINE_REGEXP, line):
            if match["label"] not in ("default", "public", "private", "protected"):
                pending_label = match["label"]
                continue
        if depth == 0:
            match = re.match(FUNCTION_REGEXP, line)
            if match and match["name"] not in C_KEYWORDS:
                pending_function = match["name"]
        for_starts = {m.start(): m for m in re.finditer(FOR_REGEXP, line)}
        i = 0
        while i < len(line):
            char = line[i]
            if awaiting_body is not None and not char.isspace():
                if char == "{":
                    depth += 1
                    scopes.append(_Scope(awaiting_body, depth, True))
                    awaiting_body = None
                    i += 1
                    continue
                scopes.append(_Scope(awaiting_body, depth, False))
                awaiting_body = None
            if i in for_starts:
                match = for_starts[i]
                open_paren = match.end() - 1
                level, end = 0, open_paren
                while end < len(line):
                    if line[end] == "(":
                        level += 1
                    elif line[end] == ")":
                        level -= 1
                        if level == 0:
                            break
                    end += 1
                loop_count += 1
                label = match["label"] or pending_label or f"loop{loop_count}"
                pending_label = None
                record = _LoopRecord(
                    loop_count,
                    label,
                    function,
                    line_no,
                    trip_count(line[open_paren + 1: end]),
                    open_loop_count(),
                )
                yield _Event(line_no, loop=record, function=function)
                awaiting_body = record
                i = end + 1
                continue
            match char:
                case "{":
                    depth += 1
                    if pending_function is not None and depth == 1:
                        function = pending_function
                        function_depth = depth
                        pending_function = None
                    else:
                        scopes.append(_Scope(None, depth, True))
                case "}":
                    while scopes and not scopes[-1].braced:
                        scopes.pop()
                    if scopes and scopes[-1].depth == depth:
                        scopes.pop()
                    if depth == function_depth:
                        function = ""
                        function_depth = -1
                    depth = max(depth - 1, 0)
                    while scopes and not scopes[-1].braced and scopes[-1].depth == depth:
                        scopes.pop()
                case ";":
                    pending_function = None if depth == 0 else pending_function
                    while scopes and not scopes[-1].braced and scopes[-1].depth == depth:
                        scopes.pop()
            i += 1


def _positive_int(value: str, key: str, line: int, text: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise MalformedPragma(line, text, f"{key} must be an integer") from None
    if number <= 0:
        raise MalformedPragma(line, text, f"{key} must be positive")
    return number


def _parse_pragma(
    body: str,
    line: int,
    function: str,
    loop: _LoopRecord | None,
    filename: str,
    reporter: ErrorMessageHandler,
) -> PragmaDirective | None:
    text = f"#pragma HLS {body}"
    args = [m for m in re.finditer(PRAGMA_ARG_REGEXP, body)]
    if not args or args[0]["flag"] is None:
        raise MalformedPragma(line, text, "directive name expected")
    name = args[0]["flag"].lower()
    options: dict[str, str] = {}
    flags: set[str] = set()
    for arg in args[1:]:
        if arg["flag"]:
            flags.add(arg["flag"].lower())
        else:
            options[arg["key"].lower()] = arg["value"]
    try:
        kind = PragmaKind(name)
    except ValueError:
        reporter.show(
            "unknown_pragma",
            f"{filename}:{line}",
            "%s:%d: unrecognized HLS pragma '%s' skipped",
            filename,
            line,
            name,
        )
        return None
    off = "off" in flags or options.get("off", "").lower() == "true"
    common = dict(
        kind=kind,
        enclosing_function=function,
        source_line=line,
        attached_loop_label=loop.label if loop is not None else None,
        attached_loop_index=loop.index if loop is not None else None,
        off=off,
    )
    match kind:
        case PragmaKind.UNROLL:
            if "factor" in options:
                factor = _positive_int(options["factor"], "factor", line, text)
                return PragmaDirective(factor=factor, **common)
            return PragmaDirective(partition_style=PartitionStyle.COMPLETE, **common)
        case PragmaKind.PIPELINE:
            ii = None
            if "ii" in options:
                ii = _positive_int(options["ii"], "II", line, text)
            return PragmaDirective(initiation_interval=ii, **common)
        case PragmaKind.ARRAY_PARTITION | PragmaKind.ARRAY_RESHAPE:
            if "variable" not in options:
                raise MalformedPragma(line, text, "variable= is required")
            style_name = options.get("type", "").lower()
            style_name = style_name or next(
                (f for f in sorted(flags) if f in {s.value for s in PartitionStyle}),
                PartitionStyle.COMPLETE.value,
            )
            try:
                style = PartitionStyle(style_name)
            except ValueError:
                raise MalformedPragma(line, text, f"unknown type '{style_name}'") from None
            dimension = None
            if "dim" in options:
                try:
                    dimension = int(options["dim"])
                except ValueError:
                    dimension = -1
                if dimension < 0:
                    raise MalformedPragma(line, text, "dim must be a non-negative integer")
            factor = None
            if style is not PartitionStyle.COMPLETE:
                if "factor" not in options:
                    raise MalformedPragma(line, text, f"factor= is required for {style}")
                factor = _positive_int(options["factor"], "factor", line, text)
            return PragmaDirective(
                factor=factor,
                dimension=dimension,
                partition_style=style,
                variable=options["variable"],
                **common,
            )
        case PragmaKind.INLINE:
            return PragmaDirective(**common)
        case PragmaKind.FUNCTION_INSTANTIATE:
            if "variable" not in options:
                raise MalformedPragma(line, text, "variable= is required")
            return PragmaDirective(variable=options["variable"], **common)
    raise NotImplementedError


def scan_pragmas(
    source_text: str,
    filename: str = "<source>",
    reporter: ErrorMessageHandler | None = None,
) -> list[PragmaDirective]:
    "Returns recognized `#pragma HLS` directives in file order"
    reporter = reporter if reporter is not None else ErrorMessageConsoleHandler()
    pragmas = []
    for event in _walk(source_text):
        if event.pragma_body is None:
            continue
        pragma = _parse_pragma(
            event.pragma_body,
            event.line,
            event.function,
            event.innermost_loop,
            filename,
            reporter,
        )
        if pragma is not None:
            pragmas.append(pragma)
    return pragmas


def analyze_loops(source_text: str, pragmas: list[PragmaDirective]) -> list[LoopInfo]:
    "Returns one LoopInfo per `for` loop in source order with loop pragmas applied"
    loops = []
    for event in _walk(source_text):
        if event.loop is None:
            continue
        record = event.loop
        attached = [
            p
            for p in pragmas
            if p.attached_loop_index == record.index
            and not p.off
        ]
        unroll_factor = 1
        pipelined = False
        initiation_interval = None
        for pragma in attached:
            match pragma.kind:
                case PragmaKind.UNROLL if pragma.factor is not None:
                    unroll_factor = pragma.factor
                case PragmaKind.UNROLL:
                    unroll_factor = record.bound or 1
                case PragmaKind.PIPELINE:
                    pipelined = True
                    initiation_interval = pragma.initiation_interval
        batch_size = None
        if record.bound is not None:
            batch_size = Fraction(record.bound, unroll_factor)
        loops.append(
            LoopInfo(
                label=record.label,
                function=record.function,
                source_line=record.line,
                loop_bound=record.bound,
                unroll_factor=unroll_factor,
                batch_size=batch_size,
                pipelined=pipelined,
                initiation_interval=initiation_interval,
                nesting_depth=record.depth,
            )
        )
    return loops


def source_features(loops: list[LoopInfo], pragmas: list[PragmaDirective]) -> SourceFeatures:
    "Aggregates loops and pragmas into the 13 source features"
    unroll = [float(loop.unroll_factor) for loop in loops]
    batches = [float(loop.batch_size) for loop in loops if loop.batch_size is not None]
    pipelined = [loop for loop in loops if loop.pipelined]
    iis = [float(loop.initiation_interval or 1) for loop in pipelined]
    max_pipelined_index = 0
    widest_bound = -1
    for index, loop in enumerate(loops, start=1):
        if loop.pipelined and (loop.loop_bound or 0) > widest_bound:
            widest_bound = loop.loop_bound or 0
            max_pipelined_index = index
    active = [p for p in pragmas if not p.off]
    inlined = {p.enclosing_function for p in active if p.kind is PragmaKind.INLINE}
    return SourceFeatures(
        max_unroll_factor=max(unroll, default=0.0),
        avg_unroll_factor=fsum_mean(unroll),
        max_batch_size=max(batches, default=0.0),
        avg_batch_size=fsum_mean(batches),
        num_unrolled_loops=float(sum(1 for u in unroll if u > 1)),
        num_pipelined_loops=float(len(pipelined)),
        max_pipeline_ii=max(iis, default=0.0),
        avg_pipeline_ii=fsum_mean(iis),
        max_pipelined_loop_index=float(max_pipelined_index),
        num_array_partition_pragmas=float(
            sum(1 for p in active if p.kind is PragmaKind.ARRAY_PARTITION)
        ),
        num_array_reshape_pragmas=float(
            sum(1 for p in active if p.kind is PragmaKind.ARRAY_RESHAPE)
        ),
        num_inlined_functions=float(len(inlined)),
        total_loop_count=float(len(loops)),
    )


def scan_source(
    source_text: str,
    filename: str = "<source>",
    reporter: ErrorMessageHandler | None = None,
) -> SourceFeatures:
    "Runs the whole source scan of a behavioral file"
    pragmas = scan_pragmas(source_text, filename, reporter)
    return source_features(analyze_loops(source_text, pragmas), pragmas)
