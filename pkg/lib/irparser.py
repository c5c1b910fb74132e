"""Textual LLVM IR subset: object model, parser, printer and the IR feature family"""

import re
from collections import Counter
from dataclasses import astuple, dataclass, fields
from typing import Iterator, Self

from lib.datatypes import COUNTED_CATEGORIES, InstructionCategory
from lib.exceptions import EmptyFunction, ParseError, UnknownOpcode, UnresolvedLabel
from lib.helpers import fsum_mean

OPCODE_CATEGORIES: dict[str, InstructionCategory] = {
    **dict.fromkeys(
        (
            "add", "sub", "mul", "sdiv", "udiv", "srem", "urem",
            "fadd", "fsub", "fmul", "fdiv", "frem", "fneg",
        ),
        InstructionCategory.MATH,
    ),
    "sext": InstructionCategory.SIGN_EXT,
    "zext": InstructionCategory.ZERO_EXT,
    **dict.fromkeys(
        ("and", "or", "xor", "shl", "lshr", "ashr"), InstructionCategory.LOGIC
    ),
    **dict.fromkeys(
        ("load", "store", "alloca", "getelementptr"), InstructionCategory.MEMORY
    ),
    **dict.fromkeys(
        ("extractelement", "insertelement", "shufflevector"), InstructionCategory.VECTOR
    ),
    **dict.fromkeys(
        ("br", "ret", "switch", "unreachable"), InstructionCategory.CONTROL
    ),
    **dict.fromkeys(
        (
            "trunc", "fptrunc", "fpext", "bitcast", "ptrtoint", "inttoptr",
            "sitofp", "uitofp", "fptosi", "fptoui",
        ),
        InstructionCategory.CAST,
    ),
    **dict.fromkeys(
        ("call", "phi", "select", "icmp", "fcmp"), InstructionCategory.OTHER
    ),
}

TERMINATORS = frozenset(("br", "ret", "switch", "unreachable"))
CALL_PREFIXES = frozenset(("tail", "musttail", "notail"))
FLAG_WORDS = frozenset(
    (
        "nsw", "nuw", "exact", "fast", "nnan", "ninf", "nsz", "arcp", "contract",
        "afn", "reassoc", "inbounds", "volatile", "disjoint", "nneg", "inrange",
    )
)

NAME = r"[\w.$-]+"
TYPE_REGEXP = (
    r"(?:<\s*\d+\s+x\s+[^>]+>|\[\s*\d+\s+x\s+[^\]]+\]|\{[^}]*\}"
    r"|i\d+|half|float|double|ptr|void|label|%" + NAME + r")\**"
)
LABEL_REGEXP = rf"^(?P<label>{NAME}):$"
DEFINE_REGEXP = (
    rf"^define\s+(?P<pre>.*?)@(?P<name>{NAME})\s*\((?P<params>.*)\)(?P<post>[^()]*)\{{$"
)
DECLARE_REGEXP = rf"^declare\s+(?P<pre>.*?)@(?P<name>{NAME})\s*\((?P<params>.*)\)"
GLOBAL_REGEXP = rf"^@(?P<name>{NAME})\s*=\s*(?P<rest>.*)$"
INSTRUCTION_REGEXP = rf"^(?:(?P<result>%{NAME})\s*=\s*)?(?P<body>.+)$"
VALUE_REGEXP = rf"(?<![\w.$-])[%@]{NAME}(?!\s*\*)"
LABEL_OPERAND_REGEXP = rf"label\s+%(?P<label>{NAME})"
PHI_INCOMING_REGEXP = rf"\[\s*(?P<value>[^,\]]+?)\s*,\s*%(?P<label>{NAME})\s*\]"
CALLEE_REGEXP = rf"@(?P<callee>{NAME})\s*\("
TRAILER_REGEXP = r",\s*(?:align\s+\d+|!\w+\s+!\d+)"
SKIPPED_TOP_LEVEL = ("target ", "source_filename", "attributes ", "!", "%", "$", "module ")


@dataclass(frozen=True)
class IrInstruction:
    "Single IR instruction; value names keep their `%`/`@` sigil, labels don't"
    opcode: str
    category: InstructionCategory
    result_type: str
    result_id: str | None = None
    operand_ids: tuple[str, ...] = ()
    successors: tuple[str, ...] = ()
    callee: str | None = None
    argument_types: tuple[str, ...] = ()
    operand_types: tuple[str, ...] = ()
    text: str = ""

    @property
    def is_terminator(self) -> bool:
        "Whether the instruction ends a basic block"
        return self.opcode in TERMINATORS


@dataclass(frozen=True)
class BasicBlock:
    "Straight-line run of instructions ending in one terminator"
    label: str
    instructions: tuple[IrInstruction, ...]
    successor_labels: tuple[str, ...]

    def count(self, category: InstructionCategory) -> int:
        "Number of instructions of a category in this block"
        return sum(1 for i in self.instructions if i.category is category)


@dataclass(frozen=True)
class IrFunction:
    "Function definition or declaration"
    name: str
    return_type: str
    params: tuple[tuple[str, str], ...]
    blocks: tuple[BasicBlock, ...] = ()
    is_defined: bool = True

    def block(self, label: str) -> BasicBlock:
        "Returns block by its label"
        for block in self.blocks:
            if block.label == label:
                return block
        raise KeyError(label)

    def instructions(self) -> Iterator[IrInstruction]:
        "Iterates over all instructions in block order"
        for block in self.blocks:
            yield from block.instructions


@dataclass(frozen=True)
class IrModule:
    "Parsed IR file"
    functions: tuple[IrFunction, ...]
    globals: tuple[str, ...] = ()

    def get(self, name: str) -> IrFunction | None:
        "Returns function by name, None if the module has none"
        for function in self.functions:
            if function.name == name:
                return function
        return None

    @property
    def function_names(self) -> tuple[str, ...]:
        "Names of all functions in file order"
        return tuple(f.name for f in self.functions)


def classify_instruction(opcode: str) -> InstructionCategory:
    "Returns category of an opcode of the supported subset"
    try:
        return OPCODE_CATEGORIES[opcode]
    except KeyError:
        raise UnknownOpcode(f"opcode '{opcode}' is outside the supported IR subset") from None


def normalize_type(token: str) -> str:
    "Maps a type spelling to its type token, e.g. 'i32*' -> 'ptr', '<4 x i32>' stays"
    token = re.sub(r"\s+", " ", token.strip())
    if token.endswith("*"):
        return "ptr"
    if token.startswith("<"):
        count, element = re.match(r"<\s*(\d+)\s+x\s+(.+?)\s*>", token).groups()  # type: ignore
        return f"<{count} x {normalize_type(element)}>"
    if token.startswith("["):
        count, element = re.match(r"\[\s*(\d+)\s+x\s+(.+?)\s*\]", token).groups()  # type: ignore
        return f"[{count} x {normalize_type(element)}]"
    if token.startswith(("%", "{")):
        return "struct"
    return token


def _leading_type(text: str) -> tuple[str, str] | None:
    "Splits a leading type off `text`"
    text = text.lstrip()
    match = re.match(TYPE_REGEXP, text)
    if not match:
        return None
    return normalize_type(match.group(0)), text[match.end():]


def _types_in(text: str) -> list[str]:
    "Finds types among words of `text`, skipping attributes and linkage words"
    found = []
    text = text.strip()
    while text:
        if leading := _leading_type(text):
            found.append(leading[0])
            text = leading[1].lstrip()
            continue
        parts = text.split(None, 1)
        text = parts[1] if len(parts) > 1 else ""
    return found


def _split_top_level(text: str) -> list[str]:
    "Splits by commas outside of brackets"
    parts, level, current = [], 0, []
    for char in text:
        if char in "<[({":
            level += 1
        elif char in ">])}":
            level -= 1
        if char == "," and level == 0:
            parts.append("".join(current))
            current = []
            continue
        current.append(char)
    if "".join(current).strip():
        parts.append("".join(current))
    return [p.strip() for p in parts]


def _strip_comment(line: str) -> str:
    in_quotes = False
    for index, char in enumerate(line):
        if char == '"':
            in_quotes = not in_quotes
        elif char == ";" and not in_quotes:
            return line[:index]
    return line


def _params(text: str, line: int, column: int) -> tuple[tuple[str, str], ...]:
    params = []
    for part in _split_top_level(text):
        if not part or part == "...":
            continue
        leading = _leading_type(part)
        if leading is None:
            raise ParseError(line, column, part, "parameter type expected")
        names = re.findall(rf"%{NAME}", leading[1])
        params.append((names[-1] if names else "", leading[0]))
    return tuple(params)


class _ModuleParser:
    "Line oriented parser of the supported IR subset"

    def __init__(self, ir_text: str) -> None:
        self.lines = ir_text.splitlines()
        self.functions: list[IrFunction] = []
        self.globals: list[str] = []
        self.function_header: tuple[str, str, tuple[tuple[str, str], ...], int] | None = None
        self.blocks: list[BasicBlock] = []
        self.block_label: str | None = None
        self.block_instructions: list[IrInstruction] = []

    def _error(self, line_no: int, token: str, reason: str) -> ParseError:
        line = self.lines[line_no - 1]
        column = line.find(token) + 1 if token and token in line else 1
        return ParseError(line_no, column, token, reason)

    def parse(self) -> IrModule:
        "Parses the whole text"
        line_no = 0
        while line_no < len(self.lines):
            line_no += 1
            text = " ".join(_strip_comment(self.lines[line_no - 1]).split())
            if not text:
                continue
            if self.function_header is None:
                self._top_level(text, line_no)
                continue
            if text == "}":
                self._close_function(line_no)
                continue
            if match := re.match(LABEL_REGEXP, text):
                self._open_block(match["label"], line_no)
                continue
            first_line = line_no
            while text.split(" ", 3)[:3].count("switch") and "]" not in text:
                if line_no >= len(self.lines):
                    raise self._error(first_line, "switch", "unterminated switch")
                line_no += 1
                text += " " + " ".join(_strip_comment(self.lines[line_no - 1]).split())
            self._instruction(text, first_line)
        if self.function_header is not None:
            raise self._error(len(self.lines), "", "missing closing brace of function")
        return IrModule(tuple(self.functions), tuple(self.globals))

    def _top_level(self, text: str, line_no: int) -> None:
        if text.startswith("define"):
            match = re.match(DEFINE_REGEXP, text)
            if not match:
                raise self._error(line_no, "define", "malformed function header")
            types = _types_in(match["pre"])
            if not types:
                raise self._error(line_no, match["name"], "return type expected")
            params = _params(match["params"], line_no, 1)
            self.function_header = (match["name"], types[-1], params, line_no)
            self.blocks = []
            self.block_label = None
            self.block_instructions = []
            return
        if text.startswith("declare"):
            match = re.match(DECLARE_REGEXP, text)
            if not match:
                raise self._error(line_no, "declare", "malformed declaration")
            types = _types_in(match["pre"])
            if not types:
                raise self._error(line_no, match["name"], "return type expected")
            self.functions.append(
                IrFunction(
                    match["name"],
                    types[-1],
                    _params(match["params"], line_no, 1),
                    is_defined=False,
                )
            )
            return
        if match := re.match(GLOBAL_REGEXP, text):
            self.globals.append(match["name"])
            return
        if text.startswith(SKIPPED_TOP_LEVEL):
            return
        raise self._error(line_no, text.split()[0], "unexpected top-level token")

    def _finish_block(self, line_no: int) -> None:
        if self.block_label is None:
            return
        if not self.block_instructions or not self.block_instructions[-1].is_terminator:
            raise self._error(line_no, "", f"block '{self.block_label}' lacks a terminator")
        if any(b.label == self.block_label for b in self.blocks):
            raise self._error(line_no, self.block_label, "duplicate block label")
        self.blocks.append(
            BasicBlock(
                self.block_label,
                tuple(self.block_instructions),
                self.block_instructions[-1].successors,
            )
        )
        self.block_label = None
        self.block_instructions = []

    def _open_block(self, label: str, line_no: int) -> None:
        if self.block_label is not None:
            self._finish_block(line_no)
        self.block_label = label

    def _close_function(self, line_no: int) -> None:
        self._finish_block(line_no)
        assert self.function_header is not None
        name, return_type, params, header_line = self.function_header
        if not self.blocks:
            raise self._error(header_line, name, "function body has no blocks")
        labels = {block.label for block in self.blocks}
        missing = []
        for block in self.blocks:
            for label in block.successor_labels:
                if label not in labels and label not in missing:
                    missing.append(label)
        if missing:
            raise UnresolvedLabel(name, missing)
        self.functions.append(IrFunction(name, return_type, params, tuple(self.blocks)))
        self.function_header = None

    def _instruction(self, text: str, line_no: int) -> None:
        if self.block_label is None:
            if self.blocks:
                raise self._error(line_no, text.split()[0], "instruction after terminator")
            self.block_label = "entry"
        elif self.block_instructions and self.block_instructions[-1].is_terminator:
            raise self._error(line_no, text.split()[0], "instruction after terminator")
        self.block_instructions.append(parse_instruction(text, line_no, self.lines))


def _result_type(opcode: str, rest: str) -> str | None:
    match opcode:
        case "icmp" | "fcmp":
            return "i1"
        case "alloca" | "getelementptr":
            return "ptr"
        case "br" | "switch" | "store" | "unreachable":
            return "void"
        case "ret":
            leading = _leading_type(rest)
            return leading[0] if leading else None
        case "call":
            callee_at = rest.find("@")
            types = _types_in(rest[:callee_at] if callee_at >= 0 else rest)
            return types[-1] if types else None
        case "select":
            parts = _split_top_level(rest)
            leading = _leading_type(parts[1]) if len(parts) > 1 else None
            return leading[0] if leading else None
        case "extractelement":
            leading = _leading_type(rest)
            if leading and leading[0].startswith("<"):
                return leading[0][1:-1].split(" x ", 1)[1]
            return None
        case _ if OPCODE_CATEGORIES.get(opcode) is InstructionCategory.CAST or opcode in (
            "sext",
            "zext",
        ):
            target = rest.rsplit(" to ", 1)
            leading = _leading_type(target[1]) if len(target) == 2 else None
            return leading[0] if leading else None
    leading = _leading_type(rest)
    return leading[0] if leading else None


def _operand_types(opcode: str, text: str) -> tuple[str, ...]:
    "Types of typed operands, a bare type such as the result type of `load` is not an operand"
    if opcode in ("icmp", "fcmp"):
        text = text.split(" ", 1)[1] if " " in text else ""
    found = []
    for part in _split_top_level(text):
        leading = _leading_type(part)
        if leading is not None and leading[1].strip() and leading[0] not in ("void", "label"):
            found.append(leading[0])
    return tuple(found)


def parse_instruction(text: str, line_no: int = 1, lines: list[str] | None = None) -> IrInstruction:
    "Parses one instruction in normalized single-line form"
    lines = lines if lines is not None else [text]

    def error(token: str, reason: str) -> ParseError:
        source = lines[line_no - 1] if 0 < line_no <= len(lines) else text
        column = source.find(token) + 1 if token in source else 1
        return ParseError(line_no, column, token, reason)

    match = re.match(INSTRUCTION_REGEXP, text)
    if not match:
        raise error(text, "instruction expected")
    words = match["body"].split(" ", 1)
    if words[0] in CALL_PREFIXES and len(words) > 1:
        words = words[1].split(" ", 1)
    opcode = words[0]
    rest = words[1] if len(words) > 1 else ""
    try:
        category = classify_instruction(opcode)
    except UnknownOpcode:
        raise error(opcode, "unknown opcode") from None
    rest = re.sub(TRAILER_REGEXP, "", rest).strip()
    shown = rest
    while rest.split(" ", 1)[0] in FLAG_WORDS:
        rest = rest.split(" ", 1)[1] if " " in rest else ""
    result_type = _result_type(opcode, rest)
    if result_type is None:
        raise error(rest.split(" ", 1)[0] if rest else opcode, "type expected")
    successors: tuple[str, ...] = ()
    callee = None
    argument_types: tuple[str, ...] = ()
    operands_text = rest
    match opcode:
        case "br" | "switch":
            successors = tuple(re.findall(LABEL_OPERAND_REGEXP, rest))
            operands_text = re.sub(LABEL_OPERAND_REGEXP, "", rest)
        case "phi":
            operands_text = " ".join(
                m["value"] for m in re.finditer(PHI_INCOMING_REGEXP, rest)
            )
        case "call":
            callee_match = re.search(CALLEE_REGEXP, rest)
            if not callee_match:
                raise error(opcode, "callee expected")
            callee = callee_match["callee"]
            arguments = rest[callee_match.end(): rest.rfind(")")]
            argument_types = tuple(
                leading[0]
                for leading in (_leading_type(arg) for arg in _split_top_level(arguments))
                if leading is not None
            )
            operands_text = arguments
    match opcode:
        case "call":
            operand_types = argument_types
        case "br" | "switch":
            operand_types = _operand_types(opcode, operands_text)
        case _:
            operand_types = _operand_types(opcode, rest)
    operand_ids = tuple(
        token
        for token in re.findall(VALUE_REGEXP, operands_text)
        if not token[1:].startswith(("struct.", "union.", "class."))
    )
    prefix = f"{match['result']} = " if match["result"] else ""
    return IrInstruction(
        opcode=opcode,
        category=category,
        result_type=result_type,
        result_id=match["result"],
        operand_ids=operand_ids,
        successors=successors,
        callee=callee,
        argument_types=argument_types,
        operand_types=operand_types,
        text=f"{prefix}{opcode} {shown}".strip(),
    )


def parse_module(ir_text: str) -> IrModule:
    "Parses textual IR of the supported subset into an IrModule"
    return _ModuleParser(ir_text).parse()


def print_module(module: IrModule) -> str:
    "Prints a module back to textual IR that parses into an identical module"
    out = [f"@{name} = external global i8" for name in module.globals]
    for function in module.functions:
        if not function.is_defined:
            types = ", ".join(t for _, t in function.params)
            out.append(f"declare {function.return_type} @{function.name}({types})")
            continue
        params = ", ".join(f"{t} {n}".strip() for n, t in function.params)
        out.append(f"define {function.return_type} @{function.name}({params}) {{")
        for block in function.blocks:
            out.append(f"{block.label}:")
            out.extend(f"  {instruction.text}" for instruction in block.instructions)
        out.append("}")
    return "\n".join(out) + "\n"


def category_counts(function: IrFunction) -> Counter[InstructionCategory]:
    "Totals of all nine instruction categories of a function"
    return Counter(i.category for i in function.instructions())


@dataclass(frozen=True)
class IrFeatures:
    "44 features of the IR of one function"
    math_max: float = 0.0
    math_avg: float = 0.0
    math_total: float = 0.0
    sext_max: float = 0.0
    sext_avg: float = 0.0
    sext_total: float = 0.0
    zext_max: float = 0.0
    zext_avg: float = 0.0
    zext_total: float = 0.0
    logic_max: float = 0.0
    logic_avg: float = 0.0
    logic_total: float = 0.0
    memory_max: float = 0.0
    memory_avg: float = 0.0
    memory_total: float = 0.0
    vector_max: float = 0.0
    vector_avg: float = 0.0
    vector_total: float = 0.0
    other_max: float = 0.0
    other_avg: float = 0.0
    other_total: float = 0.0
    instr_max: float = 0.0
    instr_avg: float = 0.0
    instr_total: float = 0.0
    block_count: float = 0.0
    instr_count: float = 0.0
    load_count: float = 0.0
    store_count: float = 0.0
    call_count: float = 0.0
    branch_count: float = 0.0
    distinct_type_count: float = 0.0
    widest_int_width: float = 0.0
    float_op_total: float = 0.0
    double_op_total: float = 0.0
    gep_count: float = 0.0
    phi_count: float = 0.0
    select_count: float = 0.0
    cmp_count: float = 0.0
    switch_count: float = 0.0
    ret_count: float = 0.0
    alloca_count: float = 0.0
    global_access_count: float = 0.0
    max_operands: float = 0.0
    avg_operands: float = 0.0

    @classmethod
    def names(cls) -> tuple[str, ...]:
        "Slot names in schema order"
        return tuple(f.name for f in fields(cls))

    def values(self) -> tuple[float, ...]:
        "Slot values in schema order"
        return tuple(float(v) for v in astuple(self))

    @classmethod
    def zero(cls) -> Self:
        "Features of an absent IR"
        return cls()


def _type_width(type_token: str) -> int:
    if match := re.search(r"\bi(\d+)\b", type_token):
        return int(match.group(1))
    return 0


def ir_features(function: IrFunction) -> IrFeatures:
    "Computes per-block instruction statistics of a defined function"
    if not function.is_defined or not function.blocks:
        raise EmptyFunction(f"function @{function.name} has no basic blocks")
    values: dict[str, float] = {}
    for category in COUNTED_CATEGORIES:
        per_block = [float(block.count(category)) for block in function.blocks]
        values[f"{category.value}_max"] = max(per_block)
        values[f"{category.value}_avg"] = fsum_mean(per_block)
        values[f"{category.value}_total"] = float(sum(per_block))
    sizes = [float(len(block.instructions)) for block in function.blocks]
    instructions = list(function.instructions())
    opcodes = Counter(i.opcode for i in instructions)
    types = {t for i in instructions for t in i.operand_types}
    operands = [float(len(i.operand_ids)) for i in instructions]
    return IrFeatures(
        **values,
        instr_max=max(sizes),
        instr_avg=fsum_mean(sizes),
        instr_total=float(sum(sizes)),
        block_count=float(len(function.blocks)),
        instr_count=float(len(instructions)),
        load_count=float(opcodes["load"]),
        store_count=float(opcodes["store"]),
        call_count=float(opcodes["call"]),
        branch_count=float(opcodes["br"]),
        distinct_type_count=float(len(types)),
        widest_int_width=float(max((_type_width(t) for t in types), default=0)),
        float_op_total=float(sum(1 for i in instructions if i.result_type == "float")),
        double_op_total=float(sum(1 for i in instructions if i.result_type == "double")),
        gep_count=float(opcodes["getelementptr"]),
        phi_count=float(opcodes["phi"]),
        select_count=float(opcodes["select"]),
        cmp_count=float(opcodes["icmp"] + opcodes["fcmp"]),
        switch_count=float(opcodes["switch"]),
        ret_count=float(opcodes["ret"]),
        alloca_count=float(opcodes["alloca"]),
        global_access_count=float(
            sum(1 for i in instructions if any(op.startswith("@") for op in i.operand_ids))
        ),
        max_operands=max(operands, default=0.0),
        avg_operands=fsum_mean(operands),
    )
