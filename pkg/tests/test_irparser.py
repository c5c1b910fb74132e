"""Tests of the IR parser and the IR feature family"""

import pytest

from lib.datatypes import InstructionCategory
from lib.exceptions import EmptyFunction, ParseError, UnknownOpcode, UnresolvedLabel
from lib.irparser import (
    IrFeatures,
    category_counts,
    classify_instruction,
    ir_features,
    normalize_type,
    parse_instruction,
    parse_module,
    print_module,
)

BRANCHY = """\
define void @g(i1 %c) {
entry:
  br i1 %c, label %t, label %f

t:
  ret void

f:
  ret void
}
"""

TWO_BLOCKS = """\
define i32 @h(i32 %a) {
entry:
  %x = add i32 %a, 1
  br label %more

more:
  %y = mul i32 %x, 3
  %z = sub i32 %y, %a
  %w = add i32 %z, 7
  ret i32 %w
}
"""


def test_minimal_module():
    module = parse_module("define void @f() {\n  ret void\n}\n")
    assert module.function_names == ("f",)
    (block,) = module.functions[0].blocks
    assert block.label == "entry"
    assert len(block.instructions) == 1
    assert block.successor_labels == ()


def test_branch_successors():
    function = parse_module(BRANCHY).get("g")
    assert function.block("entry").successor_labels == ("t", "f")
    assert function.params == (("%c", "i1"),)


def test_undefined_branch_target():
    with pytest.raises(UnresolvedLabel) as error:
        parse_module(BRANCHY.replace("label %f", "label %nowhere"))
    assert error.value.labels == ["nowhere"]


def test_declarations_and_globals():
    module = parse_module(
        "@table = internal constant [4 x i32] zeroinitializer\n"
        "declare i64 @llvm.ctlz.i64(i64, i1)\n"
        "define i32 @f() {\n"
        "  %p = getelementptr inbounds [4 x i32], [4 x i32]* @table, i64 0, i64 1\n"
        "  %v = load i32, i32* %p, align 4\n"
        "  ret i32 %v\n"
        "}\n"
    )
    assert module.globals == ("table",)
    declared = module.get("llvm.ctlz.i64")
    assert not declared.is_defined
    assert declared.params == (("", "i64"), ("", "i1"))
    assert ir_features(module.get("f")).global_access_count == 1


@pytest.mark.parametrize(
    "text, reason",
    [
        ("define void @f() {\n  %x = add i32 1, 2\n}\n", "lacks a terminator"),
        ("define void @f() {\n  ret void\n  ret void\n}\n", "after terminator"),
        ("define void @f() {\n  ret void\n", "missing closing brace"),
        ("define void @f() {\na:\n  br label %a\na:\n  ret void\n}\n", "duplicate block label"),
        ("hello world\n", "unexpected top-level token"),
    ],
)
def test_parse_errors(text, reason):
    with pytest.raises(ParseError, match=reason):
        parse_module(text)


def test_unknown_opcode_reports_position():
    with pytest.raises(ParseError) as error:
        parse_module("define void @f() {\n  %x = frobnicate i32 1\n  ret void\n}\n")
    assert error.value.line == 2
    assert error.value.token == "frobnicate"


def test_multiline_switch():
    module = parse_module(
        "define void @s(i32 %v) {\n"
        "entry:\n"
        "  switch i32 %v, label %other [\n"
        "    i32 0, label %zero\n"
        "    i32 1, label %zero\n"
        "  ]\n"
        "zero:\n"
        "  ret void\n"
        "other:\n"
        "  ret void\n"
        "}\n"
    )
    switch = module.get("s").block("entry").instructions[-1]
    assert switch.opcode == "switch"
    assert switch.successors == ("other", "zero", "zero")
    assert module.get("s").block("entry").successor_labels == ("other", "zero", "zero")
    assert switch.operand_ids == ("%v",)


class TestInstructions:
    @pytest.mark.parametrize(
        "opcode, category",
        [
            ("add", InstructionCategory.MATH),
            ("fmul", InstructionCategory.MATH),
            ("sext", InstructionCategory.SIGN_EXT),
            ("zext", InstructionCategory.ZERO_EXT),
            ("load", InstructionCategory.MEMORY),
            ("and", InstructionCategory.LOGIC),
            ("extractelement", InstructionCategory.VECTOR),
            ("br", InstructionCategory.CONTROL),
            ("trunc", InstructionCategory.CAST),
            ("phi", InstructionCategory.OTHER),
        ],
    )
    def test_classify(self, opcode, category):
        assert classify_instruction(opcode) is category

    def test_classify_unknown(self):
        with pytest.raises(UnknownOpcode):
            classify_instruction("frobnicate")

    @pytest.mark.parametrize(
        "text, result_type",
        [
            ("%c = icmp slt i32 %a, 64", "i1"),
            ("%p = getelementptr inbounds i32, i32* %in, i64 %i", "ptr"),
            ("store i32 %v, i32* %p, align 4", "void"),
            ("%w = sext i32 %a to i64", "i64"),
            ("%t = trunc i64 %a to i8", "i8"),
            ("%r = call i64 @f(i32 %a)", "i64"),
            ("%s = select i1 %c, float %a, float %b", "float"),
            ("%e = extractelement <4 x i32> %v, i32 0", "i32"),
            ("%x = fadd fast double %a, %b", "double"),
        ],
    )
    def test_result_types(self, text, result_type):
        assert parse_instruction(text).result_type == result_type

    def test_phi_operands_are_values(self):
        phi = parse_instruction("%i = phi i32 [ 0, %entry ], [ %i.next, %body ]")
        assert phi.operand_ids == ("%i.next",)
        assert phi.result_id == "%i"

    def test_call(self):
        call = parse_instruction("%r = tail call i32 @rotl(i32 %a, i32 5)")
        assert call.opcode == "call"
        assert call.callee == "rotl"
        assert call.argument_types == ("i32", "i32")
        assert call.operand_ids == ("%a",)

    def test_text_keeps_flags(self):
        assert parse_instruction("%x = add nsw i32 %a, 1").text == "%x = add nsw i32 %a, 1"

    @pytest.mark.parametrize(
        "token, expected",
        [("i32*", "ptr"), ("<4 x float>", "<4 x float>"), ("[8 x i16*]", "[8 x ptr]"), ("%struct.s", "struct")],
    )
    def test_normalize_type(self, token, expected):
        assert normalize_type(token) == expected


class TestIrFeatures:
    def test_single_block(self):
        function = parse_module(
            "define i32 @f(i32 %a) {\n  %x = add i32 %a, 1\n  %y = add i32 %x, 2\n  ret i32 %y\n}\n"
        ).get("f")
        features = ir_features(function)
        assert features.instr_total == 3
        assert features.instr_max == 3
        assert features.instr_avg == 3
        assert features.math_total == 2

    def test_two_blocks(self):
        features = ir_features(parse_module(TWO_BLOCKS).get("h"))
        assert features.math_max == 3
        assert features.math_avg == 2
        assert features.math_total == 4
        assert features.block_count == 2
        assert features.branch_count == 1
        assert features.ret_count == 1
        assert features.widest_int_width == 32

    def test_ret_void_only(self):
        function = parse_module("define void @f() {\n  ret void\n}\n").get("f")
        features = ir_features(function)
        for name in IrFeatures.names():
            if name.endswith("_total") and not name.startswith("instr"):
                assert getattr(features, name) == 0, name
        assert features.instr_total == 1
        assert category_counts(function)[InstructionCategory.CONTROL] == 1

    def test_declaration_has_no_features(self):
        module = parse_module("declare i32 @ext(i32)\n")
        with pytest.raises(EmptyFunction):
            ir_features(module.get("ext"))

    def test_types_come_from_operands(self):
        function = parse_module(
            "define void @f(i32 %v, ptr %p) {\n  store i32 %v, ptr %p\n  ret void\n}\n"
        ).get("f")
        features = ir_features(function)
        assert features.distinct_type_count == 2
        assert features.widest_int_width == 32

    @pytest.mark.parametrize(
        "text, operand_types",
        [
            ("%v = load i16, ptr %p", ("ptr",)),
            ("%c = icmp slt i64 %a, 64", ("i64",)),
            ("%w = zext i8 %a to i32", ("i8",)),
            ("%p = getelementptr inbounds i32, ptr %in, i64 %i", ("ptr", "i64")),
            ("br i1 %c, label %t, label %f", ("i1",)),
            ("call void @g(i32 %a, double %b)", ("i32", "double")),
            ("ret void", ()),
        ],
    )
    def test_operand_types(self, text, operand_types):
        assert parse_instruction(text).operand_types == operand_types

    @pytest.mark.parametrize("stem", ["average", "matrix_mult", "sobel", "sha", "dfadd"])
    def test_category_totals_add_up(self, corpus_dir, stem):
        module = parse_module((corpus_dir / f"{stem}.ll").read_text(encoding="utf-8"))
        for function in module.functions:
            if not function.is_defined:
                continue
            features = ir_features(function)
            counts = category_counts(function)
            assert sum(counts.values()) == features.instr_total
            assert features.instr_total == features.instr_count

    def test_forty_four_slots(self):
        assert len(IrFeatures.names()) == 44
        assert len(IrFeatures.zero().values()) == 44


@pytest.mark.parametrize("stem", ["average", "matrix_mult", "sobel", "sha", "dfadd"])
def test_print_then_parse(corpus_dir, stem):
    module = parse_module((corpus_dir / f"{stem}.ll").read_text(encoding="utf-8"))
    assert parse_module(print_module(module)) == module
