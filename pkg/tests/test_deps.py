"""Dependence analysis against hand-derived register/memory/edge tables."""
import pytest

from sasstune import (
    DepKind,
    build_depgraph,
    mem_refs,
    parse_kernel,
    reads_writes,
    swap_legal,
)
from sasstune.deps import to_dot


def ins_of(line: str):
    return parse_kernel(line + " ;\n").schedule[0]


# (line, reads, writes) derived by hand from the operand encodings
RW_TABLE = [
    ("LDG.E R0, [R2.64]", {"R2", "R3"}, {"R0"}),
    ("LDG.E.128 R4, [R2.64+0x10]", {"R2", "R3"}, {"R4", "R5", "R6", "R7"}),
    ("LDG.E.U8 R4, [R2.64]", {"R2", "R3"}, {"R4"}),
    ("LDG.E.64 R4, [R10]", {"R10"}, {"R4", "R5"}),
    ("STG.E [R8.64], R4", {"R8", "R9", "R4"}, set()),
    ("STG.E.128 [R8.64], R4", {"R8", "R9", "R4", "R5", "R6", "R7"}, set()),
    ("IMAD.WIDE R18, R9, 0x80, R10", {"R9", "R10", "R11"}, {"R18", "R19"}),
    ("IMAD.WIDE.U32 R16, R222, 0x2, R64", {"R222", "R64", "R65"}, {"R16", "R17"}),
    ("IMAD R7, R5, 0x3, R6", {"R5", "R6"}, {"R7"}),
    ("MOV R33, c[0x0][0x1b0]", set(), {"R33"}),
    ("IADD3 R6, R4, 0x10, RZ", {"R4"}, {"R6"}),
    ("ISETP.GE.AND P0, PT, R4, 0x20, PT", {"R4"}, {"P0"}),
    ("SEL R5, R1, R2, !P3", {"R1", "R2", "P3"}, {"R5"}),
    ("@!P0 MOV R1, RZ", {"P0"}, {"R1"}),
    ("LDGDEPBAR", set(), set()),
    ("EXIT", set(), set()),
    (
        "LDGSTS.E.BYPASS.128 [R219+0x4000], desc[UR16][R10.64], P0",
        {"R219", "R10", "R11", "UR16", "UR17", "P0"},
        set(),
    ),
    ("ATOM.E.ADD R0, [R4.64], R2", {"R4", "R5", "R2"}, {"R0"}),
    ("LDS R5, [R7+0x8]", {"R7"}, {"R5"}),
    ("STS [R7], R5", {"R7", "R5"}, set()),
]


@pytest.mark.parametrize("line,reads,writes", RW_TABLE, ids=[r[0] for r in RW_TABLE])
def test_reads_writes_table(line, reads, writes):
    r, w = reads_writes(ins_of(line))
    assert set(r) == reads
    assert set(w) == writes


def test_unknown_mnemonic_is_bidirectional():
    r, w = reads_writes(ins_of("XYZZY R1, R2"))
    assert set(r) == {"R1", "R2"}
    assert set(w) == {"R1", "R2"}


class TestMemRefs:
    def test_load_global(self):
        refs = mem_refs(ins_of("LDG.E R0, [R2.64+0x10]"))
        assert len(refs) == 1
        (ref,) = refs
        assert (ref.space, ref.base, ref.offset, ref.size, ref.write) == ("global", "R2", 0x10, 4, False)

    def test_store_width(self):
        (ref,) = mem_refs(ins_of("STG.E.128 [R8.64], R4"))
        assert ref.size == 16 and ref.write is True

    def test_async_copy_has_both_sides(self):
        refs = mem_refs(ins_of("LDGSTS.E.BYPASS.128 [R219+0x4000], desc[UR16][R10.64], P0"))
        spaces = {(r.space, r.write) for r in refs}
        assert spaces == {("shared", True), ("global", False)}

    def test_alu_has_none(self):
        assert mem_refs(ins_of("IADD3 R6, R4, 0x10, RZ")) == ()


class TestMemOrderEdges:
    def edges(self, text):
        k = parse_kernel(text)
        g = build_depgraph(k)
        return {(e.src, e.dst, e.kind) for e in g.edges}

    def test_same_base_overlap_orders(self):
        e = self.edges("STG.E [R2.64], R4 ;\nLDG.E R5, [R2.64] ;\n")
        assert (0, 1, DepKind.MEM_ORDER) in e

    def test_same_base_disjoint_is_free(self):
        e = self.edges("STG.E [R2.64], R4 ;\nLDG.E R5, [R2.64+0x4] ;\n")
        assert (0, 1, DepKind.MEM_ORDER) not in e

    def test_wide_store_reaches_later_cells(self):
        e = self.edges("STG.E.128 [R2.64], R4 ;\nLDG.E R8, [R2.64+0xc] ;\n")
        assert (0, 1, DepKind.MEM_ORDER) in e

    def test_unknown_bases_alias(self):
        e = self.edges("STG.E [R2.64], R6 ;\nLDG.E R5, [R4.64] ;\n")
        assert (0, 1, DepKind.MEM_ORDER) in e

    def test_global_read_read_is_still_ordered(self):
        e = self.edges("LDG.E R5, [R2.64] ;\nLDG.E R6, [R4.64] ;\n")
        assert (0, 1, DepKind.MEM_ORDER) in e

    def test_distinct_spaces_never_alias(self):
        e = self.edges("STS [R7], R5 ;\nLDG.E R6, [R2.64] ;\n")
        assert (0, 1, DepKind.MEM_ORDER) not in e


class TestRegisterEdges:
    def test_raw_war_waw(self):
        k = parse_kernel(
            "MOV R1, RZ ;\n"        # writes R1
            "IADD3 R2, R1, 0x1, RZ ;\n"  # reads R1 -> RAW(0,1)
            "MOV R1, RZ ;\n"        # rewrites R1 -> WAR(1,2), WAW(0,2)
        )
        kinds = {(e.src, e.dst, e.kind) for e in build_depgraph(k).edges}
        assert (0, 1, DepKind.REG_RAW) in kinds
        assert (1, 2, DepKind.REG_WAR) in kinds
        assert (0, 2, DepKind.REG_WAW) in kinds

    def test_pair_expansion_creates_raw(self):
        k = parse_kernel(
            "IMAD.WIDE R18, R9, 0x80, R10 ;\n"  # writes R18, R19
            "IADD3 R0, R19, 0x1, RZ ;\n"        # reads the high half
        )
        kinds = {(e.src, e.dst, e.kind) for e in build_depgraph(k).edges}
        assert (0, 1, DepKind.REG_RAW) in kinds


class TestBarrierEdges:
    def test_setter_waiter_and_reuse(self):
        k = parse_kernel(
            "[B------:R-:W0:-:S01] LDG.E R4, [R2.64] ;\n"
            "[B0-----:R-:W-:-:S01] IADD3 R5, R4, 0x1, RZ ;\n"
            "[B------:R-:W0:-:S01] LDG.E R6, [R2.64+0x8] ;\n"
            "[B0-----:R-:W-:-:S01] IADD3 R7, R6, 0x1, RZ ;\n"
        )
        pairs = {(e.src, e.dst) for e in build_depgraph(k).edges if e.kind is DepKind.BARRIER_PAIR}
        assert (0, 1) in pairs  # setter before waiter
        assert (1, 2) in pairs  # waiter before the next setter of the slot
        assert (2, 3) in pairs

    def test_read_barrier_pairs_too(self):
        k = parse_kernel(
            "[B------:R1:W-:-:S01] STG.E [R8.64], R4 ;\n"
            "[B-1----:R-:W-:-:S01] MOV R4, RZ ;\n"
        )
        pairs = {(e.src, e.dst) for e in build_depgraph(k).edges if e.kind is DepKind.BARRIER_PAIR}
        assert (0, 1) in pairs


class TestStageA:
    EXPECTED = {
        (0, 2, DepKind.MEM_ORDER),
        (0, 4, DepKind.MEM_ORDER),
        (0, 6, DepKind.MEM_ORDER),
        (2, 4, DepKind.MEM_ORDER),
        (2, 6, DepKind.MEM_ORDER),
        (4, 6, DepKind.MEM_ORDER),
        (0, 5, DepKind.REG_WAR),
        (1, 5, DepKind.REG_WAR),
        (0, 8, DepKind.BLOCK_FENCE),
        (1, 8, DepKind.BLOCK_FENCE),
        (2, 8, DepKind.BLOCK_FENCE),
        (3, 8, DepKind.BLOCK_FENCE),
        (4, 8, DepKind.BLOCK_FENCE),
        (5, 8, DepKind.BLOCK_FENCE),
        (6, 8, DepKind.BLOCK_FENCE),
        (7, 8, DepKind.BLOCK_FENCE),
    }

    def test_full_edge_set(self, stage_a_text):
        k = parse_kernel(stage_a_text)
        got = {(e.src, e.dst, e.kind) for e in build_depgraph(k).edges}
        assert got == self.EXPECTED

    def test_published_swaps_are_legal(self, stage_a_text):
        k = parse_kernel(stage_a_text)
        g = build_depgraph(k)
        assert swap_legal(g, k, 0)  # async copy past the first address product
        assert swap_legal(g, k, 5)  # second address product past the last copy

    def test_fence_pins_the_tail(self, stage_a_text):
        k = parse_kernel(stage_a_text)
        g = build_depgraph(k)
        assert not swap_legal(g, k, 7)  # nothing crosses the dependency barrier


class TestSwapLegality:
    def test_dependent_pair_is_illegal(self):
        k = parse_kernel(
            "[B------:R-:W0:-:S01] LDG.E R4, [R2.64] ;\n"
            "[B0-----:R-:W-:-:S01] IADD3 R5, R4, 0x1, RZ ;\n"
        )
        assert not swap_legal(build_depgraph(k), k, 0)

    def test_block_cut_is_illegal_even_without_edges(self, rich_text):
        k = parse_kernel(rich_text)
        g = build_depgraph(k)
        assert 2 in k.block_boundaries
        assert not swap_legal(g, k, 1)

    def test_out_of_range(self, stage_a_text):
        k = parse_kernel(stage_a_text)
        g = build_depgraph(k)
        assert not swap_legal(g, k, -1)
        assert not swap_legal(g, k, len(k) - 1)


def test_to_dot_renders_edges(stage_a_text):
    k = parse_kernel(stage_a_text)
    dot = to_dot(build_depgraph(k), k)
    assert dot.startswith("digraph")
    assert "MemOrder" in dot and "->" in dot
