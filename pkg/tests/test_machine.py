"""Timing simulator and functional interpreter against hand-worked traces."""
import struct

import pytest

from sasstune import (
    InstrClass,
    MachineConfig,
    OutOfBoundsAccess,
    UninitializedRead,
    UnsupportedInstruction,
    interpret,
    parse_kernel,
    simulate,
)

import kernels


PREAMBLE = (
    "MOV R2, c[0x0][0x160] ;\n"
    "MOV R3, c[0x0][0x164] ;\n"
    "MOV R8, c[0x0][0x168] ;\n"
    "MOV R9, c[0x0][0x16c] ;\n"
)


def run_body(body, buffers, ret_ptr=1, **kw):
    """Interpret PREAMBLE + body: R2:R3 = arg0 pointer, R8:R9 = arg1."""
    return interpret(parse_kernel(PREAMBLE + body), buffers, ret_ptr=ret_ptr, **kw)


def words(raw):
    return struct.unpack(f"<{len(raw) // 4}I", raw)


class TestMachineConfig:
    def test_defaults(self):
        cfg = MachineConfig()
        assert cfg.global_mem_latency == 400
        assert cfg.barrier_count == 6
        assert cfg.issue_width == 1

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"issue_width": 2},
            {"global_mem_latency": 0},
            {"cpi_table": {"FFMA": 0}},
        ],
    )
    def test_rejects_bad_parameters(self, kwargs):
        with pytest.raises(ValueError):
            MachineConfig(**kwargs)

    @pytest.mark.parametrize(
        "line,expected",
        [
            ("FFMA R0, R1, R2, R3 ;", 4),
            ("IMAD R0, R1, R2, R3 ;", 5),
            ("IMAD.WIDE.U32 R0, R1, R2, R4 ;", 5),  # prefix match ignores modifiers
            ("POPC R0, R1 ;", 15),
            ("MOV R0, RZ ;", 4),       # compute-class fallback
            ("LDS R0, [R1] ;", 30),
            ("STS [R1], R0 ;", 30),
            ("BAR.SYNC 0x0 ;", 1),
            ("EXIT ;", 1),
            ("LDG.E R0, [R2.64] ;", 400),   # global class wins over any prefix
            ("STG.E [R2.64], R0 ;", 400),
            ("LDGSTS.E [R1], [R2.64] ;", 400),
        ],
    )
    def test_latency_of_defaults(self, line, expected):
        ins = parse_kernel(line + "\n").schedule[0]
        assert MachineConfig().latency_of(ins) == expected

    def test_latency_longest_prefix_wins(self):
        cfg = MachineConfig(cpi_table={"IMAD": 5, "IMAD.WIDE": 9})
        wide = parse_kernel("IMAD.WIDE.U32 R4, R0, R1, R2 ;\n").schedule[0]
        plain = parse_kernel("IMAD R4, R0, R1, R2 ;\n").schedule[0]
        assert cfg.latency_of(wide) == 9
        assert cfg.latency_of(plain) == 5

    def test_from_dict(self):
        cfg = MachineConfig.from_dict(
            {
                "global_mem_latency": 120,
                "cpi": {"ffma": 6},
                "class_cpi": {"SharedLoad": 25},
            }
        )
        assert cfg.global_mem_latency == 120
        assert cfg.cpi_table["FFMA"] == 6
        assert cfg.class_cpi[InstrClass.SHARED_LOAD] == 25


class TestSimulate:
    def test_empty_kernel(self):
        assert simulate(parse_kernel("")).total_cycles == 0

    def test_plain_compute_sequence(self):
        # No control codes: stall defaults to 1, MOV latency 4.
        # Issues at 0,1,2; last result ready at 2+4 = 6.
        k = parse_kernel("MOV R0, RZ ;\nMOV R1, RZ ;\nMOV R2, RZ ;\n")
        assert simulate(k).total_cycles == 6

    def test_single_global_load(self, data_dir):
        k = parse_kernel((data_dir / "ctrl_example.sass").read_text())
        r = simulate(k)
        # issue 0, result at 0+400; pointer only reaches 2
        assert r.total_cycles == 400
        assert r.instruction_count == 1
        assert r.stalls == ((0, 0),)

    def test_pipeline_trace(self, pipeline_text):
        # Hand trace: MOVs issue 0..3, LDGs issue 4 and 5 setting B0/B1
        # (clear at 404, 405).  IADD3 wants to issue at 6 but waits on B0
        # until 404, a 398-cycle stall; B1 is already clear when IMAD goes.
        # Tail: IMAD 406, LOP3 408, SHF 409, STG 410 (done 810), EXIT 412.
        r = simulate(parse_kernel(pipeline_text))
        assert r.total_cycles == 810
        assert r.instruction_count == 12
        assert [s for s in r.stalls if s[1]] == [(6, 398)]
        assert dict(r.barrier_waits) == {0: 398}

    def test_pipeline_latency_knob(self, pipeline_text):
        # Same trace with 40-cycle memory: stall shrinks to 38,
        # total 810 - 2*360 ... worked by hand: 90.
        r = simulate(parse_kernel(pipeline_text), MachineConfig(global_mem_latency=40))
        assert r.total_cycles == 90
        assert [s for s in r.stalls if s[1]] == [(6, 38)]

    def test_report_json(self, pipeline_text):
        r = simulate(parse_kernel(pipeline_text))
        assert r.to_json() == (
            '{"barrier_waits": {"0": 398}, "instruction_count": 12, '
            '"stalls": [[0, 0], [1, 0], [2, 0], [3, 0], [4, 0], [5, 0], '
            '[6, 398], [7, 0], [8, 0], [9, 0], [10, 0], [11, 0]], '
            '"total_cycles": 810}'
        )

    @pytest.mark.parametrize("pads", [0, 1, 4, 8])
    @pytest.mark.parametrize("stall", [1, 3, 12, 15])
    def test_latency_hiding_closed_form(self, pads, stall):
        # Every pad issued before the load hides none of its latency;
        # every pad after it hides `stall` cycles, until the consumer
        # stops waiting at all.
        for load_at in range(pads + 1):
            k = parse_kernel(kernels.hiding_kernel(pads, stall, load_at))
            expect = kernels.hiding_total(load_at, stall)
            assert simulate(k).total_cycles == expect, (pads, stall, load_at)

    def test_yield_flag_has_no_timing_effect(self):
        a = parse_kernel("[B------:R-:W-:-:S04] MOV R0, RZ ;\n[B------:R-:W-:-:S01] EXIT ;\n")
        b = parse_kernel("[B------:R-:W-:Y:S04] MOV R0, RZ ;\n[B------:R-:W-:Y:S01] EXIT ;\n")
        assert simulate(a).total_cycles == simulate(b).total_cycles == 5

    def test_wait_on_unset_barrier_is_free(self):
        k = parse_kernel("[B---3--:R-:W-:-:S01] MOV R0, RZ ;\nEXIT ;\n")
        r = simulate(k)
        assert r.total_cycles == 4
        assert dict(r.barrier_waits) == {}


class TestInterpretPrograms:
    def test_pipeline_value(self, pipeline_text):
        # ((5 + 0x10) + 7*3) & 0xff = 42, then << 2 = 168
        k = parse_kernel(pipeline_text)
        out = interpret(k, {0: struct.pack("<2I", 5, 7), 1: b"\x00" * 4}, ret_ptr=1)
        assert words(out) == (168,)

    def test_control_codes_do_not_affect_values(self, pipeline_text):
        # interpret() must be a pure function of operands: inflating every
        # stall leaves the output bit-identical.
        slow = pipeline_text.replace(":S01]", ":S15]").replace(":S02]", ":S15]")
        assert slow != pipeline_text
        args = {0: struct.pack("<2I", 5, 7), 1: b"\x00" * 4}
        assert interpret(parse_kernel(slow), args, ret_ptr=1) == interpret(
            parse_kernel(pipeline_text), args, ret_ptr=1
        )

    @pytest.mark.parametrize("seed", range(10))
    def test_random_programs_match_reference_evaluator(self, seed):
        text, evaluate = kernels.random_program(seed)
        k = parse_kernel(text)
        import random

        rng = random.Random(seed * 77 + 5)
        for _ in range(5):
            xs = [rng.getrandbits(32) for _ in range(4)]
            buffers = {0: struct.pack("<4I", *xs), 1: b"\x00" * 16}
            out = interpret(k, buffers, ret_ptr=1)
            assert list(words(out)) == evaluate(xs), (seed, xs)

    def test_input_buffers_not_mutated(self, pipeline_text):
        src = bytearray(struct.pack("<2I", 5, 7))
        interpret(parse_kernel(pipeline_text), {0: src, 1: b"\x00" * 4}, ret_ptr=1)
        assert src == struct.pack("<2I", 5, 7)


class TestInterpretOps:
    """Single-op checks; expected values computed by hand."""

    def test_lea(self):
        body = (
            "MOV32I R4, 0x5 ;\nMOV32I R5, 0x30 ;\n"
            "LEA R6, R4, R5, 0x2 ;\n"      # 0x30 + (5 << 2) = 0x44
            "LEA R7, R4, R5 ;\n"           # 0x30 + 5 = 0x35
            "STG.E [R8.64], R6 ;\nSTG.E [R8.64+0x4], R7 ;\n"
        )
        assert words(run_body(body, {1: b"\x00" * 8})) == (0x44, 0x35)

    @pytest.mark.parametrize("x,expect", [(5, 0xAA), (50, 0xBB)])
    def test_sel_follows_predicate(self, x, expect):
        body = (
            "LDG.E R4, [R2.64] ;\n"
            "ISETP.LT.AND P0, PT, R4, 0x10, PT ;\n"
            "MOV32I R5, 0xaa ;\nMOV32I R6, 0xbb ;\n"
            "SEL R7, R5, R6, P0 ;\nSTG.E [R8.64], R7 ;\n"
        )
        out = run_body(body, {0: struct.pack("<I", x), 1: b"\x00" * 4})
        assert words(out) == (expect,)

    def test_imad_wide_signed(self):
        body = (
            "MOV32I R4, 0xfffffffd ;\nMOV32I R0, 0x5 ;\n"
            "MOV32I R6, 0x10 ;\nMOV32I R7, 0x0 ;\n"
            "IMAD.WIDE R10, R4, R0, R6 ;\n"   # (-3)*5 + 16 = 1 over 64 bits
            "STG.E.64 [R8.64], R10 ;\n"
        )
        out = run_body(body, {1: b"\x00" * 8})
        assert struct.unpack("<q", out) == (1,)

    def test_imad_wide_unsigned(self):
        body = (
            "MOV32I R4, 0xfffffffd ;\nMOV32I R0, 0x5 ;\n"
            "MOV32I R6, 0x10 ;\nMOV32I R7, 0x0 ;\n"
            "IMAD.WIDE.U32 R10, R4, R0, R6 ;\n"
            "STG.E.64 [R8.64], R10 ;\n"
        )
        out = run_body(body, {1: b"\x00" * 8})
        assert struct.unpack("<Q", out) == (0xFFFFFFFD * 5 + 0x10,)

    def test_narrow_load_extension(self):
        # byte at +1 of 0x80F091A2 is 0x91 (zero-extended);
        # halfword at +2 is 0x80F0 (sign-extended)
        body = (
            "LDG.E.U8 R4, [R2.64+0x1] ;\nLDG.E.S16 R5, [R2.64+0x2] ;\n"
            "STG.E [R8.64], R4 ;\nSTG.E [R8.64+0x4], R5 ;\n"
        )
        out = run_body(body, {0: struct.pack("<I", 0x80F091A2), 1: b"\x00" * 8})
        assert words(out) == (0x91, 0xFFFF80F0)

    def test_shared_store_load_roundtrip(self):
        body = (
            "MOV32I R7, 0x100 ;\nMOV32I R5, 0xbeef ;\n"
            "STS [R7], R5 ;\nLDS R6, [R7] ;\nSTG.E [R8.64], R6 ;\n"
        )
        assert words(run_body(body, {1: b"\x00" * 4})) == (0xBEEF,)

    def test_async_copy_lands_in_shared(self):
        body = (
            "MOV32I R7, 0x100 ;\n"
            "LDGSTS [R7], [R2.64] ;\n"
            "LDS R5, [R7] ;\nSTG.E [R8.64], R5 ;\n"
        )
        out = run_body(body, {0: struct.pack("<I", 0x1234ABCD), 1: b"\x00" * 4})
        assert words(out) == (0x1234ABCD,)

    def test_special_register_reads_are_zero(self):
        # single-thread model: thread/lane indices read as 0
        body = (
            "S2R R4, SR_TID.X ;\nCS2R R5, SRZ ;\n"
            "STG.E [R8.64], R4 ;\nSTG.E [R8.64+0x4], R5 ;\n"
        )
        assert words(run_body(body, {1: b"\x00" * 8})) == (0, 0)

    def test_ldc_matches_mov_from_constant_bank(self):
        body = (
            "LDC R4, c[0x0][0x160] ;\n"
            "LDC.64 R6, c[0x0][0x160] ;\n"
            "STG.E [R8.64], R4 ;\nSTG.E.64 [R8.64+0x4], R6 ;\n"
            "STG.E [R8.64+0xc], R2 ;\n"
        )
        lo, lo2, hi, mov_lo = words(run_body(body, {0: b"\x00" * 4, 1: b"\x00" * 16}))
        assert lo == mov_lo          # LDC sees the same bank as MOV c[][]
        assert (lo2, hi) == (lo, 0)  # .64 reads the adjacent slot

    def test_imnmx(self):
        body = (
            "MOV32I R4, 0xffffffff ;\nMOV32I R5, 0x2 ;\n"
            "IMNMX R6, R4, R5, PT ;\n"        # signed min(-1, 2) = -1
            "IMNMX R7, R4, R5, !PT ;\n"       # signed max = 2
            "IMNMX.U32 R10, R4, R5, PT ;\n"   # unsigned min = 2
            "STG.E [R8.64], R6 ;\nSTG.E [R8.64+0x4], R7 ;\nSTG.E [R8.64+0x8], R10 ;\n"
        )
        assert words(run_body(body, {1: b"\x00" * 12})) == (0xFFFFFFFF, 2, 2)

    def test_shf_funnel_variants(self):
        body = (
            "MOV32I R4, 0x80000001 ;\n"
            "SHF.R.U32.HI R5, RZ, 0x4, R4 ;\n"  # logical: hi word of 64-bit >> 4
            "SHF.R.S32.HI R6, RZ, 0x4, R4 ;\n"  # arithmetic: sign fills in
            "SHF.L.U32 R7, R4, 0x4, RZ ;\n"     # plain left shift, low word
            "STG.E [R8.64], R5 ;\nSTG.E [R8.64+0x4], R6 ;\nSTG.E [R8.64+0x8], R7 ;\n"
        )
        out = words(run_body(body, {1: b"\x00" * 12}))
        assert out == (0x08000000, 0xF8000000, 0x00000010)

    def test_guard_gating(self):
        body = (
            "MOV32I R4, 0x1 ;\n"
            "ISETP.NE.AND P0, PT, R4, RZ, PT ;\n"
            "MOV32I R5, 0x11 ;\n"
            "@P0 MOV32I R5, 0x22 ;\n"
            "@!P0 MOV32I R5, 0x33 ;\n"
            "STG.E [R8.64], R5 ;\n"
        )
        assert words(run_body(body, {1: b"\x00" * 4})) == (0x22,)

    def test_unset_predicate_guard_skips(self):
        # P3 never written: reads False, so the guarded write is skipped
        body = "MOV32I R5, 0x11 ;\n@P3 MOV32I R5, 0x22 ;\nSTG.E [R8.64], R5 ;\n"
        assert words(run_body(body, {1: b"\x00" * 4})) == (0x11,)

    def test_exit_halts(self):
        body = (
            "MOV32I R4, 0x7 ;\nSTG.E [R8.64], R4 ;\nEXIT ;\n"
            "MOV32I R5, 0x9 ;\nSTG.E [R8.64+0x4], R5 ;\n"
        )
        assert words(run_body(body, {1: b"\x00" * 8})) == (7, 0)


class TestInterpretErrors:
    def test_unwritten_register_reads_zero_by_default(self):
        out = run_body("STG.E [R8.64], R40 ;\n", {1: b"\x00" * 4})
        assert words(out) == (0,)

    def test_strict_mode_rejects_unwritten_register(self):
        with pytest.raises(UninitializedRead, match="R40"):
            run_body("STG.E [R8.64], R40 ;\n", {0: b"\x00" * 4, 1: b"\x00" * 4}, strict=True)

    def test_strict_mode_rejects_unbound_argument_slot(self):
        # arg 0 is never bound, so its pointer slot was never populated
        with pytest.raises(UninitializedRead, match=r"c\[0x0\]\[0x160\]"):
            run_body("STG.E [R8.64], RZ ;\n", {1: b"\x00" * 4}, strict=True)

    def test_global_out_of_bounds(self):
        with pytest.raises(OutOfBoundsAccess):
            run_body(
                "LDG.E R4, [R2.64+0x100] ;\nSTG.E [R8.64], R4 ;\n",
                {0: b"\x00" * 4, 1: b"\x00" * 4},
            )

    def test_shared_out_of_bounds(self):
        body = "MOV32I R7, 0x10000 ;\nMOV32I R5, 0x1 ;\nSTS [R7], R5 ;\nSTG.E [R8.64], R5 ;\n"
        with pytest.raises(OutOfBoundsAccess):
            run_body(body, {1: b"\x00" * 4})

    def test_ret_ptr_must_be_bound(self):
        with pytest.raises(ValueError, match="ret_ptr"):
            run_body("STG.E [R8.64], RZ ;\n", {1: b"\x00" * 4}, ret_ptr=3)

    @pytest.mark.parametrize(
        "line",
        [
            "BRA 0x10 ;",                              # control flow
            "LDG.E R4, desc[UR4][R2.64] ;",            # descriptor addressing
            "ISETP.LT.AND P0, P1, R4, RZ, PT ;",       # dual predicate outputs
            "SHF.L.U64.HI R5, R4, 0x4, R4 ;",          # unmodeled shift form
            "F2F.F32.F64 R4, R6 ;",                    # no float pipeline
        ],
    )
    def test_unsupported_forms(self, line):
        with pytest.raises(UnsupportedInstruction):
            run_body(line + "\n" + "STG.E [R8.64], RZ ;\n", {0: b"\x00" * 4, 1: b"\x00" * 4})
