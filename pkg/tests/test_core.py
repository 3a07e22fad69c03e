import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from onlad.core import fixed as fx
from onlad.core import (
    CoreState, Fixed32, Mode, Packet, PREDICT_PACKET, TRAIN_PACKET, cost_report, decode_packet,
    encode_packet, ff_packet, input_packets, model_packets, read_trace, run, write_trace,
)
from onlad.core.cost import i_batch, i_inv, i_prod, s_onlad, s_parameter
from onlad.core.packet import INDEX_LIMIT
from onlad.detector import mse
from onlad.errors import PacketError
from onlad.oselm import OselmModel

raws = st.integers(fx.RAW_MIN, fx.RAW_MAX)


def float_model(n=16, nh=4, seed=0, k0=40):
    g = np.random.default_rng(seed)
    model = OselmModel.new_random(n, nh, n, "identity", seed)
    model.init_batch(g.uniform(size=(k0, n)), g.uniform(size=(k0, n)))
    return model, g


def loaded_core(model, ff=1.0):
    state = CoreState(model.n, model.n_hidden)
    run(state, model_packets(model) + [ff_packet(ff)])
    return state


class TestFixed32:
    def test_one(self):
        assert Fixed32.from_float(1.0).to_bits() == 0x00010000

    def test_floor_quantization(self):
        assert Fixed32.from_float(0.95).raw == 62259
        assert Fixed32.from_float(-0.5 / 65536).raw == -1

    @given(raws)
    def test_bits_round_trip(self, raw):
        v = Fixed32(raw)
        assert Fixed32.from_bits(v.to_bits()) == v

    @given(raws, raws)
    def test_add_saturates(self, a, b):
        assert (Fixed32(a) + Fixed32(b)).raw == min(max(a + b, fx.RAW_MIN), fx.RAW_MAX)

    @given(raws, raws)
    def test_mul_matches_exact_rounding(self, a, b):
        exact = a * b / fx.SCALE
        got = (Fixed32(a) * Fixed32(b)).raw
        if fx.RAW_MIN < exact < fx.RAW_MAX:
            assert abs(got - exact) <= 0.5
        else:
            assert got in (fx.RAW_MIN, fx.RAW_MAX)

    def test_extremes_do_not_wrap(self):
        big = Fixed32(fx.RAW_MAX)
        assert (big + big).raw == fx.RAW_MAX
        assert (-Fixed32(fx.RAW_MIN)).raw == fx.RAW_MAX
        assert (Fixed32.from_float(300.0) * Fixed32.from_float(300.0)).raw == fx.RAW_MAX
        assert Fixed32.from_float(1e12).raw == fx.RAW_MAX

    def test_division(self):
        assert (Fixed32.from_float(1.0) / Fixed32.from_float(4.0)).to_float() == 0.25
        assert (Fixed32.from_float(1.0) / Fixed32(0)).raw == fx.RAW_MAX

    def test_out_of_range_raw(self):
        with pytest.raises(OverflowError):
            Fixed32(fx.RAW_MAX + 1)

    def test_matmul_exact_accumulation(self, rng):
        a = rng.integers(-5 * fx.SCALE, 5 * fx.SCALE, size=(3, 7))
        b = rng.integers(-5 * fx.SCALE, 5 * fx.SCALE, size=(7, 2))
        ref = np.array([[round_half_up(sum(int(a[i, k]) * int(b[k, j]) for k in range(7)))
                         for j in range(2)] for i in range(3)])
        np.testing.assert_array_equal(fx.matmul(a, b), ref)


def round_half_up(wide):
    return (wide + fx.SCALE // 2) // fx.SCALE


class TestPacket:
    def test_training_word(self):
        assert TRAIN_PACKET == 0xC000000000000000

    def test_layout(self):
        w = encode_packet(Mode.UPDATE_P, 5, Fixed32.from_float(-1.0))
        assert w >> 61 == 2
        assert (w >> 32) & (INDEX_LIMIT - 1) == 5
        assert w & 0xFFFFFFFF == 0xFFFF0000

    @given(st.sampled_from(list(Mode)), st.integers(0, INDEX_LIMIT - 1), raws)
    def test_round_trip(self, mode, index, raw):
        w = encode_packet(mode, index, Fixed32(raw))
        assert decode_packet(w) == (mode, index, Fixed32(raw))
        assert Packet.from_word(w).word == w

    def test_index_too_large(self):
        with pytest.raises(PacketError):
            encode_packet(Mode.UPDATE_ALPHA, INDEX_LIMIT)

    def test_word_out_of_range(self):
        with pytest.raises(PacketError):
            decode_packet(1 << 64)


class TestTraceFiles:
    def test_round_trip(self, tmp_path):
        words = [TRAIN_PACKET, PREDICT_PACKET, encode_packet(Mode.UPDATE_B, 3, Fixed32(-7))]
        write_trace(tmp_path / "t.hex", words)
        assert read_trace(tmp_path / "t.hex") == words

    def test_comments_and_blanks(self, tmp_path):
        (tmp_path / "t.hex").write_text("# header\n\nC000000000000000  # train\n")
        assert read_trace(tmp_path / "t.hex") == [TRAIN_PACKET]

    @pytest.mark.parametrize("bad", ["C00000000000000", "G000000000000000"])
    def test_malformed_line_number(self, tmp_path, bad):
        (tmp_path / "t.hex").write_text(f"C000000000000000\n{bad}\n")
        with pytest.raises(PacketError, match=r"t\.hex:2:"):
            read_trace(tmp_path / "t.hex")


class TestCoreState:
    def test_buffer_sizes(self):
        s = CoreState(16, 4)
        assert (s.alpha.size, s.beta.size, s.p.size, s.b.size, s.x.size) == (64, 64, 16, 4, 16)
        assert s.parameter_elements == 4 * 4 + 2 * 16 * 4 + 4

    def test_update_input(self):
        s = CoreState(8, 2)
        assert s.step(encode_packet(Mode.UPDATE_INPUT, 3, Fixed32.from_float(0.25))) is None
        assert s.x[3] == 0.25 * fx.SCALE

    def test_update_ff(self):
        s = CoreState(8, 2)
        s.step(ff_packet(0.95))
        assert s.ff.raw == 62259

    def test_out_of_range_index_rejected(self):
        s = CoreState(8, 2)
        before = s.alpha.copy()
        assert s.step(encode_packet(Mode.UPDATE_ALPHA, 16, Fixed32.from_float(1.0))) is None
        assert s.rejected == 1
        np.testing.assert_array_equal(s.alpha, before)

    def test_as_float_shapes(self):
        model, _ = float_model()
        s = loaded_core(model)
        np.testing.assert_allclose(s.as_float("alpha"), model.alpha, atol=2 ** -16)
        assert s.as_float("beta").shape == (4, 16)


class TestPredict:
    @pytest.mark.parametrize("seed", range(5))
    def test_matches_float_reference(self, seed):
        model, g = float_model(seed=seed)
        s = loaded_core(model)
        for _ in range(10):
            x = g.uniform(size=(1, 16))
            [word] = run(s, input_packets(x) + [PREDICT_PACKET])
            ref = mse(x, model.predict(x))[0]
            assert abs(Fixed32.from_bits(word).to_float() - ref) <= 1e-2


class TestTrain:
    def test_success_and_tracking(self):
        model, g = float_model(seed=3)
        s = loaded_core(model, ff=0.99)
        ref = model.copy()
        for _ in range(100):
            x = g.uniform(size=(1, 16))
            assert run(s, input_packets(x) + [TRAIN_PACKET]) == [1]
            ref.update_forget(x, x, 0.99)
        assert np.abs(s.as_float("beta") - ref.beta).max() < 0.05

    def test_scratch_flow(self):
        model, g = float_model(seed=4)
        s = loaded_core(model)
        p_before = s.as_float("p")
        x = g.uniform(size=(1, 16))
        run(s, input_packets(x) + [TRAIN_PACKET])
        h = fx.to_float_array(s.scratch["h"])
        np.testing.assert_allclose(h, x @ s.as_float("alpha") + s.as_float("b"), atol=1e-3)
        o3 = fx.to_float_array(s.scratch["O3"])[0, 0]
        assert o3 == pytest.approx(1 + (h @ p_before @ h.T).item(), abs=1e-3)

    def test_guard_trigger_returns_zero_and_keeps_state(self):
        model, g = float_model(seed=5)
        model.p = -2.0 * np.eye(4)          # 1 + h P h^T < 0 for any non-trivial h
        s = loaded_core(model)
        p, beta = s.p.copy(), s.beta.copy()
        assert run(s, input_packets(g.uniform(size=(1, 16))) + [TRAIN_PACKET]) == [0]
        np.testing.assert_array_equal(s.p, p)
        np.testing.assert_array_equal(s.beta, beta)

    def test_unloaded_core_refuses_training(self):
        assert CoreState(4, 2).step(TRAIN_PACKET) == 0

    def test_model_packets_identity_only(self):
        with pytest.raises(ValueError):
            model_packets(OselmModel.new_random(4, 2, 4, "sigmoid", 0))


class TestCost:
    def test_spot_values(self):
        r = cost_report(128, 16)
        assert (r.s_parameter, r.s_train, r.i_train, r.i_predict) == (4368, 833, 7184, 4096)
        assert cost_report(512, 64).s_onlad == 185_601

    def test_batch_inequality_instance(self):
        assert i_batch(2, 4, 2, 2) == 216
        assert 2 * i_batch(2, 4, 2, 1) == 194

    def test_batch_splits_into_products_and_inverse(self):
        for k in (1, 3, 8):
            assert i_batch(16, 8, 16, k) == i_prod(16, 8, 16, k) + i_inv(k)

    def test_batch_inequality_grid(self):
        for nh in (4, 16, 64):
            for n in (8, 128, 1024):
                i1 = i_batch(n, nh, n, 1)
                for k in range(1, 65):
                    assert i_batch(n, nh, n, k) >= k * i1

    def test_buffer_count_matches_formula(self):
        for n, nh in ((16, 4), (128, 16)):
            assert CoreState(n, nh).parameter_elements == s_parameter(n, nh)

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            cost_report(0, 4)
