"""
Temporal fusion forecaster, LSTM baseline, training loop, lr range test,
checkpoint bundles and interpretability exports
"""

import numpy as np
import pandas as pd
import pytest

from ftbal.common.rng import RngStream
from ftbal.data.scaling import apply_scaler, fit_scaler
from ftbal.data.synth import synth_trace
from ftbal.data.windows import CategoryEncoder, WindowSet, make_windows, split_by_time
from ftbal.errors import ConfigError, DimensionError, LrFindError, MissingPrerequisiteError
from ftbal.forecast.bundle import ForecasterMeta, load_forecaster, save_forecaster
from ftbal.forecast.interpret import export_importance, forecast_frame
from ftbal.forecast.lstm import LstmForecaster
from ftbal.forecast.metrics import eval_metrics
from ftbal.forecast.tft import TemporalFusionTransformer, TftConfig
from ftbal.forecast.training import lr_find, train_forecaster
from ftbal.network.topology import build_fat_tree
from ftbal.nn.gradcheck import finite_diff_check
from ftbal.nn.parameter import Parameter

# whole-model checks sum many float64 terms; below this gradient magnitude the
# comparison is absolute
MODEL_GRAD_FLOOR = 1e-6


def tiny_config(**overrides):
    values = dict(hidden_size=4, hidden_continuous_size=3, attention_heads=1, enc_len=4, pred_len=2, batch_size=16, max_epochs=3)
    values.update(overrides)
    return TftConfig(**values)


def tiny_batch(rng, B=3, T_enc=4, T_dec=2, F=5, K=2, cards=(3, 4)):
    encoder = rng.child("enc").normal(size=(B, T_enc, F))
    decoder = rng.child("dec").normal(size=(B, T_dec, K))
    static = np.stack([rng.child("s", j).integers(0, c, size=B) for j, c in enumerate(cards)], axis=1)
    return encoder, decoder, static


def scaled_windows(trace, enc_len=4, pred_len=2, stride=3):
    train, val = split_by_time(trace, 0.8)
    scaler = fit_scaler(train)
    encoder = CategoryEncoder.fit(train)
    def make(part):
        return make_windows(apply_scaler(part, scaler), enc_len, pred_len, stride, encoder, known_periods=(24,))

    return make(train), make(val), scaler, encoder


class TestTftConfig:
    def test_defaults(self):
        config = TftConfig()
        assert (config.hidden_size, config.attention_heads, config.enc_len, config.pred_len) == (8, 1, 24, 12)
        assert config.quantiles == [0.1, 0.5, 0.9]
        assert config.median_index == 1

    def test_heads_must_divide_hidden(self):
        with pytest.raises(ConfigError):
            TftConfig(hidden_size=6, attention_heads=4)

    def test_quantiles_need_median(self):
        with pytest.raises(ConfigError):
            TftConfig(quantiles=[0.1, 0.9])

    def test_dropout_below_one(self):
        with pytest.raises(ConfigError):
            TftConfig(dropout=1.0)


class TestTemporalFusionTransformer:
    @pytest.mark.parametrize("case", range(5))
    @pytest.mark.parametrize("heads", [1, 2])
    def test_gradient_eval_mode(self, heads, case):
        rng = RngStream(400 + case)
        model = TemporalFusionTransformer(tiny_config(attention_heads=heads), 5, 2, [3, 4], rng.child("model"))
        encoder, decoder, static = tiny_batch(rng)
        R = rng.child("r").normal(size=(3, 2, 3))

        def f(backward):
            y_hat, _ = model.forward(encoder, decoder, static, training=False)
            if backward:
                model.backward(R)
            return float(np.sum(y_hat * R))

        assert finite_diff_check(f, model.parameters(), floor=MODEL_GRAD_FLOOR) < 1e-4

    def test_gradient_with_fixed_dropout_mask(self):
        rng = RngStream(410)
        model = TemporalFusionTransformer(tiny_config(dropout=0.3), 5, 2, [3, 4], rng.child("model"))
        encoder, decoder, static = tiny_batch(rng)
        R = rng.child("r").normal(size=(3, 2, 3))

        def f(backward):
            y_hat, _ = model.forward(encoder, decoder, static, training=True, rng=RngStream(77))
            if backward:
                model.backward(R)
            return float(np.sum(y_hat * R))

        assert finite_diff_check(f, model.parameters(), floor=MODEL_GRAD_FLOOR) < 1e-4

    def test_output_and_diagnostic_shapes(self):
        rng = RngStream(420)
        model = TemporalFusionTransformer(tiny_config(attention_heads=2), 5, 2, [3, 4], rng)
        encoder, decoder, static = tiny_batch(rng)
        y_hat, diag = model.forward(encoder, decoder, static)
        assert y_hat.shape == (3, 2, 3)
        assert diag["static_weights"].shape == (3, 2)
        assert diag["encoder_weights"].shape == (3, 4, 5)
        assert diag["decoder_weights"].shape == (3, 2, 2)
        assert diag["attention_weights"].shape == (3, 2, 2, 6)

    def test_selection_and_attention_weights_on_simplex(self):
        rng = RngStream(421)
        model = TemporalFusionTransformer(tiny_config(), 5, 2, [3, 4], rng)
        _, diag = model.forward(*tiny_batch(rng))
        for key in ("static_weights", "encoder_weights", "decoder_weights", "attention_weights"):
            assert np.max(np.abs(diag[key].sum(axis=-1) - 1.0)) < 1e-9
        attn = diag["attention_weights"]
        # decoder step 0 sits at position 4 and must not see position 5
        assert np.all(attn[..., 0, 5] == 0.0)

    def test_predicted_quantiles_are_sorted(self):
        rng = RngStream(422)
        model = TemporalFusionTransformer(tiny_config(), 5, 2, [3, 4], rng)
        encoder, decoder, static = tiny_batch(rng)

        class Batch:
            pass

        batch = Batch()
        batch.encoder, batch.decoder_known, batch.static = encoder, decoder, static
        quantiles, _ = model.predict(batch)
        assert np.all(np.diff(quantiles, axis=-1) >= 0.0)
        assert np.array_equal(model.point_forecast(batch), quantiles[..., 1])

    def test_unseen_static_id_uses_unknown_row(self):
        rng = RngStream(423)
        model = TemporalFusionTransformer(tiny_config(), 5, 2, [3, 4], rng)
        assert np.array_equal(model.encode_static([[99, 0]]), model.encode_static([[0, 0]]))

    def test_shape_mismatch(self):
        rng = RngStream(424)
        model = TemporalFusionTransformer(tiny_config(), 5, 2, [3, 4], rng)
        encoder, decoder, static = tiny_batch(rng, F=6)
        with pytest.raises(DimensionError):
            model.forward(encoder, decoder, static)


class TestLstmForecaster:
    @pytest.mark.parametrize("case", range(5))
    def test_gradient(self, case):
        rng = RngStream(500 + case)
        model = LstmForecaster(3, 4, 2, rng.child("model"))
        x = rng.child("x").normal(size=(5, 4, 3))
        R = rng.child("r").normal(size=(5, 2))

        def f(backward):
            y = model.forward(x)
            if backward:
                model.backward(R)
            return float(np.sum(y * R))

        assert finite_diff_check(f, model.parameters(), floor=MODEL_GRAD_FLOOR) < 1e-4

    def test_output_shape(self, rng):
        assert LstmForecaster(3, 4, 5, rng).forward(np.zeros((2, 6, 3))).shape == (2, 5)


class TestTraining:
    def test_history_and_best_state(self, small_trace):
        train, val, _, encoder = scaled_windows(small_trace)
        model = TemporalFusionTransformer(
            tiny_config(), train.encoder.shape[2], train.decoder_known.shape[2],
            [encoder.cardinality(c) for c in train.static_features], RngStream(1),
        )
        result = train_forecaster(model, train, val, 1e-2, 3, batch_size=16, seed=0)
        assert [h["epoch"] for h in result.history] == [1, 2, 3]
        assert result.best_val_loss == min(h["val_loss"] for h in result.history)
        assert model.epochs_trained == 3
        for name, value in result.best_state.items():
            assert np.array_equal(model.parameters()[name].value, value)

    def test_training_reduces_loss(self, small_trace):
        train, val, _, _ = scaled_windows(small_trace)
        model = LstmForecaster(train.encoder.shape[2], 4, 2, RngStream(2))
        result = train_forecaster(model, train, val, 1e-2, 8, batch_size=16, seed=0)
        assert result.history[-1]["train_loss"] < result.history[0]["train_loss"]

    def test_fixed_seed_is_bit_exact(self, small_trace):
        train, val, _, _ = scaled_windows(small_trace)
        runs = []
        for _ in range(2):
            model = LstmForecaster(train.encoder.shape[2], 4, 2, RngStream(3))
            runs.append(pd.DataFrame(train_forecaster(model, train, val, 1e-2, 2, batch_size=16, seed=5).history))
        assert runs[0].equals(runs[1])


class Quadratic:
    """loss = mean((x - 3)^2), no data"""

    def __init__(self):
        self.x = Parameter(np.zeros((1, 4)), name="x")

    def parameters(self):
        return {"x": self.x}

    def loss_and_backward(self, batch, training=True, rng=None, backward=True):
        diff = self.x.value - 3.0
        if backward:
            self.x.accumulate(2.0 * diff / diff.size)
        return float(np.mean(diff * diff))


class Broken(Quadratic):
    def loss_and_backward(self, batch, training=True, rng=None, backward=True):
        return float("nan")


class TestLrFind:
    def test_suggestion_inside_range_and_params_restored(self):
        model = Quadratic()
        result = lr_find(model, None, lr_range=(1e-4, 10.0), steps=60, optimizer="sgd")
        assert 1e-4 <= result.suggestion <= 10.0
        assert len(result.lrs) == len(result.losses) == len(result.smoothed)
        assert np.all(model.x.value == 0.0)

    def test_divergence_stops_the_sweep(self):
        result = lr_find(Quadratic(), None, lr_range=(1e-3, 1e3), steps=80, optimizer="sgd")
        assert len(result.lrs) < 80

    def test_all_points_diverged(self):
        with pytest.raises(LrFindError):
            lr_find(Broken(), None, steps=10)

    def test_quadratic_suggestion_is_stable_for_sgd(self):
        # loss curvature is 2 / 4 per coordinate, so sgd diverges above 2 / 0.5
        result = lr_find(Quadratic(), None, lr_range=(1e-4, 10.0), steps=60, optimizer="sgd")
        assert 0.0 < result.suggestion < 2.0 / 0.5

    def test_fixed_seed_is_deterministic(self, small_trace):
        train, _, _, _ = scaled_windows(small_trace)
        results = [
            lr_find(LstmForecaster(train.encoder.shape[2], 4, 2, RngStream(3)), train, steps=20, batch_size=16, seed=9)
            for _ in range(2)
        ]
        assert np.array_equal(results[0].losses, results[1].losses)
        assert results[0].suggestion == results[1].suggestion

    def test_bad_range(self):
        with pytest.raises(LrFindError):
            lr_find(Quadratic(), None, lr_range=(1.0, 0.1))


class TestBundle:
    def test_save_and_load(self, tmp_path, small_trace):
        train, _, scaler, encoder = scaled_windows(small_trace)
        model = TemporalFusionTransformer(
            tiny_config(), train.encoder.shape[2], train.decoder_known.shape[2],
            [encoder.cardinality(c) for c in train.static_features], RngStream(4),
        )
        meta = ForecasterMeta(
            component="tft",
            encoder_features=train.encoder_features,
            known_features=train.known_features,
            static_features=train.static_features,
            known_periods=[24],
            category_encoder=encoder.to_dict(),
            scaler=scaler.to_dict(),
        )
        save_forecaster(model, tmp_path, meta)
        loaded, loaded_meta = load_forecaster(tmp_path, "tft")
        batch = train.subset(np.arange(5))
        assert np.array_equal(loaded.point_forecast(batch), model.point_forecast(batch))
        assert loaded_meta.scaler_obj().lo == scaler.lo
        assert loaded_meta.encoder_obj().vocab == encoder.vocab

    def test_missing_checkpoint(self, tmp_path):
        with pytest.raises(MissingPrerequisiteError) as err:
            load_forecaster(tmp_path, "tft")
        assert "train-forecaster" in str(err.value)


class TestInterpretability:
    def test_importance_groups_sum_to_one(self, small_trace, tmp_path):
        train, val, _, encoder = scaled_windows(small_trace)
        model = TemporalFusionTransformer(
            tiny_config(), train.encoder.shape[2], train.decoder_known.shape[2],
            [encoder.cardinality(c) for c in train.static_features], RngStream(5),
        )
        report = export_importance(model, val)
        assert report.untrained
        for frame in (report.static_importance, report.encoder_importance, report.decoder_importance):
            assert frame["importance"].sum() == pytest.approx(1.0, abs=1e-9)
            assert (frame["warning"] == "untrained_model").all()
        assert report.attention_profile["relative_time_index"].tolist() == [-4, -3, -2, -1]
        paths = report.export(tmp_path)
        assert sorted(p.name for p in paths.values()) == [
            "attention_profile.csv", "importance_decoder.csv", "importance_encoder.csv", "importance_static.csv",
        ]

    def test_forecast_frame_layout(self, small_windows):
        n, h = len(small_windows), small_windows.pred_len
        values = np.zeros((n, h, 3))
        frame = forecast_frame(small_windows, values, small_windows.target, [0.1, 0.5, 0.9])
        assert list(frame.columns) == ["link_id", "time_index", "horizon", "q10", "q50", "q90", "actual"]
        assert len(frame) == n * h
        assert frame["horizon"].iloc[:2].tolist() == [1, 2]


@pytest.mark.slow
class TestForecastOrdering:
    """Temporal fusion model beats the LSTM baseline on seasonal traffic"""

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_tft_mae_below_lstm(self, seed):
        topology = build_fat_tree(n_core=1, n_agg=2, n_edge=2, hosts_per_edge=1)
        trace = synth_trace(topology, 720, seed=seed)
        train, val, _, encoder = scaled_windows(trace, enc_len=24, pred_len=12, stride=2)
        config = TftConfig(hidden_size=8, learning_rate=3e-3, max_epochs=25, batch_size=64)
        tft = TemporalFusionTransformer(
            config, train.encoder.shape[2], train.decoder_known.shape[2],
            [encoder.cardinality(c) for c in train.static_features], RngStream(seed).child("tft"),
        )
        lstm = LstmForecaster(train.encoder.shape[2], 8, 12, RngStream(seed).child("lstm"))
        train_forecaster(tft, train, val, 3e-3, 25, batch_size=64, seed=seed)
        train_forecaster(lstm, train, val, 3e-3, 25, batch_size=64, seed=seed)
        tft_report = eval_metrics(val.target, tft.point_forecast(val))
        lstm_report = eval_metrics(val.target, lstm.point_forecast(val))
        assert tft_report.mae < lstm_report.mae
        assert eval_metrics(val.target[:, -1], tft.point_forecast(val)[:, -1]).r2 >= 0.7

def saliency_windows(n, seed, enc_len=6, pred_len=2):
    """Encoder feature "signal" carries the target; the other two are pure noise"""
    rng = RngStream(seed)
    signal = rng.child("signal").normal(size=n)
    noise = rng.child("noise").normal(size=(n, enc_len, 2))
    encoder = np.concatenate([np.repeat(signal[:, None, None], enc_len, axis=1), noise], axis=2)
    return WindowSet(
        encoder=encoder,
        decoder_known=np.zeros((n, pred_len, 1)),
        static=np.zeros((n, 1), dtype=np.int64),
        target=np.repeat(signal[:, None], pred_len, axis=1),
        link_ids=np.array(["l0"] * n),
        time_index=np.arange(n),
        encoder_features=["signal", "noise_a", "noise_b"],
        known_features=["known"],
        static_features=["link_id"],
    )


@pytest.mark.slow
class TestSaliency:
    def test_pure_signal_feature_ranks_first(self):
        train, val = saliency_windows(256, seed=0), saliency_windows(64, seed=1)
        config = tiny_config(enc_len=6, pred_len=2, max_epochs=40)
        model = TemporalFusionTransformer(config, 3, 1, [2], RngStream(11))
        train_forecaster(model, train, val, 1e-2, 40, batch_size=32, seed=0)
        report = export_importance(model, val)
        assert not report.untrained
        assert report.encoder_importance["variable"].iloc[0] == "signal"
