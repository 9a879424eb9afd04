import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatbench.models import (FCN, ModelKind, ModelSpec, build_model, count_parameters, desk_spec,
                              itemize_parameters, load_checkpoint, model_from_checkpoint, naive_forecast,
                              reference_spec, save_checkpoint)
from heatbench.resources import audit_params
from heatbench.tensor_core import backward
from heatbench.tensor_core.gradcheck import gradient_check
from heatbench.training import Adam, mse_loss

TOY = {
    "fcn": dict(kind="fcn", n_in=6, n_out=3, n_c=1, n_s=1, hidden_size=5),
    "lstm": dict(kind="lstm", n_in=5, n_out=2, n_c=1, n_s=0, hidden_size=4),
    "lstm_future": dict(kind="lstm", n_in=5, n_out=2, n_c=1, n_s=1, hidden_size=4, n_future=2),
    "xlstm": dict(kind="xlstm", n_in=6, n_out=2, n_c=1, n_s=1, hidden_size=8, num_heads=2, num_blocks=2,
                  qkv_size=4, conv_kernel=3),
    "te": dict(kind="te", n_in=6, n_out=2, n_c=1, n_s=1, hidden_size=8, num_heads=2, num_blocks=2),
}


def toy_inputs(spec: ModelSpec, batch: int, rng: np.random.Generator):
    if spec.layout == "flat":
        x = rng.standard_normal((batch, spec.flat_width))
    else:
        x = rng.standard_normal((batch, spec.n_in, spec.n_features))
    fut = rng.standard_normal((batch, spec.n_future, spec.n_c)) if spec.n_future else None
    return x, fut


@pytest.mark.parametrize("name", list(TOY))
def test_output_shape_and_finite(name):
    spec = ModelSpec(**TOY[name])
    model = build_model(spec, seed=0)
    for batch in (1, 4):
        x, fut = toy_inputs(spec, batch, np.random.default_rng(batch))
        out = model.predict(x, fut)
        assert out.shape == (batch, spec.n_out)
        assert np.isfinite(out).all()


@pytest.mark.parametrize("name", list(TOY))
def test_closed_form_count_matches_instance(name):
    spec = ModelSpec(**TOY[name])
    model = build_model(spec, seed=0)
    rows = audit_params(model)
    assert sum(r.count for r in rows) == count_parameters(spec) == model.num_parameters()
    assert sum(n for _, n in itemize_parameters(spec)) == count_parameters(spec)


@pytest.mark.parametrize("kind,horizon", [(k, h) for k in ("fcn", "lstm", "xlstm", "te") for h in (3, 24)])
def test_reference_scale_counts_match_instances(kind, horizon):
    spec = reference_spec(kind, horizon, n_c=14, n_s=3)
    assert build_model(spec).num_parameters() == count_parameters(spec)


def test_fcn_count_anchors():
    assert count_parameters(ModelSpec("fcn", n_in=1, n_out=1, hidden_size=1)) == 4
    assert count_parameters(ModelSpec("fcn", n_in=38, n_out=24, hidden_size=131)) == 38 * 131 + 131 + 131 * 24 + 24
    assert count_parameters(ModelSpec("fcn", n_in=38, n_out=24, hidden_size=131)) == 8277


def test_reference_scale_ordering():
    fcn = count_parameters(reference_spec("fcn", 24))
    lstm, xlstm, te = (count_parameters(reference_spec(k, 24, 14, 3)) for k in ("lstm", "xlstm", "te"))
    assert fcn < lstm < xlstm < te
    assert abs(xlstm - 2.1e6) / 2.1e6 < 0.15
    assert abs(te - 3.7e6) / 3.7e6 < 0.15


def test_lstm_reference_count_has_no_integral_input_width():
    # 4h(f + h + 1) + h*n_out + n_out with h=131, n_out=24 and the future head; solve for f
    counts = {count_parameters(ModelSpec("lstm", n_in=38, n_out=24, n_c=c, n_s=0, hidden_size=131))
              for c in range(0, 40)}
    assert 71296 not in counts


@pytest.mark.parametrize("bad", [
    dict(kind="te", n_in=4, n_out=1, hidden_size=10, num_heads=4),
    dict(kind="xlstm", n_in=4, n_out=1, hidden_size=10, num_heads=4),
    dict(kind="fcn", n_in=0, n_out=1),
    dict(kind="fcn", n_in=4, n_out=1, dropout=1.0),
    dict(kind="te", n_in=4, n_out=1, n_c=1, n_future=2),
    dict(kind="xlstm", n_in=4, n_out=1, hidden_size=8, num_heads=2, num_blocks=2, block_pattern="mx"),
])
def test_spec_rejects_invalid(bad):
    with pytest.raises(ValueError):
        ModelSpec(**bad)


def test_spec_dict_roundtrip():
    spec = reference_spec("xlstm", 24, 14, 3)
    assert ModelSpec.from_dict(spec.to_dict()) == spec


def test_layout_mismatch_rejected():
    fcn = build_model(ModelSpec(**TOY["fcn"]), seed=0)
    with pytest.raises(ValueError):
        fcn.predict(np.zeros((2, 6, 3)))
    lstm = build_model(ModelSpec(**TOY["lstm"]), seed=0)
    with pytest.raises(ValueError):
        lstm.predict(np.zeros((2, 12)))


# gradient suite

GRAD_MODELS = ["fcn", "lstm", "lstm_future", "xlstm", "te"]


@pytest.mark.parametrize("name", GRAD_MODELS)
def test_gradients_match_finite_differences(name):
    spec = ModelSpec(**TOY[name])
    rng = np.random.default_rng(7)
    worst = 0.0
    for draw in range(20):
        model = build_model(spec, seed=draw)
        x, fut = toy_inputs(spec, 3, rng)
        target = rng.standard_normal((3, spec.n_out))

        def loss():
            return mse_loss(model(x, fut), target)

        worst = max(worst, gradient_check(loss, model.parameters(), max_coords=2, n_directions=2, rng=rng))
    assert worst < 1e-4, worst


def test_lstm_gradient_exhaustive_small():
    spec = ModelSpec("lstm", n_in=5, n_out=1, n_c=1, hidden_size=4)
    model = build_model(spec, seed=3)
    rng = np.random.default_rng(0)
    x, _ = toy_inputs(spec, 2, rng)
    target = rng.standard_normal((2, 1))
    assert gradient_check(lambda: mse_loss(model(x), target), model.parameters()) < 1e-4


# FCN and LSTM

def test_fcn_zero_weights_give_zero_output():
    model = build_model(ModelSpec(**TOY["fcn"]))
    model.load_state_dict({k: np.zeros_like(v) for k, v in model.state_dict().items()})
    assert np.all(model.predict(np.random.default_rng(0).standard_normal((3, 13))) == 0)


@pytest.mark.parametrize("name", ["fcn", "lstm", "xlstm", "te"])
def test_zero_dropout_train_equals_eval(name):
    spec = ModelSpec(**TOY[name]).with_(dropout=0.0)
    model = build_model(spec, seed=1)
    x, fut = toy_inputs(spec, 2, np.random.default_rng(0))
    a = model(x, fut, training=True, rng=np.random.default_rng(5)).data
    assert np.array_equal(a, model(x, fut).data)


@pytest.mark.parametrize("name", ["fcn", "lstm", "xlstm", "te"])
def test_eval_forward_is_pure(name):
    spec = ModelSpec(**TOY[name]).with_(dropout=0.3)
    model = build_model(spec, seed=1)
    x, fut = toy_inputs(spec, 2, np.random.default_rng(0))
    assert np.array_equal(model.predict(x, fut), model.predict(x, fut))
    noisy = model(x, fut, training=True, rng=np.random.default_rng(5)).data
    assert not np.array_equal(noisy, model.predict(x, fut))


def test_lstm_zero_weights_fixed_point():
    spec = ModelSpec(**TOY["lstm"])
    model = build_model(spec, seed=0)
    state = {k: np.zeros_like(v) for k, v in model.state_dict().items()}
    state["out.bias"] = np.array([1.5, -2.0])
    model.load_state_dict(state)
    x, _ = toy_inputs(spec, 4, np.random.default_rng(0))
    assert np.all(model.hidden_states(x).data == 0)
    assert np.array_equal(model.predict(x), np.tile([1.5, -2.0], (4, 1)))


# naive

def test_naive_tail():
    assert np.array_equal(naive_forecast(np.array([1.0, 2, 5, 6, 7]), 3), [5, 6, 7])
    with pytest.raises(ValueError):
        naive_forecast(np.array([1.0, 2]), 3)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=24, max_size=60), st.sampled_from([3, 24]))
def test_naive_equals_last_observations(values, n_out):
    hist = np.array(values)
    assert np.array_equal(naive_forecast(hist, n_out), hist[-n_out:])


@pytest.mark.parametrize("period", [3, 24])
def test_naive_model_exact_on_periodic_series(period):
    rng = np.random.default_rng(period)
    pattern = rng.uniform(1, 10, period)
    series = np.tile(pattern, 10)
    n_in = 2 * period
    spec = ModelSpec("naive", n_in=n_in, n_out=period)
    starts = np.arange(len(series) - n_in - period + 1)
    x = np.stack([series[s:s + n_in] for s in starts])[..., None]
    y = np.stack([series[s + n_in:s + n_in + period] for s in starts])
    pred = build_model(spec).predict(x)
    assert np.array_equal(pred, y)


def test_naive_flat_and_sequential_agree():
    spec_seq = ModelSpec("naive", n_in=5, n_out=2, n_c=2, n_s=1)
    rng = np.random.default_rng(0)
    seq = rng.standard_normal((3, 5, 4))
    flat = np.concatenate([seq[:, :, 0], seq[:, :, 1], seq[:, :, 2], seq[:, 0, 3:]], axis=1)
    out_seq = build_model(spec_seq).predict(seq)
    assert np.array_equal(out_seq, seq[:, -2:, 0])
    assert np.array_equal(build_model(spec_seq).predict(flat), seq[:, -2:, 0])


# xLSTM probes

def test_xlstm_causality():
    spec = ModelSpec(**TOY["xlstm"])
    model = build_model(spec, seed=2)
    rng = np.random.default_rng(0)
    x, _ = toy_inputs(spec, 2, rng)
    base = model.sequence_features(x).data
    for t in range(spec.n_in):
        x2 = x.copy()
        x2[:, t, :] += rng.standard_normal(spec.n_features)
        out = model.sequence_features(x2).data
        assert np.array_equal(out[:, :t], base[:, :t])
        assert not np.allclose(out[:, t], base[:, t])


def test_xlstm_bounded_input_stress():
    spec = ModelSpec(**TOY["xlstm"])
    model = build_model(spec, seed=0)
    rng = np.random.default_rng(11)
    x = rng.uniform(-10, 10, (1000, spec.n_in, spec.n_features))
    assert np.isfinite(model.sequence_features(x).data).all()
    assert np.isfinite(model.predict(x)).all()


def test_xlstm_default_block_pattern():
    assert ModelSpec("xlstm", n_in=4, n_out=1, num_blocks=3).block_pattern == "msm"
    assert reference_spec("xlstm", 3).block_pattern == "msms"


# TE probes

def test_te_permutation_invariance_without_position():
    spec = ModelSpec(**TOY["te"])
    model = build_model(spec, seed=4)
    state = model.state_dict()
    state["position"] = np.zeros_like(state["position"])
    model.load_state_dict(state)
    rng = np.random.default_rng(0)
    x, _ = toy_inputs(spec, 3, rng)
    perm = rng.permutation(spec.n_in)
    np.testing.assert_allclose(model.predict(x[:, perm]), model.predict(x), rtol=1e-12, atol=1e-12)


def test_te_attention_rows_sum_to_one():
    spec = ModelSpec(**TOY["te"])
    model = build_model(spec, seed=4)
    x, _ = toy_inputs(spec, 3, np.random.default_rng(0))
    model.predict(x)
    weights = model.attention_weights()
    assert len(weights) == spec.num_blocks
    for w in weights:
        assert w.shape == (3, spec.num_heads, spec.n_in, spec.n_in)
        np.testing.assert_allclose(w.sum(axis=-1), 1.0, atol=1e-9)


# checkpoints and optimizer cross-check

@pytest.mark.parametrize("name", ["fcn", "lstm_future", "xlstm", "te"])
def test_checkpoint_roundtrip(tmp_path, name):
    spec = ModelSpec(**TOY[name])
    model = build_model(spec, seed=9)
    path = tmp_path / "m.zip"
    save_checkpoint(path, spec, model.state_dict(), {"seed": 9})
    spec2, state, meta = load_checkpoint(path)
    assert spec2 == spec and meta["seed"] == 9
    restored, _ = model_from_checkpoint(path)
    x, fut = toy_inputs(spec, 2, np.random.default_rng(0))
    assert np.array_equal(restored.predict(x, fut), model.predict(x, fut))
    for k, v in model.state_dict().items():
        assert np.array_equal(state[k], v)


@pytest.mark.parametrize("name", ["fcn", "lstm", "xlstm", "te"])
def test_one_step_updates_every_counted_scalar(name):
    spec = ModelSpec(**TOY[name])
    model = build_model(spec, seed=1)
    before = {k: v.copy() for k, v in model.state_dict().items()}
    rng = np.random.default_rng(0)
    x, fut = toy_inputs(spec, 64, rng)
    opt = Adam(model.parameters())
    backward(mse_loss(model(x, fut), rng.standard_normal((64, spec.n_out))))
    nonzero = sum(int(np.count_nonzero(p.grad)) for p in model.parameters() if p.grad is not None)
    opt.step()
    changed = sum(int(np.count_nonzero(model.state_dict()[k] != before[k])) for k in before)
    assert changed == nonzero
    assert sum(v.size for v in before.values()) == count_parameters(spec)
    # a ReLU unit that is off for the whole batch legitimately receives no gradient
    assert changed >= 0.98 * count_parameters(spec)


def test_build_model_is_deterministic_per_seed():
    spec = ModelSpec(**TOY["xlstm"])
    a, b = build_model(spec, seed=5).state_dict(), build_model(spec, seed=5).state_dict()
    assert all(np.array_equal(a[k], b[k]) for k in a)
    c = build_model(spec, seed=6).state_dict()
    assert any(not np.array_equal(a[k], c[k]) for k in a)


def test_desk_spec_defaults():
    spec = desk_spec("te", 24, 3, 14, 3)
    assert spec.kind is ModelKind.TE and spec.hidden_size == 32
    assert isinstance(build_model(desk_spec("fcn", 24, 3, 14, 3)), FCN)
