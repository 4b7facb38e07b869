import numpy as np
import pytest

from core.config import load_config
from core.errors import ContractError, DivergenceError, NonFiniteError
from models import train as train_module
from models.config import ModelConfig, TrainConfig
from models.optim import AdamW, ReduceOnPlateau, warmup_constant_lr, warmup_factor
from models.train import constant_baseline_l1, target_stats, to_target_units, train_toy
from models.transformer_m import init_params, predict_gap
from molecules.synthetic import synthetic_molecules


@pytest.fixture
def small_run():
    model_cfg = ModelConfig(n_blocks=1, hidden_dim=8, n_heads=2, n_rbf=4, mode_probs=(0.0, 0.0, 1.0),
                            noise_scale=0.0, rbf_cutoff=10.0, embedding_dropout=0.0, activation_dropout=0.0,
                            attention_dropout=0.0, drop_path=0.0)
    train_cfg = TrainConfig(steps=60, warmup_steps=5, lr=5e-3, batch_size=4, n_molecules=24, log_every=20)
    return synthetic_molecules(train_cfg.n_molecules, seed=0), model_cfg, train_cfg


# ─────────────────────────────────────────────────────
# Optimizer and schedules
# ─────────────────────────────────────────────────────
def test_warmup_then_constant():
    assert warmup_constant_lr(0, 1e-3, 4) == pytest.approx(2.5e-4)
    assert warmup_constant_lr(3, 1e-3, 4) == 1e-3
    assert warmup_constant_lr(1000, 1e-3, 4) == 1e-3
    assert warmup_factor(0, 0) == 1.0


def test_reduce_on_plateau():
    sched = ReduceOnPlateau(1e-3, factor=0.8, min_lr=1e-7, patience=15)
    assert sched.step(1.0) == 1e-3
    for _ in range(14):
        assert sched.step(1.0) == 1e-3
    assert sched.step(1.0) == pytest.approx(8e-4)
    assert sched.step(0.5) == pytest.approx(8e-4)


def test_reduce_on_plateau_floor():
    sched = ReduceOnPlateau(2e-7, factor=0.1, min_lr=1e-7, patience=1)
    sched.step(1.0)
    assert sched.step(1.0) == 1e-7
    assert sched.step(1.0) == 1e-7


def test_adamw_first_step_moves_by_lr():
    params = {"w": np.array([1.0, -2.0, 0.0])}
    AdamW(params, beta1=0.0).step({"w": np.array([0.5, -3.0, 0.0])}, lr=0.1)
    np.testing.assert_allclose(params["w"], [0.9, -1.9, 0.0], atol=1e-7)


def test_adamw_weight_decay_and_nonfinite():
    params = {"w": np.array([1.0])}
    opt = AdamW(params, weight_decay=0.5)
    opt.step({"w": np.array([0.0])}, lr=0.1)
    assert params["w"][0] == pytest.approx(0.95)
    with pytest.raises(NonFiniteError):
        opt.step({"w": np.array([np.nan])}, lr=0.1)


def test_adamw_restore_undoes_steps():
    params = {"w": np.array([1.0, -2.0])}
    w = params["w"]
    opt = AdamW(params)
    opt.step({"w": np.array([0.3, 0.1])}, lr=0.1)
    saved = opt.snapshot()
    opt.step({"w": np.array([-1.0, 2.0])}, lr=0.1)
    opt.step({"w": np.array([0.5, 0.5])}, lr=0.1)
    opt.restore(saved)
    assert params["w"] is w
    np.testing.assert_array_equal(w, saved["params"]["w"])
    assert opt.t == 1

    replay = {"w": np.array([1.0, -2.0])}
    fresh = AdamW(replay)
    fresh.step({"w": np.array([0.3, 0.1])}, lr=0.1)
    opt.step({"w": np.array([-1.0, 2.0])}, lr=0.1)
    fresh.step({"w": np.array([-1.0, 2.0])}, lr=0.1)
    np.testing.assert_array_equal(params["w"], replay["w"])


def test_plateau_reduce_is_immediate_and_floored():
    sched = ReduceOnPlateau(1e-3, factor=0.8, min_lr=1e-4, patience=2)
    sched.step(1.0)
    sched.step(1.0)
    assert sched.reduce(0.5) == pytest.approx(5e-4)
    assert sched.bad_epochs == 0
    assert sched.reduce(0.1) == 1e-4


def test_constant_baseline_is_median_l1():
    assert constant_baseline_l1([1.0, 2.0, 10.0]) == pytest.approx(3.0)


# ─────────────────────────────────────────────────────
# Toy training
# ─────────────────────────────────────────────────────
def test_training_is_deterministic(small_run):
    dataset, model_cfg, train_cfg = small_run
    short = train_cfg.model_copy(update={"steps": 10})
    a = train_toy(dataset, model_cfg, short)
    b = train_toy(dataset, model_cfg, short)
    assert a.loss_curve == b.loss_curve
    assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)


def test_untrained_model_is_near_baseline(small_run):
    dataset, model_cfg, train_cfg = small_run
    result = train_toy(dataset, model_cfg, train_cfg.model_copy(update={"steps": 1}))
    assert abs(result.initial_l1 / result.baseline_l1 - 1.0) < 0.2


def test_training_reduces_loss(small_run):
    dataset, model_cfg, train_cfg = small_run
    result = train_toy(dataset, model_cfg, train_cfg)
    assert len(result.loss_curve) == train_cfg.steps
    assert result.final_l1 < result.initial_l1


def test_empty_dataset():
    with pytest.raises(ContractError):
        train_toy([], ModelConfig(), TrainConfig())


def test_nonfinite_gradient_is_divergence(small_run, monkeypatch):
    dataset, model_cfg, train_cfg = small_run

    def exploding(*args, **kwargs):
        raise NonFiniteError("synthetic overflow")

    monkeypatch.setattr(train_module, "predict_gap", exploding)
    monkeypatch.setattr(train_module, "evaluate_l1", lambda *args, **kwargs: 1.0)
    with pytest.raises(DivergenceError):
        train_toy(dataset, model_cfg, train_cfg.model_copy(update={"steps": 2}))


def test_target_stats():
    assert target_stats([1.0, 3.0]) == (2.0, 1.0)
    assert target_stats([1.0, 3.0], standardize=False) == (2.0, 1.0)
    assert target_stats([2.0, 2.0, 2.0]) == (2.0, 1.0)
    mean, scale = target_stats([0.0, 4.0, 8.0])
    assert mean == 4.0 and scale == pytest.approx(np.sqrt(32.0 / 3.0))


def test_folded_decoder_predicts_in_target_units(small_run, rng):
    dataset, model_cfg, _ = small_run
    params = init_params(model_cfg, seed=1)
    params["decoder.w2"] = rng.standard_normal(params["decoder.w2"].shape)
    g, c, _ = dataset[0]
    standardized = predict_gap(g, c, params, model_cfg).item()
    folded = to_target_units(params, mean=3.0, scale=0.5)
    assert predict_gap(g, c, folded, model_cfg).item() == pytest.approx(0.5 * standardized + 3.0, rel=1e-12)
    assert folded["decoder.w1"] is params["decoder.w1"]
    assert not np.array_equal(params["decoder.w2"], folded["decoder.w2"])


def test_returned_model_predicts_in_target_units(small_run):
    dataset, model_cfg, train_cfg = small_run
    # untrained: a standardized decoder at zero folds back to the target mean
    result = train_toy(dataset, model_cfg, train_cfg.model_copy(update={"steps": 1, "lr": 1e-12}))
    targets = [t for _, _, t in dataset]
    g, c, _ = dataset[0]
    assert predict_gap(g, c, result.params, model_cfg).item() == pytest.approx(np.mean(targets), abs=1e-6)


@pytest.mark.slow
def test_toy_training_beats_constant_baseline(configs_dir):
    model_cfg = load_config(ModelConfig, configs_dir / "train_toy.toml", section="model")
    train_cfg = load_config(TrainConfig, configs_dir / "train_toy.toml", section="train")
    result = train_toy(synthetic_molecules(train_cfg.n_molecules, seed=train_cfg.seed), model_cfg, train_cfg)
    assert train_cfg.steps == 5000 and train_cfg.n_molecules == 2000
    assert result.final_l1 / result.baseline_l1 < 0.10
