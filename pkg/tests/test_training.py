import logging

import numpy as np
import pytest

from mlepm.data import Standardizer, SynthConfig, synthesize, windowed
from mlepm.errors import EmptyPartition
from mlepm.ml import CnnModel, EarlyStopping, TrainingConfig, train
from mlepm.ml.training import _batches, evaluate_loss


def _smooth_identity_task(seed, n_train=400):
    """Windows from smooth profiles; the target is each window's centre."""
    ps = synthesize(SynthConfig(profiles=10, points=50, law="identity", noise=0.0, seed=seed))
    ids = ps.ids()
    xt, yt = windowed(ps, ids[:8])
    xv, yv = windowed(ps, ids[8:])
    xt, yt = xt[:n_train], yt[:n_train]
    std = Standardizer.fit(xt, yt)
    return (std.apply_inputs(xt), std.apply_targets(yt)), (std.apply_inputs(xv), std.apply_targets(yv))


def _plateau_model():
    # gamma = 0 cuts the output off from the input and the running statistics;
    # with a vanishing learning rate the validation loss is exactly constant
    model = CnnModel(seed=0)
    for i in (1, 4):
        model.views()[i]["gamma"][:] = 0.0
    return model


@pytest.mark.slow
def test_identity_map_is_learnable():
    train_set, val_set = _smooth_identity_task(seed=1)
    assert len(train_set[1]) + len(val_set[1]) == 500
    model, history = train(CnnModel(seed=1), train_set, val_set, TrainingConfig(max_epochs=200, patience=200, seed=1))
    assert history.epochs_run <= 200
    assert evaluate_loss(model, *val_set) < 0.05


def test_early_stopping_rule():
    stopper = EarlyStopping(patience=2)
    assert stopper.update(0, 3.0) == (True, False)
    assert stopper.update(1, 2.0) == (True, False)
    assert stopper.update(2, 2.0) == (False, False)
    assert stopper.update(3, 2.5) == (False, True)
    assert stopper.best_epoch == 1


@pytest.mark.parametrize("patience", [1, 3, 10])
def test_plateau_stops_patience_epochs_after_best(rng, patience):
    x = rng.normal(size=(40, 9))
    y = rng.normal(size=40)
    model = _plateau_model()
    trained, history = train(model, (x, y), (x[:10], y[:10]), TrainingConfig(learning_rate=1e-300, patience=patience))
    assert len(set(history.val_loss)) == 1
    assert history.best_epoch == 0
    assert history.stopped_early
    assert history.epochs_run == history.best_epoch + patience + 1
    assert np.array_equal(trained.params, model.params)


def test_returns_best_epoch_parameters(rng):
    train_set, val_set = _smooth_identity_task(seed=2, n_train=200)
    config = TrainingConfig(patience=3, max_epochs=60, seed=4)
    model, history = train(CnnModel(seed=4), train_set, val_set, config)
    assert history.epochs_run <= history.best_epoch + config.patience + 1
    assert history.best_val_loss == min(history.val_loss)
    assert evaluate_loss(model, *val_set) == history.best_val_loss
    if history.stopped_early:
        assert history.epochs_run == history.best_epoch + config.patience + 1


def test_training_is_deterministic():
    train_set, val_set = _smooth_identity_task(seed=3, n_train=120)
    config = TrainingConfig(max_epochs=15, seed=7)
    a, ha = train(CnnModel(seed=7), train_set, val_set, config)
    b, hb = train(CnnModel(seed=7), train_set, val_set, config)
    assert ha.to_dict() == hb.to_dict()
    assert np.array_equal(a.params, b.params)
    for i in a.running:
        assert np.array_equal(a.running[i][0], b.running[i][0])
        assert np.array_equal(a.running[i][1], b.running[i][1])


def test_train_does_not_modify_input_model(rng):
    model = CnnModel(seed=0)
    before = model.params.copy()
    train(model, (rng.normal(size=(20, 9)), rng.normal(size=20)), None, TrainingConfig(max_epochs=2))
    assert np.array_equal(model.params, before)


def test_mse_loss_recorded(rng):
    x, y = rng.normal(size=(20, 9)), rng.normal(size=20)
    _, history = train(CnnModel(), (x, y), (x, y), TrainingConfig(max_epochs=2, loss="mse"))
    assert history.loss == "mse"
    assert history.to_dict()["loss"] == "mse"


def test_empty_validation_falls_back_to_train(rng, caplog):
    x, y = rng.normal(size=(20, 9)), rng.normal(size=20)
    with caplog.at_level(logging.WARNING):
        _, history = train(CnnModel(), (x, y), (x[:0], y[:0]), TrainingConfig(max_epochs=3))
    assert "empty validation" in caplog.text
    assert len(history.val_loss) == 3


def test_empty_training_partition():
    with pytest.raises(EmptyPartition):
        train(CnnModel(), (np.zeros((1, 9)), np.zeros(1)))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"learning_rate": 0.0},
        {"patience": 0},
        {"split_fractions": (0.5, 0.2, 0.2)},
        {"split_fractions": (1.2, -0.1, -0.1)},
        {"loss": "huber"},
        {"batch_size": 1},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        TrainingConfig(**kwargs)


def test_config_defaults():
    c = TrainingConfig()
    assert (c.learning_rate, c.patience, c.split_fractions, c.max_epochs, c.batch_size, c.loss) == (
        1e-3,
        10,
        (0.75, 0.05, 0.20),
        1000,
        32,
        "mae",
    )


@pytest.mark.parametrize("n, batch, sizes", [(65, 32, [32, 33]), (64, 32, [32, 32]), (10, 32, [10]), (34, 32, [32, 2])])
def test_batches_never_leave_a_singleton(n, batch, sizes):
    chunks = _batches(n, batch, np.random.default_rng(0))
    assert [len(c) for c in chunks] == sizes
    assert sorted(np.concatenate(chunks)) == list(range(n))
