import math

import numpy as np
import pytest

from app.dataset import fit_apply_minmax, load_csv, split_classes
from app.errors import ConfigError, ShapeError
from app.nnet import (
    NetworkSpec,
    TrainConfig,
    TrainedReconstructor,
    choose_architecture,
    dump_model,
    init_parameters,
    load_model,
    model_from_dict,
    model_to_dict,
    mse_and_gradients,
    reconstruct,
    reconstruct_batch,
    reconstruction_distances,
    train_reconstructor,
)

from conftest import identity_network, uci_path, zero_network


# ------------------------------------------------
# Architecture
# ------------------------------------------------
def test_small_attribute_count_gets_feedforward():
    spec = choose_architecture(8)
    assert spec.kind == "feedforward"
    assert spec.layer_sizes == (8, 5, 5, 8)


def test_large_attribute_count_gets_autoencoder():
    spec = choose_architecture(34)
    assert spec.kind == "autoencoder"
    assert spec.layer_sizes == (34, 26, 17, 26, 34)


def test_threshold_is_strict():
    assert choose_architecture(30).kind == "feedforward"
    assert choose_architecture(31).kind == "autoencoder"


def test_threshold_is_a_parameter():
    assert choose_architecture(8, threshold=4).layer_sizes == (8, 6, 4, 6, 8)


def test_autoencoder_needs_bottleneck():
    with pytest.raises(ConfigError):
        NetworkSpec((4, 6, 4), kind="autoencoder")


def test_input_and_output_sizes_must_match():
    with pytest.raises(ConfigError):
        NetworkSpec((4, 5, 3))


@pytest.mark.parametrize(
    "kwargs",
    [{"max_epochs": 0}, {"target_mse": 0.0}, {"learning_rate": -0.1}, {"batch_size": 0}],
)
def test_bad_train_config(kwargs):
    with pytest.raises(ConfigError):
        TrainConfig(**kwargs)


# ------------------------------------------------
# Reconstruction
# ------------------------------------------------
def test_identity_network_reproduces_input():
    model = identity_network(3)
    x = np.array([0.2, -1.5, 7.0])
    np.testing.assert_allclose(reconstruct(model, x), x)


def test_wrong_vector_length():
    with pytest.raises(ShapeError):
        reconstruct(identity_network(8), np.zeros(7))


def test_wrong_matrix_width():
    with pytest.raises(ShapeError):
        reconstruct_batch(identity_network(3), np.zeros((4, 2)))


def test_weight_shapes_validated():
    with pytest.raises(ShapeError):
        TrainedReconstructor(NetworkSpec((2, 2)), (np.zeros((2, 3)),), (np.zeros(2),))


def test_distance_is_zero_for_perfect_reconstruction():
    records = reconstruction_distances(identity_network(2), [0, 1], np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert [r.dist for r in records] == [0.0, 0.0]


def test_distance_is_squared_norm():
    records = reconstruction_distances(zero_network(2, bias=1.0), [0], np.array([[0.0, 0.0]]))
    assert records[0].dist == pytest.approx(2.0)


def test_distances_sorted_descending_ties_by_index():
    data = np.array([[1.0], [math.sqrt(3)], [-math.sqrt(3)]])
    records = reconstruction_distances(zero_network(1), [0, 1, 2], data)
    assert [r.index for r in records] == [1, 2, 0]


def test_distances_keep_dataset_indices():
    data = np.array([[0.0], [5.0], [1.0], [2.0]])
    records = reconstruction_distances(zero_network(1), [3, 1], data)
    assert [(r.index, r.dist) for r in records] == [(1, 25.0), (3, 4.0)]


def test_distances_follow_row_permutation():
    rng = np.random.default_rng(11)
    spec = NetworkSpec((3, 4, 3))
    weights, biases = init_parameters(spec, rng)
    model = TrainedReconstructor(spec, tuple(weights), tuple(b + 0.1 for b in biases))
    data = rng.normal(size=(20, 3))
    perm = rng.permutation(20)

    before = {r.index: r.dist for r in reconstruction_distances(model, range(20), data)}
    after = {int(perm[r.index]): r.dist for r in reconstruction_distances(model, range(20), data[perm])}
    assert after.keys() == before.keys()
    for i, dist in before.items():
        assert after[i] == pytest.approx(dist, rel=1e-12, abs=1e-15)


# ------------------------------------------------
# Gradients and training
# ------------------------------------------------
@pytest.mark.parametrize("activation", ["tanh", "relu"])
def test_gradients_match_finite_differences(activation):
    rng = np.random.default_rng(7)
    spec = NetworkSpec((3, 4, 2, 3), hidden_activation=activation)
    weights, biases = init_parameters(spec, rng)
    # keep relu units away from their kink
    biases = [b + 0.3 for b in biases]
    X = rng.uniform(0.0, 1.0, size=(6, 3))
    _, grad_w, grad_b = mse_and_gradients(weights, biases, X, spec)

    eps = 1e-6
    for params, grads in ((weights, grad_w), (biases, grad_b)):
        for p, g in zip(params, grads):
            numeric = np.zeros_like(p)
            for idx in np.ndindex(p.shape):
                old = p[idx]
                p[idx] = old + eps
                up = mse_and_gradients(weights, biases, X, spec)[0]
                p[idx] = old - eps
                down = mse_and_gradients(weights, biases, X, spec)[0]
                p[idx] = old
                numeric[idx] = (up - down) / (2 * eps)
            np.testing.assert_allclose(g, numeric, rtol=1e-4, atol=1e-7)


def test_full_batch_loss_never_increases():
    rng = np.random.default_rng(1)
    X = rng.uniform(0.0, 1.0, size=(20, 3))
    cfg = TrainConfig(max_epochs=50, learning_rate=0.01, batch_size=20, target_mse=1e-12, seed=4)
    model = train_reconstructor(X, choose_architecture(3), cfg)
    history = np.array(model.loss_history)
    assert model.epochs_run == 50
    assert np.all(np.diff(history) <= 1e-12)


def test_training_reduces_loss():
    rng = np.random.default_rng(2)
    X = rng.uniform(0.0, 1.0, size=(40, 4))
    model = train_reconstructor(X, choose_architecture(4), TrainConfig(max_epochs=300, seed=0))
    assert model.final_training_mse == model.loss_history[-1]
    assert model.loss_history[-1] < model.loss_history[0]


def test_training_stops_at_target():
    # a single constant row is fit almost immediately
    X = np.full((1, 2), 0.5)
    cfg = TrainConfig(max_epochs=5000, target_mse=1e-2, learning_rate=0.1, seed=0)
    model = train_reconstructor(X, NetworkSpec((2, 3, 2)), cfg)
    assert model.final_training_mse <= 1e-2
    assert model.epochs_run < 5000


def test_training_is_deterministic():
    rng = np.random.default_rng(3)
    X = rng.uniform(0.0, 1.0, size=(15, 3))
    cfg = TrainConfig(max_epochs=40, seed=9)
    a = train_reconstructor(X, choose_architecture(3), cfg)
    b = train_reconstructor(X, choose_architecture(3), cfg)
    for wa, wb in zip(a.weights + a.biases, b.weights + b.biases):
        np.testing.assert_array_equal(wa, wb)


def test_training_rejects_wrong_width():
    with pytest.raises(ShapeError):
        train_reconstructor(np.zeros((5, 2)), choose_architecture(3), TrainConfig(max_epochs=1))


# ------------------------------------------------
# Model documents
# ------------------------------------------------
def test_model_document_restores_network(tmp_path):
    rng = np.random.default_rng(5)
    X = rng.uniform(0.0, 1.0, size=(10, 3))
    model = train_reconstructor(X, choose_architecture(3), TrainConfig(max_epochs=20))

    path = tmp_path / "model.json"
    dump_model(model, path)
    back = load_model(path)

    assert back.spec == model.spec
    np.testing.assert_allclose(reconstruct_batch(back, X), reconstruct_batch(model, X))
    assert back.final_training_mse == model.final_training_mse


def test_model_document_weights_are_row_major():
    W = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [7.0, 8.0, 9.0]])
    model = TrainedReconstructor(NetworkSpec((3, 3)), (W,), (np.zeros(3),))
    assert model_to_dict(model)["weights"][0] == [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]


def test_unknown_model_format():
    doc = model_to_dict(identity_network(2))
    doc["format"] = "something-else"
    with pytest.raises(ConfigError):
        model_from_dict(doc)


# ------------------------------------------------
# UCI minority sets (need RESAMPLELAB_DATA_DIR)
# ------------------------------------------------
@pytest.mark.slow
@pytest.mark.parametrize("name", ["balance", "ionosphere", "pima", "satimage"])
def test_minority_set_reaches_target_mse(name):
    scaled, _ = fit_apply_minmax(load_csv(uci_path(name), -1))
    minority = scaled.features[split_classes(scaled).minority_indices]
    model = train_reconstructor(minority, choose_architecture(scaled.m), TrainConfig())
    assert model.final_training_mse <= 1e-3
