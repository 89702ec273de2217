import numpy as np
import pytest

import moecs


def one_hot(labels, n):
    out = np.zeros((len(labels), n))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def test_target_function():
    assert moecs.funcapprox_target(1.0, 1.0, 1.0) == 16.0
    x, y, z = 4.0, 2.0, 9.0
    assert moecs.funcapprox_target(x, y, z) == pytest.approx((1 + 2 + 0.5 + 1 / 27) ** 2, rel=1e-14)


def test_generators():
    (xtr, ytr), (xte, yte) = moecs.gen_funcapprox(seed=1)
    assert xtr.shape == (500, 3) and ytr.shape == (500, 1)
    assert xte.shape == (250, 3)
    assert xtr.min() >= 1.0 and xtr.max() <= 6.0
    X, labels = moecs.gen_artificial(seed=1, per_class=10)
    assert X.shape == (30, 2)
    assert np.bincount(labels).tolist() == [10, 10, 10]


def test_model_roundtrip_and_gates():
    m = moecs.init_moe(2, 3, seed=4)
    X, labels = moecs.gen_artificial(seed=2, per_class=5)
    g = m.gates(X)
    assert g.shape == (15, 4)
    assert np.allclose(g.sum(axis=1), 1.0, atol=1e-12)
    again = moecs.load_model(m.save())
    assert np.array_equal(again.weights(), m.weights())
    assert m.gradient(X, one_hot(labels, 3)).shape == (m.param_count,)


def test_training_lowers_the_loss():
    X, labels = moecs.gen_artificial(seed=3, per_class=20)
    X = (X - X.mean(axis=0)) / X.std(axis=0)
    Y = one_hot(labels, 3)
    m = moecs.init_moe(2, 3, seed=5)
    trained, trace = moecs.train(m, X, Y, trainer="cg", epochs=20)
    assert trace[-1] < m.loss(X, Y)
    assert np.all(np.diff(trace) <= 0)
    assert trace[-1] < trace[0]
    acc = moecs.metric(trained.predict(X), Y)
    assert 0.0 <= acc <= 100.0
    with pytest.raises(ValueError):
        moecs.train(m, X, Y, trainer="adam")


def test_search_on_a_python_objective():
    res = moecs.search(lambda x: float(np.sum(x * x)), dim=2, evals=3000, seed=1)
    assert res["fitness"] < 1e-3
    assert res["evaluations"] == 3000
    assert np.all(np.diff(res["trace"]) <= 0)
    assert res["trace"][0] > res["trace"][-1] == res["fitness"]


def test_run_experiment():
    csv, md = moecs.run_experiment(
        "dataset = artificial\nper_class = 10\ntrainers = GDME\nepochs = 2\nk = 2\nrestarts = 1\n"
    )
    assert csv.splitlines()[0] == "trainer,fold,restart,seed,train_metric,test_metric,wall_ms,status"
    assert len(csv.splitlines()) == 3
    assert "Average" in md
    with pytest.raises(ValueError):
        moecs.run_experiment("colour = blue\n")
