import numpy as np
import pytest

import spcr


def make_data(n=80, p=8, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, p)) @ (rng.normal(size=(p, p)) + 2 * np.eye(p))
    beta = rng.normal(size=p)
    y = x @ beta + rng.normal(size=n)
    return x, y, beta


def test_b1_order_matches_ols():
    x, y, _ = make_data()
    xc = x - x.mean(axis=0)
    ols = np.linalg.lstsq(xc, y - y.mean(), rcond=None)[0]
    r = spcr.rank(x, y, "b1")
    assert list(r.order) == list(np.argsort(-np.abs(ols), kind="stable"))
    cos = abs(r.scores @ ols) / (np.linalg.norm(r.scores) * np.linalg.norm(ols))
    assert cos > 1 - 1e-10


def test_fit_predict_and_json_round_trip():
    x, y, _ = make_data(seed=1)
    model = spcr.fit(x, y, m=5, seed=3)
    assert 1 <= model.h <= 5
    pred = model.predict(x)
    assert pred.shape == (80, 1)
    again = spcr.model_from_json(model.to_json())
    np.testing.assert_array_equal(again.predict(x), pred)


def test_full_pcr_is_ols_on_subset():
    x, y, _ = make_data(seed=2)
    model = spcr.fit(x, y, m=8, h=8)
    xc = x - x.mean(axis=0)
    ols = np.linalg.lstsq(xc, y - y.mean(), rcond=None)[0]
    np.testing.assert_allclose(model.predict(x)[:, 0], xc @ ols + y.mean(), rtol=1e-9, atol=1e-9)


def test_sweep_rows_and_refusal():
    x, y = spcr.simulate_example("5.1.1", seed=4)
    rows = spcr.sweep(x, y, ["knb1-pcH", "bhpt-pc1"], 2, 6, seed=1)
    assert len(rows) == 10
    assert all(r["lse"] >= 0 for r in rows)
    x2, y2 = spcr.simulate_example("5.1.2", seed=4)
    assert y2.shape == (52, 7)
    with pytest.raises(spcr.SpcrError, match="UnsupportedResponse"):
        spcr.sweep(x2, y2, ["bhpt-pcH"], 2, 4)


def test_dimension_selection_and_bias_table():
    x, _ = spcr.simulate_example("5.1.1", seed=5)
    sel = spcr.select_dimension(x[:, :7], seed=2)
    assert 2 <= sel.chosen_h <= sel.k_max
    assert set(sel.scores) == set(range(2, sel.k_max + 1))
    assert spcr.ub_k(3) > spcr.ub_k(2)


def test_tau_prerank_shape():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(20, 100))
    y = x[:, 3] + 0.1 * rng.normal(size=20)
    kept = spcr.tau_prerank(x, y, n_blocks=5, block_size=20, keep=4)
    assert len(kept) == 20
    assert 3 in kept
