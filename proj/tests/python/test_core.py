import math

import numpy as np
import pytest

import fragility as fr

REFERENCE = [-1.617, -1.000, -0.082, 0.623, 1.549]


def phi(z):
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def test_catalog_and_model():
    names = fr.catalog()
    assert len(names) == 11
    assert "seq+vh+cs" in names
    m = fr.Model("seq+cs")
    assert m.num_params == 8
    assert m.param_names[-1] == "beta4"
    with pytest.raises(ValueError):
        fr.Model("cum+cs")
    assert fr.Model("cum+cs", unsafe=True).num_params == 8


def test_cumulative_probit_probabilities():
    m = fr.Model("cum")
    p = m.category_probs(REFERENCE, 0.2)
    assert sum(p) == pytest.approx(1.0, abs=1e-12)
    eta = [t - REFERENCE[4] * math.log(0.2) for t in REFERENCE[:4]]
    assert p[0] == pytest.approx(phi(eta[0]), abs=1e-12)
    ex = m.exceedance_probs(REFERENCE, 0.2)
    assert ex[0] == pytest.approx(1.0 - phi(eta[0]), abs=1e-12)
    assert fr.link_cdf("probit", 0.0) == 0.5
    assert fr.link_quantile("logit", 0.5) == pytest.approx(0.0, abs=1e-15)


def test_dataset_round_trip(tmp_path):
    ds = fr.Dataset([0.1, 0.5, 1.2], [1, 3, 5])
    assert len(ds) == 3
    assert ds.counts() == [1, 0, 1, 0, 1]
    path = tmp_path / "d.csv"
    path.write_text(ds.to_csv())
    back = fr.load_csv(path)
    assert back.ds == [1, 3, 5]
    assert back.digest() == ds.digest()
    with pytest.raises(ValueError):
        fr.Dataset([0.1], [6])
    with pytest.raises(OSError):
        fr.load_csv(tmp_path / "missing.csv")


def test_simulate_and_fit():
    m = fr.Model("cum")
    ds = fr.simulate(m, REFERENCE, 5000, seed=3)
    assert len(ds) == 5000
    assert fr.simulate(m, REFERENCE, 5000, seed=3).digest() == ds.digest()
    fit = fr.fit_mle(m, ds)
    assert fit["converged"]
    est = np.array(fit["estimates"])
    se = np.array(fit["se"])
    assert np.all(np.abs(est - REFERENCE) <= 4 * se)
    assert fit["cov"].shape == (5, 5)
    assert np.allclose(np.sqrt(np.diag(fit["cov"])), se)


def test_posterior_and_loo():
    m = fr.Model("cum")
    ds = fr.simulate(m, REFERENCE, 300, seed=4)
    post = fr.sample_posterior(m, ds, seed=1, chains=2, warmup=300, iters=300)
    assert post.draws.shape == (600, 5)
    assert post.pointwise_loglik.shape == (600, 300)
    again = fr.sample_posterior(m, ds, seed=1, chains=2, warmup=300, iters=300)
    assert np.array_equal(post.draws, again.draws)
    summary = post.summary()
    assert [s["name"] for s in summary] == post.names
    fit = fr.fit_mle(m, ds)
    assert np.allclose(post.mean(), fit["estimates"], atol=0.15)
    loo = fr.psis_loo(post)
    assert len(loo["pointwise"]) == 300
    assert loo["elpd_loo"] == pytest.approx(sum(loo["pointwise"]))

    other = fr.sample_posterior(fr.Model("seq"), ds, seed=1, chains=2, warmup=300, iters=300)
    rows = fr.compare([("cum", post), ("seq", other)])
    assert rows[0]["rank"] == 1
    assert rows[0]["elpd_diff"] == 0.0
    assert {r["model"] for r in rows} == {"cum", "seq"}


def test_diagnostics():
    m = fr.Model("cum")
    ds = fr.simulate(m, REFERENCE, 2000, seed=5)
    res = fr.surrogate_residuals(m, ds, seed=2, replicates=2)
    assert len(res) == 2 and len(res[0]) == 2000
    assert abs(np.mean(res[0])) < 0.1
    pc = fr.parallel_check(ds, seed=2)
    assert pc["slope_se_adjusted"] >= pc["slope_se"]
    assert len(pc["d"]) == 2000
    with pytest.raises(ValueError):
        fr.surrogate_residuals(fr.Model("seq"), ds, seed=1)


def test_closed_form():
    caps = [(-1.0, 0.4), (-0.3, 0.4), (0.4, 0.4), (1.0, 0.4)]
    psdm = (0.3, 1.1, 0.35)
    im = math.exp((-1.0 - 0.3) / 1.1)
    assert fr.closed_form_fragility(psdm, caps, im, 1) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        fr.closed_form_fragility((0.3, -1.0, 0.35), caps, 1.0, 1)
