import math

import numpy as np
import pytest

from fracholder import _mlpy
from fracholder.errors import DomainError, InstabilityError
from fracholder.kernels import ModelParams, j0_periodic
from fracholder.sim import (Field2D, Sigma, SimConfig, empirical_holder, scheme_increments,
                            scheme_variance, simulate)
from fracholder.special import BACKEND, _kern

HEAT = ModelParams(2.0, 1.0, 0.0)
ONE = Sigma("constant", c=1.0)


def config(p=HEAT, L=1.0, nx=64, nt=256, T=1.0, sigma=ONE, seed=3, reps=4, mu=(), mu1=()):
    return SimConfig(p, L, nx, nt, T, sigma, seed, reps, tuple(mu), tuple(mu1))


def test_zero_noise_gives_j0():
    p = ModelParams(2.0, 1.5, 0.0)
    mu, mu1 = (0.5, 0.2 - 0.1j, 0.05), (0.0, 0.3)
    cfg = config(p, nx=32, nt=64, sigma=Sigma("constant", c=0.0), reps=1, mu=mu, mu1=mu1)
    fld = simulate(cfg)
    x = np.arange(cfg.nx) * cfg.dx
    for n in (0, 10, 64):
        exact, _ = j0_periodic(p, mu, n * cfg.dt, x, cfg.L, mu1)
        np.testing.assert_allclose(fld.values[0, n], exact, atol=1e-13)


def test_zero_multiplicative_noise_gives_j0():
    cfg = config(nx=32, nt=64, sigma=Sigma("linear", lam=0.0), reps=1, mu=(1.0, 0.25))
    x = np.arange(cfg.nx) * cfg.dx
    exact, _ = j0_periodic(HEAT, [1.0, 0.25], cfg.T_end, x, cfg.L)
    np.testing.assert_allclose(simulate(cfg).values[0, -1], exact, atol=1e-13)


def test_determinism_across_runs_and_threads():
    for sigma in (ONE, Sigma("linear", lam=0.5)):
        cfg = config(nx=32, nt=64, sigma=sigma, reps=6, mu=(1.0,))
        a = simulate(cfg, threads=1).digest()
        assert simulate(cfg, threads=1).digest() == a
        assert simulate(cfg, threads=3).digest() == a
    cfg = config(nx=32, nt=64, reps=2)
    assert simulate(cfg).digest() != simulate(config(nx=32, nt=64, reps=2, seed=4)).digest()


def test_thread_env(monkeypatch):
    cfg = config(nx=32, nt=64, reps=3)
    ref = simulate(cfg, threads=1).digest()
    monkeypatch.setenv("FRACHOLDER_THREADS", "2")
    assert simulate(cfg).digest() == ref
    monkeypatch.setenv("FRACHOLDER_THREADS", "zero")
    with pytest.raises(DomainError):
        simulate(cfg)


def test_replicates_are_prefix_stable():
    # replicate r depends only on (seed, r)
    small = simulate(config(nx=32, nt=64, reps=2)).values
    big = simulate(config(nx=32, nt=64, reps=5)).values
    np.testing.assert_array_equal(small, big[:2])


def test_variance_matches_scheme():
    cfg = config(reps=1000)
    fld = simulate(cfg)
    for n in (64, 128, 256):
        per = np.mean(fld.values[:, n] ** 2, axis=1)
        se = per.std(ddof=1) / math.sqrt(per.size)
        assert abs(per.mean() - scheme_variance(cfg, n)) < 3 * se


def test_scheme_variance_approaches_continuum():
    # on a wide torus the periodic images are negligible and the scheme
    # converges to (C / rho) t**rho = t**0.5 / sqrt(pi)
    gaps = []
    for nt in (256, 1024, 4096):
        cfg = config(L=8.0, nx=256, nt=nt, reps=1)
        for n in (nt // 4, nt // 2, nt):
            exact = math.sqrt(n * cfg.dt / math.pi)
            assert scheme_variance(cfg, n) == pytest.approx(exact, rel=0.035)
        gaps.append(abs(scheme_variance(cfg, nt) / math.sqrt(1 / math.pi) - 1))
    assert gaps[0] > gaps[1] > gaps[2]


def test_additive_field_is_gaussian():
    cfg = config(nx=32, nt=64, reps=2000)
    u = simulate(cfg).values[:, -1, 0]
    z = (u - u.mean()) / u.std()
    skew = float(np.mean(z**3))
    assert abs(skew) < 4 * math.sqrt(6 / u.size)


def test_increments_match_scheme():
    cfg = config(p=ModelParams(2.0, 1.6, 0.0), nx=128, nt=256, reps=200)
    fld = simulate(cfg)
    lags = [1, 2, 4, 8]
    for direction in ("time", "space"):
        est = empirical_holder(fld, direction, lags)
        exact = scheme_increments(cfg, direction, lags)
        np.testing.assert_allclose(est.curve.values, exact, rtol=0.1)


def test_instability_is_reported():
    cfg = config(nx=16, nt=64, sigma=Sigma("linear", lam=1e4), reps=1, mu=(1.0,))
    with pytest.raises(InstabilityError) as err:
        simulate(cfg)
    assert "step" in str(err.value)


def test_deterministic_linear_field_is_flagged():
    nt, nx = 64, 16
    t = np.arange(nt + 1) / nt
    vals = np.repeat(t[:, None], nx, axis=1)[None]
    est = empirical_holder(Field2D(vals, 1 / nt, 1 / nx, "", 0), "time", [1, 2, 4, 8])
    assert est.exponent == pytest.approx(1.0, abs=1e-9)
    assert est.beyond_resolvable


def test_empirical_holder_errors():
    vals = np.zeros((1, 65, 16))
    fld = Field2D(vals, 1 / 64, 1 / 16, "", 0)
    with pytest.raises(DomainError):
        empirical_holder(fld, "time", [1, 2, 4, 8])
    fld.values = np.random.default_rng(0).normal(size=(1, 65, 16))
    with pytest.raises(DomainError):
        empirical_holder(fld, "time", [1, 2])
    with pytest.raises(DomainError):
        empirical_holder(fld, "time", [4, 8, 16, 40])
    with pytest.raises(DomainError):
        empirical_holder(fld, "space", [2, 4, 8, 16])
    with pytest.raises(DomainError):
        empirical_holder(fld, "diagonal", [1, 2, 3, 4])


def test_config_validation():
    with pytest.raises(DomainError):
        config(p=ModelParams(2.0, 0.8, 0.3, d=1), nx=4)
    with pytest.raises(DomainError):
        config(p=ModelParams(2.0, 1.0, 0.0, d=2))
    with pytest.raises(DomainError):
        config(reps=0)
    with pytest.raises(DomainError):
        config(seed=-1)
    with pytest.raises(DomainError):
        config(mu1=(1.0,))
    with pytest.raises(DomainError):
        config(nx=8, mu=(1.0,) * 6)
    with pytest.raises(DomainError):
        Sigma("cubic")
    with pytest.raises(DomainError):
        Sigma("table", x=(0.0, 0.0), y=(1.0, 2.0))
    with pytest.raises(DomainError):
        SimConfig.from_dict({"params": {}})


def test_config_round_trip():
    cfg = config(p=ModelParams(2.0, 1.5, 0.2), sigma=Sigma("table", x=(-1.0, 0.0, 2.0), y=(0.0, 1.0, 2.0)),
                 mu=(1.0, 0.5j), mu1=(0.0, 0.25))
    back = SimConfig.from_dict(cfg.as_dict())
    assert back == cfg
    assert back.digest() == cfg.digest()
    assert config(seed=4).digest() != cfg.digest()


def test_sigma_table():
    s = Sigma("table", x=(0.0, 1.0, 2.0), y=(0.0, 2.0, 2.5))
    assert s.lipschitz == 2.0
    np.testing.assert_allclose(s(np.array([-1.0, 0.5, 1.5, 3.0])), [-2.0, 1.0, 2.25, 3.0])
    assert Sigma("linear", lam=-0.7).lipschitz == 0.7


def test_field_round_trip(tmp_path):
    fld = simulate(config(nx=16, nt=32, reps=2))
    path = str(tmp_path / "field.bin")
    side = fld.write(path)
    assert side == path + ".json"
    back = Field2D.read(path)
    np.testing.assert_array_equal(back.values, fld.values)
    assert back.digest() == fld.digest()
    assert (back.dt, back.dx, back.seed, back.config_hash) == (fld.dt, fld.dx, fld.seed, fld.config_hash)
    assert (tmp_path / "field.bin").stat().st_size == 8 * fld.values.size


def test_history_sum_backends_agree():
    rng = np.random.default_rng(1)
    kern = rng.normal(size=(20, 9)) + 1j * rng.normal(size=(20, 9))
    forcing = rng.normal(size=(20, 9)) + 1j * rng.normal(size=(20, 9))
    for n in (0, 7, 19):
        ref = _mlpy.history_sum(kern, forcing, n, np.zeros(9, complex))
        direct = sum(kern[n - m] * forcing[m] for m in range(n + 1))
        np.testing.assert_allclose(ref, direct, rtol=1e-13)
        if BACKEND == "compiled":
            got = _kern.history_sum(kern, forcing, n, np.zeros(9, complex))
            np.testing.assert_allclose(got, ref, rtol=1e-13)
