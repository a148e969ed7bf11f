import hashlib

import numpy as np
import pytest
from scipy import special, stats

from snpmix import rng as crng
from snpmix.errors import DomainError
from snpmix.genotype_model import MINUS, NULL, PLUS, hwe_probs
from snpmix.hyperprior import TruncatedBetaSpec
from snpmix.simulate import SimSpec, SimTruth, draw_maf_pair, simulate_dataset, simulate_truth

REF = TruncatedBetaSpec(2.0, 5.0, 0.05, 0.5)


def _digest(dataset):
    h = hashlib.sha256()
    h.update(dataset.genotypes.tobytes())
    h.update(dataset.phenotype.tobytes())
    h.update("\n".join(dataset.snp_ids + dataset.sample_ids).encode())
    return h.hexdigest()


def test_spec_validation():
    with pytest.raises(DomainError):
        SimSpec(0, 10, 10)
    with pytest.raises(DomainError):
        SimSpec(10, 10, 10, pi=(0.5, 0.5, 0.5))
    with pytest.raises(DomainError):
        SimSpec(10, 10, 10, effects=(6, 5))
    with pytest.raises(DomainError):
        SimSpec(10, 10, 10, seed=-1)


def test_truth_validation():
    with pytest.raises(DomainError):
        SimTruth(np.array([PLUS]), np.array([0.1]), np.array([0.2]))
    with pytest.raises(DomainError):
        SimTruth(np.array([NULL]), np.array([0.1]), np.array([0.2]))


def test_draw_maf_pair_ordering():
    rng = np.random.default_rng(0)
    for _ in range(200):
        a, b = draw_maf_pair("0", REF, rng)
        assert a == b and 0.05 <= a <= 0.5
        a, b = draw_maf_pair("+", REF, rng)
        assert a > b
        a, b = draw_maf_pair(MINUS, REF, rng)
        assert a < b
    with pytest.raises(DomainError):
        draw_maf_pair("x", REF, rng)
    with pytest.raises(DomainError):
        draw_maf_pair("+", TruncatedBetaSpec(2, 5000, 0.9, 1.0), rng)


def test_plus_case_maf_follows_max_order_statistic():
    rng = np.random.default_rng(1)
    draws = np.array([draw_maf_pair("+", REF, rng)[0] for _ in range(100_000)])
    lo = special.betainc(2, 5, 0.05)
    z = special.betainc(2, 5, 0.5) - lo

    def cdf(t):
        # max of two i.i.d. draws has CDF H(t)^2
        h = (special.betainc(2, 5, np.clip(t, 0.05, 0.5)) - lo) / z
        return h * h

    assert stats.kstest(draws, cdf).pvalue > 0.01


def test_null_panel():
    ds, truth = simulate_dataset(SimSpec(500, 20, 20, pi=(1.0, 0.0, 0.0), seed=3))
    assert np.all(truth.labels == NULL)
    assert np.array_equal(truth.theta_case, truth.theta_ctrl)
    assert ds.genotypes.shape == (500, 40)
    assert ds.phenotype.tolist() == [1] * 20 + [0] * 20


def test_determinism():
    spec = SimSpec(300, 15, 25, pi=(0.8, 0.1, 0.1), seed=42)
    a, ta = simulate_dataset(spec)
    b, tb = simulate_dataset(spec)
    assert _digest(a) == _digest(b)
    assert np.array_equal(ta.theta_case, tb.theta_case)
    c, _ = simulate_dataset(spec.with_seed(43))
    assert _digest(a) != _digest(c)


def test_chunking_does_not_change_output(monkeypatch):
    spec = SimSpec(257, 30, 31, seed=9)
    a, _ = simulate_dataset(spec)
    monkeypatch.setattr("snpmix.simulate._CHUNK_CELLS", 61 * 7)
    b, _ = simulate_dataset(spec)
    assert _digest(a) == _digest(b)


def test_prefix_stability():
    # SNP g depends only on (seed, g), so a longer panel extends a shorter one
    short, _ = simulate_dataset(SimSpec(50, 10, 10, seed=5))
    long, _ = simulate_dataset(SimSpec(80, 10, 10, seed=5))
    assert np.array_equal(short.genotypes, long.genotypes[:50])


def test_binomial_allele_sampling():
    maf = TruncatedBetaSpec(2, 5, 0.3 - 1e-12, 0.3 + 1e-12)
    ds, truth = simulate_dataset(SimSpec(1, 10_000, 1, pi=(1.0, 0.0, 0.0), maf=maf, seed=8))
    theta = truth.theta_case[0]
    assert theta == pytest.approx(0.3, abs=1e-11)
    freq = ds.genotypes[0, :10_000].sum() / 20_000
    assert abs(freq - 0.3) <= 4 * np.sqrt(0.3 * 0.7 / 20_000)


def test_genotype_frequencies_follow_hwe():
    maf = TruncatedBetaSpec(2, 5, 0.2 - 1e-12, 0.2 + 1e-12)
    ds, _ = simulate_dataset(SimSpec(20, 2500, 2500, pi=(1.0, 0.0, 0.0), maf=maf, seed=10))
    counts = np.stack([(ds.genotypes == k).sum(axis=1) for k in (0, 1, 2)], axis=1)
    expected = np.array(hwe_probs(0.2)) * 5000
    pvals = [stats.chisquare(c, expected).pvalue for c in counts]
    # 20 independent tests: at most a couple should fall below 0.01 by chance
    assert sum(p < 0.01 for p in pvals) <= 2


def test_label_counts_are_multinomial():
    pi = np.array([0.7, 0.2, 0.1])
    G = 200
    counts = np.array(
        [np.bincount(simulate_truth(SimSpec(G, 1, 1, pi=tuple(pi), seed=s))[1].labels, minlength=3) for s in range(100)]
    )
    total = counts.sum(axis=0)
    assert stats.chisquare(total, pi * total.sum()).pvalue > 0.01
    # per-replicate variance of the null count matches the binomial variance
    assert counts[:, 0].var(ddof=1) == pytest.approx(G * 0.7 * 0.3, rel=0.4)


def test_fixed_effect_counts():
    _, truth = simulate_truth(SimSpec(1000, 1, 1, effects=(37, 12), seed=2))
    assert (truth.labels == PLUS).sum() == 37
    assert (truth.labels == MINUS).sum() == 12
    assert np.all(truth.theta_case[truth.labels == PLUS] > truth.theta_ctrl[truth.labels == PLUS])
    assert np.all(truth.theta_case[truth.labels == MINUS] < truth.theta_ctrl[truth.labels == MINUS])


def test_mafs_within_truncation():
    _, truth = simulate_truth(SimSpec(5000, 1, 1, pi=(0.5, 0.25, 0.25), seed=4))
    both = np.concatenate([truth.theta_case, truth.theta_ctrl])
    assert both.min() >= 0.05 and both.max() <= 0.5 + 1e-15


def test_rng_uniforms():
    keys = crng.stream_keys(123, np.arange(1000, dtype=np.uint64))
    u = crng.uniforms(keys[:, None], np.arange(50, dtype=np.uint64)[None, :])
    assert u.shape == (1000, 50)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert stats.kstest(u.ravel(), "uniform").pvalue > 0.01
    # each coordinate is addressable on its own
    assert crng.uniforms(keys[7], 13) == u[7, 13]
    assert not np.array_equal(crng.stream_keys(124, np.arange(10)), keys[:10])
    # neighbouring streams and slots are uncorrelated
    assert abs(np.corrcoef(u[:-1, 0], u[1:, 0])[0, 1]) < 0.1
    assert abs(np.corrcoef(u[:, 0], u[:, 1])[0, 1]) < 0.1
