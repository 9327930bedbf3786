"""Channel sampling and outage evaluation."""

import math
from types import SimpleNamespace

import numpy as np
import pytest

from cda_relay.channels import (
    FadingRealization,
    cn_sample,
    outage,
    relay_channel_view,
    sample,
    siso_rayleigh_outage_probability,
)
from cda_relay.errors import ValidationError


def test_rayleigh_siso_unit_power():
    rng = np.random.default_rng(11)
    draws = np.array([sample("block-fading", rng).matrices[0][0, 0]
                      for _ in range(20000)])
    assert np.mean(np.abs(draws) ** 2) == pytest.approx(1.0, abs=0.03)
    assert abs(np.mean(draws)) < 0.02


def test_rician_and_nakagami_unit_power():
    rng = np.random.default_rng(12)
    for dist in ("rician:4", "nakagami:2"):
        h = sample("block-fading", rng, B=20000, distribution=dist)
        vals = np.array([m[0, 0] for m in h.matrices])
        assert np.mean(np.abs(vals) ** 2) == pytest.approx(1.0, abs=0.05), dist
    # the LOS part dominates at large K
    h = sample("block-fading", rng, B=5000, distribution="rician:1000")
    vals = np.array([m[0, 0] for m in h.matrices])
    assert np.std(np.abs(vals)) < 0.05


def test_distribution_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ValidationError):
        sample("block-fading", rng, distribution="laplace")
    with pytest.raises(ValidationError):
        sample("block-fading", rng, distribution="rician:-1")
    with pytest.raises(ValidationError):
        sample("block-fading", rng, distribution="nakagami:0")
    with pytest.raises(ValidationError):
        sample("tropo-scatter", rng)


def test_sample_determinism():
    a = sample("ofdm", np.random.default_rng(77), n_t=2, n_r=2, Q=8, L_taps=3)
    b = sample("ofdm", np.random.default_rng(77), n_t=2, n_r=2, Q=8, L_taps=3)
    for ma, mb in zip(a.matrices, b.matrices):
        assert np.array_equal(ma, mb)


def test_ofdm_single_tap_is_flat():
    rng = np.random.default_rng(5)
    real = sample("ofdm", rng, n_t=2, n_r=3, Q=16, L_taps=1)
    assert len(real.matrices) == 16
    for h in real.matrices[1:]:
        assert np.array_equal(h, real.matrices[0])


def test_ofdm_tone_energy_averages_to_one():
    rng = np.random.default_rng(6)
    acc = 0.0
    draws = 2000
    for _ in range(draws):
        real = sample("ofdm", rng, Q=8, L_taps=4)
        acc += np.mean([abs(m[0, 0]) ** 2 for m in real.matrices])
    assert acc / draws == pytest.approx(1.0, abs=0.05)
    with pytest.raises(ValidationError):
        sample("ofdm", rng, Q=4, L_taps=8)


def test_relay_network_coefficient_count():
    rng = np.random.default_rng(1)
    real = sample("relay-network", rng, N=4)
    assert real.n_nodes == 5
    assert len(real.relay_coeffs) == 10
    assert sorted(real.relay_coeffs)[0] == (1, 2)
    vec = real.relay_vector()
    assert vec.shape == (10,)
    assert vec[0] == real.relay_coeffs[(1, 2)]


# ---------------------------------------------------------------------------
# outage
# ---------------------------------------------------------------------------

def test_outage_zero_channel():
    real = FadingRealization(kind="block-fading",
                             matrices=(np.zeros((1, 1)), np.zeros((1, 1))))
    rep = outage(real, r=0.5, rho=100.0)
    assert rep.in_outage
    assert rep.mi_sum == 0.0
    assert rep.alphas == (math.inf, math.inf)


def test_outage_siso_direct_evaluation():
    real = FadingRealization(kind="block-fading", matrices=(np.array([[1.0]]),))
    rep = outage(real, r=0.5, rho=100.0)
    assert rep.mi_sum == pytest.approx(math.log2(101.0))
    assert rep.threshold == pytest.approx(0.5 * math.log2(100.0))
    assert not rep.in_outage
    assert rep.alphas[0] == pytest.approx(0.0)


def test_outage_matches_siso_rayleigh_closed_form():
    r, rho, trials = 0.5, 100.0, 100_000
    rng = np.random.default_rng(2024)
    count = 0
    for _ in range(trials):
        real = sample("block-fading", rng)
        if outage(real, r, rho).in_outage:
            count += 1
    p_hat = count / trials
    p = siso_rayleigh_outage_probability(r, rho)
    sd = math.sqrt(p * (1 - p) / trials)
    assert abs(p_hat - p) <= 3 * sd


def test_outage_alpha_regeneration():
    rng = np.random.default_rng(3)
    real = sample("block-fading", rng, n_t=2, n_r=2, B=2)
    rho = 316.23
    rep = outage(real, r=0.5, rho=rho)
    eigs = []
    for h in real.matrices:
        eigs.extend(np.linalg.eigvalsh(h.conj().T @ h))
    eigs.sort()
    assert len(rep.alphas) == 4
    for lam, alpha in zip(eigs, rep.alphas):
        assert abs(math.log(lam) - (-alpha * math.log(rho))) <= 1e-9
    # ascending eigenvalues mean non-increasing exponents
    assert all(a >= b - 1e-12 for a, b in zip(rep.alphas, rep.alphas[1:]))


def test_outage_zero_eigen_count_under_row_deletion():
    rng = np.random.default_rng(4)
    real = sample("block-fading", rng, n_t=3, n_r=2, B=2)
    rep = outage(real, r=0.5, rho=100.0)
    assert sum(1 for a in rep.alphas if a == math.inf) == 2  # (n_t - n_r) * B


def test_outage_validation():
    real = sample("relay-network", np.random.default_rng(0), N=2)
    with pytest.raises(ValidationError):
        outage(real, r=0.5, rho=100.0)
    bf = sample("block-fading", np.random.default_rng(0), B=2)
    with pytest.raises(ValidationError):
        outage(bf, r=0.5, rho=0.5)
    with pytest.raises(ValidationError):
        outage(bf, r=-0.1, rho=100.0)
    with pytest.raises(ValidationError):
        outage(bf, r=0.5, rho=100.0, B=3)


def test_closed_form_monotone_in_rate():
    probs = [siso_rayleigh_outage_probability(r, 100.0)
             for r in (0.1, 0.3, 0.5, 0.7, 0.9)]
    assert all(a < b for a, b in zip(probs, probs[1:]))


# ---------------------------------------------------------------------------
# relay channel views
# ---------------------------------------------------------------------------

def _four_relay_fixture():
    """Coefficients named after the five-node worked configuration."""
    coeffs = {}
    k = 1.0
    for a in range(1, 6):
        for b in range(a + 1, 6):
            coeffs[(a, b)] = complex(k, -k)
            k += 1.0
    return FadingRealization(kind="relay-network", relay_coeffs=coeffs, n_nodes=5)


def test_relay_view_block_two_at_node_four():
    real = _four_relay_fixture()
    sched = SimpleNamespace(active_sets=((1,), (1, 3), (1, 3), (1, 3, 4)))
    views = relay_channel_view(real, sched, node=4, upto=2)
    c = real.relay_coeffs
    assert np.array_equal(views[0], np.array([c[(1, 4)], 0, 0, 0]))
    assert np.array_equal(views[1], np.array([c[(1, 4)], 0, c[(3, 4)], 0]))


def test_relay_view_destination_all_blocks():
    real = _four_relay_fixture()
    sched = SimpleNamespace(active_sets=((1,), (1, 3), (1, 3), (1, 3, 4)))
    views = relay_channel_view(real, sched, node=5, upto=4)
    c = real.relay_coeffs
    assert np.array_equal(views[0], np.array([c[(1, 5)], 0, 0, 0]))
    assert np.array_equal(views[3], np.array([c[(1, 5)], 0, c[(3, 5)], c[(4, 5)]]))


def test_relay_view_symmetric_lookup_and_self_skip():
    real = _four_relay_fixture()
    views = relay_channel_view(real, [(1, 3)], node=2, upto=1)
    # node 3 > node 2, so the gain is stored under key (2, 3)
    assert views[0][2] == real.relay_coeffs[(2, 3)]
    views = relay_channel_view(real, [(1, 2)], node=2, upto=1)
    assert views[0][1] == 0


def test_relay_view_validation():
    real = _four_relay_fixture()
    with pytest.raises(ValidationError):
        relay_channel_view(real, [(1,)], node=5, upto=2)
    with pytest.raises(ValidationError):
        relay_channel_view(real, [(1,)], node=1, upto=1)
    bf = sample("block-fading", np.random.default_rng(0))
    with pytest.raises(ValidationError):
        relay_channel_view(bf, [(1,)], node=2, upto=1)


def test_cn_sample_shape_and_power():
    rng = np.random.default_rng(9)
    w = cn_sample(rng, (1000, 4))
    assert w.shape == (1000, 4)
    assert np.mean(np.abs(w) ** 2) == pytest.approx(1.0, abs=0.05)
