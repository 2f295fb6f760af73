import math
from dataclasses import replace

import numpy as np
import pytest

from isomod.arrivals import ChannelParams
from isomod.energy import molecules_for_snr
from isomod.modulation import b_icsk_matrix
from isomod.physics import HEXOSE
from isomod.rate import (
    SearchConfig,
    exhaustive_max_rate,
    maximize_rate,
    maximize_rate_at_order,
    mutual_information,
    sweep_rate_curve,
)

from .oracles import binary_entropy


def bsc_joint(crossover: float) -> np.ndarray:
    p = crossover
    return 0.5 * np.array([[1 - p, p], [p, 1 - p]])


def link_at_snr(snr_db: float, sigma: float = 100.0) -> ChannelParams:
    n = molecules_for_snr(snr_db, 0.6097, sigma)
    return ChannelParams(n=n, p1=0.6097, p2=0.7208, noise_std=sigma)


class TestMutualInformation:
    def test_noiseless_channel(self):
        for m in (2, 4, 32):
            joint = np.eye(m) / m
            assert mutual_information(joint) == pytest.approx(math.log2(m), abs=1e-12)

    def test_independent_channel(self):
        joint = np.full((4, 4), 1 / 16)
        assert mutual_information(joint) == pytest.approx(0.0, abs=1e-12)

    def test_binary_symmetric(self):
        for p in (0.0, 0.11, 0.5):
            expected = 1.0 - binary_entropy(p)
            assert mutual_information(bsc_joint(p)) == pytest.approx(expected, abs=1e-3)
        assert mutual_information(bsc_joint(0.11)) == pytest.approx(0.5000, abs=1e-3)

    def test_accepts_matrix_object(self, reference_link):
        m = b_icsk_matrix(reference_link, 400.0)
        assert 0.0 <= mutual_information(m) <= 1.0

    def test_mass_integrity(self):
        with pytest.raises(ValueError):
            mutual_information(np.full((2, 2), 0.3))

    def test_bounds_on_random_joints(self, rng):
        for _ in range(50):
            m = rng.integers(2, 6)
            joint = rng.random((m, m))
            joint /= joint.sum()
            mi = mutual_information(joint)
            assert -1e-12 <= mi <= math.log2(m) + 1e-12

    def test_merging_columns_never_gains(self, rng):
        # data-processing check: pooling two decoded symbols loses information
        for _ in range(30):
            m = int(rng.integers(3, 6))
            joint = rng.random((m, m))
            joint /= joint.sum()
            merged = joint.copy()
            merged[:, 0] += merged[:, 1]
            merged = np.delete(merged, 1, axis=1)
            padded = np.zeros((m, m))
            padded[:, : m - 1] = merged
            assert mutual_information(padded) <= mutual_information(joint) + 1e-12


class TestMaximizeRate:
    def test_noiseless_binary_schemes(self):
        ch = ChannelParams(n=1000.0, p1=0.6097, p2=0.7208, noise_std=0.0)
        for scheme in ("b-icsk", "b-imosk-awgn"):
            point = maximize_rate(scheme, ch, messenger=HEXOSE)
            assert point.rate == pytest.approx(1.0, abs=1e-12)

    def test_dominates_coarse_grid(self, reference_link):
        ch = link_at_snr(5.0)
        cfg = SearchConfig()
        point = maximize_rate("b-icsk", ch, cfg)
        grid = np.linspace(0.0, ch.n * ch.p2 + 4 * ch.noise_std, cfg.coarse_points)
        coarse_best = max(
            mutual_information(b_icsk_matrix(ch, t)) for t in grid
        )
        assert point.rate >= coarse_best - 1e-12

    def test_empty_grid_rejected(self):
        ch = ChannelParams(n=0.0, p1=0.6097, p2=0.7208, noise_std=0.0)
        with pytest.raises(ValueError):
            maximize_rate("b-icsk", ch)

    def test_muta_requires_messenger(self, reference_link):
        with pytest.raises(ValueError):
            maximize_rate("b-imosk-muta", reference_link)

    def test_unknown_scheme(self, reference_link):
        with pytest.raises(ValueError):
            maximize_rate("psk", reference_link)

    def test_irsk_accepts_pair(self):
        ch = link_at_snr(8.0)
        point = maximize_rate("q-irsk", (ch, ch))
        assert 0.0 < point.rate <= 1.5 + 1e-9
        assert len(point.thresholds) == 3

    # SNRs where the optimum is resolvable on the exhaustive lattice; the
    # acceptance suite carries the full 20-config regression set.
    @pytest.mark.parametrize(
        "scheme,snr",
        [("b-icsk", 4.0), ("b-imosk-awgn", 4.0), ("q-icsk", 12.0), ("q-irsk", 12.0)],
    )
    def test_matches_exhaustive(self, scheme, snr):
        ch = link_at_snr(snr)
        target = (ch, ch) if scheme == "q-irsk" else ch
        point = maximize_rate(scheme, target, messenger=HEXOSE)
        rate, _ = exhaustive_max_rate(scheme, target, messenger=HEXOSE)
        assert point.rate == pytest.approx(rate, abs=1e-6)


class TestSweep:
    def test_grid_must_increase(self, reference_link):
        with pytest.raises(ValueError):
            sweep_rate_curve("b-icsk", reference_link, [0.0, 0.0, 5.0])

    def test_points_carry_grid_snr(self, reference_link):
        curve = sweep_rate_curve("b-icsk", reference_link, [0.0, 10.0, 20.0])
        assert [p.snr_db for p in curve.points] == [0.0, 10.0, 20.0]
        assert curve.scheme == "b-icsk"

    def test_thread_parallelism_invariant(self, reference_link):
        grid = [0.0, 5.0, 10.0, 15.0]
        serial = sweep_rate_curve("b-icsk", reference_link, grid, jobs=1)
        threaded = sweep_rate_curve("b-icsk", reference_link, grid, jobs=4)
        assert [p.rate for p in serial.points] == [p.rate for p in threaded.points]
        assert [p.thresholds for p in serial.points] == [
            p.thresholds for p in threaded.points
        ]

    def test_rates_nondecreasing(self, reference_link):
        grid = list(np.arange(-10.0, 41.0, 5.0))
        schemes = (
            "b-icsk",
            "b-imosk-awgn",
            "b-imosk-muta",
            "imosk-32",
            "q-icsk",
            "q-irsk",
        )
        for scheme in schemes:
            target = (
                (reference_link, reference_link) if scheme == "q-irsk" else reference_link
            )
            curve = sweep_rate_curve(scheme, target, grid, messenger=HEXOSE)
            rates = [p.rate for p in curve.points]
            assert all(
                b >= a - 1e-6 for a, b in zip(rates, rates[1:])
            ), f"{scheme}: {rates}"

    def test_json_round_trip(self, reference_link):
        curve = sweep_rate_curve("b-icsk", reference_link, [0.0, 10.0])
        d = curve.to_json_dict()
        assert d["scheme"] == "b-icsk"
        assert len(d["points"]) == 2
        assert d["channel"]["p1"] == reference_link.p1


class TestOrderDispatch:
    def test_order_two_matches_canonical(self):
        ch = link_at_snr(6.0)
        assert maximize_rate_at_order("icsk", 2, ch).rate == pytest.approx(
            maximize_rate("b-icsk", ch).rate, abs=1e-12
        )
        assert maximize_rate_at_order("imosk", 2, ch).rate == pytest.approx(
            maximize_rate("b-imosk-awgn", ch).rate, abs=1e-12
        )

    def test_order_four_icsk_uses_full_search(self):
        ch = link_at_snr(6.0)
        assert maximize_rate_at_order("icsk", 4, ch).rate == pytest.approx(
            maximize_rate("q-icsk", ch).rate, abs=1e-9
        )

    def test_affine_ladder_high_order(self):
        ch = link_at_snr(10.0)
        point = maximize_rate_at_order("icsk", 8, ch)
        assert point.scheme == "icsk-8"
        assert len(point.thresholds) == 7
        assert all(b > a for a, b in zip(point.thresholds, point.thresholds[1:]))
        assert 0.0 < point.rate <= 3.0 + 1e-9

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            maximize_rate_at_order("fsk", 4, link_at_snr(5.0))

    def test_rate_cap_by_order(self):
        ch = link_at_snr(40.0)
        assert maximize_rate_at_order("imosk", 4, ch).rate == pytest.approx(2.0, abs=1e-3)


def test_search_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(coarse_points=2)
    with pytest.raises(ValueError):
        SearchConfig(refine_factor=1)
