import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from flowsentry.decoder import (LossConfig, ScoreConfig, anomaly_scores, decide, decode,
                                hinge_terms, init_decoder, margin_loss, rank_order,
                                reconstruction_loss, total_loss)
from flowsentry.errors import ConfigError, ShapeError


def scripted_scores(x_hat, x, z, z2, y, eta, lam):
    out = []
    for i in range(len(x)):
        rec = math.sqrt(sum((a - b) ** 2 for a, b in zip(x_hat[i], x[i])))
        dist = math.sqrt(sum((a - b) ** 2 for a, b in zip(z[i], z2[i])))
        out.append(eta * rec + (1 - eta) * max(0.0, lam - (2 * y[i] - 1) * dist))
    return out


def scripted_decode(z, p):
    h = [[max(0.0, sum(zr[i] * p["dec.0.W"][i][k] for i in range(len(zr))) + p["dec.0.b"][k])
          for k in range(len(p["dec.0.b"]))] for zr in z]
    return [[sum(hr[i] * p["dec.1.W"][i][k] for i in range(len(hr))) + p["dec.1.b"][k]
             for k in range(len(p["dec.1.b"]))] for hr in h]


def one_distance(d):
    return np.zeros((1, 2)), np.array([[d, 0.0]])


class TestDecode:
    def test_zero_params(self, rng):
        p = {k: np.zeros_like(v) for k, v in init_decoder(3, 4, 2, rng).items()}
        assert not decode(rng.random((5, 3)), p).data.any()

    def test_identity_weights(self, rng):
        z = rng.random((4, 3))  # non-negative, so relu passes it through
        p = {"dec.0.W": np.eye(3), "dec.0.b": np.zeros(3), "dec.1.W": np.eye(3),
             "dec.1.b": np.zeros(3)}
        assert np.array_equal(decode(z, p).data, z)

    def test_scripted(self, rng):
        p = init_decoder(3, 4, 2, rng)
        p["dec.0.b"] = rng.standard_normal(4)
        z = rng.standard_normal((5, 3))
        ref = scripted_decode(z.tolist(), {k: v.tolist() for k, v in p.items()})
        np.testing.assert_allclose(decode(z, p).data, ref, rtol=0, atol=1e-12)

    def test_shape(self, rng):
        with pytest.raises(ShapeError):
            decode(np.zeros((2, 5)), init_decoder(3, 4, 2, rng))


class TestLosses:
    def test_reconstruction(self, rng):
        x = rng.random((3, 2))
        assert reconstruction_loss(x, x).item() == 0.0
        assert reconstruction_loss([[3.0, 4.0]], [[0.0, 0.0]]).item() == 5.0

    def test_reconstruction_oracle(self, rng):
        a, b = rng.random((4, 3)), rng.random((4, 3))
        ref = math.sqrt(sum((u - v) ** 2 for u, v in zip(a.ravel(), b.ravel())))
        assert abs(reconstruction_loss(a, b).item() - ref) < 1e-12

    @pytest.mark.parametrize("y, d, expected", [(1, 0.0, 0.5), (1, 2.0, 0.0), (0, 1.0, 1.5)])
    def test_margin_examples(self, y, d, expected):
        z, z2 = one_distance(d)
        assert margin_loss(z, z2, [y], 0.5).item() == pytest.approx(expected, abs=1e-15)

    def test_total_weights(self, rng):
        x_hat, x = rng.random((3, 2)), rng.random((3, 2))
        z, z2 = rng.random((3, 2)), rng.random((3, 2))
        y = np.array([1, 0, 1])
        rec = reconstruction_loss(x_hat, x).item()
        mar = margin_loss(z, z2, y, 0.7).item()
        assert total_loss(x_hat, x, z, z2, y, LossConfig(1.0, 0.7)).item() == rec
        assert total_loss(x_hat, x, z, z2, y, LossConfig(0.0, 0.7)).item() == mar

    def test_total_half(self):
        # reconstruction 2, margin 4
        x_hat, x = np.array([[2.0]]), np.array([[0.0]])
        z, z2 = one_distance(3.0)
        assert total_loss(x_hat, x, z, z2, [0], LossConfig(0.5, 1.0)).item() == 3.0

    def test_shape_checks(self):
        with pytest.raises(ShapeError):
            reconstruction_loss(np.zeros((2, 2)), np.zeros((2, 3)))
        with pytest.raises(ShapeError):
            margin_loss(np.zeros((2, 2)), np.zeros((2, 2)), [0], 1.0)

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            LossConfig(eta=1.5)
        with pytest.raises(ConfigError):
            LossConfig(margin=-1)


class TestScores:
    def test_perfect(self, rng):
        x = rng.random((3, 2))
        z, z2 = np.zeros((3, 2)), np.full((3, 2), 5.0)
        assert not anomaly_scores(x, x, z, z2, [1, 1, 1], LossConfig(0.5, 1.0)).any()

    def test_eta_one(self, rng):
        x_hat, x = rng.random((4, 2)), rng.random((4, 2))
        s = anomaly_scores(x_hat, x, rng.random((4, 2)), rng.random((4, 2)), [0, 1, 0, 1],
                           LossConfig(1.0, 1.0))
        np.testing.assert_allclose(s, np.linalg.norm(x_hat - x, axis=1), rtol=0, atol=1e-15)

    def test_scripted_oracle(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 7))
            arrs = [rng.standard_normal((n, 3)) for _ in range(2)]
            zs = [rng.standard_normal((n, 2)) for _ in range(2)]
            y = rng.integers(0, 2, n)
            eta, lam = float(rng.random()), float(rng.uniform(0, 3))
            s = anomaly_scores(*arrs, *zs, y, LossConfig(eta, lam))
            ref = scripted_scores(*(a.tolist() for a in arrs), *(z.tolist() for z in zs),
                                  y.tolist(), eta, lam)
            np.testing.assert_allclose(s, ref, rtol=0, atol=1e-9)

    @settings(max_examples=50)
    @given(st.integers(1, 6).flatmap(lambda n: st.tuples(
        hnp.arrays(np.float64, (n, 2), elements=st.floats(-10, 10)),
        hnp.arrays(np.float64, (n, 2), elements=st.floats(-10, 10)),
        hnp.arrays(np.float64, (n, 2), elements=st.floats(-10, 10)),
        hnp.arrays(np.float64, (n, 2), elements=st.floats(-10, 10)),
        hnp.arrays(np.int8, n, elements=st.integers(0, 1)))),
        st.floats(0, 1), st.floats(0, 3))
    def test_non_negative_and_consistent(self, arrays, eta, lam):
        x_hat, x, z, z2, y = arrays
        cfg = LossConfig(eta, lam)
        s = anomaly_scores(x_hat, x, z, z2, y, cfg)
        assert (s >= 0).all()
        total = total_loss(x_hat, x, z, z2, y, cfg).item()
        assert total >= 0
        h = hinge_terms(z, z2, y, lam).data
        assert np.mean(h) == margin_loss(z, z2, y, lam).item()


class TestDecide:
    def test_two_scores(self):
        assert decide([0.0, 10.0], ScoreConfig(threshold=0.5)).decisions.tolist() == [0, 1]

    def test_all_equal(self):
        rep = decide([2.0, 2.0, 2.0])
        assert rep.decisions.tolist() == [0, 0, 0]
        assert rep.ranking.tolist() == [0, 1, 2]

    def test_ranking(self):
        assert decide([3.0, 1.0, 2.0]).ranking.tolist() == [0, 2, 1]

    def test_raw_threshold(self):
        rep = decide([0.2, 0.7], ScoreConfig(threshold=0.5, normalize_scores=False))
        assert rep.decisions.tolist() == [0, 1]

    # integer scores and maps keep the affine transform exact in floating point
    @given(hnp.arrays(np.float64, st.integers(1, 20), elements=st.integers(-1000, 1000)),
           st.integers(1, 50), st.integers(-1000, 1000))
    def test_affine_invariance(self, s, a, b):
        rep = decide(s)
        assert np.array_equal(rep.ranking, decide(a * s + b).ranking)
        assert np.array_equal(rep.ranking, rank_order(rep.normalized))

    @given(hnp.arrays(np.float64, st.integers(2, 15), elements=st.floats(0, 10)),
           st.data())
    def test_monotone_in_own_error(self, s, data):
        i = data.draw(st.integers(0, s.size - 1))
        bump = data.draw(st.floats(0, 10))
        before = int(np.flatnonzero(rank_order(s) == i)[0])
        s2 = s.copy()
        s2[i] += bump
        after = int(np.flatnonzero(rank_order(s2) == i)[0])
        assert after <= before

    def test_threshold_validation(self):
        with pytest.raises(ConfigError):
            ScoreConfig(threshold=2.0)
