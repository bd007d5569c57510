import json

import numpy as np
import pytest

import stepsynth as ss
from stepsynth import metrics
from stepsynth.errors import ContractViolation


def _set(matrix, name="s"):
    return metrics.EmbeddingSet(matrix=np.asarray(matrix, dtype=float),
                                embedder="mfcc-stats", name=name)


# -- embedding ----------------------------------------------------------------

def test_embed_identical_clips_identical_rows():
    rng = np.random.default_rng(0)
    clip = ss.AudioClip(samples=rng.uniform(-1, 1, 8000), sample_rate=16000)
    out = metrics.embed_clips([clip, clip])
    assert out.matrix.shape == (2, 27)
    assert np.array_equal(out.matrix[0], out.matrix[1])


def test_embed_silent_clip_floor_statistics():
    clip = ss.AudioClip(samples=np.zeros(8000), sample_rate=16000)
    out = metrics.embed_clips([clip])
    row = out.matrix[0]
    assert np.allclose(row[13:26], 0.0, atol=1e-9)        # stds of constant mfcc
    assert row[26] == pytest.approx(np.log(1e-5))          # log-RMS at floor
    assert row[0] == pytest.approx(np.log(1e-5) * np.sqrt(128))


def test_embed_skips_short_clips():
    short = ss.AudioClip(samples=np.zeros(1000), sample_rate=16000)
    ok = ss.AudioClip(samples=np.zeros(8000), sample_rate=16000)
    out = metrics.embed_clips([short, ok, short])
    assert len(out) == 1


def test_embed_separates_noise_from_tone():
    rng = np.random.default_rng(1)
    t = np.arange(8000) / 16000.0
    sine = ss.AudioClip(samples=0.5 * np.sin(2 * np.pi * 1000 * t),
                        sample_rate=16000)
    noises = [ss.AudioClip(samples=rng.uniform(-0.5, 0.5, 8000),
                           sample_rate=16000) for _ in range(3)]
    rows = metrics.embed_clips(noises + [sine]).matrix
    within = np.linalg.norm(rows[0] - rows[1])
    across = np.linalg.norm(rows[0] - rows[3])
    assert across > 10 * within


# -- matrix sqrt ----------------------------------------------------------------

def test_sqrt_identity():
    assert np.allclose(metrics.matrix_sqrt_psd(np.eye(4)), np.eye(4), atol=1e-12)


def test_sqrt_diagonal():
    root = metrics.matrix_sqrt_psd(np.diag([4.0, 9.0]))
    assert np.allclose(root, np.diag([2.0, 3.0]), atol=1e-12)


def test_sqrt_random_psd_squares_back():
    rng = np.random.default_rng(2)
    a = rng.normal(size=(5, 5))
    m = a.T @ a
    root = metrics.matrix_sqrt_psd(m)
    err = np.linalg.norm(root @ root - m) / np.linalg.norm(m)
    assert err < 1e-6


def test_sqrt_rejects_asymmetry():
    m = np.eye(3)
    m[0, 1] = 1e-3
    with pytest.raises(ContractViolation):
        metrics.matrix_sqrt_psd(m)


# -- fad ------------------------------------------------------------------------

def test_fad_self_distance_zero():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(50, 4))
    assert abs(metrics.fad(_set(m, "a"), _set(m.copy(), "b"))) < 1e-6


def test_fad_symmetric():
    rng = np.random.default_rng(4)
    a, b = _set(rng.normal(size=(40, 3)), "a"), _set(rng.normal(size=(30, 3)), "b")
    assert metrics.fad(a, b) == pytest.approx(metrics.fad(b, a), abs=1e-9)


def test_fad_point_mass_closed_form():
    a = _set(np.zeros((10, 2)), "a")
    b = _set(np.ones((10, 2)), "b")
    assert metrics.fad(a, b) == pytest.approx(2.0, abs=1e-12)


def test_fad_gaussian_shift():
    rng = np.random.default_rng(5)
    a = _set(rng.normal(size=(10_000, 2)), "a")
    b = _set(rng.normal(size=(10_000, 2)) + np.array([3.0, 0.0]), "b")
    assert metrics.fad(a, b) == pytest.approx(9.0, abs=0.5)


def test_fad_monotone_in_mean_shift():
    rng = np.random.default_rng(6)
    base = rng.normal(size=(200, 3))
    v = np.array([1.0, -0.5, 0.25])
    values = [metrics.fad(_set(base, "a"), _set(base + t * v, "b"))
              for t in (1.0, 2.0, 3.0)]
    assert values[0] < values[1] < values[2]


def test_fad_requires_two_rows():
    with pytest.raises(ContractViolation):
        metrics.fad(_set(np.zeros((1, 2))), _set(np.zeros((5, 2))))


# -- mmd ----------------------------------------------------------------------

def test_mmd2_linear_constant_sets():
    a = _set(np.zeros((10, 1)), "a")
    b = _set(np.ones((10, 1)), "b")
    assert metrics.mmd2(a, b, kernel="linear") == pytest.approx(1.0, abs=1e-12)


def test_mmd2_same_distribution_small():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(500, 1))
    y = rng.normal(size=(500, 1))
    observed = metrics.mmd2(_set(x, "a"), _set(y, "b"), kernel="rbf")
    assert abs(observed) < 0.01
    # permutation-null oracle: relabeling the pool bounds the statistic
    pool = np.concatenate([x, y])
    null = []
    for i in range(200):
        perm = np.random.default_rng(100 + i).permutation(1000)
        null.append(metrics.mmd2(_set(pool[perm[:500]], "a"),
                                 _set(pool[perm[500:]], "b"), kernel="rbf"))
    assert abs(observed) <= np.quantile(np.abs(null), 0.99) + 1e-6


def test_mmd2_relabeling_within_set_invariant():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(40, 2))
    y = rng.normal(size=(40, 2)) + 0.5
    base = metrics.mmd2(_set(x, "a"), _set(y, "b"))
    shuffled = metrics.mmd2(_set(x[::-1], "a"), _set(y[rng.permutation(40)], "b"))
    assert base == pytest.approx(shuffled, abs=1e-12)


def test_mmd2_detects_shift():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(300, 2))
    y = rng.normal(size=(300, 2)) + 1.5
    assert metrics.mmd2(_set(x, "a"), _set(y, "b")) > 0.05


def test_rbf_kernel_unit_at_zero_distance():
    x = np.array([[1.0, 2.0]])
    sigma = metrics._rbf_bandwidth(np.vstack([x, x + 1.0]))
    assert np.exp(-0.0 / (2 * sigma * sigma)) == 1.0


# -- reports --------------------------------------------------------------------

def test_report_symmetric_and_serializable(tmp_path):
    rng = np.random.default_rng(10)
    a = _set(rng.normal(size=(30, 3)), "alpha")
    b = _set(rng.normal(size=(30, 3)) + 1.0, "beta")
    report = metrics.evaluate_sets([a, b])
    assert report.get("alpha", "beta") == report.get("beta", "alpha")
    obj = json.loads(report.to_json())
    assert obj["pairs"][0]["set_a"] == "alpha"
    assert obj["embedder"] == "mfcc-stats"
    csv_path = tmp_path / "r.csv"
    report.write_csv(csv_path)
    assert "alpha" in csv_path.read_text()
    assert "fad" in report.table()
