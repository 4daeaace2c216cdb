import numpy as np
import pytest

from tunebench.dataset import AudioFeatures, Track, merge_labeled


def make_features(**overrides) -> AudioFeatures:
    """A valid interior-point feature record, overridable per test."""
    values = dict(
        danceability=0.5,
        energy=0.5,
        key=0,
        loudness=-6.0,
        mode=1,
        speechiness=0.5,
        acousticness=0.5,
        instrumentalness=0.5,
        liveness=0.5,
        valence=0.5,
        tempo=120.0,
        time_signature=4,
    )
    values.update(overrides)
    return AudioFeatures(**values)


def random_features(rng) -> AudioFeatures:
    return AudioFeatures(
        danceability=float(rng.uniform()),
        energy=float(rng.uniform()),
        key=int(rng.integers(-1, 12)),
        loudness=float(rng.uniform(-40.0, -1.0)),
        mode=int(rng.integers(0, 2)),
        speechiness=float(rng.uniform()),
        acousticness=float(rng.uniform()),
        instrumentalness=float(rng.uniform()),
        liveness=float(rng.uniform()),
        valence=float(rng.uniform()),
        tempo=float(rng.uniform(60.0, 200.0)),
        time_signature=int(rng.integers(1, 6)),
    )


def random_tracks(rng, n, prefix="t"):
    return [Track(id=f"{prefix}{i}", features=random_features(rng)) for i in range(n)]


def random_dataset(rng, n_liked, n_disliked, name="test"):
    return merge_labeled(
        random_tracks(rng, n_liked, "liked"),
        random_tracks(rng, n_disliked, "disliked"),
        name,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240715)
