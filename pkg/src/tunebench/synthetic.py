"""Synthetic benchmark data: two Gaussian taste profiles over the audio
attributes, one favoring quiet acoustic tracks and one favoring loud
energetic ones. Noise is scaled per attribute so that sigma covers the
same fraction of every attribute's natural range."""

from __future__ import annotations

import numpy as np

from .dataset import FEATURE_NAMES, AudioFeatures, Dataset, Track, merge_labeled

# Attribute means for the two profiles, in FEATURE_NAMES order.
LIKED_PROFILE = (
    0.53802, 0.36812, 5.1, -10.24072, 0.86, 0.07737,
    0.69187, 0.03401, 0.14481, 0.30364, 117.84084, 3.82,
)
DISLIKED_PROFILE = (
    0.55578, 0.76452, 5.28, -5.12088, 0.94, 0.04291,
    0.13076, 0.00283, 0.15847, 0.5597, 125.90702, 3.96,
)

# Width of each attribute's natural range; noise sigma = NOISE_SIGMA * span.
ATTRIBUTE_SPANS = {
    "danceability": 1.0,
    "energy": 1.0,
    "key": 11.0,
    "loudness": 60.0,
    "mode": 1.0,
    "speechiness": 1.0,
    "acousticness": 1.0,
    "instrumentalness": 1.0,
    "liveness": 1.0,
    "valence": 1.0,
    "tempo": 200.0,
    "time_signature": 7.0,
}

NOISE_SIGMA = 0.15

_UNIT = {"danceability", "energy", "speechiness", "acousticness",
         "instrumentalness", "liveness", "valence"}
_INT_RANGES = {"key": (0, 11), "mode": (0, 1), "time_signature": (0, 7)}


def _sample_tracks(rng, means, n, prefix):
    spans = np.array([ATTRIBUTE_SPANS[name] for name in FEATURE_NAMES])
    values = np.asarray(means) + rng.standard_normal((n, len(FEATURE_NAMES))) * NOISE_SIGMA * spans
    tracks = []
    for i in range(n):
        fields = {}
        for j, name in enumerate(FEATURE_NAMES):
            v = values[i, j]
            if name in _UNIT:
                fields[name] = float(min(max(v, 0.0), 1.0))
            elif name in _INT_RANGES:
                lo, hi = _INT_RANGES[name]
                fields[name] = int(min(max(round(v), lo), hi))
            elif name == "loudness":
                fields[name] = float(min(max(v, -60.0), 0.0))
            else:  # tempo
                fields[name] = float(max(v, 0.0))
        tracks.append(Track(id=f"{prefix}{i:03d}", features=AudioFeatures(**fields)))
    return tracks


def make_benchmark_dataset(
    name: str = "synthetic",
    n_liked: int = 75,
    n_disliked: int = 75,
    seed: int = 42,
) -> Dataset:
    """A 75+75 (by default) labeled dataset drawn from the two profiles."""
    rng = np.random.default_rng(seed)
    liked = _sample_tracks(rng, LIKED_PROFILE, n_liked, "liked-")
    disliked = _sample_tracks(rng, DISLIKED_PROFILE, n_disliked, "disliked-")
    return merge_labeled(liked, disliked, name)


def main(argv=None) -> int:
    import argparse

    from .dataset import write_dataset

    parser = argparse.ArgumentParser(
        prog="python -m tunebench.synthetic",
        description="Write the bundled synthetic benchmark dataset as canonical CSV.",
    )
    parser.add_argument("--out", required=True, help="output CSV path")
    parser.add_argument("--name", default="synthetic", help="dataset name")
    parser.add_argument("--liked", type=int, default=75, help="liked instance count")
    parser.add_argument("--disliked", type=int, default=75, help="disliked instance count")
    parser.add_argument("--seed", type=int, default=42, help="generator seed")
    args = parser.parse_args(argv)

    ds = make_benchmark_dataset(args.name, args.liked, args.disliked, args.seed)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(write_dataset(ds))
    print(f"wrote {len(ds)} instances to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
