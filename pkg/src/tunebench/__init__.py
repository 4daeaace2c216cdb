"""tunebench: benchmark six from-scratch classifiers on per-user
Spotify audio-feature datasets with stratified cross-validation."""

__version__ = "0.1.0"
