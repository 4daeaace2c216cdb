"""Build labeled datasets from playlists: live audio-features API or fixtures."""

from __future__ import annotations

import json
import time
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .dataset import FEATURE_NAMES, AudioFeatures, Dataset, Track, merge_labeled, validate_features

API_ROOT = "https://api.spotify.com/v1"


class FetchError(RuntimeError):
    """A playlist or feature fetch that cannot be completed."""


@dataclass(frozen=True)
class PlaylistRef:
    playlist_id: str
    label: str  # "liked" | "disliked"

    def __post_init__(self):
        if not self.playlist_id:
            raise ValueError("playlist identifier must be non-empty")
        if self.label not in ("liked", "disliked"):
            raise ValueError(f"label must be 'liked' or 'disliked', got {self.label!r}")


@dataclass(frozen=True)
class RawFeatureRecord:
    """One track's attributes exactly as returned, unvalidated."""

    track_id: str
    values: dict

    def to_track(self) -> Track:
        missing = [name for name in FEATURE_NAMES if name not in self.values]
        if missing:
            raise FetchError(f"track {self.track_id}: missing attributes {missing}")
        fields = {}
        for name in FEATURE_NAMES:
            raw = self.values[name]
            if name in ("key", "mode", "time_signature"):
                fields[name] = int(raw)
            else:
                fields[name] = float(raw)
        return Track(id=self.track_id, features=AudioFeatures(**fields))


@dataclass(frozen=True)
class FetchConfig:
    source: str = "fixture"  # "live" | "fixture"
    fixture_dir: Optional[Path] = None
    token: Optional[str] = None
    batch_size: int = 100
    max_retries: int = 3
    backoff_seconds: float = 1.0

    def __post_init__(self):
        if self.source not in ("live", "fixture"):
            raise ValueError(f"source must be 'live' or 'fixture', got {self.source!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.source == "live" and not self.token:
            raise ValueError("live mode requires an auth token (SPOTIFY_TOKEN)")
        if self.source == "fixture" and self.fixture_dir is None:
            raise ValueError("fixture mode requires a fixture directory")


@dataclass
class _HttpReply:
    status: int
    headers: dict
    body: str

    def json(self):
        return json.loads(self.body)


def _requests_transport(method: str, url: str, headers: dict, params: dict) -> _HttpReply:
    import requests

    reply = requests.request(method, url, headers=headers, params=params, timeout=30)
    return _HttpReply(status=reply.status_code, headers=dict(reply.headers), body=reply.text)


def _records_from_response(payload, origin: str) -> list[RawFeatureRecord]:
    """Shared parser for the audio-features response shape (live and fixture)."""
    if not isinstance(payload, dict) or "audio_features" not in payload:
        raise FetchError(f"{origin}: expected an object with an 'audio_features' array")
    items = payload["audio_features"]
    if not isinstance(items, list):
        raise FetchError(f"{origin}: 'audio_features' must be an array")
    records = []
    skipped = 0
    for item in items:
        if item is None:
            skipped += 1
            continue
        track_id = item.get("id", "")
        values = {k: v for k, v in item.items() if k in FEATURE_NAMES}
        records.append(RawFeatureRecord(track_id=str(track_id), values=values))
    if skipped:
        warnings.warn(
            f"{origin}: skipped {skipped} track(s) with null feature objects",
            stacklevel=2,
        )
    return records


class _LiveClient:
    def __init__(self, cfg: FetchConfig, transport):
        self.cfg = cfg
        self.transport = transport

    def get(self, url: str, params: dict) -> dict:
        headers = {"Authorization": f"Bearer {self.cfg.token}"}
        attempts = 0
        while True:
            reply = self.transport("GET", url, headers, params)
            if reply.status in (401, 403):
                raise FetchError(f"authentication failed (HTTP {reply.status})")
            if reply.status == 404:
                raise FetchError(f"not found (HTTP 404): {url}")
            if reply.status == 429 or reply.status >= 500:
                attempts += 1
                if attempts > self.cfg.max_retries:
                    raise FetchError(
                        f"retry budget exhausted after {self.cfg.max_retries} retries "
                        f"(last HTTP {reply.status})"
                    )
                if reply.status == 429 and "Retry-After" in reply.headers:
                    delay = float(reply.headers["Retry-After"])
                else:
                    delay = self.cfg.backoff_seconds * 2 ** (attempts - 1)
                time.sleep(delay)
                continue
            if reply.status != 200:
                raise FetchError(f"unexpected HTTP {reply.status} from {url}")
            return reply.json()

    def playlist_track_ids(self, playlist_id: str) -> list[str]:
        ids = []
        url = f"{API_ROOT}/playlists/{playlist_id}/tracks"
        params = {"fields": "items(track(id)),next", "limit": 100}
        while url:
            payload = self.get(url, params)
            for item in payload.get("items", []):
                track = item.get("track") or {}
                if track.get("id"):
                    ids.append(track["id"])
            url = payload.get("next")
            params = {}
        return ids

    def features_for(self, ids: list[str]) -> list[RawFeatureRecord]:
        records = []
        for start in range(0, len(ids), self.cfg.batch_size):
            batch = ids[start:start + self.cfg.batch_size]
            payload = self.get(f"{API_ROOT}/audio-features", {"ids": ",".join(batch)})
            records.extend(_records_from_response(payload, "audio-features response"))
        return records


def fetch_playlist_features(
    ref: PlaylistRef, cfg: FetchConfig, transport=None
) -> list[RawFeatureRecord]:
    """All feature records for one playlist, in playlist order.

    Fixture mode reads <playlist_id>.features.json from the fixture
    directory and never touches the transport. Live mode fetches track ids,
    then requests features in batches of cfg.batch_size, honoring 429
    Retry-After and retrying 5xx up to cfg.max_retries.
    """
    if cfg.source == "fixture":
        path = Path(cfg.fixture_dir) / f"{ref.playlist_id}.features.json"
        if not path.exists():
            raise FetchError(f"fixture file not found: {path}")
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise FetchError(f"malformed fixture JSON {path}: {exc}") from exc
        records = _records_from_response(payload, str(path))
    else:
        client = _LiveClient(cfg, transport or _requests_transport)
        ids = client.playlist_track_ids(ref.playlist_id)
        records = client.features_for(ids)
    if not records:
        warnings.warn(f"playlist {ref.playlist_id!r} produced no feature records", stacklevel=2)
    return records


def assemble_dataset(
    liked: list[RawFeatureRecord], disliked: list[RawFeatureRecord], name: str
) -> Dataset:
    """Validate both record lists and merge them into one labeled dataset.

    A track id present in both playlists is an error: a song cannot be both
    liked and disliked.
    """
    if not liked:
        raise ValueError("liked record list is empty")
    if not disliked:
        raise ValueError("disliked record list is empty")
    overlap = {r.track_id for r in liked} & {r.track_id for r in disliked}
    if overlap:
        raise ValueError(
            f"track id(s) appear in both playlists: {sorted(overlap)}"
        )

    def to_tracks(records, label):
        tracks = []
        for record in records:
            track = record.to_track()
            report = validate_features(track.features)
            if report.violations:
                raise ValueError(
                    f"{label} track {record.track_id!r}: {report.violations[0]}"
                )
            tracks.append(track)
        return tracks

    return merge_labeled(to_tracks(liked, "liked"), to_tracks(disliked, "disliked"), name)
