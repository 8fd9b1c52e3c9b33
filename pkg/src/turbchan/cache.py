"""Content-addressed cache for computed beam statistics.

Entries are keyed by a sha256 over the channel parameters, the sampling
budget, the RNG seed and the kernel version, so any change that could alter
the numbers is a miss by construction. Files carry their own payload hash;
a failed integrity check degrades to a miss with a warning rather than an
error, since the pipeline can always recompute.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import tempfile
import time
import warnings
from pathlib import Path

from .channel import ChannelParams
from .errors import CacheCorrupt
from .kernels import KERNEL_VERSION
from .kernels.stats import BeamStats, StatsBudget, channel_stats

ENV_CACHE_DIR = "TURBCHAN_CACHE_DIR"
CACHE_FORMAT = "turbchan.stats-cache"
CACHE_VERSION = 1


def default_cache_dir() -> Path:
    env = os.environ.get(ENV_CACHE_DIR)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "turbchan"


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def stats_key(params: ChannelParams, budget: StatsBudget, seed: int) -> str:
    """Content hash identifying one channel_stats evaluation."""
    payload = {
        "channel": dataclasses.asdict(params),
        "budget": dataclasses.asdict(budget),
        "seed": int(seed),
        "kernel_version": KERNEL_VERSION,
    }
    return hashlib.sha256(_canonical(payload).encode("utf-8")).hexdigest()


def _entry_path(cache_dir, key) -> Path:
    return Path(cache_dir) / ("%s.json" % key)


def stats_cache_put(key: str, stats: BeamStats, cache_dir=None) -> Path:
    """Store a BeamStats entry atomically (write-temp-rename)."""
    cache_dir = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    cache_dir.mkdir(parents=True, exist_ok=True)
    payload = dataclasses.asdict(stats)
    body = _canonical(payload)
    entry = {
        "format": CACHE_FORMAT,
        "version": CACHE_VERSION,
        "key": key,
        "payload": payload,
        "payload_sha256": hashlib.sha256(body.encode("utf-8")).hexdigest(),
        "written_at": time.time(),
    }
    path = _entry_path(cache_dir, key)
    fd, tmp = tempfile.mkstemp(dir=cache_dir, prefix=key[:16], suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(entry, fh, sort_keys=True, indent=1)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    return path


def stats_cache_get(key: str, cache_dir=None):
    """Return the cached BeamStats for key, or None on miss.

    Corrupt entries (unreadable JSON, wrong format, payload hash mismatch)
    are reported with a warning and treated as misses.
    """
    cache_dir = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    path = _entry_path(cache_dir, key)
    if not path.exists():
        return None
    try:
        entry = json.loads(path.read_text(encoding="utf-8"))
        if (entry.get("format") != CACHE_FORMAT
                or entry.get("version") != CACHE_VERSION
                or entry.get("key") != key):
            raise CacheCorrupt("entry header does not match key %s" % key)
        payload = entry["payload"]
        body = _canonical(payload)
        digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
        if digest != entry.get("payload_sha256"):
            raise CacheCorrupt("payload hash mismatch in %s" % path)
        return BeamStats(**payload)
    except CacheCorrupt as exc:
        warnings.warn("stats cache: %s; recomputing" % exc, RuntimeWarning)
        return None
    except (ValueError, KeyError, TypeError, OSError) as exc:
        warnings.warn("stats cache: unreadable entry %s (%s); recomputing"
                      % (path, exc), RuntimeWarning)
        return None


def cached_channel_stats(params: ChannelParams, budget: StatsBudget,
                         seed: int = 0, cache_dir=None, enabled: bool = True):
    """channel_stats with a read-through cache.

    Returns (stats, hit) where hit says whether the value came from disk.
    """
    key = stats_key(params, budget, seed)
    if enabled:
        stats = stats_cache_get(key, cache_dir)
        if stats is not None:
            return stats, True
    stats = channel_stats(params, budget, seed=seed)
    if enabled:
        stats_cache_put(key, stats, cache_dir)
    return stats, False
