"""Shared helpers: deterministic RNG derivation and config hashing."""

import hashlib

import numpy as np


def stable_words(*tokens):
    """Hash arbitrary tokens into four uint32 words usable as SeedSequence entropy."""
    text = "\x1f".join(str(t) for t in tokens)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]


def derived_rng(seed, *tokens):
    """Generator determined by (seed, tokens), independent of call order.

    Used to give every entity / stage its own stream so that results do not
    depend on scheduling or iteration order.
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, *stable_words(*tokens)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def config_digest(mapping):
    """Short stable hash of a configuration mapping, embedded in every report."""
    lines = "\n".join(f"{k}={mapping[k]!r}" for k in sorted(mapping))
    return hashlib.sha256(lines.encode("utf-8")).hexdigest()[:12]
