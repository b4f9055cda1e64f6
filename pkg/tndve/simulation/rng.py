"""
Counter-based random streams keyed by (master seed, replicate, variable tag).

Each stream is a Philox generator whose key comes from a SeedSequence over the
three key parts; draw j of a stream belongs to record j, so results do not depend
on how replicates are scheduled across workers.
"""
import hashlib

import numpy as np

# Stable integer codes for variable tags
TAGS = {
    'x': 1,
    'u': 2,
    'v': 3,
    'i': 4,
    't': 5,
    'bootstrap': 6,
    'truth': 7,
}


def tag_code(tag: str) -> int:
    if tag in TAGS:
        return TAGS[tag]
    # unregistered tags still map deterministically
    return int.from_bytes(hashlib.sha256(tag.encode('utf-8')).digest()[:4], 'little') + 1000


def substream(seed: int, replicate: int, tag: str) -> np.random.Generator:
    """Independent generator for one (seed, replicate, tag) key."""
    seq = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(replicate), tag_code(tag)])
    return np.random.Generator(np.random.Philox(seq))


def uniforms(seed: int, replicate: int, tag: str, n: int) -> np.ndarray:
    """n uniforms on [0, 1) from the keyed stream, record j taking draw j."""
    return substream(seed, replicate, tag).random(n)
