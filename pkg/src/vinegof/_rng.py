"""Counter-based random streams keyed by integer tuples."""
import numpy as np

# stream tags; part of the reproducibility contract, do not renumber
TAG_SIMULATE = 0
TAG_NULL = 1
TAG_ALT = 2
TAG_SURROGATE = 3
TAG_BOOT = 4
TAG_KLIC = 5
TAG_OUTER = 6


def generator(seed, *key):
    """Philox generator for the substream ``(seed, *key)``.

    Streams with different keys are statistically independent, so replications
    may be computed in any order on any worker.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def child_seed(seed, *key):
    """A 63-bit integer seed derived from ``(seed, *key)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
