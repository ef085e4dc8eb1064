import zlib

import numpy as np


def stage_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def derive_seed(master_seed: int, stage: str, unit: int = 0) -> int:
    """Stable 63-bit seed for (master seed, stage name, unit index).

    Independent of call order, so parallel and serial runs draw identical streams.
    """
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, stage_key(stage), int(unit)])
    return int(ss.generate_state(1, dtype=np.uint64)[0]) & 0x7FFFFFFFFFFFFFFF


def rng_for(master_seed: int, stage: str, unit: int = 0) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, stage, unit))
