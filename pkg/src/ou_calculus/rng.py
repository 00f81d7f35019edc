"""Named, counter-based random substreams.

Every random draw in the package goes through :func:`substream`, keyed by
``(seed, name, index)``.  The generator is Philox, so a substream depends
only on its key and never on how many draws other streams made; serial and
threaded runs therefore produce identical numbers.
"""
import zlib

import numpy as np

__all__ = ["substream"]


def _name_key(name):
    return zlib.crc32(str(name).encode("utf-8"))


def substream(seed, name="default", index=0):
    """Return an independent ``numpy.random.Generator`` for one key.

    Parameters
    ----------
    seed : int
        Experiment seed.
    name : str
        Stream name, e.g. the experiment or check that consumes it.
    index : int
        Sub-index (cell number, trial number, ...).
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_name_key(name), int(index)))
    return np.random.Generator(np.random.Philox(ss))
