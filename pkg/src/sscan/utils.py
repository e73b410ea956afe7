import numpy as np


class AbstractClassError(Exception):
    pass


def enforce_no_abstract_class_instances(cls: type, check: type):
    """
    Check that a class is not the abstract base it derives from.

    Args:
        cls (type): The class to check.
        check (type): cls should not be this

    :raises AbstractClassError: If cls is the abstract class itself.
    """
    if cls is check:
        raise AbstractClassError(f"Class {cls.__name__} is an abstract class and cannot be instantiated.")


def derive_seed(seed: int, *keys: int) -> int:
    """
    Derive a deterministic 64-bit seed from a base seed and a sequence of integer keys
    (e.g. the epoch number), so that per-epoch draws are independent but reproducible.

    Args:
        seed (int): the base seed
        keys (int): additional integers mixed into the seed

    Returns:
        int: the derived seed
    """
    sequence = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(k) for k in keys)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])
