"""Package-wide error base class and shared defaults."""


class CoqeError(Exception):
    """Base class for every error raised by this package."""


# Fixed default seed so every randomized step is reproducible out of the box.
DEFAULT_SEED = 2023
