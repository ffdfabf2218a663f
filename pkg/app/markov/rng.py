"""
SplitMix64: a 64-bit add/shift/multiply generator with O(1) jump-ahead.

The stream of path `i` under seed `s` starts from the i-th output of the
master generator seeded with `s`, reached with `jump(i)`. Outputs are pure
64-bit integer arithmetic, so streams are identical on every platform.
"""
MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_TWO_POW_MINUS_53 = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return mix64(self.state)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * _TWO_POW_MINUS_53

    def jump(self, steps: int) -> "SplitMix64":
        self.state = (self.state + steps * GAMMA) & MASK64
        return self

    @classmethod
    def for_path(cls, seed: int, path_index: int) -> "SplitMix64":
        master = cls(seed).jump(path_index)
        return cls(master.next_u64())
