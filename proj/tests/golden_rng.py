# Copyright 2026 The Dispel Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Independent mirror of include/dispel/rng.hpp.

Regenerates the golden values frozen into test_rng.cpp. Any change to the
generator must keep this file in sync; the two implementations are intended
to agree bit for bit (the normal path assumes a faithfully rounded libm,
which holds for identical platforms).

Usage: python3 golden_rng.py
"""
import math

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z):
    z &= MASK
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & MASK
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & MASK
    z ^= z >> 31
    return z


def derive(key, *words):
    for w in words:
        key = mix64((key + GOLDEN + mix64((w + GOLDEN) & MASK)) & MASK)
    return key


class Stream:
    def __init__(self, key):
        self.key = key & MASK
        self.counter = 0
        self.spare = None

    def next_u64(self):
        self.counter = (self.counter + GOLDEN) & MASK
        return mix64((self.key + self.counter) & MASK)

    def next_uniform(self):
        return ((self.next_u64() >> 11) + 0.5) * 2.0 ** -53

    def next_bernoulli(self, prob):
        return self.next_uniform() < prob

    def next_normal(self):
        if self.spare is not None:
            out, self.spare = self.spare, None
            return out
        while True:
            u = 2.0 * self.next_uniform() - 1.0
            v = 2.0 * self.next_uniform() - 1.0
            r = u * u + v * v
            if not (r >= 1.0 or r == 0.0):
                break
        f = math.sqrt(-2.0 * math.log(r) / r)
        self.spare = v * f
        return u * f

    def next_below(self, bound):
        m = self.next_u64() * bound
        lo = m & MASK
        if lo < bound:
            threshold = ((1 << 64) - bound) % bound
            while lo < threshold:
                m = self.next_u64() * bound
                lo = m & MASK
        return m >> 64


def main():
    print("mix64:", [hex(mix64(z)) for z in (0, 1, 0x123456789ABCDEF0)])
    print("derive(42,7):", hex(derive(42, 7)))
    print("derive(42,7,9):", hex(derive(42, 7, 9)))
    print("u64 key=42:", [hex(Stream(42).next_u64() if i == 0 else 0)
                          for i in (0,)])
    s = Stream(42)
    print("u64 key=42 x4:", [hex(s.next_u64()) for _ in range(4)])
    s = Stream(7)
    print("uniform key=7 x4:", [repr(s.next_uniform()) for _ in range(4)])
    s = Stream(9)
    print("normal key=9 x6:", [repr(s.next_normal()) for _ in range(6)])
    s = Stream(13)
    print("below10 key=13 x8:", [s.next_below(10) for _ in range(8)])
    print("below7:", [s.next_below(7) for _ in range(4)])
    s = Stream(99)
    print("bernoulli(0.3) key=99 x12:",
          [int(s.next_bernoulli(0.3)) for _ in range(12)])


if __name__ == "__main__":
    main()
