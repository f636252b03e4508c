# Copyright 2026 The spmsim Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

# Independent reference for the RNG recipe. Prints the frozen vectors used
# by tests/test_core.cpp. Run with: python3 rng_vectors.py

M = (1 << 64) - 1


def mix64(z):
    z = (z + 0x9E3779B97F4A7C15) & M
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M
    return z ^ (z >> 31)


def rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & M


class Xoshiro:
    def __init__(self, seed):
        self.s = []
        st = seed
        for _ in range(4):
            st = (st + 0x9E3779B97F4A7C15) & M
            z = st
            z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M
            z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M
            self.s.append(z ^ (z >> 31))

    @staticmethod
    def keyed(seed, key):
        h = mix64(seed)
        for w in key:
            h = mix64(h ^ w)
        return Xoshiro(h)

    def next(self):
        s = self.s
        result = (rotl((s[1] * 5) & M, 7) * 9) & M
        t = (s[1] << 17) & M
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = rotl(s[3], 45)
        return result

    def below(self, n):
        return (self.next() * n) >> 64


if __name__ == "__main__":
    r = Xoshiro(0)
    print("seed 0:", ", ".join(f"0x{r.next():016x}ULL" for _ in range(3)))
    r = Xoshiro(12345)
    print("seed 12345:", ", ".join(f"0x{r.next():016x}ULL" for _ in range(3)))
    r = Xoshiro.keyed(7, [3, 9])
    print("keyed(7,{3,9}):", ", ".join(f"0x{r.next():016x}ULL" for _ in range(3)))
    r = Xoshiro.keyed(1, [])
    print("keyed(1,{}) below(100) x8:", [r.below(100) for _ in range(8)])
    print("mix64(0):", f"0x{mix64(0):016x}ULL")
