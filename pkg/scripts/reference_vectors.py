#!/usr/bin/env python3
"""Stand-alone reference for the mixing hash and the seeded shuffle.

Deliberately shares no code with the package: arithmetic is done on
unbounded ints and reduced with ``% 2**64``, bits are handled as strings.
Run it to (re)write the fixture files that the test suite and the
``vectors`` subcommand check against.
"""

import argparse
import os

TWO64 = 2 ** 64


def splitmix_step(state):
    state = (state + 0x9E3779B97F4A7C15) % TWO64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) % TWO64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) % TWO64
    z = z ^ (z >> 31)
    return state, z


def reference_hash(key, message, length):
    state = key
    for i, byte in enumerate(message):
        _, state = splitmix_step(state ^ (byte + 256 * (i % 251)))
    words = -(-length // 64)
    bitstring = ""
    for _ in range(words):
        state, out = splitmix_step(state)
        bitstring += format(out, "064b")
    return bitstring[:length]


def reference_positions(l, n_total, n_sampling):
    arr = list(range(n_total))
    state = l
    i = n_total - 1
    while i > 0:
        state, out = splitmix_step(state)
        j = out % (i + 1)
        arr[i], arr[j] = arr[j], arr[i]
        i -= 1
    return arr[:n_sampling]


HASH_CASES = [
    (0x0, b"", 1),
    (0x0, b"", 64),
    (0x0, b"x", 16),
    (0x1, b"x", 16),
    (0x0123456789ABCDEF, b"x", 16),
    (0x0123456789ABCDEF, b"abc", 32),
    (0x0123456789ABCDEF, b"abd", 32),
    (0xFFFFFFFFFFFFFFFF, b"hello world", 64),
    (0xDEADBEEFCAFEBABE, b"quantum private comparison", 100),
    (0x2A, bytes(range(256)), 128),
    (0x2A, bytes(300), 7),
    (0x9E3779B97F4A7C15, b"\xff\x00\xff", 3),
]

PERM_CASES = [
    (42, 10, 4),
    (42, 10, 10),
    (0, 1, 1),
    (0, 8, 3),
    (1, 16, 8),
    (7, 32, 16),
    (0xFFFFFFFFFFFFFFFF, 20, 5),
    (123456789, 64, 0),
]


def write_fixtures(directory):
    with open(os.path.join(directory, "hash_vectors.txt"), "w") as fh:
        fh.write("# key_hex message_hex length digest_hex\n")
        for key, msg, length in HASH_CASES:
            bits = reference_hash(key, msg, length)
            padded = bits + "0" * (-len(bits) % 4)
            digest = format(int(padded, 2), "0%dx" % (len(padded) // 4))
            fh.write("%016x %s %d %s\n" % (key, msg.hex() or "-", length, digest))
    with open(os.path.join(directory, "perm_vectors.txt"), "w") as fh:
        fh.write("# l_hex n_total n_sampling positions(comma, shuffle order)\n")
        for l, n, k in PERM_CASES:
            pos = reference_positions(l, n, k)
            fh.write("%016x %d %d %s\n" % (l, n, k, ",".join(map(str, pos)) or "-"))


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("outdir")
    args = parser.parse_args()
    write_fixtures(args.outdir)
    print("mix64(0) =", hex(splitmix_step(0)[1]))
    state, outs = 1, []
    for _ in range(4):
        state, out = splitmix_step(state)
        outs.append(hex(out))
    print("stream from 1:", outs)
