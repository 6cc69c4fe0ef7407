def numbers():
    return [0x1F, 0o17, 0b1010, 1_000_000, 3.14, 1e-3, 2.5j, .5, 10.]
