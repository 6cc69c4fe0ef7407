def shifts(a, b):
    a <<= 2
    b >>= 1
    a //= 3
    b **= 2
    a ^= b
    return a | b & ~a
